from django.apps import apps
from django.test import SimpleTestCase, override_settings

from stability.apps import StabilityConfig
from stability.conf import DEFAULTS, get_setting


class GetSettingTests(SimpleTestCase):

    def test_valor_por_defecto(self):
        with override_settings(STABILITY={}):
            self.assertEqual(get_setting('BT_TOLERANCE'), DEFAULTS['BT_TOLERANCE'])

    def test_valor_de_los_settings(self):
        with override_settings(STABILITY={'TIME_SAMPLES': 12}):
            self.assertEqual(get_setting('TIME_SAMPLES'), 12)
            self.assertEqual(get_setting('FREQUENCY_SAMPLES'), DEFAULTS['FREQUENCY_SAMPLES'])

    def test_constante_desconocida(self):
        with self.assertRaises(KeyError):
            get_setting('NO_EXISTE')


class AppConfigTests(SimpleTestCase):

    def test_la_app_no_define_modelos(self):
        config = apps.get_app_config('stability')
        self.assertEqual(list(config.get_models()), [])
        # sin modelos no hay clave primaria automática que configurar
        self.assertNotIn('default_auto_field', vars(StabilityConfig))
