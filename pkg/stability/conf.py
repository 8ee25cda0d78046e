"""
Acceso a las constantes numéricas del toolkit.

Se leen del dict STABILITY de los settings; si Django no está configurado
(uso como librería) se usan los valores por defecto.
"""
from django.conf import settings

DEFAULTS = {
    'RESONANCE_TOLERANCE': 1e-12,
    'RESIDUAL_TOLERANCE': 1e-9,
    'INVERSE_TOLERANCE': 1e-10,
    'DISSIPATIVITY_TOLERANCE': 1e-10,
    'IMAGINARY_AXIS_TOLERANCE': 1e-8,
    'UNIFORM_EXPONENT_THRESHOLD': 0.1,
    'BT_TOLERANCE': 0.25,
    'DENSE_SVD_LIMIT': 2000,
    'DEFAULT_N_MAX': 64,
    'DEFAULT_PERIOD': 2.0,
    'FREQUENCY_SAMPLES': 200,
    'TIME_SAMPLES': 60,
    'CSV_PRECISION': 17,
    'THREADS': 1,
}


def get_setting(name):
    """Valor de STABILITY[name] con respaldo en DEFAULTS."""
    if name not in DEFAULTS:
        raise KeyError(f"Constante desconocida: {name}")
    user_settings = getattr(settings, 'STABILITY', {}) if settings.configured else {}
    return user_settings.get(name, DEFAULTS[name])
