"""
Django settings for the periodic well-posedness toolkit.

El proyecto no sirve HTTP: Django aporta la configuración, los comandos de
gestión (CLI) y el runner de pruebas. Las constantes numéricas viven en
STABILITY y se leen con stability.conf.get_setting.
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config(
    'DJANGO_SECRET_KEY',
    default='django-insecure-stability-toolkit-local-key'
)

DEBUG = config('DJANGO_DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'stability',
]

# Solo se usa el runner de pruebas; ningún comando toca la base de datos.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

# REST Framework: solo se usan serializers, parser y renderer JSON
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'COERCE_DECIMAL_TO_STRING': False,
}

# Directorio de salida por defecto de los comandos (--out lo sobrescribe)
STABILITY_OUTPUT_ROOT = config('STABILITY_OUTPUT_ROOT', default=str(BASE_DIR / 'runs'))

# Constantes numéricas del toolkit
STABILITY = {
    'RESONANCE_TOLERANCE': config('STABILITY_RESONANCE_TOLERANCE', default=1e-12, cast=float),
    'RESIDUAL_TOLERANCE': config('STABILITY_RESIDUAL_TOLERANCE', default=1e-9, cast=float),
    'INVERSE_TOLERANCE': 1e-10,
    'DISSIPATIVITY_TOLERANCE': 1e-10,
    'IMAGINARY_AXIS_TOLERANCE': 1e-8,
    'UNIFORM_EXPONENT_THRESHOLD': 0.1,
    'BT_TOLERANCE': config('STABILITY_BT_TOLERANCE', default=0.25, cast=float),
    'DENSE_SVD_LIMIT': config('STABILITY_DENSE_SVD_LIMIT', default=2000, cast=int),
    'DEFAULT_N_MAX': 64,
    'DEFAULT_PERIOD': 2.0,
    'FREQUENCY_SAMPLES': 200,
    'TIME_SAMPLES': 60,
    'CSV_PRECISION': 17,
    'THREADS': config('STABILITY_THREADS', default=1, cast=int),
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'stability': {
            'handlers': ['console'],
            'level': config('STABILITY_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
