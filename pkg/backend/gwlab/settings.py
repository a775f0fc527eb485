"""
Django settings for the gwlab project.

Generated by 'django-admin startproject' using Django 4.2.9 and trimmed down
to what a batch simulation lab needs: the ORM for run records, management
commands for the experiment runner and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-gwlab-local-only')

DEBUG = os.getenv('DJANGO_DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    # Third-party apps
    'rest_framework',
    # Local apps
    'montecarlo',
    'offspring',
    'trees',
    'walks',
    'recursion',
    'environment',
    'spine',
    'experiments',
]


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

# SQLite keeps run records next to the code; set DB_ENGINE=postgresql to share them.
if os.getenv('DB_ENGINE', 'sqlite') == 'postgresql':
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.postgresql',
            'NAME': os.getenv('DB_NAME', 'gwlab_db'),
            'USER': os.getenv('DB_USER', 'postgres'),
            'PASSWORD': os.getenv('DB_PASSWORD', 'postgres'),
            'HOST': os.getenv('DB_HOST', 'localhost'),
            'PORT': os.getenv('DB_PORT', '5432'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'db.sqlite3',
        }
    }


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework Settings (serializers only, no API surface)
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
    'COERCE_DECIMAL_TO_STRING': False,
}

# Lab defaults, every value can be overridden from the environment or .env
GWLAB = {
    'MAX_OFFSPRING': int(os.getenv('GWLAB_MAX_OFFSPRING', '64')),
    'ARENA_NODE_CAP': int(float(os.getenv('GWLAB_ARENA_NODE_CAP', '5e7'))),
    'MARTINGALE_DEPTH': int(os.getenv('GWLAB_MARTINGALE_DEPTH', '24')),
    'POPULATION_CAP': float(os.getenv('GWLAB_POPULATION_CAP', '1e12')),
    'HORIZON': float(os.getenv('GWLAB_HORIZON', '2000')),
    'REPLICAS': int(os.getenv('GWLAB_REPLICAS', '10000')),
    'PARALLELISM': int(os.getenv('GWLAB_PARALLELISM', '1')),
    'BETA_TOL': float(os.getenv('GWLAB_BETA_TOL', '1e-6')),
    'BETA_N0': int(os.getenv('GWLAB_BETA_N0', '16')),
    'BETA_CAP': int(os.getenv('GWLAB_BETA_CAP', '4096')),
    'POOL_SIZE': int(os.getenv('GWLAB_POOL_SIZE', '2048')),
    'MIN_POOLS': int(os.getenv('GWLAB_MIN_POOLS', '32')),
    'SAMPLES': int(os.getenv('GWLAB_SAMPLES', '10000')),
    'SPINE_DEPTH': int(os.getenv('GWLAB_SPINE_DEPTH', '64')),
    'RECORD_RUNS': os.getenv('GWLAB_RECORD_RUNS', 'True') == 'True',
    'SEED': int(os.getenv('GWER_SEED', '0')),
}

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': os.getenv('GWLAB_LOG_LEVEL', 'INFO'),
            'propagate': False,
        }
        for app in (
            'gwlab', 'montecarlo', 'offspring', 'trees', 'walks',
            'recursion', 'environment', 'spine', 'experiments',
        )
    },
}
