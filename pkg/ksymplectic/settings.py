"""
Django settings for the ksymplectic project.

For more information on this file, see
https://docs.djangoproject.com/en/5.2/topics/settings/

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('KSYMP_SECRET_KEY', 'django-insecure-ksymplectic-local-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition
INSTALLED_APPS = [
    'symbolic',
    'geometry',
    'linalg',
    'constraints',
    'affine',
    'core',
]


# Internationalization
LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

TEST_RUNNER = 'core.runner.KsympTestRunner'


# Logging
KSYMP_LOG_LEVEL = os.environ.get('KSYMP_LOG_LEVEL', 'WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': KSYMP_LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}


# Constraint algorithm settings
KSYMP_MAX_ITERATIONS = int(os.environ.get('KSYMP_MAX_ITERATIONS', 16))  # tangency steps before giving up
KSYMP_SEED = 0                       # default seed for random evaluation points
KSYMP_THREADS = int(os.environ.get('KSYMP_THREADS', 1))  # worker threads, 1 = sequential
KSYMP_BASIS_CROSS_CHECK = True       # rerun SOPDE constraints on the reversed basis
KSYMP_DIAGNOSTIC_SAMPLES = 8         # sample attempts for the projectability diagnostic
KSYMP_CERTIFICATE_MAX_TERMS = 64     # larger minors are summarised by term count
KSYMP_VALIDATE_RANK_LIMIT = 64       # validate skips the rank of M above this n*k
KSYMP_INDEPENDENCE_LIMIT = 200       # skip the Jacobian rank above this many constraints
KSYMP_REPORT_TIMING = False          # timing breaks byte-identical reports
KSYMP_RUN_SLOW_TESTS = os.environ.get('KSYMP_RUN_SLOW_TESTS', '') not in ('', '0', 'false', 'False')
