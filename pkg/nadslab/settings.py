from pathlib import Path
from dotenv import load_dotenv
load_dotenv()

import os
# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-nads-offline-toolkit')

DEBUG = False

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'nads',
]

# Files are the only persistence layer.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Numerical toolkit

NADS_OMEGA_FLOOR = 1e-30

# 'error' rejects grids coarser than tau/400 for pulsed envelopes, 'warn' only logs.
NADS_STEP_POLICY = 'error'

NADS_SCENARIO_DIR = BASE_DIR / 'scenarios'

NADS_FLOAT_FORMAT = '%.17g'

NADS_WORKERS = int(os.getenv('NADS_WORKERS') or os.cpu_count() or 1)

NADS_LOG_LEVEL = 'INFO'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'nads': {
            'handlers': ['console'],
            'level': NADS_LOG_LEVEL,
            'propagate': False,
        },
    },
}
