import os
from pathlib import Path

from dotenv import load_dotenv
from django.core.exceptions import ImproperlyConfigured

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'unsafe-dev-key')
DEBUG = os.getenv('DEBUG', '1') == '1'
ALLOWED_HOSTS: list[str] = []


def _env_float(name: str, default: float, *, positive: bool = True) -> float:
    raw = os.getenv(name, '').strip()
    if not raw:
        return default
    try:
        value = float(raw)
    except ValueError as exc:
        raise ImproperlyConfigured(f'{name} must be a number, got {raw!r}') from exc
    if positive and not value > 0:
        raise ImproperlyConfigured(f'{name} must be positive, got {value}')
    return value


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name, '').strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ImproperlyConfigured(f'{name} must be an integer, got {raw!r}') from exc
    if value < 1:
        raise ImproperlyConfigured(f'{name} must be at least 1, got {value}')
    return value


INSTALLED_APPS = [
    'rest_framework',
    'apps.numerics',
    'apps.epidemic',
    'apps.geometry',
    'apps.dynamics',
    'apps.surfaces',
    'apps.console',
]

# Pure computation: nothing is persisted.
DATABASES: dict = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}

EIGEN_TOLERANCE = _env_float('EIGEN_TOLERANCE', 1e-10)
FD_STEP_FLOOR = _env_float('FD_STEP_FLOOR', 1e-5)
FD_STEP_RELATIVE = _env_float('FD_STEP_RELATIVE', 1e-7)
JACOBI_MARGIN = _env_float('JACOBI_MARGIN', 1e-9)
NEGATIVITY_TOLERANCE = _env_float('NEGATIVITY_TOLERANCE', 1e-9)
OUTPUT_SIGNIFICANT_DIGITS = _env_int('OUTPUT_SIGNIFICANT_DIGITS', 17)
SURFACE_WORKERS = _env_int('SURFACE_WORKERS', 4)
VALIDATION_SAMPLES = _env_int('VALIDATION_SAMPLES', 100)
VALIDATION_SEED = _env_int('VALIDATION_SEED', 20200101)

if OUTPUT_SIGNIFICANT_DIGITS > 17:
    raise ImproperlyConfigured('OUTPUT_SIGNIFICANT_DIGITS above 17 adds no information for doubles')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'plain'},
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv('LOG_LEVEL', 'INFO'),
    },
}
