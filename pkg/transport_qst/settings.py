"""
Django settings for the transport_qst project.

The project has no database and no web surface: every app is a library of
numerical services exposed through management commands.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "transport-qst-local")

DEBUG = os.environ.get("DJANGO_DEBUG", "False").lower() in ("true", "1", "yes")

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Third-party
    "ninja",
    # Tomography apps
    "qubits",
    "lindblad",
    "transport",
    "krylov",
    "tomography",
    "estimation",
    "entanglement",
    "scenarios",
]

DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


def _env_float(name, default):
    return float(os.environ.get(name, default))


def _env_int(name, default):
    return int(os.environ.get(name, default))


# Numerical tolerances shared by every app
TOMOGRAPHY = {
    "ARNOLDI_TOL": _env_float("TQST_ARNOLDI_TOL", 1e-10),
    "DEGENERACY_TOL": _env_float("TQST_DEGENERACY_TOL", 1e-9),
    "CONDITION_LIMIT": _env_float("TQST_CONDITION_LIMIT", 1e8),
    "OVERLAP_TOL": _env_float("TQST_OVERLAP_TOL", 1e-9),
    "RECONSTRUCTION_TOL": _env_float("TQST_RECONSTRUCTION_TOL", 1e-6),
    "NOISE_GATE_SIGMAS": _env_float("TQST_NOISE_GATE_SIGMAS", 5.0),
    "K_MAX": _env_int("TQST_K_MAX", 3),
    "GAUSS_NEWTON_MAX_ITER": _env_int("TQST_GAUSS_NEWTON_MAX_ITER", 50),
    "GAUSS_NEWTON_GTOL": _env_float("TQST_GAUSS_NEWTON_GTOL", 1e-12),
}

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": os.environ.get("TQST_LOG_LEVEL", "WARNING"),
    },
}
