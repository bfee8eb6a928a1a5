"""
Django settings for project.
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'
BASE_DIR = Path(__file__).resolve().parent.parent

# No web surface; the key only satisfies Django's startup checks
SECRET_KEY = config("SECRET_KEY", default="liner-breaks-cli")

DEBUG = config("DEBUG", default=False, cast=bool)
LOG_LEVEL = config("LOG_LEVEL", default="info", cast=str)

# Application definition
INSTALLED_APPS = [
    "rest_framework",
    # Apps
    "apps.core",
    "apps.segmentation",
    "apps.selection",
    "apps.inference",
    "apps.panel",
    "apps.reports",
]

# Inputs and outputs are files only
DATABASES = {}

# Internationalization
LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Analysis defaults
BREAKS_OUTPUT_DIR = config("BREAKS_OUTPUT_DIR", default="")
BREAKS_MIN_LEN = config("BREAKS_MIN_LEN", default=4, cast=int)
BREAKS_MAX_M = config("BREAKS_MAX_M", default=8, cast=int)
BREAKS_LEVEL = config("BREAKS_LEVEL", default=0.95, cast=float)
BREAKS_BANDWIDTH = config(
    "BREAKS_BANDWIDTH", default="auto", cast=lambda v: v if v == "auto" else int(v)
)
BREAKS_WORKERS = config("BREAKS_WORKERS", default=4, cast=int)

# Panel construction
CPI_BASE_YEAR = config("CPI_BASE_YEAR", default=1995, cast=int)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "stream": "ext://sys.stderr",
            "formatter": "verbose",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": LOG_LEVEL.upper(),
    },
}
