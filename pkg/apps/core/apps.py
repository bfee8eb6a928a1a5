"""
Core app config
"""

from django.apps import AppConfig


class CoreConfig(AppConfig):
    """
    Core app config
    """

    name = "apps.core"
    label = "core"
