"""
Panel app config
"""

from django.apps import AppConfig


class PanelConfig(AppConfig):
    """
    Panel app config
    """

    name = "apps.panel"
    label = "panel"
