"""
Selection app config
"""

from django.apps import AppConfig


class SelectionConfig(AppConfig):
    """
    Selection app config
    """

    name = "apps.selection"
    label = "selection"
