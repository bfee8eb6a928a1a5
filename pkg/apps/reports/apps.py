"""
Reports app config
"""

from django.apps import AppConfig


class ReportsConfig(AppConfig):
    """
    Reports app config
    """

    name = "apps.reports"
    label = "reports"
