"""
Inference app config
"""

from django.apps import AppConfig


class InferenceConfig(AppConfig):
    """
    Inference app config
    """

    name = "apps.inference"
    label = "inference"
