"""
Segmentation app config
"""

from django.apps import AppConfig


class SegmentationConfig(AppConfig):
    """
    Segmentation app config
    """

    name = "apps.segmentation"
    label = "segmentation"
