from django.apps import AppConfig


class AffineConfig(AppConfig):
    name = 'affine'
    verbose_name = 'Affine Lagrangians'
