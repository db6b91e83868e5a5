from django.apps import AppConfig


class SymbolicConfig(AppConfig):
    name = 'symbolic'
    verbose_name = 'Symbolic expressions'
