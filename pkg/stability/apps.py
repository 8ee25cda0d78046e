from django.apps import AppConfig


class StabilityConfig(AppConfig):
    name = 'stability'
    verbose_name = 'Estabilidad y problemas periódicos'
