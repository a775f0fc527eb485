from django.apps import AppConfig


class OffspringConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'offspring'
    verbose_name = 'Offspring laws'
