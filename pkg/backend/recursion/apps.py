from django.apps import AppConfig


class RecursionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'recursion'
    verbose_name = 'Hitting recursions'
