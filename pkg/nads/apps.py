from django.apps import AppConfig


class NadsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'nads'
    verbose_name = 'Nonadiabatic dressed states'
