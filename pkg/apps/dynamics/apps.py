from django.apps import AppConfig


class DynamicsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.dynamics'
    label = 'dynamics'
