from django.apps import AppConfig


class LindbladConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lindblad'
