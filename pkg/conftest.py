"""Configura Django para que pytest pueda recolectar las pruebas de stability."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
django.setup()
