#!/usr/bin/env python
"""Punto de entrada del toolkit: comandos model, probe, solve, verify y march."""
import os
import sys


def main():
    """Ejecuta el comando de gestión indicado en la línea de comandos."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "No se pudo importar Django. ¿Está instalado y disponible en el "
            "PYTHONPATH? ¿Olvidó activar el entorno virtual? "
            "(pip install -r requirements.txt)"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
