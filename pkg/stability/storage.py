"""
Escritura de resultados.
- Escritura atómica: archivo temporal en el directorio destino y os.replace.
- JSON con el JSONRenderer de DRF (indent 2), CSV con numpy.savetxt (%.17g).
- Checksum SHA-256 de entradas y salidas en manifest.json, sin marcas de tiempo.
"""
import io
import os
import hashlib
import logging
import tempfile

import numpy as np
from django.conf import settings
from rest_framework.renderers import JSONRenderer

from . import __version__
from .conf import get_setting

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'


def get_output_root():
    """Directorio raíz de salida por defecto (STABILITY_OUTPUT_ROOT)."""
    root = getattr(settings, 'STABILITY_OUTPUT_ROOT', None)
    if root is None:
        root = os.path.join(settings.BASE_DIR, 'runs')
    return os.path.abspath(str(root))


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def compute_sha256(file_path_or_content):
    """
    Calcula SHA-256 de un archivo (ruta) o de contenido en memoria.
    Retorna string hex de 64 caracteres.
    """
    hasher = hashlib.sha256()
    if isinstance(file_path_or_content, (str, os.PathLike)) and os.path.isfile(file_path_or_content):
        with open(file_path_or_content, 'rb') as f:
            for chunk in iter(lambda: f.read(8192), b''):
                hasher.update(chunk)
    else:
        hasher.update(file_path_or_content)
    return hasher.hexdigest()


def atomic_write(path, content):
    """Escribe bytes en path sin dejar nunca un archivo a medias."""
    directory = ensure_dir(os.path.dirname(os.path.abspath(path)))
    fd, temp_path = tempfile.mkstemp(dir=directory, prefix='.tmp-', suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(content)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    logger.debug("Archivo escrito: %s", path)
    return path


def render_json(data):
    return JSONRenderer().render(data, renderer_context={'indent': 2}) + b'\n'


def render_csv(header, rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        rows = rows.reshape(0, len(header))
    buffer = io.BytesIO()
    fmt = f"%.{get_setting('CSV_PRECISION')}g"
    np.savetxt(buffer, rows, fmt=fmt, delimiter=',', header=','.join(header), comments='')
    return buffer.getvalue()


class RunManifest:
    """
    Registro reproducible de una ejecución: comando, modelo, parámetros,
    semilla, versión y checksums de entradas y salidas.
    """

    def __init__(self, command, model=None, parameters=None, seed=None):
        self.command = command
        self.model = model
        self.parameters = dict(parameters or {})
        self.seed = seed
        self.version = __version__
        self.inputs = {}
        self.outputs = {}

    def add_input(self, path):
        self.inputs[os.path.basename(path)] = compute_sha256(path)

    def add_output(self, name, content):
        self.outputs[name] = compute_sha256(content)

    def to_dict(self):
        return {
            'command': self.command,
            'model': self.model,
            'parameters': self.parameters,
            'seed': self.seed,
            'version': self.version,
            'inputs': dict(sorted(self.inputs.items())),
            'outputs': dict(sorted(self.outputs.items())),
        }


class RunWriter:
    """Escribe las salidas de un comando en un directorio y lleva su manifiesto."""

    def __init__(self, directory, manifest):
        self.directory = ensure_dir(os.path.abspath(directory))
        self.manifest = manifest

    def _write(self, name, content):
        path = atomic_write(os.path.join(self.directory, name), content)
        self.manifest.add_output(name, content)
        return path

    def write_json(self, name, data):
        return self._write(name, render_json(data))

    def write_csv(self, name, header, rows):
        return self._write(name, render_csv(header, rows))

    def close(self):
        """Escribe manifest.json; no se incluye a sí mismo."""
        path = os.path.join(self.directory, MANIFEST_NAME)
        atomic_write(path, render_json(self.manifest.to_dict()))
        logger.info("Manifiesto escrito en %s (%d salidas)", path, len(self.manifest.outputs))
        return path
