"""
Base común de los comandos del toolkit.

Opciones globales --out, --seed y --threads; lectura de JSON con el parser de
DRF; escritura atómica de salidas con manifest.json; traducción de los errores
del toolkit a CommandError con su código de salida.
"""
import argparse
import logging
import os

from django.core.management.base import BaseCommand, CommandError, DjangoHelpFormatter
from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser

from stability.exceptions import InputError, InvalidModelSpec, ToolkitError, exit_code_table
from stability.operators import build_generator
from stability.serializers import FourierForcingSerializer, ModelSpecSerializer, format_errors
from stability.storage import RunManifest, RunWriter, get_output_root

logger = logging.getLogger(__name__)

ARGUMENT_ERROR = 2

# Opciones de Django que no describen la ejecución
_IGNORED_OPTIONS = {
    'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color',
    'force_color', 'skip_checks', 'out', 'threads', 'stdout', 'stderr',
}


class HelpFormatter(DjangoHelpFormatter, argparse.RawDescriptionHelpFormatter):
    """Conserva los saltos de línea del epílogo con los códigos de salida."""


class StabilityCommand(BaseCommand):
    name = None
    seed_required = False
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        kwargs.setdefault('epilog', exit_code_table())
        kwargs.setdefault('formatter_class', HelpFormatter)
        return super().create_parser(prog_name, subcommand, **kwargs)

    def add_arguments(self, parser):
        parser.add_argument('--out', help='Directorio de salida (por defecto STABILITY_OUTPUT_ROOT/<comando>).')
        parser.add_argument('--seed', type=int, required=self.seed_required, help='Semilla entera ≥ 0.')
        parser.add_argument('--threads', type=int, default=None, help='Hilos para muestreo y solves por modo.')

    def handle(self, *args, **options):
        if options.get('seed') is not None and options['seed'] < 0:
            raise CommandError('--seed debe ser ≥ 0.', returncode=ARGUMENT_ERROR)
        if options.get('threads') is not None and options['threads'] < 1:
            raise CommandError('--threads debe ser ≥ 1.', returncode=ARGUMENT_ERROR)
        out = options.get('out') or os.path.join(get_output_root(), self.name)
        parameters = {
            key: value for key, value in sorted(options.items())
            if key not in _IGNORED_OPTIONS and not key.endswith('_path')
        }
        self.manifest = RunManifest(self.name, parameters=parameters, seed=options.get('seed'))
        self.writer = RunWriter(out, self.manifest)
        try:
            summary = self.run(**options)
        except ToolkitError as exc:
            logger.error("%s: %s", type(exc).__name__, exc)
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=exc.exit_code)
        self.writer.close()
        if summary:
            self.stdout.write(self.style.SUCCESS(summary))

    def run(self, **options):
        raise NotImplementedError('Los comandos deben implementar run().')

    def require_seed(self, options, motivo):
        if options.get('seed') is None:
            raise CommandError(f"{motivo} requiere --seed.", returncode=ARGUMENT_ERROR)
        return options['seed']

    # ==================== ENTRADAS ====================

    def load_json(self, path):
        """Lee un JSON con el parser de DRF; los errores conservan línea y columna."""
        try:
            with open(path, 'rb') as stream:
                data = JSONParser().parse(stream)
        except FileNotFoundError:
            raise InputError(f"No existe el archivo: {path}")
        except ParseError as exc:
            raise InputError(f"{path}: {exc.detail}")
        self.manifest.add_input(path)
        return data

    def load_model(self, path):
        serializer = ModelSpecSerializer(data=self.load_json(path))
        if not serializer.is_valid():
            raise InvalidModelSpec(f"{path}: {format_errors(serializer.errors)}")
        spec = serializer.to_spec()
        self.manifest.model = spec.to_dict()
        return build_generator(spec)

    def load_forcing(self, path, g, seed=None):
        serializer = FourierForcingSerializer(data=self.load_json(path))
        if not serializer.is_valid():
            raise InputError(f"{path}: {format_errors(serializer.errors)}")
        if serializer.is_random:
            own_seed = serializer.validated_data['random'].get('seed')
            if own_seed is None and seed is None:
                raise CommandError(
                    'El forzamiento aleatorio requiere una semilla en el JSON o --seed.',
                    returncode=ARGUMENT_ERROR,
                )
            if own_seed is not None:
                self.manifest.seed = own_seed
        forcing = serializer.to_forcing(g, seed=seed)
        if forcing.dim != g.dim:
            raise InputError(f"{path}: el forzamiento tiene dimensión {forcing.dim} y el modelo {g.dim}.")
        return forcing
