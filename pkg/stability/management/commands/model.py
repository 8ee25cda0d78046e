from stability.diagnostics import classify_stability
from stability.management.base import StabilityCommand
from stability.serializers import ModelSummarySerializer, StabilityReportSerializer


class Command(StabilityCommand):
    help = 'Valida una especificación de modelo y escribe model.json (dim, abscisa, flags).'
    name = 'model'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('spec_path', metavar='SPEC', help='JSON {"kind": ..., "parameters": {...}}')
        parser.add_argument('--classify', action='store_true', help='Añade la clasificación de estabilidad.')

    def run(self, **options):
        g = self.load_model(options['spec_path'])
        summary = dict(ModelSummarySerializer(g).data)
        if options['classify']:
            report = classify_stability(g, threads=options['threads'])
            summary['stability'] = StabilityReportSerializer(report).data
        self.writer.write_json('model.json', summary)
        return f"{g.label}: dim={g.dim}, abscisa={summary['abscissa']:.6g}"
