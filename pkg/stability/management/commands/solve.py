import numpy as np

from stability.diagnostics import loss_exponent
from stability.management.base import StabilityCommand
from stability.periodic import solve_periodic
from stability.serializers import PeriodicSolutionSerializer


class Command(StabilityCommand):
    help = 'Resuelve el problema periódico modo a modo y escribe solution.json y timeseries.csv.'
    name = 'solve'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('spec_path', metavar='SPEC')
        parser.add_argument('forcing_path', metavar='FORCING')
        parser.add_argument('--m', type=float, default=1.0, help='Índice de Sobolev de la solución (≥ 0).')
        parser.add_argument('--alpha', type=float, help='Exponente de pérdida; por defecto el α̂ ajustado.')
        parser.add_argument('--samples', type=int, help='Muestras por periodo de timeseries.csv.')

    def run(self, **options):
        g = self.load_model(options['spec_path'])
        forcing = self.load_forcing(options['forcing_path'], g, seed=options['seed'])
        alpha = options['alpha']
        if alpha is None:
            alpha = loss_exponent(g, threads=options['threads'])
        solution = solve_periodic(g, forcing, m=options['m'], alpha=alpha, threads=options['threads'])

        data = dict(PeriodicSolutionSerializer(solution).data)
        data['m'] = options['m']
        self.writer.write_json('solution.json', data)

        samples = options['samples'] or max(64, 2 * forcing.n_max + 2)
        times = forcing.period * np.arange(samples) / samples
        values = solution.evaluate(times)
        if np.iscomplexobj(values):
            header = ['t'] + [f"component_{k}_{part}" for k in range(g.dim) for part in ('re', 'im')]
            columns = np.empty((samples, 2 * g.dim))
            columns[:, 0::2], columns[:, 1::2] = values.real, values.imag
        else:
            header = ['t'] + [f"component_{k}" for k in range(g.dim)]
            columns = values
        self.writer.write_csv('timeseries.csv', header, np.column_stack([times, columns]))
        ratio = 'n/d' if solution.loss_ratio is None else f"{solution.loss_ratio:.6g}"
        return f"{g.label}: {len(solution.coeffs)} modos, cociente de pérdida {ratio}"
