import numpy as np
from django.core.management.base import CommandError
from scipy import linalg

from stability.management.base import ARGUMENT_ERROR, StabilityCommand
from stability.march import converge_to_periodic, cross_check_periodic, resonance_demo
from stability.periodic import solve_periodic
from stability.serializers import (
    ConvergenceReportSerializer,
    CrossCheckReportSerializer,
    GrowthReportSerializer,
)


def _state_columns(states, prefix='state'):
    states = np.asarray(states)
    dim = states.shape[1]
    if not np.iscomplexobj(states):
        return [f"{prefix}_{k}" for k in range(dim)], states
    columns = np.empty((states.shape[0], 2 * dim))
    columns[:, 0::2], columns[:, 1::2] = states.real, states.imag
    return [f"{prefix}_{k}_{part}" for k in range(dim) for part in ('re', 'im')], columns


class Command(StabilityCommand):
    help = (
        'Integra el sistema forzado en el tiempo y mide la convergencia a la solución periódica; '
        'con --resonance demuestra crecimiento secular en modelos conservativos.'
    )
    name = 'march'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('spec_path', metavar='SPEC')
        parser.add_argument('forcing_path', metavar='FORCING', nargs='?')
        parser.add_argument('--u0', choices=['zero', 'periodic', 'random'], default='zero')
        parser.add_argument('--periods', type=int, default=10)
        parser.add_argument('--dt', type=float, help='Paso de tiempo (por defecto min(T/(20·N_max), 0.9/‖A‖)).')
        parser.add_argument('--dump-states', action='store_true', help='Incluye los estados en trajectory.csv.')
        parser.add_argument('--resonance', action='store_true', help='Demostración de resonancia (growth.json).')
        parser.add_argument('--frequency', type=float, help='Frecuencia de forzamiento para --resonance.')
        parser.add_argument('--horizon', type=float, help='Horizonte para --resonance (por defecto 20 periodos).')

    def run(self, **options):
        g = self.load_model(options['spec_path'])
        if options['resonance']:
            return self._resonance(g, options)
        if not options['forcing_path']:
            raise CommandError('march requiere FORCING (salvo con --resonance).', returncode=ARGUMENT_ERROR)
        if options['periods'] < 1:
            raise CommandError('--periods debe ser ≥ 1.', returncode=ARGUMENT_ERROR)

        forcing = self.load_forcing(options['forcing_path'], g, seed=options['seed'])
        solution = solve_periodic(g, forcing, threads=options['threads'])
        if options['u0'] == 'zero':
            u0 = np.zeros(g.dim)
        elif options['u0'] == 'periodic':
            u0 = solution.initial_value()
        else:
            seed = self.require_seed(options, '--u0 random')
            z = np.random.default_rng(seed).standard_normal(g.dim)
            u0 = linalg.solve_triangular(g.cholesky_factor, z / np.linalg.norm(z), lower=False)

        report = converge_to_periodic(g, forcing, u0, options['periods'], dt=options['dt'], solution=solution)
        cross_check = cross_check_periodic(g, forcing, dt=options['dt'], solution=solution)

        periods = np.arange(len(report.gaps))
        self.writer.write_csv(
            'gaps.csv', ['period', 't', 'gap'],
            np.column_stack([periods, periods * forcing.period, report.gaps]),
        )
        trajectory = report.trajectory
        header, rows = ['t', 'energy'], np.column_stack([trajectory.times, trajectory.energy])
        if options['dump_states']:
            state_header, columns = _state_columns(trajectory.states)
            header, rows = header + state_header, np.column_stack([rows, columns])
        self.writer.write_csv('trajectory.csv', header, rows)

        data = dict(ConvergenceReportSerializer(report).data)
        data['u0'] = options['u0']
        data['step'] = trajectory.step
        data['cross_check'] = CrossCheckReportSerializer(cross_check).data
        self.writer.write_json('convergence.json', data)
        return f"{g.label}: {options['periods']} periodos, salto final {report.gaps[-1]:.3g} ({report.verdict})"

    def _resonance(self, g, options):
        report = resonance_demo(g, frequency=options['frequency'], horizon=options['horizon'], dt=options['dt'])
        self.writer.write_json('growth.json', GrowthReportSerializer(report).data)
        self.writer.write_csv('peaks.csv', ['t', 'peak'], np.column_stack([report.peak_times, report.peaks]))
        return (
            f"{g.label}: ν={report.frequency:.6g}, orden de crecimiento {report.growth_order:.3g}, "
            f"amplificación {report.amplification:.4g}"
        )
