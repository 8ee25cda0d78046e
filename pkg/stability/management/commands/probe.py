import numpy as np

from stability.conf import get_setting
from stability.diagnostics import (
    check_borichev_tomilov,
    default_frequency_window,
    default_time_window,
    fit_exponent,
    frequency_grid,
    sample_decay,
    sample_resolvent,
)
from stability.exceptions import InputError, InsufficientSamples
from stability.management.base import StabilityCommand
from stability.serializers import BorichevTomilovReportSerializer, ExponentFitSerializer


def _grid(lo, hi, count, scale):
    if not (0 <= lo < hi):
        raise InputError(f"Rango inválido: [{lo}, {hi}]")
    if scale == 'log' and lo > 0:
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


class Command(StabilityCommand):
    help = (
        'Muestrea la resolvente sobre iℝ (--resolvent), el decaimiento ‖S(t)A⁻¹‖ (--decay) '
        'o contrasta ambos exponentes (--equivalence).'
    )
    name = 'probe'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('spec_path', metavar='SPEC')
        mode = parser.add_mutually_exclusive_group(required=True)
        mode.add_argument('--resolvent', action='store_true')
        mode.add_argument('--decay', action='store_true')
        mode.add_argument('--equivalence', action='store_true')
        parser.add_argument('--lo', type=float, help='Inicio de la malla (s o t).')
        parser.add_argument('--hi', type=float, help='Fin de la malla (s o t).')
        parser.add_argument('--count', type=int, help='Número de puntos de la malla.')
        parser.add_argument('--scale', choices=['log', 'linear'], default='log')
        parser.add_argument('--window-lo', type=float, help='Inicio de la ventana de ajuste.')
        parser.add_argument('--window-hi', type=float, help='Fin de la ventana de ajuste.')
        parser.add_argument('--freq-window', nargs=2, type=float, metavar=('LO', 'HI'),
                            help='Ventana de frecuencias para --equivalence.')
        parser.add_argument('--time-window', nargs=2, type=float, metavar=('LO', 'HI'),
                            help='Ventana de tiempos para --equivalence.')
        parser.add_argument('--method', choices=['expm', 'eig'], default='expm', help='Cálculo de e^(tA).')

    def run(self, **options):
        g = self.load_model(options['spec_path'])
        if options['equivalence']:
            return self._equivalence(g, options)
        if options['resolvent']:
            lo, hi = default_frequency_window(g)
            count = options['count'] or get_setting('FREQUENCY_SAMPLES')
        else:
            lo, hi = default_time_window(g)
            count = options['count'] or get_setting('TIME_SAMPLES')
        lo = options['lo'] if options['lo'] is not None else lo
        hi = options['hi'] if options['hi'] is not None else hi
        window = (
            options['window_lo'] if options['window_lo'] is not None else lo,
            options['window_hi'] if options['window_hi'] is not None else hi,
        )

        if options['resolvent']:
            if options['scale'] == 'log' and lo > 0:
                grid = frequency_grid(g, lo, hi, count)
            else:
                grid = _grid(lo, hi, count, options['scale'])
            profile = sample_resolvent(g, grid, threads=options['threads'])
            self.writer.write_csv('resolvent_profile.csv', ['s', 'norm'], profile.to_rows())
            fitted, name = profile.envelope(), 'resolvent_fit.json'
        else:
            profile = sample_decay(g, _grid(lo, hi, count, options['scale']), method=options['method'],
                                   threads=options['threads'])
            self.writer.write_csv('decay_profile.csv', ['t', 'norm'], profile.to_rows())
            fitted, name = profile, 'decay_fit.json'

        try:
            fit = fit_exponent(fitted, window)
        except InsufficientSamples as exc:
            data = {
                'exponent': None, 'constant': None, 'window_lo': window[0], 'window_hi': window[1],
                'r_squared': None, 'samples': 0, 'detail': str(exc),
            }
        else:
            data = dict(ExponentFitSerializer(fit).data)
        data['profile'] = 'envelope' if options['resolvent'] else 'raw'
        data['resonant'] = profile.metadata.get('resonant', [])
        if not options['resolvent']:
            data['underflow'] = profile.metadata.get('underflow', [])
        self.writer.write_json(name, data)
        exponent = 'n/d' if data['exponent'] is None else f"{data['exponent']:.6g}"
        return f"{g.label}: {len(profile)} muestras, exponente {exponent}"

    def _equivalence(self, g, options):
        report = check_borichev_tomilov(
            g, options['freq_window'], options['time_window'], threads=options['threads'],
        )
        self.writer.write_json('equivalence.json', BorichevTomilovReportSerializer(report).data)
        return f"{g.label}: régimen {report.regime}, α̂·|β̂| = {report.product:.4g}, {'OK' if report.passed else 'FALLA'}"
