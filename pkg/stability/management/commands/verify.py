from stability.conf import get_setting
from stability.diagnostics import loss_exponent
from stability.exceptions import InputError
from stability.management.base import StabilityCommand
from stability.periodic import verify_loss_estimate
from stability.serializers import LossCertificateSerializer


class Command(StabilityCommand):
    help = 'Certifica empíricamente ‖U‖_{H^m} ≤ C_T‖F‖_{H^{m+α}} con forzamientos aleatorios (certificate.json).'
    name = 'verify'
    seed_required = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('spec_path', metavar='SPEC')
        parser.add_argument('--m', type=float, default=1.0)
        parser.add_argument('--alpha', type=float, help='Por defecto el α̂ ajustado (0 en régimen uniforme).')
        parser.add_argument('--trials', type=int, default=100)
        parser.add_argument('--period', type=float, default=get_setting('DEFAULT_PERIOD'))
        parser.add_argument('--n-max', type=int, default=get_setting('DEFAULT_N_MAX'))

    def run(self, **options):
        g = self.load_model(options['spec_path'])
        alpha = options['alpha']
        if alpha is None:
            alpha = loss_exponent(g, threads=options['threads'])
            if alpha is None:
                raise InputError(f"{g.label}: no hay α̂ ajustado (modelo conservativo o inestable); indique --alpha.")
        certificate = verify_loss_estimate(
            g, alpha=alpha, m=options['m'], trials=options['trials'], seed=options['seed'],
            period=options['period'], n_max=options['n_max'], threads=options['threads'],
        )
        self.writer.write_json('certificate.json', LossCertificateSerializer(certificate).data)
        return f"{g.label}: C_T empírica = {certificate.max_ratio:.6g} ({certificate.trials} pruebas)"
