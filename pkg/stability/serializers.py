import math

import numpy as np
from rest_framework import serializers

from .operators import MODEL_KINDS, ModelSpec
from .periodic import FourierForcing, fourier_coefficients, is_conjugate_symmetric, random_forcing


def finite_or_none(value):
    """JSON estricto: inf y NaN se escriben como null."""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def format_errors(errors, prefix=''):
    """Aplana los errores anidados de un serializer en 'campo: mensaje; ...'"""
    partes = []
    if isinstance(errors, dict):
        for field, detail in errors.items():
            nombre = f"{prefix}.{field}" if prefix else str(field)
            partes.append(format_errors(detail, nombre))
    elif isinstance(errors, list):
        for detail in errors:
            partes.append(format_errors(detail, prefix))
    else:
        partes.append(f"{prefix}: {errors}" if prefix else str(errors))
    return '; '.join(p for p in partes if p)


# ==================== MODELOS ====================

class HeatWaveParametersSerializer(serializers.Serializer):
    """Parámetros de heat_wave_1d"""
    nx_heat = serializers.IntegerField(min_value=2)
    nx_wave = serializers.IntegerField(min_value=2)
    diffusivity = serializers.FloatField(default=1.0)
    wave_speed = serializers.FloatField(default=1.0)

    def validate_diffusivity(self, value):
        if value <= 0:
            raise serializers.ValidationError('La difusividad debe ser > 0.')
        return value

    def validate_wave_speed(self, value):
        if value <= 0:
            raise serializers.ValidationError('La velocidad de onda debe ser > 0.')
        return value


class ChainParametersSerializer(serializers.Serializer):
    """Parámetros de weakly_damped_chain"""
    length = serializers.IntegerField(min_value=1)
    damping = serializers.FloatField(min_value=0.0, default=1.0)
    coupling = serializers.FloatField(min_value=0.0, default=1.0)
    stiffness = serializers.FloatField(default=1.0)

    def validate_stiffness(self, value):
        if value <= 0:
            raise serializers.ValidationError('La rigidez debe ser > 0.')
        return value


class UniformlyDampedParametersSerializer(serializers.Serializer):
    dim = serializers.IntegerField(min_value=1, default=1)


class OscillatorParametersSerializer(serializers.Serializer):
    pass


class DiagonalParametersSerializer(serializers.Serializer):
    eigenvalues = serializers.ListField(child=serializers.JSONField(), allow_empty=False)
    invertible = serializers.BooleanField(default=True)

    def validate_eigenvalues(self, value):
        for item in value:
            if isinstance(item, bool):
                raise serializers.ValidationError('Los autovalores no pueden ser booleanos.')
            if isinstance(item, (int, float)):
                continue
            if (isinstance(item, list) and len(item) == 2
                    and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in item)):
                continue
            raise serializers.ValidationError(f"Autovalor no válido: {item!r}; se espera un número o un par [re, im].")
        return value

    def validate(self, data):
        if data.get('invertible', True):
            for item in data['eigenvalues']:
                re, im = (item if isinstance(item, list) else (item, 0))
                if re == 0 and im == 0:
                    raise serializers.ValidationError("Autovalor λ = 0 no permitido con 'invertible': true.")
        return data


PARAMETER_SERIALIZERS = {
    'heat_wave_1d': HeatWaveParametersSerializer,
    'weakly_damped_chain': ChainParametersSerializer,
    'uniformly_damped': UniformlyDampedParametersSerializer,
    'conservative_oscillator': OscillatorParametersSerializer,
    'diagonal': DiagonalParametersSerializer,
}


class ModelSpecSerializer(serializers.Serializer):
    """Serializer para {"kind": ..., "parameters": {...}}"""
    kind = serializers.ChoiceField(choices=MODEL_KINDS)
    parameters = serializers.DictField(required=False, default=dict)

    def validate(self, data):
        parameters = PARAMETER_SERIALIZERS[data['kind']](data=data.get('parameters', {}))
        if not parameters.is_valid():
            raise serializers.ValidationError({'parameters': parameters.errors})
        data['parameters'] = dict(parameters.validated_data)
        return data

    def to_spec(self):
        return ModelSpec(kind=self.validated_data['kind'], parameters=self.validated_data['parameters'])


# ==================== FORZAMIENTOS ====================

class ModeSerializer(serializers.Serializer):
    n = serializers.IntegerField()
    re = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    im = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate(self, data):
        im = data.get('im')
        if im is not None and len(im) != len(data['re']):
            raise serializers.ValidationError('re e im deben tener la misma longitud.')
        return data


class RandomForcingSerializer(serializers.Serializer):
    seed = serializers.IntegerField(min_value=0, required=False, allow_null=True, default=None)
    n_max = serializers.IntegerField(min_value=0)
    decay = serializers.FloatField(default=2.0)


class FourierForcingSerializer(serializers.Serializer):
    """
    Forzamiento periódico en una de tres formas:
      {"period", "modes": [{"n", "re", "im"}]}
      {"period", "random": {"seed", "n_max", "decay"}}
      {"period", "samples": [[...], ...], "n_max"}  (2K muestras equiespaciadas en [0, T))
    """
    period = serializers.FloatField()
    modes = ModeSerializer(many=True, required=False)
    random = RandomForcingSerializer(required=False)
    samples = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), required=False)
    n_max = serializers.IntegerField(min_value=0, required=False)

    def validate_period(self, value):
        if not math.isfinite(value) or value <= 0:
            raise serializers.ValidationError('El periodo debe ser > 0.')
        return value

    def validate_modes(self, value):
        indices = [mode['n'] for mode in value]
        if len(set(indices)) != len(indices):
            raise serializers.ValidationError('Índices de modo repetidos.')
        if len({len(mode['re']) for mode in value}) > 1:
            raise serializers.ValidationError('Todos los modos deben tener la misma dimensión.')
        return value

    def validate(self, data):
        formas = [key for key in ('modes', 'random', 'samples') if data.get(key) is not None]
        if len(formas) != 1:
            raise serializers.ValidationError("Indique exactamente una de 'modes', 'random' o 'samples'.")
        if 'samples' in formas and data.get('n_max') is None:
            raise serializers.ValidationError({'n_max': "Requerido junto con 'samples'."})
        return data

    @property
    def is_random(self):
        return self.validated_data.get('random') is not None

    def to_forcing(self, g=None, seed=None):
        """
        Construye el FourierForcing. La forma aleatoria necesita el generador
        (esfera de energía) y una semilla, propia o la de --seed.
        """
        data = self.validated_data
        period = data['period']
        if data.get('modes') is not None:
            coeffs = {}
            for mode in data['modes']:
                re = np.asarray(mode['re'], dtype=float)
                im = np.asarray(mode.get('im') or np.zeros_like(re), dtype=float)
                coeffs[mode['n']] = re + 1j * im
            return FourierForcing(period, coeffs, real_flag=is_conjugate_symmetric(coeffs))
        if data.get('samples') is not None:
            coeffs = fourier_coefficients(np.asarray(data['samples'], dtype=float), data['n_max'])
            return FourierForcing(period, coeffs, real_flag=True)
        spec = data['random']
        seed = spec['seed'] if spec.get('seed') is not None else seed
        return random_forcing(g, period, spec['n_max'], spec['decay'], seed)


# ==================== REPORTES ====================

class ModelSummarySerializer(serializers.Serializer):
    kind = serializers.SerializerMethodField()
    label = serializers.CharField()
    dim = serializers.IntegerField()
    abscissa = serializers.SerializerMethodField()
    flags = serializers.SerializerMethodField()
    dissipativity_defect = serializers.SerializerMethodField()
    metadata = serializers.SerializerMethodField()

    def get_kind(self, obj):
        return obj.metadata.get('kind')

    def get_abscissa(self, obj):
        return obj.abscissa()

    def get_flags(self, obj):
        return sorted(obj.flags)

    def get_dissipativity_defect(self, obj):
        return obj.dissipativity_defect()

    def get_metadata(self, obj):
        return {key: value for key, value in obj.metadata.items() if key != 'kind'}


class ExponentFitSerializer(serializers.Serializer):
    exponent = serializers.FloatField()
    constant = serializers.FloatField()
    window_lo = serializers.SerializerMethodField()
    window_hi = serializers.SerializerMethodField()
    r_squared = serializers.FloatField()
    samples = serializers.IntegerField()

    def get_window_lo(self, obj):
        return obj.window[0]

    def get_window_hi(self, obj):
        return obj.window[1]


class StabilityReportSerializer(serializers.Serializer):
    classification = serializers.CharField()
    alpha_hat = serializers.FloatField(allow_null=True)
    abscissa = serializers.FloatField()
    evidence = serializers.CharField()
    window = serializers.ListField(child=serializers.FloatField(), allow_null=True)


class BorichevTomilovReportSerializer(serializers.Serializer):
    alpha_hat = serializers.SerializerMethodField()
    beta_hat = serializers.FloatField()
    product = serializers.SerializerMethodField()
    passed = serializers.BooleanField()
    regime = serializers.CharField()
    tolerance = serializers.FloatField()
    frequency_window = serializers.ListField(child=serializers.FloatField())
    time_window = serializers.ListField(child=serializers.FloatField())
    resolvent_fit = ExponentFitSerializer(allow_null=True)
    decay_fit = ExponentFitSerializer(allow_null=True)
    note = serializers.CharField(allow_blank=True)

    def get_alpha_hat(self, obj):
        return finite_or_none(obj.alpha_hat)

    def get_product(self, obj):
        return finite_or_none(obj.product)


def _complex_pair(vector):
    vector = np.asarray(vector)
    return {'re': vector.real.tolist(), 'im': vector.imag.tolist()}


class PeriodicSolutionSerializer(serializers.Serializer):
    period = serializers.FloatField()
    omega = serializers.FloatField()
    norms = serializers.SerializerMethodField()
    alpha = serializers.FloatField(allow_null=True)
    forcing_norm = serializers.FloatField(allow_null=True)
    loss_ratio = serializers.FloatField(allow_null=True)
    lattice_constant = serializers.SerializerMethodField()
    tail_bound = serializers.SerializerMethodField()
    max_residual = serializers.SerializerMethodField()
    modes = serializers.SerializerMethodField()

    def get_norms(self, obj):
        return {f"{m:g}": value for m, value in obj.norms.items()}

    def get_lattice_constant(self, obj):
        return finite_or_none(obj.lattice_constant)

    def get_tail_bound(self, obj):
        return finite_or_none(obj.tail_bound)

    def get_max_residual(self, obj):
        return max(obj.residuals.values(), default=0.0)

    def get_modes(self, obj):
        return [
            {'n': n, **_complex_pair(vector), 'residual': obj.residuals[n]}
            for n, vector in obj.coeffs.items()
        ]


class LossCertificateSerializer(serializers.Serializer):
    model = serializers.CharField(source='label')
    m = serializers.FloatField()
    alpha = serializers.FloatField()
    trials = serializers.IntegerField()
    period = serializers.FloatField()
    n_max = serializers.IntegerField()
    seed = serializers.IntegerField()
    max_ratio = serializers.FloatField()
    lattice_constant = serializers.FloatField()
    ratios = serializers.ListField(child=serializers.FloatField())


class CrossCheckReportSerializer(serializers.Serializer):
    max_deviation = serializers.FloatField()
    error_estimate = serializers.FloatField()
    poincare_gap = serializers.FloatField()
    relative_gap = serializers.FloatField()
    halving_difference = serializers.FloatField()
    within_tolerance = serializers.BooleanField()


class ConvergenceReportSerializer(serializers.Serializer):
    period = serializers.FloatField()
    periods = serializers.SerializerMethodField()
    gaps = serializers.ListField(child=serializers.FloatField())
    ratios = serializers.ListField(child=serializers.FloatField())
    error_estimate = serializers.FloatField()
    verdict = serializers.CharField()

    def get_periods(self, obj):
        return len(obj.gaps) - 1


class GrowthReportSerializer(serializers.Serializer):
    frequency = serializers.FloatField()
    growth_order = serializers.FloatField()
    amplitude_slope = serializers.FloatField()
    amplification = serializers.FloatField()
    resolvent_norm = serializers.FloatField(allow_null=True)
    error_estimate = serializers.FloatField()
    peak_times = serializers.ListField(child=serializers.FloatField())
    peaks = serializers.ListField(child=serializers.FloatField())
    metadata = serializers.DictField()
