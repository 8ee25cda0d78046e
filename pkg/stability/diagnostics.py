"""
Diagnósticos de estabilidad.

Mide el crecimiento de la resolvente sobre iℝ y el decaimiento de S(t)A⁻¹,
ajusta exponentes en escala log-log, contrasta ambas mediciones
(equivalencia de Borichev–Tomilov) y clasifica el tipo de estabilidad.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .conf import get_setting
from .exceptions import (
    InputError,
    InsufficientSamples,
    InvalidGenerator,
    ResonantFrequency,
    UnstableGrowth,
)
from .operators import smallest_singular_value

logger = logging.getLogger(__name__)

UNIFORM = 'uniform'
POLYNOMIAL = 'polynomial'
CONSERVATIVE = 'conservative'
UNSTABLE = 'unstable'

MIN_FIT_SAMPLES = 5


def parallel_map(function, items, threads=None):
    """map en orden de entrada; con threads > 1 usa un pool de hilos."""
    threads = threads or get_setting('THREADS')
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, items))
    return [function(item) for item in items]


def _strictly_increasing(values, name):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise InputError(f"La malla de {name} debe ser una lista no vacía.")
    if not np.all(np.isfinite(values)):
        raise InputError(f"La malla de {name} contiene valores no finitos.")
    if np.any(np.diff(values) <= 0):
        raise InputError(f"La malla de {name} debe ser estrictamente creciente.")
    return values


@dataclass(frozen=True, eq=False)
class _Profile:
    points: np.ndarray
    norms: np.ndarray
    label: str = ''
    metadata: dict = field(default_factory=dict)

    coordinate = 'x'

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        norms = np.asarray(self.norms, dtype=float)
        if points.shape != norms.shape or points.ndim != 1:
            raise InputError('El perfil necesita puntos y normas de la misma longitud.')
        if points.size and np.any(np.diff(points) <= 0):
            raise InputError(f"Los valores de {self.coordinate} deben ser estrictamente crecientes.")
        if np.any(~np.isfinite(norms)) or np.any(norms <= 0):
            raise InputError('Las normas del perfil deben ser positivas y finitas.')
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'norms', norms)
        object.__setattr__(self, 'metadata', dict(self.metadata))

    def __len__(self):
        return self.points.size

    @property
    def samples(self):
        return list(zip(self.points.tolist(), self.norms.tolist()))

    def window(self, lo, hi):
        mask = (self.points >= lo) & (self.points <= hi)
        return self.points[mask], self.norms[mask]

    def to_rows(self):
        return np.column_stack([self.points, self.norms])


class ResolventProfile(_Profile):
    """Muestras (s, ‖(isI−A)⁻¹‖_H); las frecuencias resonantes quedan en metadata['resonant']"""
    coordinate = 's'

    def envelope(self):
        """
        Puntos récord del máximo acumulado: la mayorante monótona del perfil.
        Si la resolvente no crece en la ventana solo queda el primer punto.
        """
        if not len(self):
            return self
        running = np.maximum.accumulate(self.norms)
        keep = np.r_[True, self.norms[1:] > running[:-1]]
        return ResolventProfile(
            self.points[keep], self.norms[keep], label=self.label,
            metadata={**self.metadata, 'envelope': True},
        )


class DecayProfile(_Profile):
    """Muestras (t, ‖S(t)A⁻¹‖_H)"""
    coordinate = 't'


@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    constant: float
    window: tuple
    r_squared: float
    samples: int
    coordinate: str = 's'


@dataclass(frozen=True)
class StabilityReport:
    classification: str
    abscissa: float
    evidence: str
    alpha_hat: float = None
    window: tuple = None
    fit: ExponentFit = None

    def __post_init__(self):
        if (self.alpha_hat is not None) != (self.classification == POLYNOMIAL):
            raise ValueError('alpha_hat existe si y solo si la clasificación es polinomial.')


@dataclass(frozen=True)
class BorichevTomilovReport:
    alpha_hat: float
    beta_hat: float
    product: float
    passed: bool
    regime: str
    tolerance: float
    frequency_window: tuple
    time_window: tuple
    resolvent_fit: ExponentFit = None
    decay_fit: ExponentFit = None
    note: str = ''


# ==================== RESOLVENTE ====================

def resolvent_norm(g, s):
    """
    ‖(isI−A)⁻¹‖_H = 1/σ_min(isI − W) con W = R A R⁻¹.
    ResonantFrequency si σ_min ≤ RESONANCE_TOLERANCE·‖A‖_H.
    """
    shifted = 1j * float(s) * np.eye(g.dim) - g.weighted_generator
    sigma = smallest_singular_value(shifted)
    if sigma <= get_setting('RESONANCE_TOLERANCE') * g.norm:
        raise ResonantFrequency(s, sigma)
    return 1.0 / sigma


def sample_resolvent(g, grid, threads=None):
    grid = _strictly_increasing(grid, 'frecuencias')

    def norm_or_none(s):
        try:
            return resolvent_norm(g, s)
        except ResonantFrequency:
            return None

    values = parallel_map(norm_or_none, list(grid), threads)
    resonant = [float(s) for s, value in zip(grid, values) if value is None]
    if resonant:
        logger.warning("%s: %d frecuencias resonantes excluidas del perfil", g.label, len(resonant))
    keep = np.array([value is not None for value in values])
    norms = np.array([value for value in values if value is not None], dtype=float)
    return ResolventProfile(grid[keep], norms, label=g.label, metadata={'resonant': resonant})


def frequency_grid(g, lo, hi, count=None):
    """
    Malla logarítmica en [lo, hi] ampliada con |Im λ| de los autovalores que
    caen en la ventana, donde la resolvente tiene sus picos.
    """
    count = count or get_setting('FREQUENCY_SAMPLES')
    if not (0 <= lo < hi):
        raise InputError(f"Ventana de frecuencias inválida: ({lo}, {hi})")
    base = np.geomspace(lo, hi, count) if lo > 0 else np.linspace(lo, hi, count)
    peaks = np.abs(g.spectrum.imag)
    peaks = peaks[(peaks >= lo) & (peaks <= hi)]
    return np.unique(np.r_[base, peaks])


def default_frequency_window(g):
    nyquist = g.metadata.get('nyquist_frequency')
    if nyquist:
        return (1.0, float(nyquist) / 4.0)
    radius = float(np.max(np.abs(g.spectrum)))
    return (1.0, max(4.0, 2.0 * radius))


def least_damped_modes(g):
    """
    Autovalores con Im λ > 0 cuya tasa |Re λ| es un nuevo mínimo al recorrer
    las frecuencias en orden creciente: son los picos de la envolvente de la
    resolvente. Devuelve (frecuencias, tasas).
    """
    upper = g.spectrum[g.spectrum.imag > 0]
    upper = upper[np.argsort(upper.imag, kind='stable')]
    frequencies, rates = upper.imag, -upper.real
    if not rates.size:
        return frequencies, rates
    running = np.minimum.accumulate(rates)
    keep = np.r_[True, rates[1:] < running[:-1]]
    return frequencies[keep], rates[keep]


def matched_windows(g, freq_window=None):
    """
    Ventanas de frecuencias y de tiempos que miran los mismos modos.

    Con r(s) ~ s^(−α) la norma ‖S(t)A⁻¹‖ en el instante t la domina el modo
    con α·r·t ≈ 1, así que al pico de frecuencia s y tasa r le corresponde
    t = 1/(α·r). La ventana de frecuencias se ajusta al primer y al último
    pico dentro de freq_window y α se estima sobre esos picos.
    InsufficientSamples si hay menos de MIN_FIT_SAMPLES picos amortiguados.
    """
    lo, hi = freq_window or default_frequency_window(g)
    frequencies, rates = least_damped_modes(g)
    inside = (frequencies >= lo) & (frequencies <= hi)
    frequencies, rates = frequencies[inside], rates[inside]
    if frequencies.size < MIN_FIT_SAMPLES:
        raise InsufficientSamples(
            f"{g.label}: {frequencies.size} picos de resolvente en [{lo:g}, {hi:g}]; "
            f"se necesitan {MIN_FIT_SAMPLES}."
        )
    if np.any(rates <= get_setting('IMAGINARY_AXIS_TOLERANCE')):
        raise InsufficientSamples(f"{g.label}: hay picos sobre iℝ; no se pueden emparejar las ventanas.")
    alpha = float(stats.linregress(np.log1p(frequencies), -np.log(rates)).slope)
    if alpha < get_setting('UNIFORM_EXPONENT_THRESHOLD'):
        raise InsufficientSamples(f"{g.label}: la resolvente no crece en [{lo:g}, {hi:g}].")
    freq_window = (float(frequencies[0]), float(frequencies[-1]))
    time_window = (1.0 / (alpha * float(rates[0])), 1.0 / (alpha * float(rates[-1])))
    logger.debug("%s: ventanas emparejadas %s / %s (α espectral %.4g)", g.label, freq_window, time_window, alpha)
    return freq_window, time_window


# ==================== SEMIGRUPO ====================

def _propagator(g, t, method):
    W = g.weighted_generator
    with np.errstate(over='ignore', invalid='ignore'):
        if method == 'expm':
            propagator = linalg.expm(t * W)
        elif method == 'eig':
            eigenvalues, vectors = linalg.eig(W)
            propagator = (vectors * np.exp(t * eigenvalues)) @ linalg.inv(vectors)
        else:
            raise InputError(f"Método desconocido para e^(tA): '{method}'")
    if not np.all(np.isfinite(propagator)):
        raise UnstableGrowth(f"{g.label}: desbordamiento al calcular e^(tA) en t={t:g}")
    return propagator


def semigroup_norm(g, t, method='expm'):
    """‖e^{tA}‖_H"""
    if t < 0:
        raise InputError('El tiempo debe ser ≥ 0.')
    return float(linalg.norm(_propagator(g, t, method), 2))


def semigroup_decay_norm(g, t, method='expm'):
    """
    ‖e^{tA}A⁻¹‖_H. Por defecto e^{tA} se calcula con scaling-and-squaring
    (scipy.linalg.expm); method='eig' usa la descomposición espectral como
    oráculo independiente en dimensiones pequeñas.
    """
    if t < 0:
        raise InputError('El tiempo debe ser ≥ 0.')
    inverse = g.weighted_inverse
    product = _propagator(g, t, method) @ inverse
    if not np.all(np.isfinite(product)):
        raise UnstableGrowth(f"{g.label}: desbordamiento en ‖e^(tA)A⁻¹‖, t={t:g}")
    return float(linalg.norm(product, 2))


def sample_decay(g, times, method='expm', threads=None):
    times = _strictly_increasing(times, 'tiempos')
    if times[0] < 0:
        raise InputError('Los tiempos deben ser ≥ 0.')
    # Fuerza la comprobación de invertibilidad antes de repartir el trabajo
    g.weighted_inverse
    norms = np.asarray(parallel_map(lambda t: semigroup_decay_norm(g, t, method), list(times), threads), dtype=float)
    # e^{tA} puede redondear a 0 en tiempos largos; esas muestras no tienen logaritmo
    underflow = norms <= 0.0
    if np.any(underflow):
        logger.warning("%s: %d tiempos con ‖S(t)A⁻¹‖ = 0 por desbordamiento inferior", g.label, int(underflow.sum()))
    return DecayProfile(
        times[~underflow], norms[~underflow], label=g.label,
        metadata={'method': method, 'underflow': [float(t) for t in times[underflow]]},
    )


def default_time_window(g):
    abscissa = g.abscissa()
    if abscissa < -get_setting('IMAGINARY_AXIS_TOLERANCE'):
        return (1.0, max(10.0, 1.0 / (2.0 * abs(abscissa))))
    return (1.0, 10.0)


# ==================== AJUSTE ====================

def fit_exponent(profile, window=None):
    """
    Regresión de log(norma) contra log(1+|x|) sobre la ventana.
    exponent es la pendiente y constant = exp(intercepto).
    """
    if not len(profile):
        raise InsufficientSamples('El perfil está vacío.')
    lo, hi = window if window is not None else (profile.points[0], profile.points[-1])
    if lo > hi:
        raise InputError(f"Ventana de ajuste inválida: ({lo}, {hi})")
    points, norms = profile.window(lo, hi)
    if points.size < MIN_FIT_SAMPLES:
        raise InsufficientSamples(
            f"Se necesitan al menos {MIN_FIT_SAMPLES} muestras en [{lo:g}, {hi:g}] y hay {points.size}."
        )
    x = np.log1p(np.abs(points))
    if np.ptp(x) == 0:
        raise InsufficientSamples('Todas las muestras de la ventana tienen la misma abscisa.')
    result = stats.linregress(x, np.log(norms))
    r_squared = float(np.clip(result.rvalue ** 2, 0.0, 1.0)) if np.isfinite(result.rvalue) else 0.0
    window = (max(float(lo), float(profile.points[0])), min(float(hi), float(profile.points[-1])))
    return ExponentFit(
        exponent=float(result.slope),
        constant=float(np.exp(result.intercept)),
        window=window,
        r_squared=r_squared,
        samples=int(points.size),
        coordinate=profile.coordinate,
    )


def _resolvent_exponent(profile, window):
    """
    Exponente de crecimiento ajustado sobre la envolvente. Con menos de
    MIN_FIT_SAMPLES récords la resolvente no crece en la ventana: exponente 0.
    """
    envelope = profile.envelope()
    points, _ = envelope.window(*window)
    if points.size < MIN_FIT_SAMPLES:
        return 0.0, None
    fit = fit_exponent(envelope, window)
    return fit.exponent, fit


def check_borichev_tomilov(g, freq_window=None, time_window=None, threads=None):
    """
    Contrasta el exponente de la resolvente α̂ con el de decaimiento β̂:
    la equivalencia pide α̂·|β̂| ≈ 1 (tolerancia BT_TOLERANCE).
    En régimen uniforme (α̂ < UNIFORM_EXPONENT_THRESHOLD) la comprobación es vacua.
    Sin ventana de tiempos se usan las ventanas emparejadas por el espectro
    (matched_windows) y, si no hay picos suficientes, las ventanas por defecto.
    """
    if not g.is_dissipative:
        raise InvalidGenerator(f"{g.label}: la comprobación requiere un generador disipativo.")
    g.weighted_inverse
    if time_window is None:
        try:
            freq_window, time_window = matched_windows(g, freq_window)
        except InsufficientSamples as exc:
            logger.info("%s; se usan las ventanas por defecto", exc)
    freq_window = tuple(freq_window or default_frequency_window(g))
    time_window = tuple(time_window or default_time_window(g))
    tolerance = get_setting('BT_TOLERANCE')
    logger.info(
        "Borichev–Tomilov %s: ventana de frecuencias %s, ventana de tiempos %s",
        g.label, freq_window, time_window,
    )

    profile = sample_resolvent(g, frequency_grid(g, *freq_window), threads=threads)
    times = np.geomspace(time_window[0], time_window[1], get_setting('TIME_SAMPLES'))
    decay = sample_decay(g, times, threads=threads)
    decay_fit = fit_exponent(decay, time_window)
    beta_hat = decay_fit.exponent

    if profile.metadata['resonant']:
        return BorichevTomilovReport(
            alpha_hat=float('inf'), beta_hat=beta_hat, product=float('inf'), passed=False,
            regime=CONSERVATIVE, tolerance=tolerance, frequency_window=freq_window,
            time_window=time_window, decay_fit=decay_fit,
            note=f"frecuencias resonantes en la ventana: {profile.metadata['resonant']}",
        )

    alpha_hat, resolvent_fit = _resolvent_exponent(profile, freq_window)
    product = alpha_hat * abs(beta_hat)
    if alpha_hat < get_setting('UNIFORM_EXPONENT_THRESHOLD'):
        return BorichevTomilovReport(
            alpha_hat=alpha_hat, beta_hat=beta_hat, product=product, passed=True,
            regime=UNIFORM, tolerance=tolerance, frequency_window=freq_window,
            time_window=time_window, resolvent_fit=resolvent_fit, decay_fit=decay_fit,
            note='régimen uniforme, equivalencia vacua',
        )
    passed = abs(product - 1.0) <= tolerance
    if not passed:
        logger.warning("%s: α̂·|β̂| = %.4g fuera de tolerancia", g.label, product)
    return BorichevTomilovReport(
        alpha_hat=alpha_hat, beta_hat=beta_hat, product=product, passed=passed,
        regime=POLYNOMIAL, tolerance=tolerance, frequency_window=freq_window,
        time_window=time_window, resolvent_fit=resolvent_fit, decay_fit=decay_fit,
    )


def classify_stability(g, window=None, threads=None):
    abscissa = g.abscissa()
    axis_tolerance = get_setting('IMAGINARY_AXIS_TOLERANCE')
    if abscissa > axis_tolerance:
        return StabilityReport(UNSTABLE, abscissa, f"abscisa espectral {abscissa:.6g} > 0")

    near_axis = g.spectrum[np.abs(g.spectrum.real) <= axis_tolerance]
    if near_axis.size:
        listado = ', '.join(f"{value:.6g}" for value in near_axis[:4])
        return StabilityReport(CONSERVATIVE, abscissa, f"autovalores sobre iℝ: {listado}")

    window = tuple(window or default_frequency_window(g))
    logger.info("Clasificación de %s con ventana de frecuencias %s", g.label, window)
    profile = sample_resolvent(g, frequency_grid(g, *window), threads=threads)
    exponent, fit = _resolvent_exponent(profile, window)
    if exponent < get_setting('UNIFORM_EXPONENT_THRESHOLD'):
        peak = float(np.max(profile.norms)) if len(profile) else float('nan')
        return StabilityReport(
            UNIFORM, abscissa,
            f"resolvente acotada en la ventana (máximo {peak:.6g}, exponente {exponent:.3g})",
            window=window, fit=fit,
        )
    return StabilityReport(
        POLYNOMIAL, abscissa,
        f"crecimiento de la resolvente ~ (1+|s|)^{exponent:.4g}, r²={fit.r_squared:.4f}",
        alpha_hat=exponent, window=window, fit=fit,
    )


def loss_exponent(g, window=None, threads=None):
    """α para la estimación de pérdida: α̂ si es polinomial, 0 si es uniforme, None en otro caso."""
    report = classify_stability(g, window=window, threads=threads)
    if report.classification == POLYNOMIAL:
        return report.alpha_hat
    if report.classification == UNIFORM:
        return 0.0
    return None
