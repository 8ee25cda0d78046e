"""
Oráculo en el dominio del tiempo.

Integra U' = AU + F(t) con Runge–Kutta clásico de orden 4 y control por
duplicación de paso, independiente de la construcción de Fourier que valida:
convergencia a la solución periódica, cruce de oráculos y demostración de
resonancia genuina en modelos conservativos.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .conf import get_setting
from .diagnostics import resolvent_norm
from .exceptions import InputError, NoImaginaryEigenvalue, ResonantFrequency, StepTooLarge, UnstableGrowth
from .operators import energy_norm
from .periodic import FourierForcing, evaluate, is_conjugate_symmetric, solve_periodic

logger = logging.getLogger(__name__)

CFL_FACTOR = 0.9
STEPS_PER_MODE = 20
RICHARDSON_FACTOR = 15.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    error_estimate: float
    step: float

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.energy)):
            raise ValueError('times, states y energy deben tener la misma longitud.')

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1]


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    period: float
    gaps: list
    ratios: list
    error_estimate: float
    verdict: str
    trajectory: Trajectory = None


@dataclass(frozen=True)
class CrossCheckReport:
    max_deviation: float
    error_estimate: float
    poincare_gap: float
    relative_gap: float
    within_tolerance: bool
    halving_difference: float = None


@dataclass(frozen=True, eq=False)
class GrowthReport:
    frequency: float
    peak_times: list
    peaks: list
    growth_order: float
    amplitude_slope: float
    amplification: float
    resolvent_norm: float = None
    error_estimate: float = 0.0
    metadata: dict = field(default_factory=dict)


def _max_step(forcing):
    if forcing is None or forcing.n_max == 0:
        return math.inf
    return forcing.period / (STEPS_PER_MODE * forcing.n_max)


def default_step(g, forcing=None):
    """min(T/(20·N_max), 0.9/‖A‖_H), redondeado a un número entero de pasos por periodo."""
    step = min(_max_step(forcing), CFL_FACTOR / g.norm if g.norm else math.inf)
    if forcing is None:
        return step if math.isfinite(step) else 0.1
    if not math.isfinite(step):
        step = forcing.period / STEPS_PER_MODE
    return forcing.period / math.ceil(forcing.period / step)


def _rk4(A, y, h, f0, f_mid, f1):
    k1 = A @ y + f0
    k2 = A @ (y + 0.5 * h * k1) + f_mid
    k3 = A @ (y + 0.5 * h * k2) + f_mid
    k4 = A @ (y + h * k3) + f1
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_forced(g, forcing, u0, dt=None, horizon=1.0, record_every=1):
    """
    Trayectoria de U' = AU + F desde U(0) = u0 hasta t = horizon.

    Cada paso aceptado son dos medios pasos; el estimador local es
    ‖y_medio − y_completo‖_H/15 y se acumula en error_estimate.
    forcing=None equivale a F = 0.
    """
    u0 = np.atleast_1d(np.asarray(u0))
    if u0.shape != (g.dim,):
        raise InputError(f"El estado inicial tiene forma {u0.shape}; se esperaba ({g.dim},).")
    if forcing is not None and forcing.dim != g.dim:
        raise InputError(f"El forzamiento tiene dimensión {forcing.dim} y el modelo {g.dim}.")
    if horizon <= 0:
        raise InputError('El horizonte debe ser > 0.')
    dt = default_step(g, forcing) if dt is None else float(dt)
    if dt <= 0:
        raise InputError('El paso de tiempo debe ser > 0.')
    if dt > _max_step(forcing) * (1.0 + 1e-12):
        raise StepTooLarge(
            f"dt={dt:g} supera T/(20·N_max)={_max_step(forcing):g}; el modo forzado más alto no queda resuelto."
        )

    steps = max(1, math.ceil(horizon / dt - 1e-9))
    h = horizon / steps
    complex_run = (
        np.iscomplexobj(u0)
        or not g.is_real
        or (forcing is not None and not (forcing.real_flag or is_conjugate_symmetric(forcing.coeffs)))
    )
    dtype = complex if complex_run else float
    A = g.A.astype(dtype)
    y = u0.astype(dtype)

    def forcing_at(t0):
        if forcing is None:
            return np.zeros((5, g.dim), dtype=dtype)
        quarter_times = t0 + h * np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        values = evaluate(forcing.coeffs, forcing.period, quarter_times, real=not complex_run or None)
        return values.astype(dtype, copy=False)

    times = [0.0]
    states = [y.copy()]
    error = 0.0
    for k in range(steps):
        t = k * h
        f = forcing_at(t)
        y_full = _rk4(A, y, h, f[0], f[2], f[4])
        y_half = _rk4(A, y, 0.5 * h, f[0], f[1], f[2])
        y_half = _rk4(A, y_half, 0.5 * h, f[2], f[3], f[4])
        error += energy_norm(g, y_half - y_full) / RICHARDSON_FACTOR
        y = y_half
        if not np.all(np.isfinite(y)):
            raise UnstableGrowth(f"{g.label}: valores no finitos en t={t + h:g}")
        if (k + 1) % record_every == 0 or k + 1 == steps:
            times.append((k + 1) * h)
            states.append(y.copy())

    states = np.array(states)
    energy = energy_norm(g, states)
    if not np.all(np.isfinite(energy)):
        raise UnstableGrowth(f"{g.label}: la energía desborda durante la integración.")
    return Trajectory(np.array(times), states, np.atleast_1d(energy), float(error), h)


def _steps_per_period(period, dt):
    return max(1, math.ceil(period / dt - 1e-9))


def cross_check_periodic(g, forcing, dt=None, solution=None):
    """
    Integra un periodo desde U_F(0) y compara con la solución de Fourier:
    máxima desviación ‖U_march(t) − U_F(t)‖_H y salto de Poincaré en t = T.

    error_estimate suma los estimadores locales y es una cota holgada;
    halving_difference es la diferencia observada con la misma integración
    a paso mitad, sobre los instantes comunes.
    """
    solution = solution or solve_periodic(g, forcing)
    u0 = solution.initial_value()
    dt = default_step(g, forcing) if dt is None else dt
    trajectory = integrate_forced(g, forcing, u0, dt=dt, horizon=forcing.period)
    halved = integrate_forced(g, forcing, u0, dt=trajectory.step / 2.0, horizon=forcing.period)
    halving_difference = float(np.max(energy_norm(g, halved.states[::2] - trajectory.states)))
    reference = solution.evaluate(trajectory.times)
    deviation = energy_norm(g, trajectory.states - reference)
    gap = energy_norm(g, trajectory.final_state - u0)
    scale = energy_norm(g, u0)
    floor = 1e-10 * max(float(np.max(energy_norm(g, reference))), 1e-300)
    max_deviation = float(np.max(deviation))
    report = CrossCheckReport(
        max_deviation=max_deviation,
        error_estimate=trajectory.error_estimate,
        poincare_gap=float(gap),
        relative_gap=float(gap / scale) if scale > 0 else float(gap),
        within_tolerance=max_deviation <= 10.0 * trajectory.error_estimate + floor,
        halving_difference=halving_difference,
    )
    logger.info(
        "%s: cruce de oráculos, desviación %.3g, estimador %.3g, paso mitad %.3g, salto de Poincaré %.3g",
        g.label, report.max_deviation, report.error_estimate, report.halving_difference, report.poincare_gap,
    )
    return report


def converge_to_periodic(g, forcing, u0, k_periods, dt=None, solution=None):
    """
    Saltos ‖U(jT) − U_F(0)‖_H, j = 0..k_periods, de la trayectoria que parte
    de u0. La diferencia con la órbita periódica evoluciona como S(jT)(u0 − U_F(0)).
    """
    if k_periods < 1:
        raise InputError('Se necesita al menos un periodo.')
    solution = solution or solve_periodic(g, forcing)
    target = solution.initial_value()
    period = forcing.period
    dt = default_step(g, forcing) if dt is None else dt
    steps = _steps_per_period(period, dt)
    trajectory = integrate_forced(g, forcing, u0, dt=period / steps, horizon=k_periods * period)
    boundary = trajectory.states[::steps]
    gaps = [float(value) for value in energy_norm(g, boundary - target)]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(gaps[:-1], gaps[1:])]
    verdict = _verdict(gaps, trajectory.error_estimate)
    logger.info("%s: %d periodos, salto final %.3g (%s)", g.label, k_periods, gaps[-1], verdict)
    return ConvergenceReport(period, gaps, ratios, trajectory.error_estimate, verdict, trajectory)


def _verdict(gaps, error_estimate):
    initial, final = gaps[0], gaps[-1]
    if final <= max(1e-3 * initial, 10.0 * error_estimate):
        return 'converged'
    tail = np.array(gaps[len(gaps) // 4:])
    if np.all(np.diff(tail) <= 10.0 * error_estimate):
        return 'contracting'
    if final > initial:
        return 'divergent'
    return 'inconclusive'


def _near_axis_eigenvalue(g, frequency=None):
    """Autovalor (Im ≥ 0) con el que se alinea el forzamiento."""
    spectrum = g.spectrum
    if frequency is None:
        near = spectrum[(np.abs(spectrum.real) <= get_setting('IMAGINARY_AXIS_TOLERANCE')) & (spectrum.imag > 0)]
        if not near.size:
            raise NoImaginaryEigenvalue(f"{g.label}: ningún autovalor con Im > 0 a menos de 1e-8 de iℝ.")
        return near[np.argmin(near.imag)]
    return spectrum[np.argmin(np.abs(spectrum - 1j * frequency))]


def _default_direction(g, eigenvalue):
    eigenvalues, vectors = linalg.eig(g.A)
    vector = vectors[:, np.argmin(np.abs(eigenvalues - eigenvalue))]
    # fase tal que la mayor componente es real, así Re(v) ≠ 0
    vector = vector * np.exp(-1j * np.angle(vector[np.argmax(np.abs(vector))]))
    direction = vector.real
    return direction / energy_norm(g, direction)


def resonance_demo(g, frequency=None, horizon=None, direction=None, dt=None):
    """
    Respuesta a F(t) = d·cos(νt) desde U(0) = 0.

    Sin frecuencia se usa Im λ de un autovalor sobre iℝ. Se extraen los
    picos de energía por periodo y, sobre t ≥ horizon/4, se ajustan el orden
    de crecimiento (log-log) y la pendiente de amplitud (lineal). La
    amplificación del último cuarto se compara con ‖(iνI−A)⁻¹‖_H.
    """
    eigenvalue = _near_axis_eigenvalue(g, frequency)
    if frequency is None:
        frequency = float(eigenvalue.imag)
    if frequency <= 0:
        raise InputError('La frecuencia de forzamiento debe ser > 0.')
    period = 2.0 * np.pi / frequency
    horizon = horizon or 20 * period
    if direction is None:
        direction = _default_direction(g, eigenvalue)
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (g.dim,):
        raise InputError(f"La dirección del forzamiento debe tener {g.dim} componentes.")
    amplitude = energy_norm(g, direction)
    if amplitude == 0:
        raise InputError('La dirección del forzamiento es nula.')

    forcing = FourierForcing(period, {1: direction / 2, -1: direction / 2}, real_flag=True)
    steps_per_period = _steps_per_period(period, dt or period / 200)
    trajectory = integrate_forced(g, forcing, np.zeros(g.dim), dt=period / steps_per_period, horizon=horizon)

    # picos por periodo; los extremos de cada periodo pertenecen a ambos
    count = max(1, (len(trajectory) - 1) // steps_per_period)
    peak_times, peaks = [], []
    for j in range(count):
        segment = slice(j * steps_per_period, (j + 1) * steps_per_period + 1)
        index = j * steps_per_period + int(np.argmax(trajectory.energy[segment]))
        peak_times.append(float(trajectory.times[index]))
        peaks.append(float(trajectory.energy[index]))

    peak_times_arr, peaks_arr = np.array(peak_times), np.array(peaks)
    late = (peak_times_arr >= horizon / 4) & (peaks_arr > 0)
    if late.sum() < 3:
        raise InputError('Horizonte demasiado corto para ajustar el crecimiento (menos de 3 picos).')
    growth_order = float(stats.linregress(np.log(peak_times_arr[late]), np.log(peaks_arr[late])).slope)
    amplitude_slope = float(stats.linregress(peak_times_arr[late], peaks_arr[late]).slope) / amplitude

    last_quarter = trajectory.times >= 0.75 * horizon
    amplification = float(np.max(trajectory.energy[last_quarter])) / amplitude
    try:
        reference = resolvent_norm(g, frequency)
    except ResonantFrequency:
        reference = None
    logger.info(
        "%s: forzamiento en ν=%.6g, orden de crecimiento %.3g, pendiente %.4g, amplificación %.4g",
        g.label, frequency, growth_order, amplitude_slope, amplification,
    )
    return GrowthReport(
        frequency=frequency, peak_times=peak_times, peaks=peaks, growth_order=growth_order,
        amplitude_slope=amplitude_slope, amplification=amplification, resolvent_norm=reference,
        error_estimate=trajectory.error_estimate,
        metadata={'horizon': float(horizon), 'period': period, 'eigenvalue': [float(eigenvalue.real), float(eigenvalue.imag)]},
    )
