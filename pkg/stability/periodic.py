"""
Problema periódico en el tiempo U' = AU + F, F de periodo T.

Descomposición de Fourier temporal F(t) = Σ F_n e^{inωt} (ω = 2π/T), solución
modo a modo U_n = (inωI − A)⁻¹F_n, normas de Sobolev periódicas
‖F‖²_{H^m_#} = Σ (1+|n|)^{2m}‖F_n‖²_H y verificación empírica de la pérdida
de derivadas ‖U‖_{H^m} ≤ C_T‖F‖_{H^{m+α}}.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .conf import get_setting
from .diagnostics import parallel_map
from .exceptions import InputError, InsufficientSamples, LatticeResonance
from .operators import energy_norm, smallest_singular_value

logger = logging.getLogger(__name__)

SYMMETRY_TOLERANCE = 1e-12


def _mode_scale(coeffs):
    return max([float(np.max(np.abs(v))) for v in coeffs.values()] + [1.0])


def is_conjugate_symmetric(coeffs, tolerance=SYMMETRY_TOLERANCE):
    """F_{−n} = conj(F_n) para todos los modos almacenados (relativo a la mayor entrada)."""
    scale = _mode_scale(coeffs)
    for n, vector in coeffs.items():
        partner = coeffs.get(-n)
        if partner is None:
            return False
        if np.max(np.abs(partner - np.conj(vector)), initial=0.0) > tolerance * scale:
            return False
    return True


@dataclass(frozen=True, eq=False)
class FourierForcing:
    """Forzamiento periódico de banda limitada: modos n ↦ F_n ∈ ℂ^dim, |n| ≤ N_max."""
    period: float
    coeffs: dict
    real_flag: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        period = float(self.period)
        if not np.isfinite(period) or period <= 0:
            raise InputError(f"El periodo debe ser > 0 (recibido {self.period}).")
        if not self.coeffs:
            raise InputError('El forzamiento necesita al menos un modo.')
        coeffs = {}
        dims = set()
        for n, vector in self.coeffs.items():
            vector = np.atleast_1d(np.asarray(vector, dtype=complex))
            if vector.ndim != 1:
                raise InputError(f"El coeficiente del modo {n} debe ser un vector.")
            dims.add(vector.size)
            coeffs[int(n)] = vector
        if len(dims) != 1:
            raise InputError(f"Los coeficientes tienen dimensiones distintas: {sorted(dims)}")
        if self.real_flag and not is_conjugate_symmetric(coeffs):
            raise InputError('real_flag exige F_{-n} = conj(F_n) para todos los modos.')
        object.__setattr__(self, 'period', period)
        object.__setattr__(self, 'coeffs', dict(sorted(coeffs.items())))
        object.__setattr__(self, 'metadata', dict(self.metadata))

    @classmethod
    def zero(cls, period, dim):
        return cls(period, {0: np.zeros(dim)}, real_flag=True)

    @property
    def omega(self):
        return 2.0 * np.pi / self.period

    @property
    def dim(self):
        return next(iter(self.coeffs.values())).size

    @property
    def modes(self):
        return list(self.coeffs)

    @property
    def n_max(self):
        return max(abs(n) for n in self.coeffs)

    def evaluate(self, times):
        return evaluate(self.coeffs, self.period, times)


@dataclass(frozen=True, eq=False)
class PeriodicSolution:
    period: float
    coeffs: dict
    residuals: dict
    norms: dict
    alpha: float = None
    forcing_norm: float = None
    loss_ratio: float = None
    lattice_constant: float = None
    tail_bound: float = None
    real_flag: bool = False

    @property
    def omega(self):
        return 2.0 * np.pi / self.period

    def initial_value(self):
        """U(0) = Σ U_n"""
        return self.evaluate([0.0])[0]

    def evaluate(self, times):
        return evaluate(self.coeffs, self.period, times, real=self.real_flag or None)


@dataclass(frozen=True)
class LossCertificate:
    m: float
    alpha: float
    trials: int
    max_ratio: float
    ratios: list
    period: float
    n_max: int
    seed: int
    lattice_constant: float
    label: str = ''


# ==================== NORMAS ====================

def sobolev_norm(coeffs, m, g=None):
    """
    √(Σ_n (1+|n|)^{2m}‖F_n‖²_H); con g=None la norma de cada modo es la euclídea.
    m puede ser fraccionario.
    """
    if m < 0:
        raise InputError('El índice de Sobolev debe ser ≥ 0.')
    if not coeffs:
        return 0.0
    dims = {np.asarray(v).size for v in coeffs.values()}
    if len(dims) != 1 or (g is not None and dims != {g.dim}):
        raise InputError('Dimensiones incompatibles entre los coeficientes.')
    modes = np.array(list(coeffs), dtype=float)
    vectors = np.array([np.asarray(v) for v in coeffs.values()])
    if g is None:
        mode_norms = np.linalg.norm(vectors, axis=1)
    else:
        mode_norms = np.linalg.norm(vectors @ g.cholesky_factor.T, axis=1)
    weights = (1.0 + np.abs(modes)) ** m
    return float(np.linalg.norm(weights * mode_norms))


# ==================== SOLUCIÓN MODO A MODO ====================

class ModeSolver:
    """
    Factorizaciones LU de inωI − A por punto de la red, con su comprobación de
    resonancia; se reutilizan entre forzamientos (verificación con muchas pruebas).
    """

    def __init__(self, g, omega):
        self.g = g
        self.omega = float(omega)
        self._factors = {}
        self._sigma = {}

    def _key(self, n):
        # σ_min es par en n cuando A es real
        return abs(n) if self.g.is_real else n

    def sigma_min(self, n):
        key = self._key(n)
        if key not in self._sigma:
            shifted = 1j * key * self.omega * np.eye(self.g.dim) - self.g.weighted_generator
            self._sigma[key] = smallest_singular_value(shifted)
        return self._sigma[key]

    def is_resonant(self, n):
        return self.sigma_min(n) <= get_setting('RESONANCE_TOLERANCE') * self.g.norm

    def check(self, modes):
        resonant = [n for n in modes if self.is_resonant(n)]
        if resonant:
            logger.warning("%s: resonancia en la red, modos %s", self.g.label, resonant)
            raise LatticeResonance(resonant, omega=self.omega)

    def resolvent_norm(self, n):
        if self.is_resonant(n):
            raise LatticeResonance([n], omega=self.omega)
        return 1.0 / self.sigma_min(n)

    def _factor(self, n):
        if n not in self._factors:
            if self.is_resonant(n):
                raise LatticeResonance([n], omega=self.omega)
            shifted = 1j * n * self.omega * np.eye(self.g.dim) - self.g.A
            self._factors[n] = linalg.lu_factor(shifted)
        return self._factors[n]

    def residual(self, n, U, F):
        shifted_U = 1j * n * self.omega * U - self.g.A @ U
        return energy_norm(self.g, shifted_U - F)

    def solve(self, n, F):
        F = np.atleast_1d(np.asarray(F, dtype=complex))
        if F.shape != (self.g.dim,):
            raise InputError(f"Dimensión incompatible: F_{n} tiene forma {F.shape}, se esperaba ({self.g.dim},).")
        factor = self._factor(n)
        U = linalg.lu_solve(factor, F)
        tolerance = get_setting('RESIDUAL_TOLERANCE') * energy_norm(self.g, F)
        if self.residual(n, U, F) > tolerance:
            U = U + linalg.lu_solve(factor, F - (1j * n * self.omega * U - self.g.A @ U))
            if self.residual(n, U, F) > tolerance:
                logger.warning("%s: residuo del modo %d por encima de la tolerancia", self.g.label, n)
        return U


def solve_mode(g, n, omega, F_n):
    """U_n = (inωI − A)⁻¹F_n; LatticeResonance(n) si inω está numéricamente en σ(A)."""
    return ModeSolver(g, omega).solve(int(n), F_n)


def lattice_constant(g, omega, n_max, alpha, solver=None):
    """M_T empírica: max_{|n|≤n_max} ‖(inωI−A)⁻¹‖_H / (1+|n|)^α"""
    if n_max < 0:
        raise InputError(f"n_max debe ser ≥ 0 (recibido {n_max}).")
    solver = solver or ModeSolver(g, omega)
    modes = range(0, n_max + 1) if g.is_real else range(-n_max, n_max + 1)
    solver.check(list(modes))
    return max(solver.resolvent_norm(n) / (1.0 + abs(n)) ** alpha for n in modes)


def tail_bound(g, forcing, m, alpha, cutoff, constant=None):
    """
    Cota de la contribución de los modos |n| > cutoff a ‖U‖_{H^m}:
    M_T·(Σ_{|n|>cutoff} (1+|n|)^{2(m+α)}‖F_n‖²_H)^{1/2}.
    """
    if constant is None:
        constant = lattice_constant(g, forcing.omega, forcing.n_max, alpha)
    tail = {n: v for n, v in forcing.coeffs.items() if abs(n) > cutoff}
    return constant * sobolev_norm(tail, m + alpha, g)


def solve_periodic(g, forcing, m=1.0, alpha=None, solver=None, threads=None):
    """
    Ensambla la solución periódica U_n = (inωI−A)⁻¹F_n sobre el soporte del
    forzamiento. Todas las resonancias se informan juntas en LatticeResonance.
    Con forzamiento real y A real se resuelven los modos n ≥ 0 y el resto se
    obtiene por conjugación.
    """
    if forcing.dim != g.dim:
        raise InputError(f"El forzamiento tiene dimensión {forcing.dim} y el modelo {g.dim}.")
    solver = solver or ModeSolver(g, forcing.omega)
    if not np.isclose(solver.omega, forcing.omega, rtol=1e-14, atol=0):
        raise InputError('El solver fue construido para otra frecuencia fundamental.')
    solver.check(forcing.modes)

    symmetric = forcing.real_flag and g.is_real
    direct = [n for n in forcing.modes if n >= 0 or not symmetric]
    solved = parallel_map(lambda n: solver.solve(n, forcing.coeffs[n]), direct, threads)
    coeffs = dict(zip(direct, solved))
    if symmetric:
        for n in forcing.modes:
            if n < 0:
                coeffs[n] = np.conj(coeffs[-n])
    coeffs = dict(sorted(coeffs.items()))
    residuals = {n: solver.residual(n, coeffs[n], forcing.coeffs[n]) for n in coeffs}

    norms = {float(m): sobolev_norm(coeffs, m, g)}
    forcing_norm = loss_ratio = constant = tail = None
    if alpha is not None:
        forcing_norm = sobolev_norm(forcing.coeffs, m + alpha, g)
        loss_ratio = norms[float(m)] / forcing_norm if forcing_norm > 0 else 0.0
        try:
            constant = lattice_constant(g, forcing.omega, forcing.n_max, alpha, solver=solver)
        except LatticeResonance as exc:
            # Resonancia fuera del soporte: la solución existe pero M_T no es finita
            logger.warning("%s: sin constante de red (%s)", g.label, exc)
        else:
            tail = tail_bound(g, forcing, m, alpha, forcing.n_max // 2, constant=constant)
    logger.debug("%s: %d modos resueltos, ‖U‖_H^%g = %.6g", g.label, len(coeffs), m, norms[float(m)])
    return PeriodicSolution(
        period=forcing.period, coeffs=coeffs, residuals=residuals, norms=norms,
        alpha=alpha, forcing_norm=forcing_norm, loss_ratio=loss_ratio,
        lattice_constant=constant, tail_bound=tail, real_flag=symmetric,
    )


# ==================== SERIES TEMPORALES ====================

def fourier_coefficients(samples, n_max):
    """
    Coeficientes de interpolación trigonométrica a partir de 2K muestras
    equiespaciadas en [0, T). Exacto para datos de banda limitada |n| ≤ n_max.
    """
    samples = np.asarray(samples)
    if samples.ndim == 1:
        samples = samples[:, None]
    count = samples.shape[0]
    if n_max < 0 or count < 2 * n_max + 2:
        raise InsufficientSamples(f"Se necesitan al menos {2 * n_max + 2} muestras para N_max={n_max}; hay {count}.")
    coeffs = {}
    if np.isrealobj(samples):
        spectrum = np.fft.rfft(samples, axis=0) / count
        for n in range(n_max + 1):
            coeffs[n] = spectrum[n].copy()
            if n:
                coeffs[-n] = np.conj(spectrum[n])
    else:
        spectrum = np.fft.fft(samples, axis=0) / count
        for n in range(-n_max, n_max + 1):
            coeffs[n] = spectrum[n % count].copy()
    return dict(sorted(coeffs.items()))


def _real_if_symmetric(values, coeffs, real):
    if real is None:
        real = is_conjugate_symmetric(coeffs)
    if not real:
        return values
    scale = max(float(np.max(np.abs(values), initial=0.0)), 1e-300)
    if np.max(np.abs(values.imag), initial=0.0) > 1e-10 * scale:
        logger.warning('Parte imaginaria no despreciable en una serie con simetría conjugada.')
    return values.real.copy()


def synthesize_time_series(coeffs, sample_count, real=None):
    """U(t_j) en t_j = jT/sample_count; salida real cuando hay simetría conjugada."""
    if not coeffs:
        raise InputError('No hay coeficientes que sintetizar.')
    n_max = max(abs(n) for n in coeffs)
    if sample_count < 2 * n_max + 2:
        raise InsufficientSamples(f"Se necesitan al menos {2 * n_max + 2} muestras; se pidieron {sample_count}.")
    dim = np.asarray(next(iter(coeffs.values()))).size
    spectrum = np.zeros((sample_count, dim), dtype=complex)
    for n, vector in coeffs.items():
        spectrum[n % sample_count] += vector
    values = np.fft.ifft(spectrum, axis=0) * sample_count
    return _real_if_symmetric(values, coeffs, real)


def evaluate(coeffs, period, times, real=None):
    """Polinomio trigonométrico en tiempos arbitrarios; la fase se reduce módulo T."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = 2.0 * np.pi * np.mod(times, period) / period
    modes = np.array(list(coeffs), dtype=float)
    vectors = np.array([np.asarray(v, dtype=complex) for v in coeffs.values()])
    values = np.exp(1j * np.outer(phases, modes)) @ vectors
    return _real_if_symmetric(values, coeffs, real)


# ==================== VERIFICACIÓN DE LA PÉRDIDA ====================

def random_forcing(g, period, n_max, decay, seed, trial=0, normalize_index=0.0):
    """
    Forzamiento real aleatorio: F_n = c_n·v_n con c_n = (1+|n|)^{−decay} y v_n
    uniforme en la esfera unidad de energía, F_{−n} = conj(F_n); normalizado a
    ‖F‖_{H^{normalize_index}} = 1. Cada modo usa default_rng([seed, trial, n]),
    así que aumentar n_max extiende el forzamiento sin alterar los modos previos.
    """
    if seed is None or int(seed) < 0:
        raise InputError('El forzamiento aleatorio requiere una semilla entera ≥ 0.')
    if n_max < 0:
        raise InputError('n_max debe ser ≥ 0.')
    R = g.cholesky_factor
    coeffs = {}
    for n in range(n_max + 1):
        rng = np.random.default_rng([int(seed), int(trial), n])
        z = rng.standard_normal(g.dim)
        if n:
            z = z + 1j * rng.standard_normal(g.dim)
        direction = linalg.solve_triangular(R, z / np.linalg.norm(z), lower=False)
        coeffs[n] = (1.0 + n) ** (-decay) * direction
        if n:
            coeffs[-n] = np.conj(coeffs[n])
    scale = sobolev_norm(coeffs, normalize_index, g)
    coeffs = {n: v / scale for n, v in coeffs.items()}
    return FourierForcing(
        period, coeffs, real_flag=True,
        metadata={'seed': int(seed), 'trial': int(trial), 'decay': float(decay)},
    )


def verify_loss_estimate(g, alpha, m, trials, seed, period=None, n_max=None, threads=None):
    """
    C_T empírica: para cada prueba se toma un forzamiento aleatorio con
    ‖F‖_{H^{m+α}} = 1 y se mide ‖U‖_{H^m}/‖F‖_{H^{m+α}}.
    """
    if alpha < 0:
        raise InputError('alpha debe ser ≥ 0.')
    if trials < 1:
        raise InputError('trials debe ser ≥ 1.')
    period = get_setting('DEFAULT_PERIOD') if period is None else float(period)
    n_max = get_setting('DEFAULT_N_MAX') if n_max is None else int(n_max)
    if not (np.isfinite(period) and period > 0):
        raise InputError(f"El periodo debe ser > 0 (recibido {period:g}).")
    if n_max < 0:
        raise InputError(f"n_max debe ser ≥ 0 (recibido {n_max}).")
    omega = 2.0 * np.pi / period
    logger.info(
        "Verificación de pérdida en %s: m=%g, alpha=%g, T=%g, N_max=%d, %d pruebas, semilla %d",
        g.label, m, alpha, period, n_max, trials, seed,
    )
    solver = ModeSolver(g, omega)
    constant = lattice_constant(g, omega, n_max, alpha, solver=solver)
    decay = m + alpha + 0.51
    forcings = [
        random_forcing(g, period, n_max, decay, seed, trial=trial, normalize_index=m + alpha)
        for trial in range(trials)
    ]
    ratios = []
    for forcing in forcings:
        solution = solve_periodic(g, forcing, m=m, solver=solver, threads=threads)
        ratios.append(solution.norms[float(m)] / sobolev_norm(forcing.coeffs, m + alpha, g))
    if not all(np.isfinite(ratios)):
        raise InputError('Cociente no finito en la verificación.')
    return LossCertificate(
        m=float(m), alpha=float(alpha), trials=int(trials), max_ratio=float(max(ratios)),
        ratios=[float(r) for r in ratios], period=float(period), n_max=int(n_max),
        seed=int(seed), lattice_constant=float(constant), label=g.label,
    )
