"""
Generadores con producto interno de energía y zoológico de modelos
parcialmente disipativos.

- Generator: matriz A y matriz de Gram G (⟨x,y⟩_H = y*Gx); guarda en caché el
  factor de Cholesky R (G = R*R) y el generador ponderado W = R A R⁻¹, cuya
  norma espectral es la norma de operador en H.
- Fábricas del zoológico: heat_wave_1d, weakly_damped_chain y los modelos de
  referencia analíticos.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import numpy as np
from scipy import linalg

from .conf import get_setting
from .exceptions import InputError, InvalidGenerator, InvalidModelSpec, SingularGenerator

logger = logging.getLogger(__name__)

HEAT_WAVE_1D = 'heat_wave_1d'
WEAKLY_DAMPED_CHAIN = 'weakly_damped_chain'
UNIFORMLY_DAMPED = 'uniformly_damped'
CONSERVATIVE_OSCILLATOR = 'conservative_oscillator'
DIAGONAL = 'diagonal'

MODEL_KINDS = (HEAT_WAVE_1D, WEAKLY_DAMPED_CHAIN, UNIFORMLY_DAMPED, CONSERVATIVE_OSCILLATOR, DIAGONAL)
REFERENCE_KINDS = (UNIFORMLY_DAMPED, CONSERVATIVE_OSCILLATOR, DIAGONAL)

FLAG_DISSIPATIVE = 'dissipative'
FLAG_CONSERVATIVE_PART = 'conservative-part'


@dataclass(frozen=True)
class ModelSpec:
    """Configuración de un modelo del zoológico: {"kind": ..., "parameters": {...}}"""
    kind: str
    parameters: dict = field(default_factory=dict)

    def get(self, name, default=None):
        return self.parameters.get(name, default)

    def to_dict(self):
        return {'kind': self.kind, 'parameters': dict(self.parameters)}


def smallest_singular_value(matrix):
    """
    Menor valor singular de una matriz cuadrada.
    SVD completa hasta DENSE_SVD_LIMIT; por encima, iteración inversa sobre
    (MM*)⁻¹ con una única factorización LU.
    """
    matrix = np.asarray(matrix)
    if matrix.shape[0] <= get_setting('DENSE_SVD_LIMIT'):
        return float(linalg.svdvals(matrix)[-1])
    return _sigma_min_inverse_iteration(matrix)


def _sigma_min_inverse_iteration(matrix, max_iter=100, tol=1e-12):
    lu, piv = linalg.lu_factor(matrix, check_finite=False)
    if np.any(np.diag(lu) == 0):
        return 0.0
    # Semilla fija: el resultado no depende del orden de evaluación
    rng = np.random.default_rng(0)
    x = rng.standard_normal(matrix.shape[0]) + 0j
    x /= np.linalg.norm(x)
    estimate = 0.0
    for _ in range(max_iter):
        y = linalg.lu_solve((lu, piv), x, check_finite=False)
        z = linalg.lu_solve((lu, piv), y, trans=2, check_finite=False)
        growth = np.linalg.norm(z)
        if not np.isfinite(growth) or growth == 0:
            return 0.0
        x = z / growth
        if abs(growth - estimate) <= tol * growth:
            break
        estimate = growth
    return float(1.0 / np.sqrt(growth))


@dataclass(frozen=True, eq=False)
class Generator:
    """
    Generador A sobre el espacio de estados H = (ℂ^N, ⟨x,y⟩ = y*Gx).
    Inmutable: las matrices se copian y quedan de solo lectura.
    """
    A: np.ndarray
    G: np.ndarray
    label: str = ''
    metadata: dict = field(default_factory=dict)
    flags: frozenset = frozenset()

    def __post_init__(self):
        A = np.array(self.A, dtype=complex if np.iscomplexobj(self.A) else float)
        G = np.array(self.G, dtype=complex if np.iscomplexobj(self.G) else float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidGenerator(f"A debe ser cuadrada, forma recibida {A.shape}")
        if G.shape != A.shape:
            raise InvalidGenerator(f"G tiene forma {G.shape} y A tiene forma {A.shape}")
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.conj().T)) > 1e-12 * scale:
            raise InvalidGenerator('G no es simétrica (hermítica).')
        try:
            R = linalg.cholesky(G, lower=False)
        except linalg.LinAlgError as exc:
            raise InvalidGenerator(f"G no es definida positiva: {exc}") from exc
        for matrix in (A, G, R):
            matrix.setflags(write=False)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'G', G)
        object.__setattr__(self, 'metadata', MappingProxyType(dict(self.metadata)))
        object.__setattr__(self, 'flags', frozenset(self.flags))
        object.__setattr__(self, '_cholesky', R)

    def __repr__(self):
        return f"Generator(label={self.label!r}, dim={self.dim}, flags={sorted(self.flags)})"

    @property
    def dim(self):
        return self.A.shape[0]

    @property
    def cholesky_factor(self):
        """Factor triangular superior R con G = R*R"""
        return self._cholesky

    @property
    def is_real(self):
        return not (np.iscomplexobj(self.A) or np.iscomplexobj(self.G))

    @property
    def is_dissipative(self):
        return FLAG_DISSIPATIVE in self.flags

    def weighted(self, matrix):
        """Representación R M R⁻¹ de M en coordenadas donde la norma de H es euclídea."""
        R = self._cholesky
        product = R @ np.asarray(matrix)
        return linalg.solve_triangular(R, product.T, trans='T', lower=False).T

    @cached_property
    def weighted_generator(self):
        W = self.weighted(self.A)
        W.setflags(write=False)
        return W

    @cached_property
    def norm(self):
        """‖A‖ en la norma de operador de H"""
        return float(linalg.norm(self.weighted_generator, 2))

    def operator_norm(self, matrix):
        return float(linalg.norm(self.weighted(matrix), 2))

    @cached_property
    def spectrum(self):
        eigenvalues = linalg.eigvals(self.A)
        eigenvalues.setflags(write=False)
        return eigenvalues

    def abscissa(self):
        """Abscisa espectral max Re σ(A)"""
        return float(np.max(self.spectrum.real))

    def dissipativity_defect(self):
        """
        Mayor autovalor de GA + A*G relativo a ‖GA‖; un valor ≤ 0 (salvo
        redondeo) significa Re⟨Ax,x⟩_H ≤ 0 para todo x.
        """
        GA = self.G @ self.A
        scale = float(linalg.norm(GA, 2))
        if scale == 0:
            return 0.0
        symmetric_part = GA + GA.conj().T
        return float(linalg.eigvalsh(symmetric_part)[-1]) / scale

    @cached_property
    def is_invertible(self):
        sigma_min = smallest_singular_value(self.weighted_generator)
        return sigma_min > get_setting('RESONANCE_TOLERANCE') * self.norm

    @cached_property
    def _lu(self):
        return linalg.lu_factor(self.A)

    @cached_property
    def weighted_inverse(self):
        """W⁻¹ = R A⁻¹ R⁻¹; SingularGenerator si 0 ∈ σ(A) numéricamente"""
        if not self.is_invertible:
            raise SingularGenerator(f"{self.label or 'generador'}: 0 pertenece numéricamente a σ(A).")
        inverse = linalg.inv(self.weighted_generator)
        inverse.setflags(write=False)
        return inverse


def energy_norm(g, x):
    """‖x‖_H = √(x*Gx); para un arreglo de estados (filas) devuelve un vector de normas."""
    x = np.asarray(x)
    if x.shape[-1] != g.dim:
        raise InputError(f"Dimensión incompatible: el estado tiene {x.shape[-1]} componentes y el generador {g.dim}.")
    if x.ndim == 1:
        return float(np.linalg.norm(g.cholesky_factor @ x))
    return np.linalg.norm(x @ g.cholesky_factor.T, axis=-1)


def apply_inverse(g, b):
    """Resuelve Ax = b con residuo ‖Ax − b‖_H ≤ INVERSE_TOLERANCE·‖b‖_H."""
    b = np.asarray(b)
    if b.shape != (g.dim,):
        raise InputError(f"Dimensión incompatible: se esperaba un vector de longitud {g.dim}.")
    if not g.is_invertible:
        raise SingularGenerator(f"{g.label or 'generador'}: 0 pertenece numéricamente a σ(A); la sonda de decaimiento no aplica.")
    x = linalg.lu_solve(g._lu, b)
    tolerance = get_setting('INVERSE_TOLERANCE') * energy_norm(g, b)
    residual = g.A @ x - b
    if energy_norm(g, residual) > tolerance:
        # Un paso de refinamiento iterativo
        x = x - linalg.lu_solve(g._lu, residual)
        if energy_norm(g, g.A @ x - b) > tolerance:
            logger.warning("apply_inverse: residuo por encima de la tolerancia en %s", g.label)
    return x


# ==================== VALIDACIÓN DE PARÁMETROS ====================

def _require_kind(spec, *kinds):
    if spec.kind not in kinds:
        raise InvalidModelSpec(f"Tipo de modelo '{spec.kind}' no válido aquí; se esperaba uno de: {', '.join(kinds)}")


def _number(spec, name, default):
    value = spec.get(name, default)
    if value is None:
        raise InvalidModelSpec(f"Falta el parámetro '{name}'.")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidModelSpec(f"El parámetro '{name}' debe ser numérico.")
    if not np.isfinite(value):
        raise InvalidModelSpec(f"El parámetro '{name}' debe ser finito.")
    return value


def _positive(spec, name, default=None):
    value = _number(spec, name, default)
    if value <= 0:
        raise InvalidModelSpec(f"El parámetro '{name}' debe ser > 0 (recibido {value}).")
    return value


def _nonnegative(spec, name, default=None):
    value = _number(spec, name, default)
    if value < 0:
        raise InvalidModelSpec(f"El parámetro '{name}' debe ser ≥ 0 (recibido {value}).")
    return value


def _integer(spec, name, default, minimum):
    value = spec.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise InvalidModelSpec(f"El parámetro '{name}' debe ser entero.")
    if value < minimum:
        raise InvalidModelSpec(f"El parámetro '{name}' debe ser ≥ {minimum} (recibido {value}).")
    return int(value)


# ==================== ZOOLÓGICO DE MODELOS ====================

def make_heat_wave_1d(spec):
    """
    Transmisión calor–onda en 1D, diferencias finitas centradas de segundo orden.

    Calor u_t = c·u_xx en (−1,0), onda w_tt = κ·w_xx en (0,1), Dirichlet en
    x = −1 y x = 1, interfaz u(0) = w_t(0) y c·u_x(0) = κ·w_x(0).

    Estado (w, w_t, u):
      w   desplazamientos en la interfaz y en los nx_wave−1 nodos interiores (h_w = 1/nx_wave)
      w_t velocidades en los nx_wave−1 nodos interiores
      u   nx_heat nodos interiores del calor (h_u = 1/(nx_heat+1)) más el nodo de
          interfaz, que es a la vez u(0) y la velocidad de la onda en 0
    dim = 2·nx_wave + nx_heat.

    G es la energía ∫κ|w_x|² + |w_t|² + |u|² con cuadratura trapezoidal; la celda
    de la interfaz tiene masa (h_u + h_w)/2. Con esta G el esquema cumple
    exactamente Re⟨Ax,x⟩_H = −c·Σ|Δu|²/h_u ≤ 0.
    """
    _require_kind(spec, HEAT_WAVE_1D)
    nx_heat = _integer(spec, 'nx_heat', None, 2)
    nx_wave = _integer(spec, 'nx_wave', None, 2)
    diffusivity = _positive(spec, 'diffusivity', 1.0)
    wave_speed = _positive(spec, 'wave_speed', 1.0)
    kappa = wave_speed ** 2

    h_u = 1.0 / (nx_heat + 1)
    h_w = 1.0 / nx_wave
    n_w = nx_wave
    n_v = nx_wave - 1
    n_u = nx_heat + 1
    dim = n_w + n_v + n_u
    heat_start = n_w + n_v
    interface = dim - 1
    interface_mass = 0.5 * (h_u + h_w)

    A = np.zeros((dim, dim))
    # ẇ_0 = u(0), ẇ_k = v_k
    A[0, interface] = 1.0
    for k in range(1, n_w):
        A[k, n_w + k - 1] = 1.0
    # v̇_k = κ (w_{k+1} − 2w_k + w_{k−1}) / h_w², con w(1) = 0
    wave_coef = kappa / h_w ** 2
    for k in range(1, n_w):
        row = n_w + k - 1
        A[row, k - 1] += wave_coef
        A[row, k] -= 2.0 * wave_coef
        if k + 1 < n_w:
            A[row, k + 1] += wave_coef
    # u̇_j = c (u_{j+1} − 2u_j + u_{j−1}) / h_u², con u(−1) = 0
    heat_coef = diffusivity / h_u ** 2
    for j in range(nx_heat):
        row = heat_start + j
        if j > 0:
            A[row, row - 1] += heat_coef
        A[row, row] -= 2.0 * heat_coef
        A[row, row + 1] += heat_coef
    # Celda de interfaz: flujo de la onda menos flujo del calor
    A[interface, 0] -= kappa / h_w / interface_mass
    A[interface, 1] += kappa / h_w / interface_mass
    A[interface, interface] -= diffusivity / h_u / interface_mass
    A[interface, interface - 1] += diffusivity / h_u / interface_mass

    difference = -np.eye(n_w) + np.eye(n_w, k=1)
    G = linalg.block_diag(
        kappa / h_w * (difference.T @ difference),
        h_w * np.eye(n_v),
        np.diag(np.r_[np.full(nx_heat, h_u), interface_mass]),
    )
    metadata = {
        'kind': HEAT_WAVE_1D,
        'nx_heat': nx_heat,
        'nx_wave': nx_wave,
        'diffusivity': diffusivity,
        'wave_speed': wave_speed,
        'h_heat': h_u,
        'h_wave': h_w,
        'nyquist_frequency': np.pi / h_w * wave_speed,
        'layout': {
            'displacement': [0, n_w],
            'velocity': [n_w, n_w + n_v],
            'heat': [heat_start, dim],
        },
    }
    label = f"heat_wave_1d(nx_heat={nx_heat}, nx_wave={nx_wave})"
    logger.debug("Ensamblado %s con dim=%d", label, dim)
    return Generator(A, G, label=label, metadata=metadata, flags={FLAG_DISSIPATIVE})


def _chain_laplacian(length):
    return 2.0 * np.eye(length) - np.eye(length, k=1) - np.eye(length, k=-1)


def make_weakly_damped_chain(spec):
    """
    Dos cadenas acopladas, amortiguamiento solo en la primera:
        x₁'' + d·x₁' + K x₁ + γ(x₁ − x₂) = 0
        x₂''         + K x₂ + γ(x₂ − x₁) = 0
    con K = k·tridiag(−1, 2, −1). Estado (x₁, x₂, x₁', x₂'); G es la energía
    natural (cinética + K + resorte de acoplamiento).
    """
    _require_kind(spec, WEAKLY_DAMPED_CHAIN)
    length = _integer(spec, 'length', None, 1)
    damping = _nonnegative(spec, 'damping', 1.0)
    coupling = _nonnegative(spec, 'coupling', 1.0)
    stiffness = _positive(spec, 'stiffness', 1.0)

    identity = np.eye(length)
    K = stiffness * _chain_laplacian(length)
    coupled_stiffness = np.block([
        [K + coupling * identity, -coupling * identity],
        [-coupling * identity, K + coupling * identity],
    ])
    damping_matrix = linalg.block_diag(damping * identity, np.zeros((length, length)))
    half = 2 * length
    A = np.block([
        [np.zeros((half, half)), np.eye(half)],
        [-coupled_stiffness, -damping_matrix],
    ])
    G = linalg.block_diag(coupled_stiffness, np.eye(half))

    flags = {FLAG_DISSIPATIVE}
    if damping == 0 or coupling == 0:
        flags.add(FLAG_CONSERVATIVE_PART)
    metadata = {
        'kind': WEAKLY_DAMPED_CHAIN,
        'length': length,
        'damping': damping,
        'coupling': coupling,
        'stiffness': stiffness,
    }
    label = f"weakly_damped_chain(n={length}, d={damping:g}, gamma={coupling:g})"
    return Generator(A, G, label=label, metadata=metadata, flags=flags)


def _parse_eigenvalue(value):
    """Un autovalor es un número o un par [re, im]."""
    if isinstance(value, (list, tuple)) and len(value) != 2:
        raise InvalidModelSpec('Cada autovalor complejo debe ser un par [re, im].')
    try:
        if isinstance(value, (list, tuple)):
            return complex(float(value[0]), float(value[1]))
        if isinstance(value, dict):
            return complex(float(value.get('re', 0.0)), float(value.get('im', 0.0)))
        return complex(value)
    except (TypeError, ValueError):
        raise InvalidModelSpec(f"Autovalor no válido: {value!r}")


def make_reference(spec):
    """
    Modelos de referencia analíticos, todos con G = I:
      uniformly_damped         A = −I (dimensión 'dim')
      conservative_oscillator  A = [[0, 1], [−1, 0]]
      diagonal                 A = diag(λ_i); un λ con Im ≠ 0 aporta el bloque
                               normal real [[Re, Im], [−Im, Re]] (λ y su conjugado)
    """
    _require_kind(spec, *REFERENCE_KINDS)
    flags = {FLAG_DISSIPATIVE}

    if spec.kind == UNIFORMLY_DAMPED:
        dim = _integer(spec, 'dim', 1, 1)
        A = -np.eye(dim)
        label = f"uniformly_damped(dim={dim})"
        metadata = {'kind': spec.kind, 'dim': dim}

    elif spec.kind == CONSERVATIVE_OSCILLATOR:
        A = np.array([[0.0, 1.0], [-1.0, 0.0]])
        flags.add(FLAG_CONSERVATIVE_PART)
        label = 'conservative_oscillator'
        metadata = {'kind': spec.kind}

    else:
        raw = spec.get('eigenvalues')
        if not raw:
            raise InvalidModelSpec("El modelo 'diagonal' requiere una lista no vacía 'eigenvalues'.")
        invertible = spec.get('invertible', True)
        if not isinstance(invertible, bool):
            raise InvalidModelSpec("El parámetro 'invertible' debe ser booleano.")
        eigenvalues = [_parse_eigenvalue(value) for value in raw]
        if invertible and any(value == 0 for value in eigenvalues):
            raise InvalidModelSpec("Autovalor λ = 0 no permitido con 'invertible': true.")
        blocks = []
        for value in eigenvalues:
            if value.imag == 0:
                blocks.append(np.array([[value.real]]))
            else:
                blocks.append(np.array([[value.real, value.imag], [-value.imag, value.real]]))
        A = linalg.block_diag(*blocks)
        if any(value.real > 0 for value in eigenvalues):
            flags.discard(FLAG_DISSIPATIVE)
        if any(value.real == 0 for value in eigenvalues):
            flags.add(FLAG_CONSERVATIVE_PART)
        label = f"diagonal({len(eigenvalues)} autovalores)"
        metadata = {'kind': spec.kind, 'invertible': invertible, 'blocks': len(blocks)}

    return Generator(A, np.eye(A.shape[0]), label=label, metadata=metadata, flags=flags)


MODEL_FACTORIES = {
    HEAT_WAVE_1D: make_heat_wave_1d,
    WEAKLY_DAMPED_CHAIN: make_weakly_damped_chain,
    UNIFORMLY_DAMPED: make_reference,
    CONSERVATIVE_OSCILLATOR: make_reference,
    DIAGONAL: make_reference,
}


def build_generator(spec):
    """Construye el generador del zoológico correspondiente a spec.kind."""
    try:
        factory = MODEL_FACTORIES[spec.kind]
    except KeyError:
        raise InvalidModelSpec(f"Tipo de modelo desconocido: '{spec.kind}'. Opciones: {', '.join(MODEL_KINDS)}")
    generator = factory(spec)
    logger.info("Modelo %s construido (dim=%d)", generator.label, generator.dim)
    return generator
