"""
Errores del toolkit.

Cada error lleva un mensaje por defecto y un código de salida propio; los
comandos de gestión los traducen a CommandError(returncode=exit_code).
"""


class ToolkitError(Exception):
    """Error base del toolkit"""
    default_detail = 'Error del toolkit.'
    exit_code = 1

    def __init__(self, detail=None):
        self.detail = detail if detail is not None else self.default_detail
        super().__init__(self.detail)

    def __str__(self):
        return str(self.detail)


class InputError(ToolkitError):
    """JSON mal formado, dimensiones incompatibles o mallas inválidas"""
    default_detail = 'Entrada inválida.'
    exit_code = 10


class InvalidModelSpec(ToolkitError):
    default_detail = 'Especificación de modelo inválida.'
    exit_code = 11


class InvalidGenerator(ToolkitError):
    default_detail = 'Generador inválido: G debe ser hermítica y definida positiva.'
    exit_code = 12


class SingularGenerator(ToolkitError):
    """0 pertenece numéricamente al espectro de A; A⁻¹ no está disponible"""
    default_detail = 'El generador es singular: 0 está en el espectro de A.'
    exit_code = 13


class ResonantFrequency(ToolkitError):
    """is pertenece numéricamente al espectro de A (resultado de diagnóstico)"""
    default_detail = 'Frecuencia resonante.'
    exit_code = 14

    def __init__(self, frequency, sigma_min=None):
        self.frequency = float(frequency)
        self.sigma_min = sigma_min
        super().__init__(f"Frecuencia resonante s={self.frequency:.17g} (σ_min={sigma_min!r})")


class LatticeResonance(ToolkitError):
    """Algún punto inω de la red cae en el espectro de A"""
    default_detail = 'Resonancia en la red de frecuencias.'
    exit_code = 15

    def __init__(self, modes, omega=None):
        if isinstance(modes, int):
            modes = [modes]
        self.modes = sorted(int(n) for n in modes)
        self.omega = omega
        listado = ', '.join(str(n) for n in self.modes)
        super().__init__(f"LatticeResonance: modos resonantes n = {listado}")


class UnstableGrowth(ToolkitError):
    default_detail = 'Crecimiento no acotado (overflow o NaN).'
    exit_code = 16


class StepTooLarge(ToolkitError):
    default_detail = 'Paso de tiempo demasiado grande para el modo forzado más alto.'
    exit_code = 17


class InsufficientSamples(ToolkitError):
    default_detail = 'Muestras insuficientes.'
    exit_code = 18


class NoImaginaryEigenvalue(ToolkitError):
    default_detail = 'No hay autovalores sobre el eje imaginario.'
    exit_code = 19


ERROR_CLASSES = [
    InputError,
    InvalidModelSpec,
    InvalidGenerator,
    SingularGenerator,
    ResonantFrequency,
    LatticeResonance,
    UnstableGrowth,
    StepTooLarge,
    InsufficientSamples,
    NoImaginaryEigenvalue,
]


def exit_code_table():
    """Texto con los códigos de salida, para el --help de los comandos."""
    lineas = ['códigos de salida:', '  0   sin errores', '  1   error genérico', '  2   error de argumentos']
    for error_class in ERROR_CLASSES:
        lineas.append(f"  {error_class.exit_code:<3} {error_class.__name__}: {error_class.default_detail}")
    return '\n'.join(lineas)
