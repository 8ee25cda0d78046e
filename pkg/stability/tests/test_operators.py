import dataclasses

import numpy as np
from django.test import SimpleTestCase, override_settings
from numpy.testing import assert_allclose
from scipy import linalg

from stability.exceptions import InputError, InvalidGenerator, InvalidModelSpec, SingularGenerator
from stability.operators import (
    FLAG_CONSERVATIVE_PART,
    FLAG_DISSIPATIVE,
    Generator,
    ModelSpec,
    apply_inverse,
    build_generator,
    energy_norm,
    make_heat_wave_1d,
    make_reference,
    make_weakly_damped_chain,
    smallest_singular_value,
)


def heat_wave(nx_heat=8, nx_wave=8, **extra):
    return build_generator(ModelSpec('heat_wave_1d', {'nx_heat': nx_heat, 'nx_wave': nx_wave, **extra}))


def chain(length=2, damping=1.0, coupling=1.0, stiffness=1.0):
    return build_generator(ModelSpec('weakly_damped_chain', {
        'length': length, 'damping': damping, 'coupling': coupling, 'stiffness': stiffness,
    }))


class GeneratorTests(SimpleTestCase):

    def test_rechaza_gram_no_simetrica(self):
        with self.assertRaises(InvalidGenerator):
            Generator(np.eye(2), np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rechaza_gram_indefinida(self):
        with self.assertRaises(InvalidGenerator):
            Generator(np.eye(2), np.diag([1.0, -1.0]))

    def test_rechaza_formas_incompatibles(self):
        with self.assertRaises(InvalidGenerator):
            Generator(np.eye(3), np.eye(2))
        with self.assertRaises(InvalidGenerator):
            Generator(np.ones((2, 3)), np.eye(2))

    def test_es_inmutable(self):
        g = Generator(-np.eye(2), np.eye(2), label='prueba')
        with self.assertRaises(ValueError):
            g.A[0, 0] = 1.0
        with self.assertRaises(dataclasses.FrozenInstanceError):
            g.label = 'otra'

    def test_copia_las_matrices_de_entrada(self):
        A = -np.eye(2)
        g = Generator(A, np.eye(2))
        A[0, 0] = 5.0
        self.assertEqual(g.A[0, 0], -1.0)

    def test_energy_norm_con_gram_no_trivial(self):
        g = Generator(-np.eye(2), np.diag([4.0, 1.0]))
        self.assertAlmostEqual(energy_norm(g, [1.0, 0.0]), 2.0, places=14)
        assert_allclose(energy_norm(g, np.array([[1.0, 0.0], [0.0, 3.0]])), [2.0, 3.0])

    def test_energy_norm_dimension_incompatible(self):
        g = Generator(-np.eye(2), np.eye(2))
        with self.assertRaises(InputError):
            energy_norm(g, [1.0, 2.0, 3.0])

    def test_norma_de_operador_en_la_energia(self):
        g = chain(length=2, damping=0.7, coupling=0.3)
        # ‖A‖²_H es el mayor autovalor del problema generalizado AᵀGA x = λ G x
        expected = np.sqrt(linalg.eigh(g.A.T @ g.G @ g.A, g.G, eigvals_only=True)[-1])
        self.assertAlmostEqual(g.norm / expected, 1.0, places=10)

    def test_cholesky_reconstruye_gram(self):
        g = heat_wave(4, 5)
        R = g.cholesky_factor
        assert_allclose(R.T @ R, g.G, atol=1e-12 * np.max(np.abs(g.G)))


class ApplyInverseTests(SimpleTestCase):

    def test_amortiguamiento_uniforme(self):
        g = build_generator(ModelSpec('uniformly_damped', {'dim': 3}))
        b = np.array([1.0, -2.0, 0.5])
        assert_allclose(apply_inverse(g, b), -b)

    def test_oscilador(self):
        g = build_generator(ModelSpec('conservative_oscillator'))
        # A(0, 1) = (1, 0)
        assert_allclose(apply_inverse(g, [1.0, 0.0]), [0.0, 1.0], atol=1e-15)

    def test_residuo_en_calor_onda(self):
        g = heat_wave(6, 6)
        b = np.random.default_rng(3).standard_normal(g.dim)
        x = apply_inverse(g, b)
        self.assertLessEqual(energy_norm(g, g.A @ x - b), 1e-10 * energy_norm(g, b))

    def test_generador_singular(self):
        g = build_generator(ModelSpec('diagonal', {'eigenvalues': [0.0, -1.0], 'invertible': False}))
        self.assertFalse(g.is_invertible)
        with self.assertRaises(SingularGenerator):
            apply_inverse(g, [1.0, 1.0])
        with self.assertRaises(SingularGenerator):
            g.weighted_inverse


class SmallestSingularValueTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        U, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        V, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        self.sigma = np.r_[0.1, np.linspace(1.0, 5.0, 29)]
        self.matrix = U @ np.diag(self.sigma) @ V.T

    def test_svd_densa(self):
        self.assertAlmostEqual(smallest_singular_value(self.matrix) / 0.1, 1.0, places=10)

    @override_settings(STABILITY={'DENSE_SVD_LIMIT': 0})
    def test_iteracion_inversa(self):
        self.assertAlmostEqual(smallest_singular_value(self.matrix) / 0.1, 1.0, places=8)

    @override_settings(STABILITY={'DENSE_SVD_LIMIT': 0})
    def test_iteracion_inversa_matriz_compleja(self):
        rotated = np.exp(0.3j) * self.matrix
        self.assertAlmostEqual(smallest_singular_value(rotated) / 0.1, 1.0, places=8)


class HeatWaveTests(SimpleTestCase):

    def test_dimension(self):
        self.assertEqual(heat_wave(2, 2).dim, 6)
        self.assertEqual(heat_wave(8, 8).dim, 24)
        self.assertEqual(heat_wave(3, 5).dim, 13)

    def test_dimension_en_todas_las_mallas(self):
        for nx_heat in range(2, 65):
            for nx_wave in range(2, 65):
                g = heat_wave(nx_heat, nx_wave)
                layout = g.metadata['layout']
                if g.dim != 2 * nx_wave + nx_heat or layout['heat'] != [2 * nx_wave - 1, g.dim]:
                    self.fail(f"nx_heat={nx_heat}, nx_wave={nx_wave}: dim={g.dim}, layout={layout}")

    def test_metadata(self):
        g = heat_wave(8, 8, wave_speed=2.0)
        self.assertAlmostEqual(g.metadata['nyquist_frequency'], 16.0 * np.pi)
        self.assertAlmostEqual(g.metadata['h_wave'], 1.0 / 8)
        self.assertAlmostEqual(g.metadata['h_heat'], 1.0 / 9)
        self.assertEqual(g.metadata['layout']['heat'], [15, 24])
        self.assertIn(FLAG_DISSIPATIVE, g.flags)

    def test_es_disipativo_e_invertible(self):
        g = heat_wave(16, 16)
        self.assertLessEqual(g.dissipativity_defect(), 1e-10)
        self.assertTrue(g.is_invertible)
        self.assertLess(g.abscissa(), 0.0)

    def test_parametros_invalidos(self):
        for parameters in (
            {'nx_heat': 1, 'nx_wave': 4},
            {'nx_heat': 4, 'nx_wave': 4, 'diffusivity': 0.0},
            {'nx_heat': 4, 'nx_wave': 4, 'wave_speed': -1.0},
            {'nx_heat': 4.5, 'nx_wave': 4},
            {'nx_wave': 4},
        ):
            with self.subTest(parameters=parameters):
                with self.assertRaises(InvalidModelSpec):
                    build_generator(ModelSpec('heat_wave_1d', parameters))

    def test_constructores_rechazan_otro_tipo(self):
        spec = ModelSpec('uniformly_damped', {})
        for builder in (make_heat_wave_1d, make_weakly_damped_chain):
            with self.subTest(builder=builder.__name__):
                with self.assertRaises(InvalidModelSpec):
                    builder(spec)
        with self.assertRaises(InvalidModelSpec):
            make_reference(ModelSpec('heat_wave_1d', {'nx_heat': 4, 'nx_wave': 4}))


class ChainTests(SimpleTestCase):

    def test_dimension_y_flags(self):
        g = chain(length=3)
        self.assertEqual(g.dim, 12)
        self.assertEqual(g.flags, frozenset({FLAG_DISSIPATIVE}))

    def test_sin_amortiguamiento_es_conservativo(self):
        g = chain(length=2, damping=0.0)
        self.assertIn(FLAG_CONSERVATIVE_PART, g.flags)
        self.assertLessEqual(abs(g.dissipativity_defect()), 1e-12)
        self.assertLessEqual(np.max(np.abs(g.spectrum.real)), 1e-8)

    def test_sin_acoplamiento_tiene_parte_conservativa(self):
        self.assertIn(FLAG_CONSERVATIVE_PART, chain(length=2, coupling=0.0).flags)

    def test_parametros_invalidos(self):
        for parameters in (
            {'length': 0},
            {'length': 2, 'damping': -0.1},
            {'length': 2, 'coupling': -1.0},
            {'length': 2, 'stiffness': 0.0},
        ):
            with self.subTest(parameters=parameters):
                with self.assertRaises(InvalidModelSpec):
                    build_generator(ModelSpec('weakly_damped_chain', parameters))


class ReferenceModelTests(SimpleTestCase):

    def test_amortiguamiento_uniforme(self):
        g = build_generator(ModelSpec('uniformly_damped', {'dim': 4}))
        assert_allclose(g.A, -np.eye(4))
        self.assertAlmostEqual(g.abscissa(), -1.0)

    def test_oscilador(self):
        g = build_generator(ModelSpec('conservative_oscillator'))
        assert_allclose(np.sort(g.spectrum.imag), [-1.0, 1.0])
        self.assertIn(FLAG_CONSERVATIVE_PART, g.flags)

    def test_diagonal_con_pares_complejos(self):
        g = build_generator(ModelSpec('diagonal', {'eigenvalues': [-0.5, [-1.0, 2.0]]}))
        self.assertEqual(g.dim, 3)
        expected = np.array([-0.5, -1.0 + 2.0j, -1.0 - 2.0j])
        for value in expected:
            self.assertLess(np.min(np.abs(g.spectrum - value)), 1e-12)

    def test_diagonal_inestable_no_es_disipativa(self):
        g = build_generator(ModelSpec('diagonal', {'eigenvalues': [2.0]}))
        self.assertNotIn(FLAG_DISSIPATIVE, g.flags)
        self.assertGreater(g.dissipativity_defect(), 0.0)

    def test_diagonal_rechaza_cero_invertible(self):
        with self.assertRaises(InvalidModelSpec):
            build_generator(ModelSpec('diagonal', {'eigenvalues': [0.0, -1.0]}))

    def test_diagonal_rechaza_autovalor_mal_formado(self):
        for raw in ([[1.0, 2.0, 3.0]], ['abc'], []):
            with self.subTest(raw=raw):
                with self.assertRaises(InvalidModelSpec):
                    build_generator(ModelSpec('diagonal', {'eigenvalues': raw}))

    def test_tipo_desconocido(self):
        with self.assertRaises(InvalidModelSpec):
            build_generator(ModelSpec('plate_2d', {}))


class DissipativityPropertyTests(SimpleTestCase):
    """Re⟨Ax,x⟩_H ≤ 0 para parámetros aleatorios del zoológico (100 casos)."""

    def test_zoologico_aleatorio(self):
        rng = np.random.default_rng(2024)
        for case in range(100):
            if case % 2:
                spec = ModelSpec('weakly_damped_chain', {
                    'length': int(rng.integers(1, 7)),
                    'damping': float(rng.uniform(0.0, 2.0)),
                    'coupling': float(rng.uniform(0.0, 2.0)),
                    'stiffness': float(rng.uniform(0.5, 3.0)),
                })
            else:
                spec = ModelSpec('heat_wave_1d', {
                    'nx_heat': int(rng.integers(2, 7)),
                    'nx_wave': int(rng.integers(2, 7)),
                    'diffusivity': float(rng.uniform(0.2, 3.0)),
                    'wave_speed': float(rng.uniform(0.2, 3.0)),
                })
            with self.subTest(case=case, spec=spec.to_dict()):
                g = build_generator(spec)
                self.assertLessEqual(g.dissipativity_defect(), 1e-10)
                x = rng.standard_normal(g.dim)
                self.assertLessEqual(x @ g.G @ g.A @ x, 1e-10 * g.norm * energy_norm(g, x) ** 2)
