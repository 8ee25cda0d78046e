import math

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose
from scipy import linalg

from stability.exceptions import InputError, NoImaginaryEigenvalue, StepTooLarge, UnstableGrowth
from stability.march import (
    converge_to_periodic,
    cross_check_periodic,
    default_step,
    integrate_forced,
    resonance_demo,
)
from stability.operators import ModelSpec, build_generator, energy_norm
from stability.periodic import FourierForcing, random_forcing, solve_periodic


def model(kind, **parameters):
    return build_generator(ModelSpec(kind, parameters))


class IntegrateForcedTests(SimpleTestCase):

    def test_decaimiento_escalar(self):
        g = model('uniformly_damped')
        trajectory = integrate_forced(g, None, [1.0], dt=1e-3, horizon=1.0)
        self.assertAlmostEqual(trajectory.final_state[0], math.exp(-1.0), places=10)
        self.assertAlmostEqual(trajectory.times[-1], 1.0, places=12)
        self.assertEqual(len(trajectory), 1001)

    def test_oscilador_conserva_la_energia(self):
        g = model('conservative_oscillator')
        trajectory = integrate_forced(g, None, [1.0, 0.0], dt=2.0 * np.pi / 1000, horizon=2.0 * np.pi)
        assert_allclose(trajectory.energy, 1.0, atol=1e-8)
        assert_allclose(trajectory.final_state, [1.0, 0.0], atol=1e-8)

    def test_propiedad_de_semigrupo(self):
        g = model('weakly_damped_chain', length=2, damping=0.6, coupling=0.4)
        u0 = np.random.default_rng(6).standard_normal(g.dim)
        first = integrate_forced(g, None, u0, dt=0.01, horizon=1.0)
        second = integrate_forced(g, None, first.final_state, dt=0.01, horizon=1.5)
        direct = integrate_forced(g, None, u0, dt=0.01, horizon=2.5)
        assert_allclose(second.final_state, direct.final_state, rtol=0, atol=1e-8)

    def test_paso_mitad_dentro_del_estimador(self):
        rng = np.random.default_rng(21)
        forced = model('heat_wave_1d', nx_heat=8, nx_wave=8)
        cases = (
            (forced, random_forcing(forced, 2.0, 4, 2.0, seed=3)),
            (model('weakly_damped_chain', length=3, damping=0.8, coupling=0.5), None),
            (model('heat_wave_1d', nx_heat=6, nx_wave=10), None),
        )
        for g, forcing in cases:
            u0 = rng.standard_normal(g.dim)
            with self.subTest(model=g.label, forced=forcing is not None):
                coarse = integrate_forced(g, forcing, u0, horizon=2.0)
                fine = integrate_forced(g, forcing, u0, dt=coarse.step / 2.0, horizon=2.0)
                self.assertEqual(len(fine), 2 * len(coarse) - 1)
                difference = energy_norm(g, fine.final_state - coarse.final_state)
                self.assertLessEqual(difference, 16.0 * coarse.error_estimate + 1e-14)

    def test_paso_demasiado_grande(self):
        g = model('uniformly_damped')
        forcing = FourierForcing(1.0, {4: [1.0], -4: [1.0]}, real_flag=True)
        with self.assertRaises(StepTooLarge):
            integrate_forced(g, forcing, [0.0], dt=0.1, horizon=1.0)

    def test_crecimiento_no_acotado(self):
        g = model('diagonal', eigenvalues=[1000.0])
        with self.assertRaises(UnstableGrowth):
            integrate_forced(g, None, [1.0], dt=0.01, horizon=10.0)

    def test_entradas_invalidas(self):
        g = model('uniformly_damped', dim=2)
        with self.assertRaises(InputError):
            integrate_forced(g, None, [1.0], dt=0.1)
        with self.assertRaises(InputError):
            integrate_forced(g, None, [1.0, 0.0], dt=0.1, horizon=0.0)
        with self.assertRaises(InputError):
            integrate_forced(g, None, [1.0, 0.0], dt=-0.1)

    def test_paso_por_defecto_divide_el_periodo(self):
        g = model('heat_wave_1d', nx_heat=8, nx_wave=8)
        forcing = random_forcing(g, 2.0, 4, 2.0, seed=1)
        step = default_step(g, forcing)
        self.assertLessEqual(step, min(2.0 / 80, 0.9 / g.norm) * (1.0 + 1e-12))
        steps = forcing.period / step
        self.assertAlmostEqual(steps, round(steps), places=9)

    def test_la_energia_no_crece(self):
        """RK4 con el paso por defecto no aumenta la energía en modelos disipativos (120 casos)."""
        rng = np.random.default_rng(12)
        for case in range(120):
            family = case % 3
            if family == 0:
                eigenvalues = [[float(-rng.uniform(0.0, 2.0)), float(rng.uniform(-5.0, 5.0))] for _ in range(2)]
                eigenvalues.append(float(-rng.uniform(0.1, 3.0)))
                g = model('diagonal', eigenvalues=eigenvalues, invertible=False)
            elif family == 1:
                g = model(
                    'heat_wave_1d', nx_heat=int(rng.integers(2, 11)), nx_wave=int(rng.integers(2, 11)),
                    diffusivity=float(rng.uniform(0.5, 1.5)), wave_speed=float(rng.uniform(0.5, 1.5)),
                )
            else:
                g = model(
                    'weakly_damped_chain', length=int(rng.integers(1, 7)), damping=float(rng.uniform(0.0, 2.0)),
                    coupling=float(rng.uniform(0.0, 2.0)), stiffness=float(rng.uniform(0.5, 2.0)),
                )
            u0 = rng.standard_normal(g.dim)
            with self.subTest(case=case, model=g.label):
                trajectory = integrate_forced(g, None, u0, horizon=2.0)
                energy = trajectory.energy
                self.assertTrue(np.all(energy[1:] <= energy[:-1] * (1.0 + 1e-10)))


class ConvergenceTests(SimpleTestCase):

    def setUp(self):
        self.g = model('uniformly_damped')
        self.forcing = FourierForcing(2.0 * np.pi, {0: [1.0], 1: [0.5], -1: [0.5]}, real_flag=True)

    def test_tasa_de_contraccion_escalar(self):
        report = converge_to_periodic(self.g, self.forcing, [3.0], 3, dt=2.0 * np.pi / 2000)
        self.assertEqual(len(report.gaps), 4)
        self.assertAlmostEqual(report.gaps[0], 1.5, places=12)
        for ratio in report.ratios[:2]:
            self.assertAlmostEqual(ratio / math.exp(-2.0 * np.pi), 1.0, delta=0.05)
        self.assertEqual(report.verdict, 'converged')

    def test_partiendo_de_la_orbita_periodica(self):
        solution = solve_periodic(self.g, self.forcing)
        report = converge_to_periodic(
            self.g, self.forcing, solution.initial_value(), 4, dt=2.0 * np.pi / 1000, solution=solution,
        )
        for gap in report.gaps:
            self.assertLessEqual(gap, 10.0 * report.error_estimate + 1e-12)

    def test_calor_onda_sigue_al_semigrupo(self):
        g = model('heat_wave_1d', nx_heat=8, nx_wave=8)
        forcing = random_forcing(g, 2.0, 4, 2.0, seed=7)
        solution = solve_periodic(g, forcing)
        u0 = np.random.default_rng(0).standard_normal(g.dim)
        report = converge_to_periodic(g, forcing, u0, 50, solution=solution)
        self.assertEqual(len(report.gaps), 51)
        self.assertLess(report.gaps[-1], report.gaps[0])
        difference = u0 - solution.initial_value()
        tolerance = 10.0 * report.error_estimate + 1e-6 * report.gaps[0]
        for j in (0, 1, 10, 25, 50):
            with self.subTest(period=j):
                expected = energy_norm(g, linalg.expm(j * forcing.period * g.A) @ difference)
                self.assertLessEqual(abs(report.gaps[j] - expected), tolerance)
        # S(T) es una contracción: los saltos no crecen
        gaps = np.array(report.gaps)
        self.assertTrue(np.all(np.diff(gaps) <= 10.0 * report.error_estimate + 1e-12))

    def test_requiere_un_periodo(self):
        with self.assertRaises(InputError):
            converge_to_periodic(self.g, self.forcing, [0.0], 0)


class CrossCheckTests(SimpleTestCase):

    def test_calor_onda(self):
        g = model('heat_wave_1d', nx_heat=8, nx_wave=8)
        forcing = random_forcing(g, 2.0, 16, 2.0, seed=7)
        report = cross_check_periodic(g, forcing, dt=2.0 / 4000)
        self.assertTrue(report.within_tolerance)
        self.assertLessEqual(report.relative_gap, 1e-6)

    def test_diferencia_a_paso_mitad(self):
        g = model('heat_wave_1d', nx_heat=8, nx_wave=8)
        forcing = random_forcing(g, 2.0, 16, 2.0, seed=7)
        report = cross_check_periodic(g, forcing, dt=2.0 / 2000)
        # el estimador acumulado acota la diferencia observada
        self.assertGreater(report.halving_difference, 0.0)
        self.assertLessEqual(report.halving_difference, report.error_estimate)
        self.assertLessEqual(report.max_deviation, 4.0 * report.halving_difference + 1e-10)

    def test_escalar(self):
        g = model('uniformly_damped')
        forcing = FourierForcing(1.0, {0: [0.2], 2: [1.0 - 0.5j], -2: [1.0 + 0.5j]}, real_flag=True)
        self.assertTrue(cross_check_periodic(g, forcing).within_tolerance)
        report = cross_check_periodic(g, forcing, dt=1.0 / 2000)
        self.assertTrue(report.within_tolerance)
        self.assertLessEqual(report.relative_gap, 1e-8)


class ResonanceDemoTests(SimpleTestCase):

    def test_oscilador_resonante(self):
        g = model('conservative_oscillator')
        report = resonance_demo(g, frequency=1.0, horizon=40.0 * np.pi, direction=[0.0, 1.0])
        self.assertAlmostEqual(report.amplitude_slope, 0.5, delta=0.01)
        self.assertAlmostEqual(report.growth_order, 1.0, delta=0.1)
        self.assertIsNone(report.resolvent_norm)
        self.assertEqual(len(report.peaks), 20)

    def test_oscilador_fuera_de_resonancia(self):
        g = model('conservative_oscillator')
        report = resonance_demo(g, frequency=2.0, horizon=40.0 * np.pi, direction=[0.0, 1.0])
        self.assertLess(abs(report.growth_order), 0.1)
        self.assertAlmostEqual(report.resolvent_norm, 1.0, places=10)

    def test_frecuencia_por_defecto(self):
        g = model('conservative_oscillator')
        report = resonance_demo(g)
        self.assertAlmostEqual(report.frequency, 1.0, places=10)
        self.assertAlmostEqual(report.growth_order, 1.0, delta=0.1)

    def test_amortiguado_acotado_por_la_resolvente(self):
        g = model('weakly_damped_chain', length=1, damping=1.0, coupling=1.0, stiffness=1.0)
        least_damped = g.spectrum[np.argmax(g.spectrum.real)]
        frequency = abs(float(least_damped.imag))
        report = resonance_demo(g, frequency=frequency, horizon=60 * 2.0 * np.pi / frequency)
        self.assertIsNotNone(report.resolvent_norm)
        self.assertLessEqual(report.amplification, report.resolvent_norm * (1.0 + 1e-3))
        self.assertGreaterEqual(report.amplification, 0.25 * report.resolvent_norm)

    def test_sin_autovalores_imaginarios(self):
        with self.assertRaises(NoImaginaryEigenvalue):
            resonance_demo(model('weakly_damped_chain', length=2))

    def test_direccion_invalida(self):
        g = model('conservative_oscillator')
        with self.assertRaises(InputError):
            resonance_demo(g, frequency=1.0, direction=[0.0, 0.0])
        with self.assertRaises(InputError):
            resonance_demo(g, frequency=1.0, direction=[1.0])
