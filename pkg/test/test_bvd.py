import math
from unittest import TestCase

import numpy as np
from parameterized import parameterized

from bawutils.bvd import (
    BvdParams,
    MotionalBranch,
    bvd_fit,
    bvd_impedance,
    bvd_params_from_targets,
    fp_from_fs_k2,
    k2_from_fs_fp,
    spurious_deviation,
)
from bawutils.errors import ArgumentException
from bawutils.test_helpers import SpectrumSimulator
from bawutils.thickness_mode import frequency_grid, resonance_pair

C0 = 1e-9


class CouplingTest(TestCase):
    @parameterized.expand(
        [
            ("36y_ln_plate", 10.14e6, 11.291e6, 0.296, 0.001),
            ("second_plate", 10.23e6, 11.473e6, 0.318, 0.001),
            ("no_coupling", 10e6, 10e6, 0.0, 1e-12),
        ]
    )
    def test_k2_from_resonances(self, _name, fs, fp, expected, tolerance):
        """GIVEN measured fs and fp WHEN k² is computed THEN it matches the reported coupling"""
        self.assertAlmostEqual(k2_from_fs_fp(fs, fp), expected, delta=tolerance)

    def test_fp_inverts_k2(self):
        """GIVEN fs and k² WHEN fp is derived and k² recomputed THEN the original k² comes back"""
        self.assertAlmostEqual(k2_from_fs_fp(10e6, fp_from_fs_k2(10e6, 0.25)), 0.25, places=12)

    @parameterized.expand([("fp_below_fs", 10e6, 9e6), ("zero_fs", 0.0, 1e6)])
    def test_invalid_resonances(self, _name, fs, fp):
        """GIVEN an inverted or zero resonance pair WHEN k² is computed THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            k2_from_fs_fp(fs, fp)


class BvdParamsTest(TestCase):
    @parameterized.expand(
        [
            ("low_coupling", 1e6, 0.05, 500.0, 1e-12),
            ("ln_plate", 10.14e6, 0.296, 5230.0, C0),
            ("high_frequency", 2e9, 0.07, 1500.0, 2e-12),
        ]
    )
    def test_targets_round_trip(self, _name, fs, k2, q, c0):
        """GIVEN target fs, k², Q and C0 WHEN BVD parameters are synthesized THEN the derived values match to 1e-9"""
        params = bvd_params_from_targets(fs, k2, q, c0)
        self.assertAlmostEqual(params.fs / fs, 1.0, delta=1e-9)
        self.assertAlmostEqual(params.k2 / k2, 1.0, delta=1e-9)
        self.assertAlmostEqual(params.q / q, 1.0, delta=1e-9)
        self.assertEqual(params.c0, c0)

    @parameterized.expand([("ln_plate", 0.296, 5230.0, 1548.0), ("second_plate", 0.318, 7924.0, 2520.0)])
    def test_figure_of_merit(self, _name, k2, q, expected):
        """GIVEN a resonator WHEN its figure of merit is read THEN it is Q k²"""
        params = bvd_params_from_targets(10e6, k2, q, C0)
        self.assertAlmostEqual(params.fom, expected, delta=1.0)

    @parameterized.expand([("zero_coupling", 0.0), ("coupling_too_large", 0.9)])
    def test_invalid_coupling(self, _name, k2):
        """GIVEN a coupling outside (0, 8/pi²) WHEN parameters are synthesized THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            bvd_params_from_targets(10e6, k2, 1000.0, C0)

    def test_non_positive_element(self):
        """GIVEN a negative resistance WHEN BvdParams are built THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            BvdParams(c0=C0, cm=1e-10, lm=1e-6, rm=-1.0)

    def test_scaling_keeps_resonances(self):
        """GIVEN BVD parameters WHEN they are scaled THEN fs, fp and Q stay and C0 follows the factor"""
        params = bvd_params_from_targets(10.14e6, 0.296, 2000.0, C0)
        scaled = params.scaled(3.0)
        self.assertAlmostEqual(scaled.fs / params.fs, 1.0, delta=1e-12)
        self.assertAlmostEqual(scaled.fp / params.fp, 1.0, delta=1e-12)
        self.assertAlmostEqual(scaled.q / params.q, 1.0, delta=1e-12)
        self.assertAlmostEqual(scaled.c0, 3.0 * C0)

    def test_to_dict_keys(self):
        """GIVEN BVD parameters WHEN they are reported THEN the elements and derived values are present"""
        report = bvd_params_from_targets(10e6, 0.2, 1000.0, C0).to_dict()
        self.assertEqual(list(report), ["c0", "cm", "lm", "rm", "fs", "fp", "k2", "q"])


class BvdImpedanceTest(TestCase):
    def setUp(self):
        """common test setup"""
        self.params = bvd_params_from_targets(10.14e6, 0.296, 2000.0, C0)

    def test_passive(self):
        """GIVEN a BVD model WHEN the impedance is evaluated on a wide grid THEN Re Z is non-negative everywhere"""
        spectrum = bvd_impedance(self.params, frequency_grid(1e5, 1e9, 2001, "log"))
        self.assertTrue(np.all(spectrum.resistance >= 0.0))

    def test_resonances_located_on_grid(self):
        """GIVEN a grid step of fs / 1e4 WHEN fs and fp are located THEN they match the model to 0.01%"""
        fs, fp = self.params.fs, self.params.fp
        step = fs / 1e4
        spectrum = bvd_impedance(self.params, np.arange(0.9 * fs, 1.1 * fp, step))
        found_fs, found_fp = resonance_pair(spectrum)
        self.assertAlmostEqual(found_fs / fs, 1.0, delta=1e-4)
        self.assertAlmostEqual(found_fp / fp, 1.0, delta=1e-4)

    def test_series_resonance_is_motional_resistance(self):
        """GIVEN a high Q WHEN Z is evaluated at fs THEN it is close to the motional resistance"""
        z = bvd_impedance(self.params, [self.params.fs]).z[0]
        self.assertAlmostEqual(z.real / self.params.rm, 1.0, delta=1e-3)


class BvdFitTest(TestCase):
    def setUp(self):
        """common test setup"""
        self.params = bvd_params_from_targets(10.14e6, 0.296, 2000.0, C0)
        self.freqs = SpectrumSimulator.band_grid(self.params, 4001)

    def test_fit_recovers_clean_parameters(self):
        """GIVEN a noiseless BVD spectrum WHEN it is fitted THEN fs, k², Q and C0 come back within 1%"""
        fit = bvd_fit(SpectrumSimulator(self.params).impedance(self.freqs))
        self.assertAlmostEqual(fit.params.fs / self.params.fs, 1.0, delta=0.01)
        self.assertAlmostEqual(fit.params.k2 / self.params.k2, 1.0, delta=0.01)
        self.assertAlmostEqual(fit.params.q / self.params.q, 1.0, delta=0.01)
        self.assertAlmostEqual(fit.params.c0 / self.params.c0, 1.0, delta=0.01)
        self.assertLess(fit.residual, 1e-3)
        self.assertLessEqual(fit.evaluations, 200)

    @parameterized.expand([("seed_0", 0), ("seed_1", 1), ("seed_7", 7)])
    def test_fit_tolerates_noise(self, _name, seed):
        """GIVEN 1% multiplicative noise WHEN the spectrum is fitted THEN fs, k² and Q come back within 3%"""
        spectrum = SpectrumSimulator(self.params, noise=0.01, seed=seed).impedance(self.freqs)
        fit = bvd_fit(spectrum)
        self.assertAlmostEqual(fit.params.fs / self.params.fs, 1.0, delta=0.03)
        self.assertAlmostEqual(fit.params.k2 / self.params.k2, 1.0, delta=0.03)
        self.assertAlmostEqual(fit.params.q / self.params.q, 1.0, delta=0.03)

    def test_fit_over_random_resonators(self):
        """
        GIVEN 100 random resonators with 0.5% multiplicative noise
        WHEN each spectrum is fitted
        THEN C0, Cm, Lm and Rm come back within 3% and fs within 0.05%
        """
        rng = np.random.default_rng(2024)
        for index in range(100):
            params = bvd_params_from_targets(
                fs=rng.uniform(5e6, 20e6),
                k2=rng.uniform(0.1, 0.3),
                q=rng.uniform(500.0, 2500.0),
                c0=rng.uniform(2e-10, 2e-9),
            )
            freqs = SpectrumSimulator.band_grid(params, 8001)
            fit = bvd_fit(SpectrumSimulator(params, noise=0.005, seed=index).impedance(freqs))
            with self.subTest(index=index):
                for name in ("c0", "cm", "lm", "rm"):
                    self.assertAlmostEqual(getattr(fit.params, name) / getattr(params, name), 1.0, delta=0.03, msg=name)
                self.assertAlmostEqual(fit.params.fs / params.fs, 1.0, delta=5e-4)

    def test_spur_raises_residual(self):
        """GIVEN a spectrum with a spurious branch WHEN it is fitted THEN the residual exceeds that of a clean fit"""
        spur = MotionalBranch.from_targets(10.7e6, 0.01, 500.0, C0)
        clean = bvd_fit(SpectrumSimulator(self.params).impedance(self.freqs))
        spurious = bvd_fit(SpectrumSimulator(self.params, spur=spur).impedance(self.freqs))
        self.assertGreater(spurious.residual, clean.residual)

    def test_report_contains_residual(self):
        """GIVEN a fit WHEN it is reported THEN the residual is part of the report"""
        fit = bvd_fit(SpectrumSimulator(self.params).impedance(self.freqs))
        self.assertIn("residual", fit.to_dict())
        self.assertEqual(fit.to_dict()["k2"], fit.params.k2)


class SpuriousDeviationTest(TestCase):
    def setUp(self):
        """common test setup"""
        self.params = bvd_params_from_targets(10.14e6, 0.296, 2000.0, C0)
        self.freqs = frequency_grid(9e6, 12.5e6, 20001)

    def test_ideal_spectrum_has_no_deviation(self):
        """GIVEN the ideal spectrum itself WHEN the deviation is computed THEN all metrics are zero"""
        deviation = spurious_deviation(bvd_impedance(self.params, self.freqs), self.params)
        self.assertEqual(deviation.rms, 0.0)
        self.assertEqual(deviation.max, 0.0)
        self.assertEqual(deviation.peak_count, 0)

    def test_spur_counted_once(self):
        """GIVEN one spurious branch inside [fs, fp] WHEN the deviation is computed THEN one peak is found"""
        spur = MotionalBranch.from_targets(10.7e6, 0.01, 500.0, C0)
        measured = SpectrumSimulator(self.params, spur=spur).impedance(self.freqs)
        deviation = spurious_deviation(measured, self.params)
        self.assertEqual(deviation.peak_count, 1)
        self.assertGreater(deviation.peak_freqs[0], 10.6e6)
        self.assertLess(deviation.peak_freqs[0], 10.75e6)
        self.assertGreater(deviation.max, 0.0)

    def test_band_outside_grid(self):
        """GIVEN a band past the measured grid WHEN the deviation is computed THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            spurious_deviation(bvd_impedance(self.params, self.freqs), self.params, band=(8e6, 11e6))

    def test_report_keys(self):
        """GIVEN a deviation WHEN it is reported THEN rms, max and peak count are present"""
        deviation = spurious_deviation(bvd_impedance(self.params, self.freqs), self.params)
        self.assertEqual(set(deviation.to_dict()), {"rms", "max", "peak_count"})
        self.assertTrue(math.isfinite(deviation.to_dict()["peak_count"]))
