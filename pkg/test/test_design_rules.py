import math
from unittest import TestCase, mock

from parameterized import parameterized

from bawutils.design_rules import (
    RULE_CSV_HEADER,
    DesignMargins,
    RingGeometry,
    check_geometry,
    default_sweeps,
    scale_design,
    sweep_rules,
    synthesize,
    thickness_for_fs,
)
from bawutils.dispersion import CharacteristicLengths
from bawutils.errors import ArgumentException, ConstraintException
from bawutils.material_tensors import EulerZXZ, load_material, rotate

LENGTHS = CharacteristicLengths(
    lambda_s1_open=1.26e-3, lambda_crossing_short=790e-6, decay_a1_open=172e-6, eval_freq=10.14e6
)


def ln36y():
    return rotate(load_material("LiNbO3_congruent"), EulerZXZ.rotated_y_cut(36.0))


def geometry(gap, ring, **kwargs):
    return RingGeometry(thickness=300e-6, active_radius=7e-3, gap_width=gap, ring_width=ring, **kwargs)


class RingGeometryTest(TestCase):
    def test_outer_radius(self):
        """GIVEN a ring design WHEN its outer radius is read THEN it is radius plus gap plus ring"""
        self.assertAlmostEqual(geometry(100e-6, 1.2e-3).outer_radius, 8.3e-3)

    def test_does_not_fit_die(self):
        """GIVEN a ring past half the die side WHEN the geometry is built THEN a ConstraintException is raised"""
        with self.assertRaises(ConstraintException):
            geometry(100e-6, 2.5e-3)

    def test_infinite_die(self):
        """GIVEN an unbounded die WHEN a large ring is built THEN it is accepted"""
        self.assertEqual(geometry(100e-6, 2.5e-3, die_side=math.inf).ring_width, 2.5e-3)

    @parameterized.expand([("zero_gap", 0.0, 1e-3), ("negative_ring", 1e-4, -1e-3), ("nan_gap", math.nan, 1e-3)])
    def test_invalid_dimensions(self, _name, gap, ring):
        """GIVEN a non-positive or undefined dimension WHEN the geometry is built THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            geometry(gap, ring)

    def test_wide_gap_warns(self):
        """GIVEN a gap above a tenth of the active radius WHEN the geometry is built THEN a warning is logged"""
        with self.assertLogs("bawutils.design_rules", level="WARNING"):
            geometry(1e-3, 0.5e-3)

    def test_to_dict(self):
        """GIVEN a geometry WHEN it is reported THEN every dimension carries a metre suffix"""
        self.assertEqual(
            list(geometry(100e-6, 1.2e-3).to_dict()),
            ["thickness_m", "active_radius_m", "gap_width_m", "ring_width_m", "die_side_m"],
        )

    @parameterized.expand([("gap", dict(gap=1.0)), ("ring", dict(ring=-0.1))])
    def test_invalid_margins(self, _name, kwargs):
        """GIVEN a margin outside [0, 1) WHEN margins are built THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            DesignMargins(**kwargs)


class CheckGeometryTest(TestCase):
    @parameterized.expand(
        [
            ("narrow_gap_wide_ring", 100e-6, 1.2e-3, True, True, True),
            ("narrow_gap_narrow_ring", 100e-6, 0.4e-3, True, False, False),
            ("wide_gap_wide_ring", 240e-6, 1.2e-3, False, True, False),
            ("wide_gap_narrow_ring", 240e-6, 0.4e-3, False, False, False),
        ]
    )
    def test_truth_table(self, _name, gap, ring, gap_ok, ring_ok, overall):
        """
        GIVEN decay 172 µm and crossing wavelength 790 µm
        WHEN gap and ring combinations are checked
        THEN only a gap below the decay length with a ring above the wavelength passes
        """
        report = check_geometry(geometry(gap, ring), LENGTHS)
        self.assertEqual(report.rule("gap_below_a1_decay").passed, gap_ok)
        self.assertEqual(report.rule("ring_above_crossing_wavelength").passed, ring_ok)
        self.assertEqual(report.passed, overall)

    def test_margins(self):
        """GIVEN a design WHEN it is checked THEN margins are the relative distances to the thresholds"""
        report = check_geometry(geometry(86e-6, 1.185e-3), LENGTHS)
        self.assertAlmostEqual(report.rule("gap_below_a1_decay").margin, 0.5)
        self.assertAlmostEqual(report.rule("ring_above_crossing_wavelength").margin, 0.5)

    def test_advisory_rule_does_not_fail(self):
        """GIVEN a gap below the manufacturing minimum WHEN checked THEN only the advisory rule fails"""
        report = check_geometry(geometry(10e-6, 1.2e-3), LENGTHS)
        self.assertFalse(report.rule("gap_manufacturable").passed)
        self.assertTrue(report.rule("gap_manufacturable").advisory)
        self.assertTrue(report.passed)

    def test_unknown_rule(self):
        """GIVEN a report WHEN an unknown rule is requested THEN a KeyError is raised"""
        with self.assertRaises(KeyError):
            check_geometry(geometry(100e-6, 1.2e-3), LENGTHS).rule("missing")

    def test_table(self):
        """GIVEN a failing design WHEN the report is rendered THEN each rule has a verdict and the overall line fails"""
        table = check_geometry(geometry(240e-6, 1.2e-3), LENGTHS).to_table()
        lines = table.splitlines()
        self.assertTrue(lines[0].startswith("rule"))
        self.assertIn("FAIL", lines[1])
        self.assertIn("pass (advisory)", lines[3])
        self.assertEqual(lines[-1], "overall: FAIL")

    def test_rows_match_header(self):
        """GIVEN a report WHEN it is tabulated THEN every row has one value per CSV column"""
        rows = check_geometry(geometry(100e-6, 1.2e-3), LENGTHS).to_rows()
        self.assertEqual(len(rows), 3)
        self.assertTrue(all(len(row) == len(RULE_CSV_HEADER) for row in rows))


class ScalingTest(TestCase):
    def test_scale_design(self):
        """GIVEN a 300 µm design WHEN scaled to 600 µm THEN lateral dimensions double and the die is unchanged"""
        scaled = scale_design(geometry(100e-6, 1e-3, die_side=40e-3), 600e-6)
        self.assertAlmostEqual(scaled.active_radius, 14e-3)
        self.assertAlmostEqual(scaled.gap_width, 200e-6)
        self.assertAlmostEqual(scaled.ring_width, 2e-3)
        self.assertEqual(scaled.die_side, 40e-3)

    def test_scale_past_die(self):
        """GIVEN a design on the default die WHEN scaled to twice the thickness THEN it no longer fits"""
        with self.assertRaises(ConstraintException):
            scale_design(geometry(100e-6, 1e-3), 600e-6)

    def test_scale_to_zero(self):
        """GIVEN a zero thickness WHEN a design is scaled THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            scale_design(geometry(100e-6, 1e-3), 0.0)

    def test_thickness_inverts_series_resonance(self):
        """GIVEN half the target frequency WHEN the thickness is synthesized THEN it doubles"""
        material = ln36y()
        self.assertAlmostEqual(thickness_for_fs(material, 5e6) / thickness_for_fs(material, 10e6), 2.0, places=12)


class SynthesizeTest(TestCase):
    def setUp(self):
        """common test setup"""
        self.material = ln36y()
        self.solver = mock.Mock(return_value=LENGTHS)

    def test_synthesized_design_passes(self):
        """
        GIVEN the characteristic lengths of the 36Y plate
        WHEN a 10.14 MHz design is synthesized
        THEN gap and ring follow the margins and every rule passes

        The thickness window of 280-340 µm is wider than the 3% device tolerance because the tabulated constants
        resonate 7.8% above the measured device, which puts a 10.14 MHz plate near 324 µm.
        """
        result = synthesize(10.14e6, self.material, lengths_solver=self.solver)
        thickness = thickness_for_fs(self.material, 10.14e6)
        self.solver.assert_called_once_with(self.material, thickness, f_eval=10.14e6)
        self.assertAlmostEqual(result.geometry.gap_width, 172e-6 * 0.6)
        self.assertAlmostEqual(result.geometry.ring_width, 790e-6 * 1.5)
        self.assertGreater(thickness, 280e-6)
        self.assertLess(thickness, 340e-6)
        self.assertTrue(result.report.passed)
        self.assertIs(result.lengths, LENGTHS)

    def test_low_frequency_design_exceeds_die(self):
        """GIVEN a 4 MHz target on the default die WHEN synthesized THEN a ConstraintException is raised"""
        with self.assertRaises(ConstraintException):
            synthesize(4e6, self.material, lengths_solver=mock.Mock(return_value=LENGTHS.scaled(2.5)))

    @parameterized.expand([("too_low", 0.5e6), ("too_high", 200e6)])
    def test_target_out_of_range(self, _name, target):
        """GIVEN a target outside 1-100 MHz WHEN a design is synthesized THEN an ArgumentException is raised"""
        with self.assertRaises(ArgumentException):
            synthesize(target, self.material, lengths_solver=self.solver)
        self.solver.assert_not_called()


class SweepRulesTest(TestCase):
    def test_default_sweeps(self):
        """GIVEN a 300 µm plate WHEN the default sweeps are built THEN they span 20-240 µm and 0.4-2.4 mm"""
        gaps, rings = default_sweeps(300e-6)
        self.assertEqual(len(gaps), 12)
        self.assertEqual(len(rings), 11)
        self.assertAlmostEqual(gaps[0], 20e-6)
        self.assertAlmostEqual(gaps[-1], 240e-6)
        self.assertAlmostEqual(rings[-1], 2.4e-3)

    def test_sweep_rows(self):
        """
        GIVEN a reference design
        WHEN the gap and ring sweeps are evaluated
        THEN each row reports both margins and a verdict, also for rings too large for the die
        """
        rows = sweep_rules(LENGTHS, geometry(100e-6, 1.2e-3), gaps=[100e-6, 240e-6], rings=[0.4e-3, 2.4e-3])
        self.assertEqual([row[0] for row in rows], ["gap", "gap", "ring", "ring"])
        self.assertEqual([row[-1] for row in rows], [True, False, False, True])
        self.assertAlmostEqual(rows[1][3], 1.0 - 240.0 / 172.0)
        self.assertEqual(rows[3][2], 2.4e-3)

    def test_default_sweep_rows(self):
        """GIVEN no explicit sweeps WHEN rules are swept THEN one row per default gap and ring is produced"""
        self.assertEqual(len(sweep_rules(LENGTHS, geometry(100e-6, 1.2e-3))), 23)
