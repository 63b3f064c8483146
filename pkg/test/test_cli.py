import io
import tempfile
from pathlib import Path
from unittest import TestCase, mock

import yaml
from parameterized import parameterized

from bawutils import __version__
from bawutils.bvd import bvd_params_from_targets
from bawutils.cli import EXIT_NUMERIC, EXIT_OK, EXIT_RULE_FAILURE, EXIT_USAGE, build_parser, main
from bawutils.dispersion import CharacteristicLengths
from bawutils.test_helpers import SpectrumSimulator, write_impedance_csv, write_s1p

LENGTHS = CharacteristicLengths(
    lambda_s1_open=1.26e-3, lambda_crossing_short=790e-6, decay_a1_open=172e-6, eval_freq=10.14e6
)


def read_key_values(path):
    values = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, value = line.split(" = ", 1)
        values[key] = value
    return values


class CliTestBase(TestCase):
    def setUp(self):
        """common test setup"""
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        self.directory = Path(directory.name)
        self.out = self.directory / "out"
        stdout = mock.patch("sys.stdout", new_callable=io.StringIO)
        self.stdout = stdout.start()
        self.addCleanup(stdout.stop)

    def run_cli(self, *args):
        return main([*args, "--out", str(self.out), "--quiet"])

    def write_config(self, document):
        path = self.directory / "run.yaml"
        path.write_text(yaml.safe_dump(document), encoding="utf-8")
        return str(path)


class ParserTest(TestCase):
    def test_command_required(self):
        """GIVEN no sub-command WHEN the arguments are parsed THEN argparse exits with status 2"""
        with mock.patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit) as context:
                build_parser().parse_args([])
        self.assertEqual(context.exception.code, 2)

    @parameterized.expand([("bvd_fit", "bvd-fit"), ("bode_q", "bode-q")])
    def test_measurement_commands_take_a_file(self, _name, command):
        """GIVEN a measurement command WHEN the arguments are parsed THEN the file is a positional argument"""
        args = build_parser().parse_args([command, "device.s1p", "--window", "20"])
        self.assertEqual(args.measurement, Path("device.s1p"))
        self.assertEqual(args.window, 20)

    def test_flags_default_to_unset(self):
        """GIVEN no flags WHEN the arguments are parsed THEN strict and plots are None so the config file decides"""
        args = build_parser().parse_args(["design"])
        self.assertIsNone(args.strict)
        self.assertIsNone(args.plots)


class CouplingSweepCommandTest(CliTestBase):
    def test_writes_one_row_per_angle(self):
        """
        GIVEN the default angle grid
        WHEN coupling-sweep runs
        THEN the CSV has a header and 181 rows, and the effective config is written next to it
        """
        self.assertEqual(self.run_cli("coupling-sweep"), EXIT_OK)
        lines = (self.out / "coupling_sweep.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(len(lines), 182)
        self.assertEqual(lines[0], "theta_deg,k2_33,k2_34,k2_35")
        effective = yaml.safe_load((self.out / "effective_config.yaml").read_text(encoding="utf-8"))
        self.assertEqual(effective["output"]["directory"], str(self.out))

    def test_reruns_are_byte_identical(self):
        """GIVEN the same inputs WHEN coupling-sweep runs twice THEN the outputs are byte-identical"""
        self.run_cli("coupling-sweep")
        first = {path.name: path.read_bytes() for path in self.out.iterdir()}
        self.run_cli("coupling-sweep")
        second = {path.name: path.read_bytes() for path in self.out.iterdir()}
        self.assertEqual(first, second)

    def test_plot_reruns_are_byte_identical(self):
        """GIVEN --plots WHEN coupling-sweep runs twice THEN the SVG preview is written and byte-identical"""
        self.assertEqual(self.run_cli("coupling-sweep", "--plots"), EXIT_OK)
        first = (self.out / "coupling_sweep.svg").read_bytes()
        self.assertEqual(self.run_cli("coupling-sweep", "--plots"), EXIT_OK)
        self.assertEqual((self.out / "coupling_sweep.svg").read_bytes(), first)

    def test_unknown_material(self):
        """GIVEN a material missing from the database WHEN coupling-sweep runs THEN it exits with 2"""
        self.assertEqual(self.run_cli("coupling-sweep", "--material", "unobtainium"), EXIT_USAGE)

    def test_invalid_config(self):
        """GIVEN a config with a single-angle grid WHEN coupling-sweep runs THEN it exits with 2"""
        config = self.write_config({"coupling_sweep": {"points": 1}})
        self.assertEqual(self.run_cli("coupling-sweep", "--config", config), EXIT_USAGE)
        self.assertFalse((self.out / "coupling_sweep.csv").exists())

    def test_unknown_config_key(self):
        """GIVEN a config with a misspelt section WHEN any command runs THEN it exits with 2"""
        config = self.write_config({"desing": {"strict": True}})
        self.assertEqual(self.run_cli("coupling-sweep", "--config", config), EXIT_USAGE)


class ImpedanceCommandTest(CliTestBase):
    def test_bvd_model(self):
        """GIVEN the BVD model WHEN impedance runs THEN the summary reports the target resonance and coupling"""
        config = self.write_config({"impedance": {"model": "bvd"}, "grid": {"points": 8001}})
        self.assertEqual(self.run_cli("impedance", "--config", config), EXIT_OK)
        summary = read_key_values(self.out / "impedance_summary.txt")
        self.assertEqual(summary["model"], "bvd")
        self.assertAlmostEqual(float(summary["fs_hz"]) / 10.14e6, 1.0, delta=1e-4)
        self.assertAlmostEqual(float(summary["k2"]), 0.296, delta=2e-3)
        lines = (self.out / "impedance.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "freq_hz,re_z,im_z")
        self.assertEqual(len(lines), 8002)

    def test_thickness_model(self):
        """
        GIVEN the 1D plate model
        WHEN impedance runs
        THEN fs lies within 10%, not 3%, of the measured 10.14 MHz because the tabulated constants resonate 7.8% higher
        """
        self.assertEqual(self.run_cli("impedance"), EXIT_OK)
        summary = read_key_values(self.out / "impedance_summary.txt")
        self.assertAlmostEqual(float(summary["fs_hz"]) / 10.14e6, 1.0, delta=0.1)


class MeasurementCommandTest(CliTestBase):
    def setUp(self):
        """common test setup"""
        super().setUp()
        self.params = bvd_params_from_targets(10.14e6, 0.296, 2000.0, 1e-9)
        self.simulator = SpectrumSimulator(self.params)
        self.freqs = SpectrumSimulator.band_grid(self.params, 8001)

    def test_bvd_fit_of_touchstone_file(self):
        """GIVEN a synthetic .s1p file WHEN bvd-fit runs THEN the fitted coupling and Q match the source"""
        path = write_s1p(self.directory / "device.s1p", self.simulator.reflection(self.freqs))
        self.assertEqual(self.run_cli("bvd-fit", str(path)), EXIT_OK)
        report = read_key_values(self.out / "bvd_fit.txt")
        self.assertAlmostEqual(float(report["k2"]) / 0.296, 1.0, delta=0.01)
        self.assertAlmostEqual(float(report["q"]) / 2000.0, 1.0, delta=0.01)
        self.assertEqual(report["deviation_peak_count"], "0")
        self.assertTrue((self.out / "bvd_model.csv").exists())

    def test_bode_q_of_impedance_csv(self):
        """GIVEN a synthetic impedance CSV WHEN bode-q runs THEN Q at fs is within 5% of the source Q"""
        path = write_impedance_csv(self.directory / "device.csv", self.simulator.impedance(self.freqs))
        self.assertEqual(self.run_cli("bode-q", str(path), "--window", "20"), EXIT_OK)
        summary = read_key_values(self.out / "bode_q_summary.txt")
        self.assertEqual(summary["window"], "20")
        self.assertAlmostEqual(float(summary["q_s"]) / 2000.0, 1.0, delta=0.05)
        lines = (self.out / "bode_q.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "freq_hz,q_bode")
        self.assertEqual(len(lines), 8002)

    def test_malformed_measurement(self):
        """GIVEN a measurement file with a bad data line WHEN bvd-fit runs THEN it exits with 2"""
        path = self.directory / "bad.s1p"
        path.write_text("# MHZ S RI R 50\n10 0.1\n", encoding="utf-8")
        self.assertEqual(self.run_cli("bvd-fit", str(path)), EXIT_USAGE)

    @parameterized.expand(
        [
            ("invalid_utf8", "device.s1p", b"# MHZ S RI R 50\n10 0.1 0.2\n\xff\xfe 0.1 0.2\n"),
            ("nan_frequency", "device.s1p", b"# MHZ S RI R 50\n10 0.1 0.2\nnan 0.1 0.2\n"),
            ("nan_csv_frequency", "device.csv", b"freq_hz,re_z,im_z\n1e6,50,0\nnan,50,0\n"),
        ]
    )
    def test_unreadable_measurement(self, _name, filename, content):
        """GIVEN a measurement file that is not UTF-8 or holds a NaN frequency WHEN bvd-fit runs THEN it exits with 2"""
        path = self.directory / filename
        path.write_bytes(content)
        self.assertEqual(self.run_cli("bvd-fit", str(path)), EXIT_USAGE)

    def test_missing_measurement(self):
        """GIVEN a measurement path that does not exist WHEN bode-q runs THEN it exits with 2"""
        self.assertEqual(self.run_cli("bode-q", str(self.directory / "missing.s1p")), EXIT_USAGE)


class DispersionCommandTest(CliTestBase):
    def test_type_one_plate(self):
        """
        GIVEN an isotropic plate, which has no backward S1 branch
        WHEN dispersion runs
        THEN the branches and a partial summary are written and it exits with 3
        """
        config = self.write_config({"dispersion": {"n_elements": 8, "kx_points": 11}})
        exit_code = self.run_cli("dispersion", "--config", config, "--material", "isotropic_test")
        self.assertEqual(exit_code, EXIT_NUMERIC)
        lines = (self.out / "dispersion.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "bc,family,freq_hz,re_kx,im_kx,vg,weight")
        self.assertGreater(len(lines), 1)
        summary = read_key_values(self.out / "characteristic_lengths.txt")
        self.assertEqual(summary["dispersion_type"], "1")
        self.assertEqual(summary["missing"], "lambda_s1_open lambda_crossing_short decay_a1_open")


@mock.patch("bawutils.cli.characteristic_lengths", return_value=LENGTHS)
class DesignCommandTest(CliTestBase):
    def test_design_passes(self, _lengths):
        """GIVEN the default margins WHEN design runs THEN every output is written and the table is printed"""
        self.assertEqual(self.run_cli("design", "--strict"), EXIT_OK)
        for name in ("geometry.txt", "rule_report.txt", "rule_report.csv", "rule_sweep.csv"):
            self.assertTrue((self.out / name).exists(), name)
        self.assertIn("overall: pass", self.stdout.getvalue())
        geometry = read_key_values(self.out / "geometry.txt")
        self.assertAlmostEqual(float(geometry["gap_width_m"]), 172e-6 * 0.6)

    def test_strict_failure(self, _lengths):
        """GIVEN a zero gap margin WHEN design runs with --strict THEN the gap rule fails and it exits with 1"""
        config = self.write_config({"design": {"gap_margin": 0.0}})
        self.assertEqual(self.run_cli("design", "--config", config, "--strict"), EXIT_RULE_FAILURE)
        self.assertIn("overall: FAIL", self.stdout.getvalue())

    def test_failure_without_strict(self, _lengths):
        """GIVEN a zero gap margin WHEN design runs without --strict THEN the failure is reported but it exits with 0"""
        config = self.write_config({"design": {"gap_margin": 0.0}})
        self.assertEqual(self.run_cli("design", "--config", config), EXIT_OK)
        self.assertIn("FAIL", (self.out / "rule_report.txt").read_text(encoding="utf-8"))

    def test_design_exceeds_die(self, _lengths):
        """GIVEN a target low enough that the electrode outgrows the die WHEN design runs THEN it exits with 3"""
        config = self.write_config({"design": {"target_fs": 4e6}})
        self.assertEqual(self.run_cli("design", "--config", config), EXIT_NUMERIC)


class VersionCommandTest(CliTestBase):
    def test_version(self):
        """GIVEN the version command WHEN it runs THEN the package version is printed and no output is written"""
        self.assertEqual(self.run_cli("version"), EXIT_OK)
        self.assertEqual(self.stdout.getvalue().strip(), __version__)
        self.assertFalse(self.out.exists())
