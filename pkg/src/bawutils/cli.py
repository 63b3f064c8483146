"""
Batch command-line front end. Every sub-command reads an optional YAML config, writes its results into the output
directory together with ``effective_config.yaml`` and exits with 0 (success), 1 (design rules failed under
``--strict``), 2 (usage, config, input or material errors) or 3 (numeric failures).
"""
import argparse
import functools
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from bawutils import __version__
from bawutils.bvd import (
    bvd_fit,
    bvd_impedance,
    bvd_params_from_targets,
    fp_from_fs_k2,
    k2_from_fs_fp,
    spurious_deviation,
)
from bawutils.config import RunConfig
from bawutils.design_rules import RULE_CSV_HEADER, SWEEP_CSV_HEADER, sweep_rules, synthesize
from bawutils.dispersion import characteristic_lengths, dispersion_type, short_cutoff, trace_branches, zgv_point
from bawutils.errors import (
    ArgumentException,
    ConfigException,
    ConstraintException,
    MaterialNotFoundException,
    NotFoundException,
    NumericException,
    PartialResultException,
    TouchstoneParseException,
)
from bawutils.material_tensors import coupling_sweep
from bawutils.output import write_atomic, write_csv, write_key_values, write_yaml
from bawutils.persistent_config import read_config_file
from bawutils.plots import plot_curves, plot_points
from bawutils.sparams import band_summary, bode_q, s11_to_z
from bawutils.thickness_mode import ImpedanceSpectrum, frequency_grid, resonance_pair, te_impedance
from bawutils.touchstone import IMPEDANCE_CSV_HEADER, read_spectrum

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RULE_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

DISPERSION_CSV_HEADER = ["bc", "family", "freq_hz", "re_kx", "im_kx", "vg", "weight"]
USAGE_ERRORS = (ConfigException, ArgumentException, TouchstoneParseException, MaterialNotFoundException)
NUMERIC_ERRORS = (NumericException, ConstraintException)


def _impedance_rows(spectrum: ImpedanceSpectrum) -> List[list]:
    return [[float(f), float(z.real), float(z.imag)] for f, z in zip(spectrum.freqs, spectrum.z)]


def cmd_coupling_sweep(config: RunConfig) -> int:
    out = Path(config.output.directory)
    sweep = coupling_sweep(config.material.crystal(), theta_grid=config.coupling_sweep.theta_grid())
    write_csv(out / "coupling_sweep.csv", sweep.header, sweep.rows())
    if config.output.plots:
        plot_curves(out / "coupling_sweep.svg", sweep.theta_deg, sweep.curves, "theta [deg]", "k2")
    _LOGGER.info(f"Coupling sweep over {len(sweep.theta_deg)} angles written to {out}")
    return EXIT_OK


def cmd_impedance(config: RunConfig) -> int:
    out = Path(config.output.directory)
    model = config.impedance
    if model.model == "bvd":
        params = bvd_params_from_targets(model.fs, model.k2, model.q, model.c0)
        if config.grid.automatic:
            freqs = frequency_grid(0.85 * model.fs, 1.15 * fp_from_fs_k2(model.fs, model.k2), config.grid.points)
        else:
            freqs = config.grid.freqs()
        spectrum = bvd_impedance(params, freqs)
        c0 = params.c0
    else:
        plate = config.plate.plate_spec(config.material.cut())
        spectrum = te_impedance(plate, config.grid.freqs(plate))
        c0 = plate.static_capacitance

    fs, fp = resonance_pair(spectrum)
    write_csv(out / "impedance.csv", IMPEDANCE_CSV_HEADER, _impedance_rows(spectrum))
    write_key_values(
        out / "impedance_summary.txt",
        {"model": model.model, "fs_hz": fs, "fp_hz": fp, "k2": k2_from_fs_fp(fs, fp), "c0_f": c0},
    )
    if config.output.plots:
        plot_curves(
            out / "impedance.svg",
            spectrum.freqs,
            {"|Z|": spectrum.magnitude, "Re Z": spectrum.resistance},
            "frequency [Hz]",
            "impedance [ohm]",
            log_y=True,
        )
    return EXIT_OK


def cmd_bvd_fit(measurement: Path, config: RunConfig) -> int:
    out = Path(config.output.directory)
    spectrum = s11_to_z(read_spectrum(measurement, config.sparams.z0))
    fit = bvd_fit(spectrum)
    params = fit.params
    deviation = spurious_deviation(spectrum, params)
    report: Dict[str, Any] = dict(fit.to_dict())
    report.update({"fom": params.fom, "evaluations": fit.evaluations})
    report.update({f"deviation_{key}": value for key, value in deviation.to_dict().items()})
    write_key_values(out / "bvd_fit.txt", report)
    model = bvd_impedance(params, spectrum.freqs)
    write_csv(out / "bvd_model.csv", IMPEDANCE_CSV_HEADER, _impedance_rows(model))
    if config.output.plots:
        plot_curves(
            out / "bvd_fit.svg",
            spectrum.freqs,
            {"measured Re Z": spectrum.resistance, "BVD Re Z": model.resistance},
            "frequency [Hz]",
            "resistance [ohm]",
            log_y=True,
        )
    return EXIT_OK


def cmd_bode_q(measurement: Path, config: RunConfig) -> int:
    out = Path(config.output.directory)
    reflection = read_spectrum(measurement, config.sparams.z0)
    q_spectrum = bode_q(reflection, config.sparams.window, config.sparams.kernel)
    write_csv(out / "bode_q.csv", ["freq_hz", "q_bode"], zip(q_spectrum.freqs.tolist(), q_spectrum.q.tolist()))

    fs, fp = resonance_pair(s11_to_z(reflection), allow_multimode=True)
    k2 = k2_from_fs_fp(fs, fp)
    summary = band_summary(q_spectrum, k2, fs, fp)
    values: Dict[str, Any] = {"fs_hz": fs, "fp_hz": fp, "k2": k2, "window": q_spectrum.window}
    values.update(summary.to_dict())
    write_key_values(out / "bode_q_summary.txt", values)
    if config.output.plots:
        plot_curves(out / "bode_q.svg", q_spectrum.freqs, {"Bode Q": q_spectrum.q}, "frequency [Hz]", "Q")
    return EXIT_OK


def cmd_dispersion(config: RunConfig) -> int:
    out = Path(config.output.directory)
    settings = config.dispersion
    material = config.material.cut()
    thickness = config.plate.thickness
    cutoff = short_cutoff(material, thickness, settings.n_elements)
    max_freq = settings.max_freq or 1.5 * cutoff

    rows: List[list] = []
    open_branches = []
    for bc in ("open", "short"):
        branches = trace_branches(
            material,
            thickness,
            bc,
            (0.0, max_freq),
            (0.0, settings.max_kx_t / thickness),
            kx_points=settings.kx_points,
            n_elements=settings.n_elements,
            azimuth_deg=settings.azimuth_deg,
        )
        if bc == "open":
            open_branches = branches
        for branch in branches:
            rows.extend(row for row in branch.to_rows() if row[2] <= max_freq)
    write_csv(out / "dispersion.csv", DISPERSION_CSV_HEADER, rows)
    if config.output.plots:
        groups: Dict[str, List[List[float]]] = {}
        for row in rows:
            groups.setdefault(f"{row[0]} {row[1]}", []).append([row[3], row[2]])
        plot_points(out / "dispersion.svg", groups, "kx [1/m]", "frequency [Hz]")

    summary: Dict[str, Any] = {"dispersion_type": dispersion_type(material, thickness, settings.n_elements)}
    summary["short_cutoff_hz"] = cutoff
    s1_open = [branch for branch in open_branches if branch.family == "S1"]
    if s1_open:
        try:
            zgv_freq, zgv_kx = zgv_point(s1_open[0])
            summary.update({"zgv_freq_hz": zgv_freq, "zgv_kx_per_m": zgv_kx})
        except NotFoundException as exc:
            _LOGGER.warning(f"No ZGV point on the open-circuit S1 branch: {exc}")
    else:
        _LOGGER.warning("No open-circuit S1 branch was traced")
    try:
        lengths = characteristic_lengths(
            material,
            thickness,
            f_eval=settings.eval_freq or cutoff,
            n_elements=settings.n_elements,
            azimuth_deg=settings.azimuth_deg,
            kx_points=settings.kx_points,
            max_kx_t=settings.max_kx_t,
        )
    except PartialResultException as exc:
        # partial summary, then the numeric exit
        summary.update({f"{name}_m": value for name, value in (exc.partial or {}).items()})
        summary["missing"] = " ".join(exc.missing)
        write_key_values(out / "characteristic_lengths.txt", summary)
        raise
    summary.update(lengths.to_dict())
    write_key_values(out / "characteristic_lengths.txt", summary)
    return EXIT_OK


def cmd_design(config: RunConfig) -> int:
    out = Path(config.output.directory)
    settings = config.dispersion
    solver = functools.partial(
        characteristic_lengths,
        n_elements=settings.n_elements,
        azimuth_deg=settings.azimuth_deg,
        kx_points=settings.kx_points,
        max_kx_t=settings.max_kx_t,
    )
    result = synthesize(
        config.design.target_fs,
        config.material.cut(),
        margins=config.design.margins,
        die_side=config.design.die_side,
        lengths_solver=solver,
    )
    geometry: Dict[str, Any] = dict(result.geometry.to_dict())
    geometry["outer_radius_m"] = result.geometry.outer_radius
    geometry.update(result.lengths.to_dict())
    write_key_values(out / "geometry.txt", geometry)
    table = result.report.to_table()
    write_atomic(out / "rule_report.txt", table)
    write_csv(out / "rule_report.csv", RULE_CSV_HEADER, result.report.to_rows())
    write_csv(out / "rule_sweep.csv", SWEEP_CSV_HEADER, sweep_rules(result.lengths, result.geometry))
    print(table, end="")
    if config.design.strict and not result.report.passed:
        _LOGGER.error("Design rules failed")
        return EXIT_RULE_FAILURE
    return EXIT_OK


def cmd_version(_config: RunConfig) -> int:
    print(__version__)
    return EXIT_OK


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--window", type=int, help="Bode Q smoothing window in samples (default: 80)")
    common.add_argument("--z0", type=float, help="reference impedance in ohm (default: 50)")
    common.add_argument("--material", help="material name in the database")
    common.add_argument("--thickness", type=float, help="plate thickness in m")
    common.add_argument("--strict", action="store_true", default=None, help="exit 1 when a design rule fails")
    common.add_argument("--plots", action="store_true", default=None, help="also write SVG previews")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging, repeatable")
    common.add_argument("--quiet", action="store_true", help="only log errors")
    return common


COMMANDS: Dict[str, Tuple[Callable[..., int], str]] = {
    "coupling-sweep": (cmd_coupling_sweep, "material coupling k2 over the rotated Y-cut family"),
    "impedance": (cmd_impedance, "impedance of the 1D thickness model or a BVD circuit"),
    "bvd-fit": (cmd_bvd_fit, "fit a BVD circuit to a measurement and report the spurious deviation"),
    "bode-q": (cmd_bode_q, "Bode Q of a measurement and its in-band summary"),
    "dispersion": (cmd_dispersion, "open and short circuit plate dispersion and the characteristic lengths"),
    "design": (cmd_design, "grounded-ring geometry for a target series resonance and its rule report"),
    "version": (cmd_version, "print the package version"),
}
MEASUREMENT_COMMANDS = ("bvd-fit", "bode-q")


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="bawutils", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (handler, help_text) in COMMANDS.items():
        subparser = subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in MEASUREMENT_COMMANDS:
            subparser.add_argument("measurement", type=Path, help="Touchstone .s1p or freq_hz,re_z,im_z .csv file")
        subparser.set_defaults(handler=handler)
    return parser


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    else:
        level = {0: logging.WARNING, 1: logging.INFO}.get(verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    document = read_config_file(args.config) if args.config else {}
    return RunConfig.load(document, vars(args))


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        config = load_run_config(args)
        if args.command != "version":
            write_yaml(Path(config.output.directory) / "effective_config.yaml", config.to_dict())
        if hasattr(args, "measurement"):
            return int(args.handler(args.measurement, config))
        return int(args.handler(config))
    except USAGE_ERRORS as exc:
        _LOGGER.error(f"{args.command}: {exc}")
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        _LOGGER.error(f"{args.command}: {exc}")
        return EXIT_NUMERIC
