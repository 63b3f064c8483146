"""
Grounded-ring geometry rules. The gap between the active electrode and the grounded ring has to stay below the
open-circuit A1 decay length, and the ring has to be wider than the wavelength at which the short-circuit S1 and A1
branches cross. All lateral dimensions scale with the plate thickness.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from bawutils.dispersion import CharacteristicLengths, characteristic_lengths
from bawutils.errors import ArgumentException, ConstraintException
from bawutils.material_tensors import MaterialSet
from bawutils.thickness_mode import PlateSpec, thickness_resonances

_LOGGER = logging.getLogger(__name__)

MIN_GAP = 20e-6
DEFAULT_DIE_SIDE = 18e-3
# 14 mm active diameter on a 300 µm plate
ACTIVE_DIAMETER_RATIO = 14e-3 / 300e-6
MIN_TARGET_FS = 1e6
MAX_TARGET_FS = 100e6
REFERENCE_THICKNESS = 300e-6
GEOMETRY_FIELDS = ("thickness", "active_radius", "gap_width", "ring_width", "die_side")
RULE_CSV_HEADER = ["rule", "measured_m", "threshold_m", "margin", "passed", "advisory"]
SWEEP_CSV_HEADER = ["sweep", "gap_m", "ring_m", "gap_rule_margin", "ring_rule_margin", "passed"]

LengthsSolver = Callable[..., CharacteristicLengths]


@dataclass(frozen=True)
class RingGeometry:
    thickness: float
    active_radius: float
    gap_width: float
    ring_width: float
    die_side: float = DEFAULT_DIE_SIDE

    def __post_init__(self) -> None:
        for name in GEOMETRY_FIELDS[:-1]:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ArgumentException(f"{name} must be positive and finite, got {value}")
        # an infinite die disables the fit check
        if not self.die_side > 0:
            raise ArgumentException(f"die_side must be positive, got {self.die_side}")
        if self.outer_radius > self.die_side / 2.0:
            raise ConstraintException(
                f"ring outer radius {self.outer_radius:.6g} m does not fit on a {self.die_side:.6g} m die"
            )
        if self.gap_width > 0.1 * self.active_radius:
            _LOGGER.warning(
                f"gap {self.gap_width:.6g} m is not small against the active radius {self.active_radius:.6g} m"
            )

    @property
    def outer_radius(self) -> float:
        return self.active_radius + self.gap_width + self.ring_width

    def scaled(self, factor: float) -> "RingGeometry":
        """Thickness and lateral dimensions times ``factor``; the die stays the same"""
        return RingGeometry(
            thickness=self.thickness * factor,
            active_radius=self.active_radius * factor,
            gap_width=self.gap_width * factor,
            ring_width=self.ring_width * factor,
            die_side=self.die_side,
        )

    def to_dict(self) -> Dict[str, float]:
        return {f"{name}_m": getattr(self, name) for name in GEOMETRY_FIELDS}


@dataclass(frozen=True)
class DesignMargins:
    """Fractional safety margins: gap = decay (1 - gap), ring = wavelength (1 + ring)"""

    gap: float = 0.4
    ring: float = 0.5

    def __post_init__(self) -> None:
        for name in ("gap", "ring"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ArgumentException(f"{name} margin must lie in [0, 1), got {value}")


@dataclass(frozen=True)
class RuleResult:
    name: str
    measured: float
    threshold: float
    margin: float
    passed: bool
    advisory: bool = False


@dataclass(frozen=True)
class RuleReport:
    rules: Tuple[RuleResult, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        """Verdict over the mandatory rules; advisory rules are reported but never fail a design"""
        return all(rule.passed for rule in self.rules if not rule.advisory)

    def rule(self, name: str) -> RuleResult:
        for rule in self.rules:
            if rule.name == name:
                return rule
        raise KeyError(f"Didn't find a rule named {name!r}")

    def to_rows(self) -> List[list]:
        return [
            [rule.name, rule.measured, rule.threshold, rule.margin, rule.passed, rule.advisory] for rule in self.rules
        ]

    def to_table(self) -> str:
        header = ["rule", "measured [m]", "threshold [m]", "margin", "verdict"]
        rows = [
            [
                rule.name,
                f"{rule.measured:.4e}",
                f"{rule.threshold:.4e}",
                f"{rule.margin:+.3f}",
                ("pass" if rule.passed else "FAIL") + (" (advisory)" if rule.advisory else ""),
            ]
            for rule in self.rules
        ]
        widths = [max(len(row[col]) for row in [header] + rows) for col in range(len(header))]
        lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in [header] + rows]
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def check_geometry(geometry: RingGeometry, lengths: CharacteristicLengths) -> RuleReport:
    gap, ring = geometry.gap_width, geometry.ring_width
    decay, wavelength = lengths.decay_a1_open, lengths.lambda_crossing_short
    return RuleReport(
        rules=(
            RuleResult("gap_below_a1_decay", gap, decay, 1.0 - gap / decay, gap < decay),
            RuleResult("ring_above_crossing_wavelength", ring, wavelength, ring / wavelength - 1.0, ring >= wavelength),
            RuleResult("gap_manufacturable", gap, MIN_GAP, gap / MIN_GAP - 1.0, gap >= MIN_GAP, advisory=True),
        )
    )


def scale_design(reference: RingGeometry, new_thickness: float) -> RingGeometry:
    if not new_thickness > 0:
        raise ArgumentException(f"new thickness must be positive, got {new_thickness}")
    return reference.scaled(new_thickness / reference.thickness)


def thickness_for_fs(material: MaterialSet, target_fs: float) -> float:
    """Invert the 1D series resonance, which scales exactly as 1/t"""
    reference = PlateSpec(thickness=REFERENCE_THICKNESS, material=material, active_area=1.0)
    fs_reference, _ = thickness_resonances(reference)
    return REFERENCE_THICKNESS * fs_reference / target_fs


@dataclass(frozen=True)
class SynthesisResult:
    geometry: RingGeometry
    report: RuleReport
    lengths: CharacteristicLengths


def synthesize(
    target_fs: float,
    material: MaterialSet,
    margins: Optional[DesignMargins] = None,
    die_side: float = DEFAULT_DIE_SIDE,
    lengths_solver: LengthsSolver = characteristic_lengths,
) -> SynthesisResult:
    """
    Grounded-ring design for ``target_fs`` on the given cut: thickness from the 1D model, gap and ring from the
    characteristic lengths at the plate's own series resonance, active diameter in proportion to the thickness
    """
    if not MIN_TARGET_FS <= target_fs <= MAX_TARGET_FS:
        raise ArgumentException(
            f"target fs must lie in [{MIN_TARGET_FS:.3g}, {MAX_TARGET_FS:.3g}] Hz, got {target_fs:.6g}"
        )
    margins = margins or DesignMargins()
    thickness = thickness_for_fs(material, target_fs)
    lengths = lengths_solver(material, thickness, f_eval=target_fs)
    geometry = RingGeometry(
        thickness=thickness,
        active_radius=ACTIVE_DIAMETER_RATIO * thickness / 2.0,
        gap_width=lengths.decay_a1_open * (1.0 - margins.gap),
        ring_width=lengths.lambda_crossing_short * (1.0 + margins.ring),
        die_side=die_side,
    )
    report = check_geometry(geometry, lengths)
    _LOGGER.info(
        f"Synthesized {target_fs:.6g} Hz design: t={thickness:.4g} m, gap={geometry.gap_width:.4g} m, "
        f"ring={geometry.ring_width:.4g} m, {'pass' if report.passed else 'FAIL'}"
    )
    return SynthesisResult(geometry=geometry, report=report, lengths=lengths)


def default_sweeps(thickness: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gap sweep 20-240 µm and ring sweep 0.4-2.4 mm for a 300 µm plate, scaled to ``thickness``"""
    scale = thickness / REFERENCE_THICKNESS
    return np.linspace(20e-6, 240e-6, 12) * scale, np.linspace(0.4e-3, 2.4e-3, 11) * scale


def sweep_rules(
    lengths: CharacteristicLengths,
    reference: RingGeometry,
    gaps: Optional[Sequence[float]] = None,
    rings: Optional[Sequence[float]] = None,
) -> List[list]:
    """Gap sweep at the reference ring width, then ring sweep at the reference gap, one CSV row per design"""
    default_gaps, default_rings = default_sweeps(reference.thickness)
    gaps = default_gaps if gaps is None else gaps
    rings = default_rings if rings is None else rings
    designs = [("gap", float(gap), reference.ring_width) for gap in gaps]
    designs += [("ring", reference.gap_width, float(ring)) for ring in rings]
    rows = []
    for sweep, gap, ring in designs:
        report = check_geometry(
            RingGeometry(reference.thickness, reference.active_radius, gap, ring, math.inf), lengths
        )
        rows.append(
            [
                sweep,
                gap,
                ring,
                report.rule("gap_below_a1_decay").margin,
                report.rule("ring_above_crossing_wavelength").margin,
                report.passed,
            ]
        )
    return rows
