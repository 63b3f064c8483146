"""
Analytic 1D thickness-extensional model of a fully electroded piezoelectric plate.

Time convention is e^{+jwt}: a capacitor has impedance 1/(jwC) and mechanical loss enters as the complex stiffness
c(1 + j/Q). The plate normal is axis 3 of the material frame, so the material passed in must already be rotated
to the cut.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.optimize import brentq

from bawutils.errors import ArgumentException, MultiModeException
from bawutils.material_tensors import MaterialSet

_LOGGER = logging.getLogger(__name__)

DEFAULT_Q_MECH = 2000.0


def stiffened_c33(material: MaterialSet) -> float:
    """Piezoelectrically stiffened thickness stiffness c33 + e33² / eps33 (Pa)"""
    return float(
        material.stiffness_ce[2, 2] + material.piezo_e[2, 2] ** 2 / material.permittivity_s[2, 2]
    )


def stiffened_velocity(material: MaterialSet) -> float:
    return math.sqrt(stiffened_c33(material) / material.density)


def coupling_kt2(material: MaterialSet) -> float:
    """Thickness coupling k_t² = e33² / (eps33 c̄33)"""
    return float(material.piezo_e[2, 2] ** 2 / (material.permittivity_s[2, 2] * stiffened_c33(material)))


@dataclass(frozen=True)
class PlateSpec:
    thickness: float
    material: MaterialSet
    active_area: float
    q_mech: float = DEFAULT_Q_MECH

    def __post_init__(self) -> None:
        if not self.thickness > 0:
            raise ArgumentException(f"plate thickness must be positive, got {self.thickness}")
        if not self.active_area > 0:
            raise ArgumentException(f"active area must be positive, got {self.active_area}")
        if not self.q_mech > 0:
            raise ArgumentException(f"mechanical Q must be positive, got {self.q_mech}")

    @classmethod
    def from_radius(
        cls, thickness: float, material: MaterialSet, active_radius: float, q_mech: float = DEFAULT_Q_MECH
    ) -> "PlateSpec":
        return cls(thickness=thickness, material=material, active_area=math.pi * active_radius**2, q_mech=q_mech)

    @property
    def static_capacitance(self) -> float:
        return float(self.material.permittivity_s[2, 2] * self.active_area / self.thickness)

    def with_thickness(self, thickness: float) -> "PlateSpec":
        return PlateSpec(thickness=thickness, material=self.material, active_area=self.active_area, q_mech=self.q_mech)


@dataclass(frozen=True, eq=False)
class ImpedanceSpectrum:
    """Complex impedance samples on a strictly increasing, positive frequency grid"""

    freqs: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        freqs = np.array(self.freqs, dtype=float)
        z = np.array(self.z, dtype=complex)
        _check_grid(freqs)
        if z.shape != freqs.shape:
            raise ArgumentException(f"impedance has {z.size} samples but the grid has {freqs.size}")
        freqs.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "z", z)

    def __len__(self) -> int:
        return int(self.freqs.size)

    @property
    def omega(self) -> np.ndarray:
        return 2.0 * np.pi * self.freqs

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.z)

    @property
    def resistance(self) -> np.ndarray:
        return self.z.real

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(np.angle(self.z))

    def band(self, fmin: float, fmax: float) -> "ImpedanceSpectrum":
        mask = (self.freqs >= fmin) & (self.freqs <= fmax)
        return ImpedanceSpectrum(self.freqs[mask], self.z[mask])


def _check_grid(freqs: np.ndarray) -> None:
    if freqs.ndim != 1 or freqs.size == 0:
        raise ArgumentException("frequency grid must be a non-empty 1D sequence")
    if np.any(freqs <= 0) or not np.all(np.isfinite(freqs)):
        raise ArgumentException("frequencies must be finite and positive")
    if np.any(np.diff(freqs) <= 0):
        raise ArgumentException("frequencies must be strictly increasing")


def frequency_grid(start: float, stop: float, points: int, spacing: str = "linear") -> np.ndarray:
    if points < 2:
        raise ArgumentException(f"a frequency grid needs at least 2 points, got {points}")
    if not 0 < start < stop:
        raise ArgumentException(f"frequency grid needs 0 < start < stop, got start={start}, stop={stop}")
    if spacing == "linear":
        return np.linspace(start, stop, points)
    if spacing == "log":
        return np.geomspace(start, stop, points)
    raise ArgumentException(f"unknown grid spacing {spacing!r}, expected 'linear' or 'log'")


def te_impedance(plate: PlateSpec, freqs: Union[np.ndarray, list]) -> ImpedanceSpectrum:
    """Z = (1 / jwC0) (1 - k_t² tan(x) / x) with x = w t / (2 v̄) and lossy stiffness c̄33 (1 + j/Q)"""
    grid = np.asarray(freqs, dtype=float)
    _check_grid(grid)
    material = plate.material
    omega = 2.0 * np.pi * grid
    c_bar = stiffened_c33(material) * (1.0 + 1j / plate.q_mech)
    kt2 = material.piezo_e[2, 2] ** 2 / (material.permittivity_s[2, 2] * c_bar)
    velocity = np.sqrt(c_bar / material.density)
    x = omega * plate.thickness / (2.0 * velocity)
    z = (1.0 - kt2 * np.tan(x) / x) / (1j * omega * plate.static_capacitance)
    return ImpedanceSpectrum(grid, z)


def thickness_resonances(plate: PlateSpec) -> Tuple[float, float]:
    """Closed-form lossless (fs, fp): fs from x cot(x) = k_t², fp at x = pi/2"""
    kt2 = coupling_kt2(plate.material)
    if not 0.0 <= kt2 < 1.0:
        raise ArgumentException(f"thickness coupling must lie in [0, 1), got {kt2}")
    velocity = stiffened_velocity(plate.material)
    fp = velocity / (2.0 * plate.thickness)
    if kt2 == 0.0:
        return fp, fp
    x_s = brentq(lambda x: x * math.cos(x) - kt2 * math.sin(x), 1e-12, math.pi / 2.0, xtol=1e-15)
    fs = x_s * velocity / (math.pi * plate.thickness)
    return fs, fp


def _log_magnitude(spectrum: ImpedanceSpectrum) -> np.ndarray:
    return np.log(np.maximum(spectrum.magnitude, np.finfo(float).tiny))


def _parabolic_vertex(freqs: np.ndarray, values: np.ndarray, index: int) -> float:
    if index == 0 or index == freqs.size - 1:
        return float(freqs[index])
    window = slice(index - 1, index + 2)
    centre = freqs[index]
    scale = freqs[index + 1] - freqs[index - 1]
    offsets = (freqs[window] - centre) / scale
    curvature, slope, _ = np.polyfit(offsets, values[window], 2)
    if curvature == 0:
        return float(centre)
    vertex = -slope / (2.0 * curvature)
    vertex = min(max(vertex, offsets[0]), offsets[-1])
    return float(centre + vertex * scale)


def resonance_pair(spectrum: ImpedanceSpectrum, allow_multimode: bool = False) -> Tuple[float, float]:
    """
    Series and parallel resonance of a single-mode spectrum, each refined by a parabola through the three samples
    around the |Z| extremum on log|Z|.

    :param allow_multimode: instead of raising MultiModeException on several resonances, return the global |Z|
        minimum and the global maximum above it
    """
    log_mag = _log_magnitude(spectrum)
    if log_mag.size < 3:
        raise MultiModeException("at least 3 samples are needed to locate a resonance", 0)
    slope = np.diff(log_mag)
    minima = np.flatnonzero((slope[:-1] < 0) & (slope[1:] > 0)) + 1
    maxima = np.flatnonzero((slope[:-1] > 0) & (slope[1:] < 0)) + 1

    single = minima.size == 1 and maxima.size == 1 and minima[0] < maxima[0]
    if single:
        i_min, i_max = int(minima[0]), int(maxima[0])
    elif allow_multimode and minima.size > 0:
        i_min = int(np.argmin(log_mag))
        above = log_mag[i_min + 1 :]
        if above.size < 2:
            raise MultiModeException("no |Z| maximum above the global minimum", int(minima.size))
        i_max = i_min + 1 + int(np.argmax(above))
        if i_max == log_mag.size - 1:
            raise MultiModeException("the |Z| maximum above the global minimum lies on the grid edge", int(minima.size))
    else:
        raise MultiModeException(
            f"expected exactly one |Z| minimum followed by one maximum, found {minima.size} minima "
            f"and {maxima.size} maxima",
            int(minima.size),
        )

    fs = _parabolic_vertex(spectrum.freqs, log_mag, i_min)
    fp = _parabolic_vertex(spectrum.freqs, log_mag, i_max)
    _LOGGER.debug(f"Resonance pair fs={fs:.6g} Hz, fp={fp:.6g} Hz")
    return fs, fp


def impedance_band(plate: PlateSpec, points: int, margin: float = 0.15) -> np.ndarray:
    """Linear grid around the fundamental thickness resonance, from (1 - margin) fs to (1 + margin) fp"""
    fs, fp = thickness_resonances(plate)
    return frequency_grid(fs * (1.0 - margin), fp * (1.0 + margin), points)
