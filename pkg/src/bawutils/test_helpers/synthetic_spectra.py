import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from bawutils.bvd import BvdParams, MotionalBranch, bvd_impedance, two_branch_impedance
from bawutils.output import write_atomic, write_csv
from bawutils.sparams import DEFAULT_Z0, ReflectionSpectrum, z_to_s11
from bawutils.thickness_mode import ImpedanceSpectrum, frequency_grid
from bawutils.touchstone import FREQUENCY_UNITS, IMPEDANCE_CSV_HEADER


class SpectrumSimulator:
    """Impedance of a BVD resonator, optionally with one spurious motional branch and multiplicative noise"""

    def __init__(
        self,
        params: BvdParams,
        spur: Optional[MotionalBranch] = None,
        noise: float = 0.0,
        seed: int = 0,
    ) -> None:
        self.params = params
        self.spur = spur
        self.noise = noise
        self.seed = seed

    def impedance(self, freqs: np.ndarray) -> ImpedanceSpectrum:
        if self.spur is None:
            spectrum = bvd_impedance(self.params, freqs)
        else:
            spectrum = two_branch_impedance(self.params, self.spur, freqs)
        if not self.noise:
            return spectrum
        rng = np.random.default_rng(self.seed)
        size = spectrum.freqs.size
        factor = (1.0 + self.noise * rng.standard_normal(size)) * np.exp(1j * self.noise * rng.standard_normal(size))
        return ImpedanceSpectrum(spectrum.freqs, spectrum.z * factor)

    def reflection(self, freqs: np.ndarray, z0: float = DEFAULT_Z0) -> ReflectionSpectrum:
        return z_to_s11(self.impedance(freqs), z0)

    @staticmethod
    def band_grid(params: BvdParams, points: int, low: float = 0.9, high: float = 1.1) -> np.ndarray:
        """Linear grid from ``low`` fs to ``high`` fp"""
        return frequency_grid(low * params.fs, high * params.fp, points)


def write_impedance_csv(path: Union[str, Path], spectrum: ImpedanceSpectrum) -> Path:
    rows = [[float(f), float(z.real), float(z.imag)] for f, z in zip(spectrum.freqs, spectrum.z)]
    return write_csv(path, IMPEDANCE_CSV_HEADER, rows)


def write_s1p(
    path: Union[str, Path], reflection: ReflectionSpectrum, data_format: str = "RI", unit: str = "MHZ"
) -> Path:
    """Touchstone v1 one-port file in RI, MA or DB format"""
    multiplier = FREQUENCY_UNITS[unit.upper()]
    lines = ["! synthetic one-port data", f"# {unit.upper()} S {data_format.upper()} R {reflection.z0:g}"]
    for freq, s11 in zip(reflection.freqs, reflection.s11):
        if data_format.upper() == "RI":
            first, second = s11.real, s11.imag
        elif data_format.upper() == "MA":
            first, second = abs(s11), math.degrees(np.angle(s11))
        else:
            first, second = 20.0 * math.log10(abs(s11)), math.degrees(np.angle(s11))
        lines.append(f"{freq / multiplier:.12g} {first:.15g} {second:.15g}")
    return write_atomic(path, "\n".join(lines) + "\n")
