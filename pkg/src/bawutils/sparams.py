"""
One-port reflection data: impedance/S11 conversion, Bode Q with sliding-window smoothing and the in-band Q summary
(Q at fs, maximum Q, figure of merit).
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Dict

import numpy as np
from scipy.ndimage import generic_filter, uniform_filter1d

from bawutils.errors import ArgumentException, PoleException, SummaryException
from bawutils.thickness_mode import ImpedanceSpectrum

_LOGGER = logging.getLogger(__name__)

DEFAULT_Z0 = 50.0
DEFAULT_WINDOW = 80
PASSIVITY_TOLERANCE = 1e-6
INVALID_DENOMINATOR = 1e-9
KERNELS = ("mean", "median")


@dataclass(frozen=True, eq=False)
class ReflectionSpectrum:
    """S11 on a strictly increasing grid. Samples with |S11| above 1 are flagged as non-passive but kept."""

    freqs: np.ndarray
    s11: np.ndarray
    z0: float = DEFAULT_Z0

    def __post_init__(self) -> None:
        freqs = np.array(self.freqs, dtype=float)
        s11 = np.array(self.s11, dtype=complex)
        if freqs.ndim != 1 or freqs.size == 0:
            raise ArgumentException("frequency grid must be a non-empty 1D sequence")
        if s11.shape != freqs.shape:
            raise ArgumentException(f"S11 has {s11.size} samples but the grid has {freqs.size}")
        if not (np.all(np.isfinite(freqs)) and np.all(np.isfinite(s11))):
            raise ArgumentException("frequencies and S11 must be finite")
        if np.any(np.diff(freqs) <= 0):
            raise ArgumentException("frequencies must be strictly increasing")
        if not self.z0 > 0:
            raise ArgumentException(f"reference impedance must be positive, got {self.z0}")
        freqs.setflags(write=False)
        s11.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "s11", s11)
        object.__setattr__(self, "z0", float(self.z0))
        excess = int(np.count_nonzero(~self.passive))
        if excess:
            _LOGGER.warning(f"{excess} S11 samples exceed unit magnitude by more than {PASSIVITY_TOLERANCE:g}")

    def __len__(self) -> int:
        return int(self.freqs.size)

    @property
    def passive(self) -> np.ndarray:
        return np.abs(self.s11) <= 1.0 + PASSIVITY_TOLERANCE


@dataclass(frozen=True, eq=False)
class QSpectrum:
    """Bode Q per grid sample; NaN marks samples where the estimator is undefined"""

    freqs: np.ndarray
    q: np.ndarray
    window: int
    kernel: str = "mean"

    @property
    def valid(self) -> np.ndarray:
        return np.isfinite(self.q)


@dataclass(frozen=True)
class BandSummary:
    q_s: float
    q_max: float
    f_qmax: float
    fom_max: float
    fom_s: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "q_s": self.q_s,
            "q_max": self.q_max,
            "f_qmax_hz": self.f_qmax,
            "fom_max": self.fom_max,
            "fom_s": self.fom_s,
        }


@dataclass(frozen=True)
class ReferenceDevice:
    fs: float
    k2: float
    q_s: float
    q_max: float
    fom_max: float


# Measured one-port devices on 300 µm 36Y lithium niobate: frequencies in Hz, Q values from Bode Q
REFERENCE_DEVICES: Dict[str, ReferenceDevice] = {
    "rectangular": ReferenceDevice(fs=10.23e6, k2=0.318, q_s=2471.0, q_max=7924.0, fom_max=2520.0),
    "circular": ReferenceDevice(fs=10.26e6, k2=0.316, q_s=4975.0, q_max=4975.0, fom_max=1572.0),
    "grounded_ring": ReferenceDevice(fs=10.14e6, k2=0.296, q_s=2643.0, q_max=5230.0, fom_max=1548.0),
}


def fom(q: float, k2: float) -> float:
    return q * k2


def z_to_s11(spectrum: ImpedanceSpectrum, z0: float = DEFAULT_Z0) -> ReflectionSpectrum:
    """S11 = (Z - z0) / (Z + z0)"""
    if not z0 > 0:
        raise ArgumentException(f"reference impedance must be positive, got {z0}")
    denominator = spectrum.z + z0
    if np.any(denominator == 0):
        raise PoleException(f"impedance equals -z0 = {-z0} ohm, S11 has a pole there")
    return ReflectionSpectrum(spectrum.freqs, (spectrum.z - z0) / denominator, z0)


def s11_to_z(reflection: ReflectionSpectrum) -> ImpedanceSpectrum:
    """Z = z0 (1 + S11) / (1 - S11)"""
    denominator = 1.0 - reflection.s11
    if np.any(denominator == 0):
        raise PoleException("S11 equals 1 (open circuit), the impedance is unbounded there")
    return ImpedanceSpectrum(reflection.freqs, reflection.z0 * (1.0 + reflection.s11) / denominator)


def _smooth_mean(values: np.ndarray, valid: np.ndarray, window: int) -> np.ndarray:
    weights = uniform_filter1d(valid.astype(float), window, mode="constant", cval=0.0)
    totals = uniform_filter1d(np.where(valid, values, 0.0), window, mode="constant", cval=0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        smoothed = totals / weights
    smoothed[weights < 0.5 / window] = np.nan
    return smoothed


def _smooth_median(values: np.ndarray, window: int) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return generic_filter(values, np.nanmedian, size=window, mode="constant", cval=np.nan)


def bode_q(reflection: ReflectionSpectrum, window: int = DEFAULT_WINDOW, kernel: str = "mean") -> QSpectrum:
    """
    Q_Bode = w |dS11/dw| / (1 - |S11|²), with the derivative taken by central differences on the complex S11
    (one-sided at the grid ends), then smoothed over ``window`` samples.
    Samples with 1 - |S11|² below 1e-9 are NaN and excluded from the smoothing.
    """
    if len(reflection) < 3:
        raise ArgumentException(f"Bode Q needs at least 3 samples, got {len(reflection)}")
    if window < 1:
        raise ArgumentException(f"smoothing window must be at least 1 sample, got {window}")
    if kernel not in KERNELS:
        raise ArgumentException(f"unknown smoothing kernel {kernel!r}, expected one of {', '.join(KERNELS)}")

    omega = 2.0 * np.pi * reflection.freqs
    derivative = np.gradient(reflection.s11, omega)
    denominator = 1.0 - np.abs(reflection.s11) ** 2
    valid = denominator >= INVALID_DENOMINATOR
    raw = np.full(omega.size, np.nan)
    raw[valid] = omega[valid] * np.abs(derivative[valid]) / denominator[valid]
    masked = int(np.count_nonzero(~valid))
    if masked:
        _LOGGER.warning(f"{masked} samples have 1 - |S11|^2 < {INVALID_DENOMINATOR:g} and are masked from Bode Q")

    if window == 1:
        smoothed = raw
    elif kernel == "mean":
        smoothed = _smooth_mean(raw, valid, window)
    else:
        smoothed = _smooth_median(raw, window)
    return QSpectrum(freqs=reflection.freqs, q=smoothed, window=window, kernel=kernel)


def band_summary(q_spectrum: QSpectrum, k2: float, fs: float, fp: float) -> BandSummary:
    """Q at fs, maximum valid Q inside (fs, fp), where it occurs, and both figures of merit"""
    freqs = q_spectrum.freqs
    if not fs < fp:
        raise ArgumentException(f"expected fs < fp, got fs={fs}, fp={fp}")
    if fs < freqs[0] or fp > freqs[-1]:
        raise ArgumentException(f"band [{fs:.6g}, {fp:.6g}] Hz is not inside the Q grid")
    valid = q_spectrum.valid
    in_band = valid & (freqs > fs) & (freqs < fp)
    if not np.any(in_band):
        raise SummaryException(f"no valid Bode Q samples between {fs:.6g} Hz and {fp:.6g} Hz")
    band_q = q_spectrum.q[in_band]
    peak = int(np.argmax(band_q))
    q_max = float(band_q[peak])
    q_s = float(np.interp(fs, freqs[valid], q_spectrum.q[valid]))
    return BandSummary(
        q_s=q_s,
        q_max=q_max,
        f_qmax=float(freqs[in_band][peak]),
        fom_max=fom(q_max, k2),
        fom_s=fom(q_s, k2),
    )
