"""
Single-branch Butterworth-Van Dyke (BVD) equivalent circuit: a motional Lm-Cm-Rm branch in parallel with the static
capacitance C0.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import least_squares

from bawutils.errors import ArgumentException, FittingException, MultiModeException
from bawutils.thickness_mode import ImpedanceSpectrum, resonance_pair

_LOGGER = logging.getLogger(__name__)

MAX_COUPLING = 8.0 / math.pi**2
DEFAULT_PEAK_FACTOR = 3.0
FIT_MAX_EVALUATIONS = 200
FIT_PARAMETER_TOLERANCE = 1e-10


def k2_from_fs_fp(fs: float, fp: float) -> float:
    """k² = (pi² / 8) ((fp / fs)² - 1)"""
    if not 0 < fs <= fp:
        raise ArgumentException(f"expected 0 < fs <= fp, got fs={fs}, fp={fp}")
    return math.pi**2 / 8.0 * ((fp / fs) ** 2 - 1.0)


def fp_from_fs_k2(fs: float, k2: float) -> float:
    if not fs > 0 or k2 < 0:
        raise ArgumentException(f"expected fs > 0 and k2 >= 0, got fs={fs}, k2={k2}")
    return fs * math.sqrt(1.0 + 8.0 * k2 / math.pi**2)


@dataclass(frozen=True)
class MotionalBranch:
    cm: float
    lm: float
    rm: float

    def __post_init__(self) -> None:
        for name in ("cm", "lm", "rm"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ArgumentException(f"{name} must be positive and finite, got {value}")

    @classmethod
    def from_targets(cls, fs: float, k2: float, q: float, c0: float) -> "MotionalBranch":
        """Motional branch that, in parallel with c0, resonates at fs with coupling k2 and quality factor q"""
        if not (fs > 0 and q > 0 and c0 > 0):
            raise ArgumentException(f"fs, q and c0 must be positive, got fs={fs}, q={q}, c0={c0}")
        if not 0 < k2 < MAX_COUPLING:
            raise ArgumentException(f"k2 must lie in (0, 8/pi^2), got {k2}")
        ratio = fp_from_fs_k2(fs, k2) / fs
        cm = c0 * (ratio**2 - 1.0)
        lm = 1.0 / ((2.0 * math.pi * fs) ** 2 * cm)
        rm = 2.0 * math.pi * fs * lm / q
        return cls(cm=cm, lm=lm, rm=rm)

    @property
    def fs(self) -> float:
        return 1.0 / (2.0 * math.pi * math.sqrt(self.lm * self.cm))

    @property
    def q(self) -> float:
        return math.sqrt(self.lm / self.cm) / self.rm

    def admittance(self, omega: np.ndarray) -> np.ndarray:
        return 1.0 / (self.rm + 1j * omega * self.lm + 1.0 / (1j * omega * self.cm))


@dataclass(frozen=True)
class BvdParams:
    c0: float
    cm: float
    lm: float
    rm: float

    def __post_init__(self) -> None:
        for name in ("c0", "cm", "lm", "rm"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ArgumentException(f"{name} must be positive and finite, got {value}")

    @property
    def motional(self) -> MotionalBranch:
        return MotionalBranch(cm=self.cm, lm=self.lm, rm=self.rm)

    @property
    def fs(self) -> float:
        return 1.0 / (2.0 * math.pi * math.sqrt(self.lm * self.cm))

    @property
    def fp(self) -> float:
        return self.fs * math.sqrt(1.0 + self.cm / self.c0)

    @property
    def k2(self) -> float:
        return k2_from_fs_fp(self.fs, self.fp)

    @property
    def q(self) -> float:
        return math.sqrt(self.lm / self.cm) / self.rm

    @property
    def fom(self) -> float:
        return self.q * self.k2

    def scaled(self, factor: float) -> "BvdParams":
        """Capacitances times factor, inductance and resistance divided by it: fs, fp and Q are unchanged"""
        return BvdParams(c0=self.c0 * factor, cm=self.cm * factor, lm=self.lm / factor, rm=self.rm / factor)

    def to_dict(self) -> Dict[str, float]:
        return {
            "c0": self.c0,
            "cm": self.cm,
            "lm": self.lm,
            "rm": self.rm,
            "fs": self.fs,
            "fp": self.fp,
            "k2": self.k2,
            "q": self.q,
        }


def bvd_params_from_targets(fs: float, k2: float, q: float, c0: float) -> BvdParams:
    branch = MotionalBranch.from_targets(fs, k2, q, c0)
    return BvdParams(c0=c0, cm=branch.cm, lm=branch.lm, rm=branch.rm)


def _bvd_z(params: BvdParams, omega: np.ndarray) -> np.ndarray:
    return 1.0 / (1j * omega * params.c0 + params.motional.admittance(omega))


def bvd_impedance(params: BvdParams, freqs: Union[np.ndarray, List[float]]) -> ImpedanceSpectrum:
    """Z = [jw c0 + 1 / (rm + jw lm + 1 / (jw cm))]^-1"""
    grid = np.asarray(freqs, dtype=float)
    return ImpedanceSpectrum(grid, _bvd_z(params, 2.0 * np.pi * grid))


def two_branch_impedance(
    params: BvdParams, spur: MotionalBranch, freqs: Union[np.ndarray, List[float]]
) -> ImpedanceSpectrum:
    """BVD with one additional motional branch in parallel, the simplest model of a spurious mode"""
    grid = np.asarray(freqs, dtype=float)
    omega = 2.0 * np.pi * grid
    admittance = 1j * omega * params.c0 + params.motional.admittance(omega) + spur.admittance(omega)
    return ImpedanceSpectrum(grid, 1.0 / admittance)


@dataclass(frozen=True)
class BvdFitResult:
    params: BvdParams
    residual: float
    evaluations: int
    initial: BvdParams

    def to_dict(self) -> Dict[str, float]:
        report = self.params.to_dict()
        report["residual"] = self.residual
        return report


def _initial_guess(spectrum: ImpedanceSpectrum) -> BvdParams:
    try:
        fs, fp = resonance_pair(spectrum, allow_multimode=True)
    except MultiModeException as exc:
        raise FittingException(f"no resonance found in the spectrum: {exc}") from exc
    if not fp > fs:
        raise FittingException(f"degenerate resonance pair fs={fs}, fp={fp}")
    ratio = (fp / fs) ** 2

    # lossless capacitance seen at the lowest sample: C0 [1 + (r - 1) / (1 - (f / fs)²)]
    omega_low = spectrum.omega[0]
    c_eff = -1.0 / (omega_low * spectrum.z[0].imag)
    detuning = 1.0 - (spectrum.freqs[0] / fs) ** 2
    c0 = c_eff / (1.0 + (ratio - 1.0) / detuning) if abs(detuning) > 1e-3 else c_eff
    if not c0 > 0:
        raise FittingException(f"could not estimate a positive static capacitance, got {c0}")
    cm = c0 * (ratio - 1.0)
    lm = 1.0 / ((2.0 * math.pi * fs) ** 2 * cm)

    # C0 only adds susceptance, so the conductance is that of the motional branch alone
    conductance = (1.0 / spectrum.z).real
    peak = int(np.argmin(np.abs(spectrum.freqs - fs)))
    half_power = conductance >= conductance[peak] / 2.0
    lower = peak
    while lower > 0 and half_power[lower - 1]:
        lower -= 1
    upper = peak
    while upper < half_power.size - 1 and half_power[upper + 1]:
        upper += 1
    if upper - lower >= 2:
        q = fs / (spectrum.freqs[upper] - spectrum.freqs[lower])
        rm = 2.0 * math.pi * fs * lm / q
    else:
        rm = max(float(spectrum.z[peak].real), np.finfo(float).eps)
    return BvdParams(c0=c0, cm=cm, lm=lm, rm=rm)


def _log_params(params: BvdParams) -> np.ndarray:
    return np.log([params.c0, params.cm, params.lm, params.rm])


def _from_log_params(values: np.ndarray) -> BvdParams:
    c0, cm, lm, rm = np.exp(values)
    return BvdParams(c0=float(c0), cm=float(cm), lm=float(lm), rm=float(rm))


def bvd_fit(spectrum: ImpedanceSpectrum, max_evaluations: int = FIT_MAX_EVALUATIONS) -> BvdFitResult:
    """
    Fit the four BVD parameters to a measured or simulated spectrum.

    The misfit is the complex log of Z: log-magnitude and phase residuals weighted 1:1, minimized over the logarithms
    of the parameters. The reported residual is the RMS log-magnitude misfit.
    """
    initial = _initial_guess(spectrum)
    omega = spectrum.omega
    log_mag_data = np.log(spectrum.magnitude)

    def residuals(values: np.ndarray) -> np.ndarray:
        z_model = _bvd_z(_from_log_params(values), omega)
        return np.concatenate([np.log(np.abs(z_model)) - log_mag_data, np.angle(z_model / spectrum.z)])

    result = least_squares(
        residuals,
        _log_params(initial),
        method="trf",
        max_nfev=max_evaluations,
        xtol=FIT_PARAMETER_TOLERANCE,
    )
    params = _from_log_params(result.x)
    log_misfit = result.fun[: omega.size]
    residual = float(np.sqrt(np.mean(log_misfit**2)))
    fit = BvdFitResult(params=params, residual=residual, evaluations=int(result.nfev), initial=initial)
    if result.status <= 0:
        raise FittingException(f"BVD fit did not converge after {result.nfev} evaluations: {result.message}", fit)
    _LOGGER.info(f"BVD fit converged after {result.nfev} evaluations, residual {residual:.3g}")
    return fit


@dataclass(frozen=True)
class SpuriousDeviation:
    rms: float
    max: float
    peak_count: int
    peak_freqs: Tuple[float, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, float]:
        return {"rms": self.rms, "max": self.max, "peak_count": float(self.peak_count)}


def spurious_deviation(
    measured: ImpedanceSpectrum,
    ideal: BvdParams,
    band: Optional[Tuple[float, float]] = None,
    peak_factor: float = DEFAULT_PEAK_FACTOR,
) -> SpuriousDeviation:
    """
    Deviation of the measured resistance from the ideal BVD resistance over ``band`` (default [fs, fp] of ``ideal``).

    A spur is a contiguous run of samples whose resistance exceeds ``peak_factor`` times the ideal resistance; its
    frequency is where the measured resistance peaks within the run.
    """
    lower, upper = band if band is not None else (ideal.fs, ideal.fp)
    if not lower < upper:
        raise ArgumentException(f"band must satisfy lower < upper, got {band}")
    if lower < measured.freqs[0] or upper > measured.freqs[-1]:
        raise ArgumentException(
            f"band [{lower:.6g}, {upper:.6g}] Hz lies outside the measured grid "
            f"[{measured.freqs[0]:.6g}, {measured.freqs[-1]:.6g}] Hz"
        )
    in_band = (measured.freqs >= lower) & (measured.freqs <= upper)
    freqs = measured.freqs[in_band]
    if freqs.size == 0:
        raise ArgumentException("no measured samples inside the band")
    r_measured = measured.resistance[in_band]
    r_ideal = bvd_impedance(ideal, freqs).resistance
    deviation = np.abs(r_measured - r_ideal)

    exceeds = r_measured > peak_factor * r_ideal
    edges = np.diff(exceeds.astype(int), prepend=0, append=0)
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    peak_freqs = tuple(float(freqs[start + np.argmax(r_measured[start:stop])]) for start, stop in zip(starts, stops))
    if peak_freqs:
        _LOGGER.debug(f"Spurious resistance peaks at {', '.join(f'{f:.6g}' for f in peak_freqs)} Hz")
    return SpuriousDeviation(
        rms=float(np.sqrt(np.mean(deviation**2))),
        max=float(np.max(deviation)),
        peak_count=len(peak_freqs),
        peak_freqs=peak_freqs,
    )
