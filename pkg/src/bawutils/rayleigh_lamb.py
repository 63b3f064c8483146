"""Rayleigh-Lamb frequency equations of a free isotropic plate, solved by scan and bracketed root finding"""
import functools
import logging
import math
from typing import List

import numpy as np
from scipy.optimize import brentq

from bawutils.errors import ArgumentException

_LOGGER = logging.getLogger(__name__)

LAMB_FAMILIES = ("symmetric", "antisymmetric")


def _cos(wavenumber_sq: float, half_thickness: float) -> float:
    if wavenumber_sq >= 0:
        return math.cos(math.sqrt(wavenumber_sq) * half_thickness)
    return math.cosh(math.sqrt(-wavenumber_sq) * half_thickness)


def _sinc(wavenumber_sq: float, half_thickness: float) -> float:
    """sin(p h) / p, continued to imaginary p"""
    if wavenumber_sq == 0:
        return half_thickness
    if wavenumber_sq > 0:
        root = math.sqrt(wavenumber_sq)
        return math.sin(root * half_thickness) / root
    root = math.sqrt(-wavenumber_sq)
    return math.sinh(root * half_thickness) / root


def rayleigh_lamb_determinant(
    omega: float, kx: float, half_thickness: float, v_l: float, v_s: float, family: str
) -> float:
    """
    Real-valued Rayleigh-Lamb determinant, free of poles:
    symmetric (q² - k²)² cos(ph) sin(qh)/q + 4 k² p² sin(ph)/p cos(qh),
    antisymmetric (q² - k²)² sin(ph)/p cos(qh) + 4 k² q² cos(ph) sin(qh)/q
    """
    p_sq = (omega / v_l) ** 2 - kx**2
    q_sq = (omega / v_s) ** 2 - kx**2
    shear_term = (q_sq - kx**2) ** 2
    if family == "symmetric":
        return shear_term * _cos(p_sq, half_thickness) * _sinc(q_sq, half_thickness) + 4.0 * kx**2 * p_sq * _sinc(
            p_sq, half_thickness
        ) * _cos(q_sq, half_thickness)
    if family == "antisymmetric":
        return shear_term * _sinc(p_sq, half_thickness) * _cos(q_sq, half_thickness) + 4.0 * kx**2 * q_sq * _cos(
            p_sq, half_thickness
        ) * _sinc(q_sq, half_thickness)
    raise ArgumentException(f"unknown Lamb family {family!r}, expected one of {LAMB_FAMILIES}")


def rayleigh_lamb_frequencies(
    kx: float,
    thickness: float,
    v_l: float,
    v_s: float,
    max_freq: float,
    family: str = "both",
    scan_points: int = 4000,
) -> List[float]:
    """Lamb-mode frequencies (Hz) at real ``kx`` up to ``max_freq``, ascending"""
    if not (thickness > 0 and v_l > v_s > 0 and max_freq > 0 and kx >= 0):
        raise ArgumentException("expected thickness > 0, v_l > v_s > 0, max_freq > 0 and kx >= 0")
    families = LAMB_FAMILIES if family == "both" else (family,)
    half = thickness / 2.0
    roots: List[float] = []
    for name in families:
        determinant = functools.partial(
            rayleigh_lamb_determinant, kx=kx, half_thickness=half, v_l=v_l, v_s=v_s, family=name
        )
        omegas = np.linspace(2.0 * math.pi * max_freq * 1e-6, 2.0 * math.pi * max_freq, scan_points)
        values = np.array([determinant(omega) for omega in omegas])
        for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
            roots.append(brentq(determinant, omegas[i], omegas[i + 1], xtol=1e-12, rtol=1e-13) / (2.0 * math.pi))
    _LOGGER.debug(f"{len(roots)} Rayleigh-Lamb roots below {max_freq:.6g} Hz at kx = {kx:.6g} 1/m")
    return sorted(roots)
