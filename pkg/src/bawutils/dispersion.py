"""
Guided (Lamb) waves of an anisotropic piezoelectric plate with electrically open or short surfaces.

The plate is discretized through its thickness with quadratic elements (semi-analytical finite elements): every node
carries u1, u2, u3 and the potential phi, and the fields vary as exp(i kx x) along the propagation direction x, which is
the cut-frame x axis rotated by ``azimuth_deg`` about the plate normal. The assembled matrices are non-dimensional
(z / t, kx t, w² rho t² / c_ref, potential scaled by sqrt(c_ref / eps_ref)), so every result depends on f t and kx t
only.

For fixed real kx the problem is a Hermitian generalized eigenproblem in w² after condensing out the potential. For a
fixed frequency it is a quadratic eigenproblem in kx, solved through its companion linearization.

Symmetry families follow the midplane parity of the displacement: S modes have u_x even and u_z odd, A modes the
converse. Shear-horizontal dominated modes (u_y carries more than half the displacement) are labelled SH.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from bawutils.errors import ArgumentException, NotFoundException, NumericException, PartialResultException
from bawutils.material_tensors import EulerZXZ, MaterialSet, rotate

_LOGGER = logging.getLogger(__name__)

ELECTRICAL_BCS = ("open", "short")
FAMILIES = ("S0", "A0", "S1", "A1", "SH0", "SH1", "higher")
DEFAULT_ELEMENTS = 32
MIN_ELEMENTS = 8
MAX_IMAG_KT = 50.0
GAUGE_KT = 1e-5
EVANESCENT_KT = 1e-6
MIN_DECAY_KT = 1e-2
BAND_EDGE_WINDOW = 0.05
ZERO_FREQUENCY = 1e-3
ZGV_TOLERANCE = 1e-4
PARITY_PENALTY = 10.0
LENGTH_NAMES = ("lambda_s1_open", "lambda_crossing_short", "decay_a1_open")

_GAUSS_POINTS = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_GAUSS_WEIGHTS = np.array([5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
_DOFS_PER_NODE = 4

# rows: S1..S6 and grad(phi) x, y, z; columns: u1, u2, u3, phi
_B_X = np.zeros((9, _DOFS_PER_NODE))
_B_X[0, 0] = _B_X[4, 2] = _B_X[5, 1] = _B_X[6, 3] = 1.0
_B_Z = np.zeros((9, _DOFS_PER_NODE))
_B_Z[2, 2] = _B_Z[3, 1] = _B_Z[4, 0] = _B_Z[8, 3] = 1.0
_DISPLACEMENT = np.diag([1.0, 1.0, 1.0, 0.0])

_FAMILY_NAMES = {"S": ("S0", "S1"), "A": ("A0", "A1"), "SH": ("SH0", "SH1")}


@dataclass(frozen=True)
class GuidedMode:
    """One real-kx eigen-solution. ``parity`` is the S-family score in [0, 1]."""

    freq: float
    kx: float
    parity: float
    polarization: Tuple[float, float, float]
    group_velocity: float
    weight: float
    family: str = "higher"

    @property
    def symmetric(self) -> bool:
        return self.parity >= 0.5

    @property
    def shear_horizontal(self) -> bool:
        return self.polarization[1] > 0.5

    @property
    def parity_class(self) -> str:
        if self.shear_horizontal:
            return "SH"
        return "S" if self.symmetric else "A"


@dataclass(frozen=True)
class ComplexWavenumber:
    """One fixed-frequency solution; complex kx means an evanescent field decaying over 1 / |Im kx|"""

    kx: complex
    parity: float
    polarization: Tuple[float, float, float]
    electric_fraction: float
    thickness: float

    @property
    def symmetric(self) -> bool:
        return self.parity >= 0.5

    @property
    def shear_horizontal(self) -> bool:
        return self.polarization[1] > 0.5

    @property
    def acoustic(self) -> bool:
        return self.electric_fraction < 0.5

    @property
    def evanescent(self) -> bool:
        return abs(self.kx.imag) * self.thickness > EVANESCENT_KT

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / abs(self.kx.real) if self.kx.real else math.inf

    @property
    def decay_length(self) -> float:
        return 1.0 / abs(self.kx.imag) if self.kx.imag else math.inf


@dataclass(frozen=True)
class BranchPoint:
    freq: float
    kx: complex
    group_velocity: float
    weight: float = 0.0
    crossing: bool = False


@dataclass
class DispersionBranch:
    bc: str
    family: str
    points: List[BranchPoint] = field(default_factory=list)
    symmetric: bool = True
    solver: Optional["PlateWaveguide"] = field(default=None, repr=False, compare=False)

    @property
    def freqs(self) -> np.ndarray:
        return np.array([point.freq for point in self.points])

    @property
    def kx(self) -> np.ndarray:
        return np.array([point.kx.real for point in self.points])

    @property
    def group_velocities(self) -> np.ndarray:
        return np.array([point.group_velocity for point in self.points])

    def to_rows(self) -> List[list]:
        return [
            [self.bc, self.family, p.freq, p.kx.real, p.kx.imag, p.group_velocity, p.weight] for p in self.points
        ]


@dataclass(frozen=True)
class CharacteristicLengths:
    lambda_s1_open: float
    lambda_crossing_short: float
    decay_a1_open: float
    eval_freq: float

    def __post_init__(self) -> None:
        for name in LENGTH_NAMES + ("eval_freq",):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ArgumentException(f"{name} must be positive and finite, got {value}")

    def scaled(self, factor: float) -> "CharacteristicLengths":
        """Lengths times ``factor`` and frequency divided by it, as for a plate ``factor`` times thicker"""
        return CharacteristicLengths(
            lambda_s1_open=self.lambda_s1_open * factor,
            lambda_crossing_short=self.lambda_crossing_short * factor,
            decay_a1_open=self.decay_a1_open * factor,
            eval_freq=self.eval_freq / factor,
        )

    def to_dict(self) -> Dict[str, float]:
        return {
            "lambda_s1_open_m": self.lambda_s1_open,
            "lambda_crossing_short_m": self.lambda_crossing_short,
            "decay_a1_open_m": self.decay_a1_open,
            "eval_freq_hz": self.eval_freq,
        }


def _shape_functions(xi: float) -> Tuple[np.ndarray, np.ndarray]:
    values = np.array([xi * (xi - 1.0) / 2.0, 1.0 - xi**2, xi * (xi + 1.0) / 2.0])
    slopes = np.array([xi - 0.5, -2.0 * xi, xi + 0.5])
    return values, slopes


def _check_bc(bc: str) -> None:
    if bc not in ELECTRICAL_BCS:
        raise ArgumentException(f"unknown electrical boundary condition {bc!r}, expected one of {ELECTRICAL_BCS}")


class PlateWaveguide:
    """Assembled through-thickness matrices of one plate and boundary condition, reused across solves"""

    def __init__(
        self,
        material: MaterialSet,
        thickness: float,
        bc: str,
        n_elements: int = DEFAULT_ELEMENTS,
        azimuth_deg: float = 0.0,
    ) -> None:
        _check_bc(bc)
        if n_elements < MIN_ELEMENTS:
            raise ArgumentException(f"at least {MIN_ELEMENTS} elements are required, got {n_elements}")
        if not thickness > 0:
            raise ArgumentException(f"plate thickness must be positive, got {thickness}")
        self.material = rotate(material, EulerZXZ(-azimuth_deg, 0.0, 0.0)) if azimuth_deg else material
        self.thickness = thickness
        self.bc = bc
        self.n_elements = n_elements
        self.azimuth_deg = azimuth_deg
        self.n_nodes = 2 * n_elements + 1
        self.c_ref = float(self.material.stiffness_ce[2, 2])
        self.eps_ref = float(self.material.permittivity_s[2, 2])
        self.v_ref = math.sqrt(self.c_ref / self.material.density)
        self._k1, self._k2, self._k3, self._mass = self._assemble()
        self._k2_antisymmetric = self._k2 - self._k2.T

    def __repr__(self) -> str:
        return (
            f"PlateWaveguide({self.material.name!r}, thickness={self.thickness!r}, bc={self.bc!r}, "
            f"n_elements={self.n_elements!r}, azimuth_deg={self.azimuth_deg!r})"
        )

    def _material_matrix(self) -> np.ndarray:
        coupling = math.sqrt(self.c_ref * self.eps_ref)
        matrix = np.zeros((9, 9))
        matrix[:6, :6] = self.material.stiffness_ce / self.c_ref
        matrix[:6, 6:] = self.material.piezo_e.T / coupling
        matrix[6:, :6] = self.material.piezo_e / coupling
        matrix[6:, 6:] = -self.material.permittivity_s / self.eps_ref
        return matrix

    def _assemble(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        d_matrix = self._material_matrix()
        length = 1.0 / self.n_elements
        local = [np.zeros((12, 12)) for _ in range(4)]
        for xi, weight in zip(_GAUSS_POINTS, _GAUSS_WEIGHTS):
            values, slopes = _shape_functions(xi)
            shape = np.kron(values[None, :], np.eye(_DOFS_PER_NODE))
            gradient = np.kron(slopes[None, :], np.eye(_DOFS_PER_NODE)) * (2.0 / length)
            jacobian = weight * length / 2.0
            b_z = _B_Z @ gradient
            b_x = _B_X @ shape
            local[0] += jacobian * b_z.T @ d_matrix @ b_z
            local[1] += jacobian * b_z.T @ d_matrix @ b_x
            local[2] += jacobian * b_x.T @ d_matrix @ b_x
            local[3] += jacobian * shape.T @ _DISPLACEMENT @ shape

        size = _DOFS_PER_NODE * self.n_nodes
        assembled = [np.zeros((size, size)) for _ in range(4)]
        for element in range(self.n_elements):
            dofs = slice(2 * _DOFS_PER_NODE * element, 2 * _DOFS_PER_NODE * element + 12)
            for target, block in zip(assembled, local):
                target[dofs, dofs] += block
        return assembled[0], assembled[1], assembled[2], assembled[3]

    @property
    def freq_scale(self) -> float:
        """Hz per unit of non-dimensional angular frequency"""
        return self.v_ref / (2.0 * math.pi * self.thickness)

    def _active_dofs(self, grounded_gauge: bool) -> np.ndarray:
        removed = set()
        last = self.n_nodes - 1
        if self.bc == "short":
            removed = {3, _DOFS_PER_NODE * last + 3}
        elif grounded_gauge:
            removed = {3}
        return np.array([dof for dof in range(_DOFS_PER_NODE * self.n_nodes) if dof not in removed])

    def _stiffness(self, kt: complex) -> np.ndarray:
        return self._k1 + 1j * kt * self._k2_antisymmetric + kt**2 * self._k3

    def _stiffness_derivative(self, kt: float) -> np.ndarray:
        return 1j * self._k2_antisymmetric + 2.0 * kt * self._k3

    def _describe(self, full_vector: np.ndarray) -> Tuple[float, Tuple[float, float, float], float]:
        nodal = full_vector.reshape(self.n_nodes, _DOFS_PER_NODE)
        displacement = nodal[:, :3]
        mirrored = displacement[::-1]
        even = np.abs(displacement + mirrored) ** 2 / 4.0
        odd = np.abs(displacement - mirrored) ** 2 / 4.0
        per_component = np.sum(np.abs(displacement) ** 2, axis=0)
        total = float(np.sum(per_component))
        if total == 0.0:
            return 0.5, (0.0, 0.0, 0.0), 1.0
        parity = float((np.sum(even[:, 0]) + np.sum(odd[:, 1]) + np.sum(odd[:, 2])) / total)
        polarization = tuple(float(value) for value in per_component / total)
        potential = float(np.sum(np.abs(nodal[:, 3]) ** 2))
        return parity, polarization, potential / (potential + total)  # type: ignore[return-value]

    def _rigid_modes(self) -> List[GuidedMode]:
        return [
            GuidedMode(0.0, 0.0, 1.0, (1.0, 0.0, 0.0), math.nan, 0.0, "S0"),
            GuidedMode(0.0, 0.0, 0.0, (0.0, 1.0, 0.0), math.nan, 0.0, "SH0"),
            GuidedMode(0.0, 0.0, 0.0, (0.0, 0.0, 1.0), math.nan, 0.0, "A0"),
        ]

    def solve(self, kx: float, count: int = 12) -> List[GuidedMode]:
        """Lowest ``count`` guided modes at real ``kx`` (1/m), ascending in frequency and labelled by family"""
        if not math.isfinite(kx) or kx < 0:
            raise ArgumentException(f"kx must be finite and non-negative, got {kx}")
        kt = kx * self.thickness
        active = self._active_dofs(grounded_gauge=(kt < GAUGE_KT))
        is_u = (active % _DOFS_PER_NODE) < 3
        u_dofs, phi_dofs = active[is_u], active[~is_u]

        stiffness = self._stiffness(kt)
        k_uu = stiffness[np.ix_(u_dofs, u_dofs)]
        k_up = stiffness[np.ix_(u_dofs, phi_dofs)]
        k_pu = stiffness[np.ix_(phi_dofs, u_dofs)]
        k_pp = stiffness[np.ix_(phi_dofs, phi_dofs)]
        mass = self._mass[np.ix_(u_dofs, u_dofs)]
        count = min(count, u_dofs.size)
        try:
            condensation = scipy.linalg.solve(k_pp, k_pu)
            condensed = k_uu - k_up @ condensation
            condensed = (condensed + condensed.conj().T) / 2.0
            eigenvalues, vectors = scipy.linalg.eigh(condensed, mass, subset_by_index=[0, count - 1])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericException(
                f"guided-mode eigen-solve failed at kx t = {kt:.6g} "
                f"(potential block condition number {np.linalg.cond(k_pp):.3g}): {exc}"
            ) from exc

        derivative = self._stiffness_derivative(kt)[np.ix_(active, active)]
        modes = []
        for index in range(eigenvalues.size):
            omega = math.sqrt(max(float(eigenvalues[index]), 0.0))
            if kt == 0.0 and omega < ZERO_FREQUENCY:
                continue
            u_part = vectors[:, index]
            phi_part = -condensation @ u_part
            full = np.zeros(_DOFS_PER_NODE * self.n_nodes, dtype=complex)
            full[u_dofs] = u_part
            full[phi_dofs] = phi_part
            local = full[active]
            norm = float(np.real(u_part.conj() @ mass @ u_part))
            slope = float(np.real(local.conj() @ derivative @ local)) / norm
            group_velocity = self.v_ref * slope / (2.0 * omega) if omega > ZERO_FREQUENCY else math.nan
            electric = abs(complex(phi_part.conj() @ k_pp @ phi_part))
            mechanical = abs(complex(u_part.conj() @ k_uu @ u_part))
            parity, polarization, _ = self._describe(full)
            modes.append(
                GuidedMode(
                    freq=omega * self.freq_scale,
                    kx=kx,
                    parity=parity,
                    polarization=polarization,
                    group_velocity=group_velocity,
                    weight=electric / (electric + mechanical) if electric + mechanical > 0 else 0.0,
                )
            )
        if kt == 0.0:
            modes = self._rigid_modes() + modes
        return label_families(modes)

    def modes_up_to(self, kx: float, max_freq: float) -> List[GuidedMode]:
        """All guided modes at ``kx`` with frequency up to ``max_freq``"""
        count = 12
        n_u = 3 * self.n_nodes
        while True:
            modes = self.solve(kx, count)
            if count >= n_u or modes[-1].freq > max_freq:
                return [mode for mode in modes if mode.freq <= max_freq]
            count = min(2 * count, n_u)

    def complex_wavenumbers(self, freq: float) -> List[ComplexWavenumber]:
        """All kx at fixed frequency with |Im kx| t < 50, ordered by decay rate then real part"""
        if not freq > 0:
            raise ArgumentException(f"frequency must be positive, got {freq}")
        omega_sq = (freq / self.freq_scale) ** 2
        active = self._active_dofs(grounded_gauge=False)
        grid = np.ix_(active, active)
        a0 = (self._k1 - omega_sq * self._mass)[grid]
        a1 = (1j * self._k2_antisymmetric)[grid]
        a2 = self._k3[grid]
        size = active.size
        identity = np.eye(size)
        zeros = np.zeros((size, size))
        left = np.block([[zeros, identity], [-a0, -a1]])
        right = np.block([[identity, zeros], [zeros, a2]])
        try:
            eigenvalues, vectors = scipy.linalg.eig(left, right)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericException(
                f"wavenumber eigen-solve failed at {freq:.6g} Hz (k² coefficient condition number "
                f"{np.linalg.cond(a2):.3g}): {exc}"
            ) from exc

        solutions = []
        for index, kt in enumerate(eigenvalues):
            if not np.isfinite(kt) or abs(kt) < GAUGE_KT or abs(kt.imag) >= MAX_IMAG_KT:
                continue
            full = np.zeros(_DOFS_PER_NODE * self.n_nodes, dtype=complex)
            full[active] = vectors[:size, index]
            parity, polarization, electric = self._describe(full)
            solutions.append(
                ComplexWavenumber(
                    kx=complex(kt) / self.thickness,
                    parity=parity,
                    polarization=polarization,
                    electric_fraction=electric,
                    thickness=self.thickness,
                )
            )
        solutions.sort(key=lambda s: (round(abs(s.kx.imag) * self.thickness, 9), round(s.kx.real * self.thickness, 9)))
        _LOGGER.debug(f"{len(solutions)} wavenumbers at {freq:.6g} Hz ({self.bc})")
        return solutions


def label_families(modes: Sequence[GuidedMode]) -> List[GuidedMode]:
    """Name modes by frequency order within each parity class; named zero-frequency rigid modes keep their label"""
    rigid = {mode.family for mode in modes if mode.freq == 0.0 and mode.family != "higher"}
    counters = {name: (1 if names[0] in rigid else 0) for name, names in _FAMILY_NAMES.items()}
    labelled = []
    for mode in sorted(modes, key=lambda mode: mode.freq):
        if mode.freq == 0.0 and mode.family in rigid:
            labelled.append(mode)
            continue
        names = _FAMILY_NAMES[mode.parity_class]
        order = counters[mode.parity_class]
        counters[mode.parity_class] += 1
        labelled.append(replace(mode, family=names[order] if order < len(names) else "higher"))
    return labelled


def guided_frequencies(
    material: MaterialSet,
    thickness: float,
    kx: float,
    bc: str,
    count: int = 12,
    n_elements: int = DEFAULT_ELEMENTS,
    azimuth_deg: float = 0.0,
) -> List[GuidedMode]:
    return PlateWaveguide(material, thickness, bc, n_elements, azimuth_deg).solve(kx, count)


def complex_kx_at_frequency(
    material: MaterialSet,
    thickness: float,
    freq: float,
    bc: str,
    n_elements: int = DEFAULT_ELEMENTS,
    azimuth_deg: float = 0.0,
) -> List[ComplexWavenumber]:
    return PlateWaveguide(material, thickness, bc, n_elements, azimuth_deg).complex_wavenumbers(freq)


class _Track:
    def __init__(self, mode: GuidedMode) -> None:
        self.family = mode.family
        self.symmetric = mode.symmetric
        self.modes = [mode]
        self.crossings: List[bool] = [False]
        self.active = True

    def predict(self, kx: float) -> float:
        if len(self.modes) < 2:
            return self.modes[-1].freq
        previous, last = self.modes[-2], self.modes[-1]
        if last.kx == previous.kx:
            return last.freq
        return last.freq + (last.freq - previous.freq) * (kx - last.kx) / (last.kx - previous.kx)

    def extend(self, mode: GuidedMode) -> None:
        self.modes.append(mode)
        self.crossings.append(False)


def trace_branches(
    material: MaterialSet,
    thickness: float,
    bc: str,
    freq_range: Tuple[float, float],
    kx_range: Tuple[float, float],
    kx_points: int = 121,
    n_elements: int = DEFAULT_ELEMENTS,
    azimuth_deg: float = 0.0,
    solver: Optional[PlateWaveguide] = None,
) -> List[DispersionBranch]:
    """
    Sweep kx, solve the guided modes at every step and connect them into branches: each branch is continued by the
    mode nearest its linearly extrapolated frequency, and changing midplane parity costs a large penalty.
    Branches that swap frequency order between two steps are flagged as crossing on both sides.
    """
    f_min, f_max = freq_range
    k_min, k_max = kx_range
    if not 0 <= f_min < f_max:
        raise ArgumentException(f"frequency range must satisfy 0 <= min < max, got {freq_range}")
    if not 0 <= k_min < k_max:
        raise ArgumentException(f"kx range must satisfy 0 <= min < max, got {kx_range}")
    if kx_points < 2:
        raise ArgumentException(f"at least 2 kx points are needed, got {kx_points}")
    solver = solver or PlateWaveguide(material, thickness, bc, n_elements, azimuth_deg)
    tracking_limit = 1.15 * f_max
    tracks: List[_Track] = []

    for kx in np.linspace(k_min, k_max, kx_points):
        modes = solver.modes_up_to(float(kx), tracking_limit)
        live = [track for track in tracks if track.active]
        if not live:
            tracks.extend(_Track(mode) for mode in modes)
            continue
        cost = np.empty((len(live), len(modes)))
        for row, track in enumerate(live):
            predicted = track.predict(float(kx))
            for col, mode in enumerate(modes):
                penalty = PARITY_PENALTY if mode.symmetric != track.symmetric else 0.0
                cost[row, col] = abs(mode.freq - predicted) / f_max + penalty
        rows, cols = linear_sum_assignment(cost) if modes else (np.array([], int), np.array([], int))

        previous = {id(track): track.modes[-1].freq for track in live}
        continued = []
        used = set()
        for row, col in zip(rows, cols):
            track = live[row]
            if cost[row, col] >= PARITY_PENALTY:
                track.active = False
                continue
            track.extend(modes[col])
            continued.append(track)
            used.add(col)
        for track in live:
            if track not in continued:
                track.active = False
        families = {track.family for track in continued}
        for col, mode in enumerate(modes):
            if col in used:
                continue
            track = _Track(mode)
            if track.family in families:
                track.family = "higher"
            tracks.append(track)

        for index, first in enumerate(continued):
            for second in continued[index + 1 :]:
                before = previous[id(first)] - previous[id(second)]
                after = first.modes[-1].freq - second.modes[-1].freq
                if before * after < 0:
                    first.crossings[-1] = second.crossings[-1] = True
                    if first.symmetric == second.symmetric:
                        _LOGGER.warning(
                            f"Ambiguous same-parity crossing of {first.family} and {second.family} near "
                            f"{first.modes[-1].freq:.6g} Hz, kx = {kx:.6g} 1/m"
                        )

    branches = []
    for track in tracks:
        points = [
            BranchPoint(mode.freq, complex(mode.kx), mode.group_velocity, mode.weight, crossing)
            for mode, crossing in zip(track.modes, track.crossings)
            if f_min <= mode.freq <= f_max
        ]
        if points:
            branches.append(DispersionBranch(bc, track.family, points, track.symmetric, solver))
    order = {name: index for index, name in enumerate(FAMILIES)}
    branches.sort(key=lambda branch: (order.get(branch.family, len(FAMILIES)), branch.points[0].freq))
    _LOGGER.info(f"Traced {len(branches)} {bc} branches over kx in [{k_min:.6g}, {k_max:.6g}] 1/m")
    return branches


def find_crossings(branch_a: DispersionBranch, branch_b: DispersionBranch) -> List[Tuple[float, float]]:
    """(freq, kx) points where two branches sampled on a common kx grid exchange frequency order"""
    common, index_a, index_b = np.intersect1d(branch_a.kx, branch_b.kx, return_indices=True)
    if common.size < 2:
        return []
    difference = branch_a.freqs[index_a] - branch_b.freqs[index_b]
    crossings = []
    for i in range(common.size - 1):
        if difference[i] == 0.0:
            crossings.append((float(branch_a.freqs[index_a][i]), float(common[i])))
        elif difference[i] * difference[i + 1] < 0:
            fraction = difference[i] / (difference[i] - difference[i + 1])
            kx = common[i] + fraction * (common[i + 1] - common[i])
            freq_a = branch_a.freqs[index_a]
            freq = freq_a[i] + fraction * (freq_a[i + 1] - freq_a[i])
            crossings.append((float(freq), float(kx)))
    return crossings


def _tracked_mode(solver: PlateWaveguide, kx: float, freq_guess: float, symmetric: bool) -> GuidedMode:
    candidates = [mode for mode in solver.modes_up_to(kx, 2.0 * freq_guess) if mode.symmetric == symmetric]
    if not candidates:
        raise NotFoundException(f"no mode of the traced parity near {freq_guess:.6g} Hz at kx = {kx:.6g} 1/m")
    return min(candidates, key=lambda mode: abs(mode.freq - freq_guess))


def zgv_point(branch: DispersionBranch) -> Tuple[float, float]:
    """
    Zero-group-velocity point of a branch at kx > 0: the first group-velocity sign change along the branch, refined
    by bisection on re-solved modes (when the branch keeps its solver) until the bracket spans less than 1e-4 in
    relative frequency.
    """
    points = [p for p in branch.points if p.kx.real > 0 and math.isfinite(p.group_velocity)]
    bracket = None
    for first, second in zip(points, points[1:]):
        if first.group_velocity == 0.0:
            return first.freq, first.kx.real
        if first.group_velocity * second.group_velocity < 0:
            bracket = (first, second)
            break
    if bracket is None:
        raise NotFoundException(f"{branch.bc} {branch.family} branch has no group-velocity sign change")

    low, high = bracket
    if branch.solver is None:
        fraction = low.group_velocity / (low.group_velocity - high.group_velocity)
        kx = low.kx.real + fraction * (high.kx.real - low.kx.real)
        return low.freq + fraction * (high.freq - low.freq), kx

    k_low, k_high = low.kx.real, high.kx.real
    v_low = low.group_velocity
    f_low, f_high = low.freq, high.freq
    for _ in range(60):
        k_mid = 0.5 * (k_low + k_high)
        mode = _tracked_mode(branch.solver, k_mid, 0.5 * (f_low + f_high), branch.symmetric)
        if mode.group_velocity * v_low > 0:
            k_low, f_low, v_low = k_mid, mode.freq, mode.group_velocity
        else:
            k_high, f_high = k_mid, mode.freq
        if abs(f_high - f_low) < ZGV_TOLERANCE * mode.freq and (k_high - k_low) < ZGV_TOLERANCE * k_mid:
            break
    return 0.5 * (f_low + f_high), 0.5 * (k_low + k_high)


def _first_symmetric_cutoff(material: MaterialSet, thickness: float, n_elements: int) -> GuidedMode:
    modes = PlateWaveguide(material, thickness, "short", n_elements).solve(0.0, 24)
    for mode in modes:
        if mode.freq > 0 and mode.parity_class == "S":
            return mode
    raise NotFoundException("no symmetric thickness resonance found")


def dispersion_type(material: MaterialSet, thickness: float, n_elements: int = DEFAULT_ELEMENTS) -> int:
    """
    2 when the lowest symmetric thickness resonance is thickness-extensional (u_z dominant, longitudinal velocity
    below twice the shear velocity), 1 when it is thickness-shear
    """
    mode = _first_symmetric_cutoff(material, thickness, n_elements)
    return 2 if mode.polarization[2] > mode.polarization[0] else 1


def short_cutoff(material: MaterialSet, thickness: float, n_elements: int = DEFAULT_ELEMENTS) -> float:
    """S1 short-circuit cutoff frequency, the default evaluation frequency of the characteristic lengths"""
    return _first_symmetric_cutoff(material, thickness, n_elements).freq


def _real_crossing(branch: DispersionBranch, freq: float) -> Optional[float]:
    """kx of the first point along ``branch`` (ascending kx) where it passes through ``freq``, linearly interpolated"""
    for first, second in zip(branch.points, branch.points[1:]):
        if first.freq == freq:
            return first.kx.real
        if (first.freq - freq) * (second.freq - freq) < 0:
            fraction = (freq - first.freq) / (second.freq - first.freq)
            return first.kx.real + fraction * (second.kx.real - first.kx.real)
    return None


def open_s1_wavenumber(branch: DispersionBranch, roots: Sequence[ComplexWavenumber], f_eval: float) -> float:
    """
    Real kx of the open-circuit S1 branch at ``f_eval``. A frequency where the traced branch passes gets the real
    root of ``roots`` nearest the interpolated kx (the backward-wave root first). A frequency at most
    ``BAND_EDGE_WINDOW`` below the branch minimum gets the zero-group-velocity point, the real solution nearest
    ``f_eval``. Anything else has no real S1 solution and raises NotFoundException.
    """
    guess = _real_crossing(branch, f_eval)
    if guess is not None and guess > 0:
        real_roots = [
            root.kx.real
            for root in roots
            if root.acoustic
            and root.symmetric
            and not root.shear_horizontal
            and not root.evanescent
            and root.kx.real > 0
        ]
        if real_roots:
            nearest = min(real_roots, key=lambda kx: abs(kx - guess))
            if abs(nearest - guess) <= BAND_EDGE_WINDOW * guess:
                return nearest
        _LOGGER.debug(f"no real root near the traced open S1 kx {guess:.6g} 1/m, keeping the interpolated value")
        return guess
    zgv_freq, zgv_kx = zgv_point(branch)
    if 0 <= zgv_freq - f_eval <= BAND_EDGE_WINDOW * f_eval:
        _LOGGER.info(
            f"{f_eval:.6g} Hz lies below the open S1 band edge at {zgv_freq:.6g} Hz, using its zero-group-velocity kx"
        )
        return zgv_kx
    raise NotFoundException(f"open S1 branch has no real solution at or just below {f_eval:.6g} Hz")


def characteristic_lengths(
    material: MaterialSet,
    thickness: float,
    f_eval: Optional[float] = None,
    n_elements: int = DEFAULT_ELEMENTS,
    azimuth_deg: float = 0.0,
    kx_points: int = 161,
    max_kx_t: float = 8.0,
) -> CharacteristicLengths:
    """
    The three lateral lengths that size a grounded-ring resonator, evaluated at ``f_eval`` (default: S1 short
    cutoff):

    * wavelength of the real open-circuit S1 solution (see ``open_s1_wavenumber``),
    * wavelength where the short-circuit S1 and A1 branches cross, nearest ``f_eval``,
    * decay length of the slowest-decaying antisymmetric evanescent solution of the open plate, ignoring roots that
      decay by less than ``MIN_DECAY_KT`` per thickness.
    """
    if dispersion_type(material, thickness, n_elements) == 1:
        raise PartialResultException(
            f"{material.name} has type-1 dispersion at {thickness:.6g} m: no backward S1 branch", list(LENGTH_NAMES)
        )
    f_eval = f_eval if f_eval is not None else short_cutoff(material, thickness, n_elements)
    if not f_eval > 0:
        raise ArgumentException(f"evaluation frequency must be positive, got {f_eval}")
    found: Dict[str, float] = {}
    kx_range = (0.0, max_kx_t / thickness)
    freq_range = (0.0, 1.5 * f_eval)

    open_solver = PlateWaveguide(material, thickness, "open", n_elements, azimuth_deg)
    roots = open_solver.complex_wavenumbers(f_eval)
    open_branches = trace_branches(
        material, thickness, "open", freq_range, kx_range, kx_points=kx_points, solver=open_solver
    )
    s1_open = [branch for branch in open_branches if branch.family == "S1"]
    if s1_open:
        try:
            found["lambda_s1_open"] = 2.0 * math.pi / open_s1_wavenumber(s1_open[0], roots, f_eval)
        except NotFoundException as exc:
            _LOGGER.warning(f"{exc}")

    short_branches = trace_branches(
        material,
        thickness,
        "short",
        freq_range,
        kx_range,
        kx_points=kx_points,
        n_elements=n_elements,
        azimuth_deg=azimuth_deg,
    )
    s1 = [branch for branch in short_branches if branch.family == "S1"]
    a1 = [branch for branch in short_branches if branch.family == "A1"]
    crossings = find_crossings(s1[0], a1[0]) if s1 and a1 else []
    crossings = [(freq, kx) for freq, kx in crossings if kx > 0]
    if crossings:
        _, kx = min(crossings, key=lambda crossing: abs(crossing[0] - f_eval))
        found["lambda_crossing_short"] = 2.0 * math.pi / kx

    decaying = [
        root
        for root in roots
        if root.acoustic
        and not root.symmetric
        and not root.shear_horizontal
        and abs(root.kx.imag) * thickness >= MIN_DECAY_KT
    ]
    if decaying:
        found["decay_a1_open"] = max(root.decay_length for root in decaying)

    missing = [name for name in LENGTH_NAMES if name not in found]
    if missing:
        raise PartialResultException(
            f"characteristic lengths missing at {f_eval:.6g} Hz: {', '.join(missing)}", missing, found
        )
    lengths = CharacteristicLengths(eval_freq=f_eval, **found)
    _LOGGER.info(
        f"Characteristic lengths at {f_eval:.6g} Hz: S1 open {lengths.lambda_s1_open:.4g} m, "
        f"S1/A1 short crossing {lengths.lambda_crossing_short:.4g} m, A1 open decay {lengths.decay_a1_open:.4g} m"
    )
    return lengths
