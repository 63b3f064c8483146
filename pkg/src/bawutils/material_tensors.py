"""
Anisotropic piezoelectric material constants, crystal-cut rotations and material coupling coefficients.

Conventions used throughout the package:

* Voigt order (11, 22, 33, 23, 13, 12) with engineering shear strains.
* Stiffness ``c^E`` (Pa), stress piezoelectric constants ``e`` (C/m²), clamped permittivity ``eps^S`` (F/m).
* Euler angles are ZXZ and given in degrees. ``euler_matrix`` returns ``R = Z(alpha) X(beta) Z(gamma)`` whose rows are
  the rotated (cut) axes expressed in crystal coordinates, so tensor components transform as ``T'_ij = R_ip R_jq T_pq``.
  The rotated Y-cut ``theta`` is ``(0, 90 - theta, 0)`` and puts the plate normal at ``(0, cos(theta), sin(theta))``.
"""
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from bawutils.errors import ArgumentException, MaterialNotFoundException

_LOGGER = logging.getLogger(__name__)

EPSILON_0 = 8.8541878128e-12
MATERIALS_PATH_ENV_VAR = "BAWUTILS_MATERIALS_PATH"
BUNDLED_MATERIALS_DIR = Path(__file__).parent / "data" / "materials"

VOIGT_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1))
VOIGT_INDEX = np.array([[0, 5, 4], [5, 1, 3], [4, 3, 2]])

_METADATA_KEYS = {"description", "source"}
_ISOTROPIC_KEYS = {"youngs_modulus", "poisson_ratio", "density"}
_CONSTANT_KEY = re.compile(r"^(eps|c|e)([1-6])([1-6])$")


@dataclass(frozen=True, eq=False)
class MaterialSet:
    """Full piezoelectric constant set of one material in one frame. Arrays are copied and made read-only."""

    name: str
    stiffness_ce: np.ndarray
    piezo_e: np.ndarray
    permittivity_s: np.ndarray
    density: float

    def __post_init__(self) -> None:
        for attribute, shape in (("stiffness_ce", (6, 6)), ("piezo_e", (3, 6)), ("permittivity_s", (3, 3))):
            value = np.array(getattr(self, attribute), dtype=float)
            if value.shape != shape:
                raise ArgumentException(f"{attribute} of {self.name!r} must have shape {shape}, got {value.shape}")
            value.setflags(write=False)
            object.__setattr__(self, attribute, value)
        object.__setattr__(self, "density", float(self.density))

    def __repr__(self) -> str:
        return f"MaterialSet({self.name!r}, density={self.density!r})"

    @property
    def is_piezoelectric(self) -> bool:
        return bool(np.any(self.piezo_e != 0.0))

    def validate(self) -> "MaterialSet":
        """Raise ArgumentException unless the constants describe a physical material, otherwise return self"""
        for label, matrix in (("stiffness", self.stiffness_ce), ("permittivity", self.permittivity_s)):
            scale = np.max(np.abs(matrix))
            if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-9 * scale):
                raise ArgumentException(f"{label} of {self.name!r} is not symmetric")
            if np.min(np.linalg.eigvalsh(matrix)) <= 0.0:
                raise ArgumentException(f"{label} of {self.name!r} is not positive definite")
        if self.density <= 0.0:
            raise ArgumentException(f"density of {self.name!r} must be positive, got {self.density}")
        return self

    def allclose(self, other: "MaterialSet", rtol: float = 1e-10) -> bool:
        """Compare constants with a tolerance relative to the largest entry of each tensor"""
        pairs = (
            (self.stiffness_ce, other.stiffness_ce),
            (self.piezo_e, other.piezo_e),
            (self.permittivity_s, other.permittivity_s),
        )
        for mine, theirs in pairs:
            scale = max(np.max(np.abs(mine)), np.max(np.abs(theirs)), np.finfo(float).tiny)
            if np.max(np.abs(mine - theirs)) > rtol * scale:
                return False
        return abs(self.density - other.density) <= rtol * abs(self.density)


@dataclass(frozen=True)
class EulerZXZ:
    """ZXZ Euler angles in degrees, normalized to [0, 360)"""

    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        for attribute in ("alpha", "beta", "gamma"):
            object.__setattr__(self, attribute, float(getattr(self, attribute)) % 360.0)

    @classmethod
    def rotated_y_cut(cls, theta_deg: float) -> "EulerZXZ":
        return cls(0.0, 90.0 - theta_deg, 0.0)

    def inverse(self) -> "EulerZXZ":
        return EulerZXZ(-self.gamma, -self.beta, -self.alpha)

    def matrix(self) -> np.ndarray:
        return euler_matrix(self)


def _z_rotation(angle: float) -> np.ndarray:
    cos, sin = np.cos(angle), np.sin(angle)
    return np.array([[cos, -sin, 0.0], [sin, cos, 0.0], [0.0, 0.0, 1.0]])


def _x_rotation(angle: float) -> np.ndarray:
    cos, sin = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, cos, -sin], [0.0, sin, cos]])


def euler_matrix(euler: EulerZXZ) -> np.ndarray:
    alpha, beta, gamma = np.radians([euler.alpha, euler.beta, euler.gamma])
    return _z_rotation(alpha) @ _x_rotation(beta) @ _z_rotation(gamma)


def bond_matrix(rotation: np.ndarray) -> np.ndarray:
    """Bond stress transformation matrix M for the rotation, such that c' = M c M^T and e' = R e M^T"""
    bond = np.empty((6, 6))
    for row, (i, j) in enumerate(VOIGT_PAIRS):
        for col, (k, l) in enumerate(VOIGT_PAIRS):
            if k == l:
                bond[row, col] = rotation[i, k] * rotation[j, l]
            else:
                bond[row, col] = rotation[i, k] * rotation[j, l] + rotation[i, l] * rotation[j, k]
    return bond


def rotate(material: MaterialSet, euler: EulerZXZ) -> MaterialSet:
    rotation = euler_matrix(euler)
    bond = bond_matrix(rotation)
    return MaterialSet(
        name=material.name,
        stiffness_ce=bond @ material.stiffness_ce @ bond.T,
        piezo_e=rotation @ material.piezo_e @ bond.T,
        permittivity_s=rotation @ material.permittivity_s @ rotation.T,
        density=material.density,
    )


def stiffness_to_tensor(stiffness: np.ndarray) -> np.ndarray:
    return np.asarray(stiffness)[VOIGT_INDEX[:, :, None, None], VOIGT_INDEX[None, None, :, :]]


def piezo_to_tensor(piezo: np.ndarray) -> np.ndarray:
    return np.asarray(piezo)[:, VOIGT_INDEX]


def rotate_tensor_reference(material: MaterialSet, euler: EulerZXZ) -> MaterialSet:
    """
    Rotate by expanding to full index notation (c_ijkl, e_ikl), transforming every index and contracting back.
    Slow but independent of the Bond matrix, so it serves as the reference for ``rotate``.
    """
    rot = euler_matrix(euler)
    c_full = np.einsum("ip,jq,kr,ls,pqrs->ijkl", rot, rot, rot, rot, stiffness_to_tensor(material.stiffness_ce))
    e_full = np.einsum("ip,kq,lr,pqr->ikl", rot, rot, rot, piezo_to_tensor(material.piezo_e))
    rows = [pair[0] for pair in VOIGT_PAIRS]
    cols = [pair[1] for pair in VOIGT_PAIRS]
    stiffness = np.array([[c_full[i, j, k, l] for (k, l) in VOIGT_PAIRS] for (i, j) in VOIGT_PAIRS])
    piezo = e_full[:, rows, cols]
    return MaterialSet(
        name=material.name,
        stiffness_ce=stiffness,
        piezo_e=piezo,
        permittivity_s=rot @ material.permittivity_s @ rot.T,
        density=material.density,
    )


def coupling_coefficient(material: MaterialSet, i: int, j: int) -> float:
    """Material coupling k²_M_ij = e_ij² / (eps^S_ii c^E_jj), i the field axis (1..3), j the stress index (1..6)"""
    if not 1 <= i <= 3 or not 1 <= j <= 6:
        raise ArgumentException(f"coupling indices must satisfy 1 <= i <= 3 and 1 <= j <= 6, got ({i}, {j})")
    e_ij = material.piezo_e[i - 1, j - 1]
    return float(e_ij**2 / (material.permittivity_s[i - 1, i - 1] * material.stiffness_ce[j - 1, j - 1]))


@dataclass(frozen=True, eq=False)
class CouplingSweep:
    theta_deg: np.ndarray
    curves: Dict[str, np.ndarray]

    @property
    def header(self) -> List[str]:
        return ["theta_deg"] + list(self.curves)

    def rows(self) -> List[List[float]]:
        columns = [self.theta_deg] + list(self.curves.values())
        return [list(map(float, row)) for row in zip(*columns)]


DEFAULT_COUPLING_PAIRS: Tuple[Tuple[int, int], ...] = ((3, 3), (3, 4), (3, 5))


def coupling_sweep(
    material: MaterialSet,
    pairs: Sequence[Tuple[int, int]] = DEFAULT_COUPLING_PAIRS,
    theta_grid: Union[Sequence[float], np.ndarray] = (),
) -> CouplingSweep:
    """Rotated Y-cut sweep: for every theta rotate by (0, 90 - theta, 0) and evaluate each (i, j) coupling"""
    thetas = np.asarray(theta_grid, dtype=float)
    if thetas.ndim != 1 or thetas.size == 0:
        raise ArgumentException("theta grid must be a non-empty 1D sequence")
    steps = np.diff(thetas)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ArgumentException("theta grid must be strictly monotone")
    if not pairs:
        raise ArgumentException("at least one (i, j) coupling pair is required")

    curves = {f"k2_{i}{j}": np.empty(thetas.size) for i, j in pairs}
    for index, theta in enumerate(thetas):
        rotated = rotate(material, EulerZXZ.rotated_y_cut(theta))
        for i, j in pairs:
            curves[f"k2_{i}{j}"][index] = coupling_coefficient(rotated, i, j)
    _LOGGER.debug(f"Coupling sweep of {material.name} over {thetas.size} angles for pairs {list(pairs)}")
    return CouplingSweep(theta_deg=thetas, curves=curves)


def christoffel_matrix(material: MaterialSet, direction: Sequence[float]) -> np.ndarray:
    """Piezoelectrically stiffened Christoffel matrix (Pa) for propagation along ``direction``"""
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    c_full = stiffness_to_tensor(material.stiffness_ce)
    e_full = piezo_to_tensor(material.piezo_e)
    gamma = np.einsum("ijkl,j,k->il", c_full, unit, unit)
    piezo_vector = np.einsum("kij,k,j->i", e_full, unit, unit)
    eps_n = unit @ material.permittivity_s @ unit
    return gamma + np.outer(piezo_vector, piezo_vector) / eps_n


def bulk_velocities(material: MaterialSet, direction: Sequence[float] = (0.0, 0.0, 1.0)) -> np.ndarray:
    """Bulk phase velocities (m/s) along ``direction``, ascending: slow shear, fast shear, quasi-longitudinal"""
    eigenvalues = np.linalg.eigvalsh(christoffel_matrix(material, direction))
    return np.sqrt(np.maximum(eigenvalues, 0.0) / material.density)


def isotropic_stiffness(youngs_modulus: float, poisson_ratio: float) -> np.ndarray:
    lame_lambda = youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio))
    shear_modulus = youngs_modulus / (2.0 * (1.0 + poisson_ratio))
    stiffness = np.zeros((6, 6))
    stiffness[:3, :3] = lame_lambda
    stiffness[np.arange(3), np.arange(3)] = lame_lambda + 2.0 * shear_modulus
    stiffness[np.arange(3, 6), np.arange(3, 6)] = shear_modulus
    return stiffness


def material_from_mapping(name: str, constants: Mapping[str, Any]) -> MaterialSet:
    """
    Build a MaterialSet from data-file keys: ``cIJ`` (I <= J), ``eIJ``, ``epsIJ`` (I <= J) and ``density``, or
    ``youngs_modulus``, ``poisson_ratio`` and ``density`` for an isotropic, non-piezoelectric material.
    Components that are not listed are zero.
    """
    keys = set(constants) - _METADATA_KEYS
    try:
        if keys & {"youngs_modulus", "poisson_ratio"}:
            unknown = keys - _ISOTROPIC_KEYS
            if unknown:
                raise ArgumentException(f"unexpected keys for isotropic material {name!r}: {sorted(unknown)}")
            return MaterialSet(
                name=name,
                stiffness_ce=isotropic_stiffness(float(constants["youngs_modulus"]), float(constants["poisson_ratio"])),
                piezo_e=np.zeros((3, 6)),
                permittivity_s=np.eye(3) * EPSILON_0,
                density=float(constants["density"]),
            )

        stiffness = np.zeros((6, 6))
        piezo = np.zeros((3, 6))
        permittivity = np.zeros((3, 3))
        targets = {"c": stiffness, "e": piezo, "eps": permittivity}
        for key in keys - {"density"}:
            match = _CONSTANT_KEY.match(key)
            if match is None:
                raise ArgumentException(f"unknown constant {key!r} for material {name!r}")
            target = targets[match.group(1)]
            row, col = int(match.group(2)) - 1, int(match.group(3)) - 1
            target[row, col] = float(constants[key])
            if target is not piezo:
                target[col, row] = target[row, col]
        return MaterialSet(
            name=name,
            stiffness_ce=stiffness,
            piezo_e=piezo,
            permittivity_s=permittivity,
            density=float(constants["density"]),
        )
    except ArgumentException:
        raise
    except (KeyError, IndexError) as exc:
        raise ArgumentException(f"incomplete or malformed constants for material {name!r}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ArgumentException(f"non-numeric constant in material {name!r}: {exc}") from exc


def load_material_file(path: Union[str, Path], name: Optional[str] = None) -> MaterialSet:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as stream:
            constants = yaml.safe_load(stream)
    except (OSError, yaml.YAMLError) as exc:
        raise ArgumentException(f"Unable to read material file {path}: {exc}") from exc
    if not isinstance(constants, dict):
        raise ArgumentException(f"material file {path} must contain a key-value mapping")
    material = material_from_mapping(name or path.stem, constants).validate()
    _LOGGER.debug(f"Loaded material {material.name} from {path}")
    return material


def _material_dirs() -> List[Path]:
    dirs = []
    override = os.environ.get(MATERIALS_PATH_ENV_VAR)
    if override:
        dirs.append(Path(override))
    dirs.append(BUNDLED_MATERIALS_DIR)
    return dirs


def available_materials() -> List[str]:
    names = set()
    for directory in _material_dirs():
        if directory.is_dir():
            names.update(path.stem for path in directory.glob("*.yaml"))
    return sorted(names)


def load_material(name: str) -> MaterialSet:
    """Load a material from the override directory (if set) or the bundled database, in the crystal frame"""
    for directory in _material_dirs():
        candidate = directory / f"{name}.yaml"
        if candidate.is_file():
            return load_material_file(candidate, name)
    raise MaterialNotFoundException(name, available_materials())
