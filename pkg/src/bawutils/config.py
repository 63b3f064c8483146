"""Run configuration sections. Each section maps to one top-level key of the YAML config file."""
from typing import Any, Dict, List, Optional, Sequence, Tuple, Type

import numpy as np

from bawutils.design_rules import DEFAULT_DIE_SIDE, DesignMargins
from bawutils.errors import ConfigException
from bawutils.material_tensors import EulerZXZ, MaterialSet, load_material, load_material_file, rotate
from bawutils.persistent_config import PersistedAttribute, PersistedConfig
from bawutils.sparams import DEFAULT_WINDOW, DEFAULT_Z0, KERNELS
from bawutils.thickness_mode import DEFAULT_Q_MECH, PlateSpec, frequency_grid, impedance_band


def to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "yes", "on", "1", "false", "no", "off", "0"):
        return value.lower() in ("true", "yes", "on", "1")
    raise ValueError(f"expected a boolean, got {value!r}")


def to_angles(value: Any) -> Tuple[float, float, float]:
    angles = tuple(float(angle) for angle in value)
    if len(angles) != 3:
        raise ValueError(f"expected three Euler angles, got {len(angles)}")
    return angles  # type: ignore[return-value]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigException(message)


class MaterialConfig(PersistedConfig):
    """Crystal constants (by database name or file path) and the ZXZ Euler angles of the cut"""

    def __init__(
        self, name: str = "LiNbO3_congruent", file: str = "", euler_deg: Sequence[float] = (0.0, 54.0, 0.0)
    ) -> None:
        self.name = name
        self.file = file
        self.euler_deg = to_angles(euler_deg)
        _require(bool(name or file), "material needs a name or a file")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("name", "material", "name"),
            PersistedAttribute("file", None, "file"),
            PersistedAttribute("euler_deg", None, "euler_deg", to_angles),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()

    @property
    def euler(self) -> EulerZXZ:
        return EulerZXZ(*self.euler_deg)

    def crystal(self) -> MaterialSet:
        """Constants in the crystal frame"""
        return load_material_file(self.file) if self.file else load_material(self.name)

    def cut(self) -> MaterialSet:
        """Constants rotated into the plate frame"""
        return rotate(self.crystal(), self.euler)


class PlateConfig(PersistedConfig):
    def __init__(self, thickness: float = 300e-6, active_radius: float = 7e-3, q_mech: float = DEFAULT_Q_MECH) -> None:
        self.thickness = thickness
        self.active_radius = active_radius
        self.q_mech = q_mech
        _require(thickness > 0, f"plate thickness must be positive, got {thickness}")
        _require(active_radius > 0, f"active radius must be positive, got {active_radius}")
        _require(q_mech > 0, f"mechanical Q must be positive, got {q_mech}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("thickness", "thickness", "thickness", float),
            PersistedAttribute("active_radius", None, "active_radius", float),
            PersistedAttribute("q_mech", None, "q_mech", float),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()

    def plate_spec(self, material: MaterialSet) -> PlateSpec:
        return PlateSpec.from_radius(self.thickness, material, self.active_radius, self.q_mech)


class GridConfig(PersistedConfig):
    """Frequency grid. Leaving start and stop at zero centres the grid on the plate's own resonances."""

    def __init__(self, start: float = 0.0, stop: float = 0.0, points: int = 4001, spacing: str = "linear") -> None:
        self.start = start
        self.stop = stop
        self.points = points
        self.spacing = spacing
        _require(points >= 2, f"grid needs at least 2 points, got {points}")
        _require(spacing in ("linear", "log"), f"grid spacing must be linear or log, got {spacing!r}")
        if not self.automatic:
            _require(0 < start < stop, f"grid must satisfy 0 < start < stop, got start={start}, stop={stop}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("start", None, "start", float),
            PersistedAttribute("stop", None, "stop", float),
            PersistedAttribute("points", None, "points", int),
            PersistedAttribute("spacing", None, "spacing"),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()

    @property
    def automatic(self) -> bool:
        return self.start == 0.0 and self.stop == 0.0

    def freqs(self, plate: Optional[PlateSpec] = None) -> np.ndarray:
        if self.automatic:
            if plate is None:
                raise ConfigException("an automatic frequency grid needs a plate to centre on")
            return impedance_band(plate, self.points)
        return frequency_grid(self.start, self.stop, self.points, self.spacing)


class CouplingSweepConfig(PersistedConfig):
    def __init__(self, theta_start: float = 0.0, theta_stop: float = 180.0, points: int = 181) -> None:
        self.theta_start = theta_start
        self.theta_stop = theta_stop
        self.points = points
        _require(points >= 2, f"coupling sweep needs at least 2 angles, got {points}")
        _require(theta_stop > theta_start, f"theta_stop must exceed theta_start, got {theta_start}..{theta_stop}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("theta_start", None, "theta_start", float),
            PersistedAttribute("theta_stop", None, "theta_stop", float),
            PersistedAttribute("points", None, "points", int),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()

    def theta_grid(self) -> np.ndarray:
        return np.linspace(self.theta_start, self.theta_stop, self.points)


class ImpedanceConfig(PersistedConfig):
    """Forward model for the impedance command: the 1D plate model, or a BVD circuit built from target values"""

    MODELS = ("thickness", "bvd")

    def __init__(
        self, model: str = "thickness", fs: float = 10.14e6, k2: float = 0.296, q: float = 2000.0, c0: float = 1.8e-10
    ) -> None:
        self.model = model
        self.fs = fs
        self.k2 = k2
        self.q = q
        self.c0 = c0
        _require(model in self.MODELS, f"impedance model must be one of {', '.join(self.MODELS)}, got {model!r}")
        _require(fs > 0 and q > 0 and c0 > 0, "BVD targets fs, q and c0 must be positive")
        _require(0 < k2 < 1, f"BVD target k2 must lie in (0, 1), got {k2}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("model", None, "model"),
            PersistedAttribute("fs", None, "fs", float),
            PersistedAttribute("k2", None, "k2", float),
            PersistedAttribute("q", None, "q", float),
            PersistedAttribute("c0", None, "c0", float),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()


class SparamsConfig(PersistedConfig):
    def __init__(self, window: int = DEFAULT_WINDOW, z0: float = DEFAULT_Z0, kernel: str = "mean") -> None:
        self.window = window
        self.z0 = z0
        self.kernel = kernel
        _require(window >= 1, f"smoothing window must be at least 1, got {window}")
        _require(z0 > 0, f"reference impedance must be positive, got {z0}")
        _require(kernel in KERNELS, f"smoothing kernel must be one of {', '.join(KERNELS)}, got {kernel!r}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("window", "window", "window", int),
            PersistedAttribute("z0", "z0", "z0", float),
            PersistedAttribute("kernel", None, "kernel"),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()


class DispersionConfig(PersistedConfig):
    """Zero for ``max_freq`` and ``eval_freq`` means 1.5 times and 1 times the short-circuit S1 cutoff"""

    def __init__(
        self,
        n_elements: int = 32,
        kx_points: int = 121,
        max_kx_t: float = 8.0,
        max_freq: float = 0.0,
        eval_freq: float = 0.0,
        azimuth_deg: float = 0.0,
    ) -> None:
        self.n_elements = n_elements
        self.kx_points = kx_points
        self.max_kx_t = max_kx_t
        self.max_freq = max_freq
        self.eval_freq = eval_freq
        self.azimuth_deg = azimuth_deg
        _require(n_elements >= 8, f"at least 8 elements are needed through the thickness, got {n_elements}")
        _require(kx_points >= 2, f"at least 2 kx points are needed, got {kx_points}")
        _require(max_kx_t > 0, f"max_kx_t must be positive, got {max_kx_t}")
        _require(max_freq >= 0 and eval_freq >= 0, "max_freq and eval_freq must not be negative")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("n_elements", None, "n_elements", int),
            PersistedAttribute("kx_points", None, "kx_points", int),
            PersistedAttribute("max_kx_t", None, "max_kx_t", float),
            PersistedAttribute("max_freq", None, "max_freq", float),
            PersistedAttribute("eval_freq", None, "eval_freq", float),
            PersistedAttribute("azimuth_deg", None, "azimuth_deg", float),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()


class DesignConfig(PersistedConfig):
    def __init__(
        self,
        target_fs: float = 10.14e6,
        gap_margin: float = 0.4,
        ring_margin: float = 0.5,
        die_side: float = DEFAULT_DIE_SIDE,
        strict: bool = False,
    ) -> None:
        self.target_fs = target_fs
        self.gap_margin = gap_margin
        self.ring_margin = ring_margin
        self.die_side = die_side
        self.strict = strict
        _require(target_fs > 0, f"target fs must be positive, got {target_fs}")
        _require(0 <= gap_margin < 1 and 0 <= ring_margin < 1, "design margins must lie in [0, 1)")
        _require(die_side > 0, f"die side must be positive, got {die_side}")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("target_fs", None, "target_fs", float),
            PersistedAttribute("gap_margin", None, "gap_margin", float),
            PersistedAttribute("ring_margin", None, "ring_margin", float),
            PersistedAttribute("die_side", None, "die_side", float),
            PersistedAttribute("strict", "strict", "strict", to_bool),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()

    @property
    def margins(self) -> DesignMargins:
        return DesignMargins(gap=self.gap_margin, ring=self.ring_margin)


class OutputConfig(PersistedConfig):
    def __init__(self, directory: str = "out", plots: bool = False) -> None:
        self.directory = directory
        self.plots = plots
        _require(bool(directory), "output directory must not be empty")

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes() + [
            PersistedAttribute("directory", "out", "directory"),
            PersistedAttribute("plots", "plots", "plots", to_bool),
        ]

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        return super()._get_subconfigs()


class RunConfig(PersistedConfig):
    """Complete configuration of one command run; every section is optional"""

    # pylint:disable=too-many-arguments
    def __init__(
        self,
        material: Optional[MaterialConfig] = None,
        plate: Optional[PlateConfig] = None,
        grid: Optional[GridConfig] = None,
        coupling_sweep: Optional[CouplingSweepConfig] = None,
        impedance: Optional[ImpedanceConfig] = None,
        sparams: Optional[SparamsConfig] = None,
        dispersion: Optional[DispersionConfig] = None,
        design: Optional[DesignConfig] = None,
        output: Optional[OutputConfig] = None,
    ) -> None:
        self.material = material or MaterialConfig()
        self.plate = plate or PlateConfig()
        self.grid = grid or GridConfig()
        self.coupling_sweep = coupling_sweep or CouplingSweepConfig()
        self.impedance = impedance or ImpedanceConfig()
        self.sparams = sparams or SparamsConfig()
        self.dispersion = dispersion or DispersionConfig()
        self.design = design or DesignConfig()
        self.output = output or OutputConfig()

    @classmethod
    def _get_persisted_attributes(cls) -> List[PersistedAttribute]:
        return super()._get_persisted_attributes()

    @classmethod
    def _get_subconfigs(cls) -> Dict[str, Type["PersistedConfig"]]:
        subconfigs = super()._get_subconfigs()
        subconfigs.update(
            {
                "material": MaterialConfig,
                "plate": PlateConfig,
                "grid": GridConfig,
                "coupling_sweep": CouplingSweepConfig,
                "impedance": ImpedanceConfig,
                "sparams": SparamsConfig,
                "dispersion": DispersionConfig,
                "design": DesignConfig,
                "output": OutputConfig,
            }
        )
        return subconfigs
