"""Run configuration: one YAML document describing array, sources, sweep and outputs.

Every block maps onto a dataclass. Unknown keys are rejected so a typo
cannot silently fall back to a default. Relative file paths are resolved
against the directory holding the config file.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .array_model import ArrayGeometry, ArrayModel, PhysicsConstants, check_scattering_matrix
from .baseline import ScanGrid
from .errors import ConfigError
from .fixtures import SyntheticCouplingSpec, analytic_patterns, read_touchstone, parse_pattern_grid, synthetic_coupling
from .moea import MoeaConfig
from .synthesis import FeasibilitySpec, FovSpec


@dataclass
class GeometryConfig:
    kind: str = "linear"  # linear | planar | explicit
    n: int = 5
    spacing_wl: float = 0.47
    axis: str = "y"
    nx: int = 8
    ny: int = 8
    dx_wl: float = 0.5
    dy_wl: float = 0.5
    positions: list | None = None  # meters, explicit kind only

    def validate(self):
        if self.kind == "linear":
            if self.n < 1 or self.spacing_wl <= 0 or self.axis not in ("x", "y", "z"):
                raise ConfigError("linear geometry needs n >= 1, spacing_wl > 0 and axis in x/y/z")
        elif self.kind == "planar":
            if min(self.nx, self.ny) < 1 or min(self.dx_wl, self.dy_wl) <= 0:
                raise ConfigError("planar geometry needs nx, ny >= 1 and positive spacings")
        elif self.kind == "explicit":
            pos = np.asarray(self.positions if self.positions is not None else [], dtype=float)
            if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
                raise ConfigError("explicit geometry needs positions as a list of [x, y, z] meters")
        else:
            raise ConfigError(f"unknown geometry kind {self.kind!r}")

    def build(self, frequency, constants) -> ArrayGeometry:
        if self.kind == "linear":
            return ArrayGeometry.linear(self.n, self.spacing_wl, frequency, self.axis, constants)
        if self.kind == "planar":
            return ArrayGeometry.planar(self.nx, self.ny, self.dx_wl, self.dy_wl, frequency, constants)
        return ArrayGeometry(np.asarray(self.positions, float), frequency, constants)


@dataclass
class CouplingConfig:
    source: str = "synthetic"  # synthetic | file
    path: str | None = None  # Touchstone .sNp
    gamma: float | list = field(default_factory=lambda: [-0.22, 0.0])  # real or [re, im]
    c0: float = 0.3
    rho_m: float = 0.07
    phase_factor: float = 2.13

    @property
    def gamma_complex(self) -> complex:
        g = self.gamma
        if isinstance(g, (list, tuple)):
            if len(g) != 2:
                raise ConfigError("gamma must be a number or a [re, im] pair")
            return complex(float(g[0]), float(g[1]))
        return complex(float(g))

    def spec(self) -> SyntheticCouplingSpec:
        return SyntheticCouplingSpec(self.gamma_complex, self.c0, self.rho_m, self.phase_factor)

    def validate(self):
        if self.source == "file":
            if not self.path:
                raise ConfigError("coupling source 'file' needs a path")
        elif self.source == "synthetic":
            self.spec()
        else:
            raise ConfigError(f"unknown coupling source {self.source!r}")


@dataclass
class PatternConfig:
    source: str = "analytic"  # analytic | file
    path: str | None = None
    kind: str = "isotropic"  # isotropic | cosine
    exponent: float = 1.0
    broadside: list = field(default_factory=lambda: [1.0, 0.0, 0.0])
    resolution_deg: float = 1.0

    def validate(self):
        if self.source == "file":
            if not self.path:
                raise ConfigError("pattern source 'file' needs a path")
        elif self.source == "analytic":
            if self.kind not in ("isotropic", "cosine"):
                raise ConfigError(f"unknown analytic pattern kind {self.kind!r}")
            if self.exponent < 0:
                raise ConfigError("cosine exponent must be non-negative")
            if not 0 < self.resolution_deg <= 90 or abs(180 / self.resolution_deg - round(180 / self.resolution_deg)) > 1e-9:
                raise ConfigError("pattern resolution must divide 180 degrees")
            if len(self.broadside) != 3 or not np.any(self.broadside):
                raise ConfigError("broadside must be a non-zero 3-vector")
        else:
            raise ConfigError(f"unknown pattern source {self.source!r}")


@dataclass
class AxisRange:
    start: float
    stop: float
    step: float

    def values(self):
        if self.step <= 0 or self.stop < self.start:
            raise ConfigError(f"invalid range {self.start}:{self.step}:{self.stop}")
        n = int(round((self.stop - self.start) / self.step)) + 1
        return self.start + self.step * np.arange(n)


@dataclass
class ScanConfig:
    kind: str = "cut"  # cut | lattice
    axis: str = "phi"
    fixed: float = 90.0
    start: float = -90.0
    stop: float = 90.0
    step: float = 2.0
    boresight: float | list = 0.0  # swept value for a cut, [theta, phi] for a lattice
    thetas: AxisRange | None = None
    phis: AxisRange | None = None

    def validate(self):
        if self.kind == "cut":
            if self.axis not in ("theta", "phi"):
                raise ConfigError("cut axis must be 'theta' or 'phi'")
            AxisRange(self.start, self.stop, self.step).values()
        elif self.kind == "lattice":
            if self.thetas is None or self.phis is None:
                raise ConfigError("lattice scan needs 'thetas' and 'phis' ranges")
            self.thetas.values()
            self.phis.values()
            if not (isinstance(self.boresight, (list, tuple)) and len(self.boresight) == 2):
                raise ConfigError("lattice boresight must be [theta, phi]")
        else:
            raise ConfigError(f"unknown scan grid kind {self.kind!r}")

    def build(self) -> ScanGrid:
        if self.kind == "cut":
            return ScanGrid.cut(self.start, self.stop, self.step, self.axis, self.fixed, float(self.boresight))
        return ScanGrid.lattice(self.thetas.values(), self.phis.values(), tuple(self.boresight))


@dataclass
class FeasibilityConfig:
    mode: str = "phase-only"
    magnitude_bounds: list = field(default_factory=lambda: [0.0, 1.0])
    phase_step_deg: float | None = None

    def build(self) -> FeasibilitySpec:
        return FeasibilitySpec(self.mode, tuple(self.magnitude_bounds), self.phase_step_deg)


@dataclass
class MoeaBlock:
    population_size: int = 50
    iterations: int = 1000
    eta_c: float = 15.0
    eta_m: float = 20.0
    mutation_prob: float | None = None
    eps: list = field(default_factory=lambda: [5e-3, 2.5e-2])
    seed: int = 0

    def build(self) -> MoeaConfig:
        return MoeaConfig(self.population_size, self.iterations, self.eta_c, self.eta_m, self.mutation_prob, self.seed)

    def validate(self):
        self.build().validate()
        if len(self.eps) != 2 or min(self.eps) <= 0:
            raise ConfigError("eps must be two positive box sizes")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("master seed must be an unsigned 64-bit integer")


@dataclass
class FovConfig:
    zeta_th: float = 0.10
    psi_rule: str = "scan-loss"  # scan-loss | absolute
    scan_loss_db: float = -6.0
    psi_th: float | None = None  # W/sr for the absolute rule

    def build(self) -> FovSpec:
        return FovSpec(self.zeta_th, self.psi_rule, self.scan_loss_db, self.psi_th)


@dataclass
class SelectionConfig:
    criterion: str = "match-std"  # match-std | min-refl | knee
    tau: float = 1e-3

    def validate(self):
        if self.criterion not in ("match-std", "min-refl", "knee"):
            raise ConfigError(f"unknown selection criterion {self.criterion!r}")
        if not 0 <= self.tau < 1:
            raise ConfigError("tau must lie in [0, 1)")


@dataclass
class PhysicsConfig:
    free_space_impedance: float = 376.730
    speed_of_light: float = 299_792_458.0

    def build(self) -> PhysicsConstants:
        try:
            return PhysicsConstants(self.free_space_impedance, self.speed_of_light)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    frequency_hz: float = 2.0e9
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    patterns: PatternConfig = field(default_factory=PatternConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    feasibility: FeasibilityConfig = field(default_factory=FeasibilityConfig)
    moea: MoeaBlock = field(default_factory=MoeaBlock)
    fov: FovConfig = field(default_factory=FovConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    output_dir: str = "out"
    workers: int = 1
    warm_start: bool = False
    base_dir: str = field(default=".", repr=False, compare=False)

    def validate(self) -> "RunConfig":
        # YAML 1.1 reads "2e9" (no sign in the exponent) as a string
        self.frequency_hz = _number(self.frequency_hz, "frequency_hz")
        if not (self.frequency_hz > 0 and math.isfinite(self.frequency_hz)):
            raise ConfigError("frequency_hz must be a positive number")
        self.moea.eps = [_number(e, "moea.eps") for e in self.moea.eps]
        if int(self.workers) < 1:
            raise ConfigError("workers must be at least 1")
        self.geometry.validate()
        self.coupling.validate()
        self.patterns.validate()
        self.scan.validate()
        self.moea.validate()
        self.selection.validate()
        self.physics.build()
        try:
            self.feasibility.build()
            self.fov.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    # ------------------------------------------------------------ builders

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def build_geometry(self) -> ArrayGeometry:
        return self.geometry.build(self.frequency_hz, self.physics.build())

    def build_coupling(self, geometry: ArrayGeometry):
        if self.coupling.source == "file":
            return read_touchstone(self.resolve(self.coupling.path), self.frequency_hz, geometry.n_elements)
        return synthetic_coupling(geometry, self.coupling.spec())

    def build_patterns(self, geometry: ArrayGeometry):
        p = self.patterns
        if p.source == "file":
            patterns = parse_pattern_grid(self.resolve(p.path).read_text())
            return patterns
        return analytic_patterns(p.kind, geometry, p.resolution_deg, p.exponent, tuple(p.broadside))

    def build_model(self) -> ArrayModel:
        geometry = self.build_geometry()
        S = self.build_coupling(geometry)
        check_scattering_matrix(S, geometry.n_elements)
        return ArrayModel(geometry, S, self.build_patterns(geometry))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d


def _number(value, name) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be a number")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls) if f.name != "base_dir"}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        nested = _NESTED.get((cls, name))
        kwargs[name] = _build(nested, value, f"{where}.{name}") if nested and value is not None else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


_NESTED = {
    (RunConfig, "geometry"): GeometryConfig,
    (RunConfig, "coupling"): CouplingConfig,
    (RunConfig, "patterns"): PatternConfig,
    (RunConfig, "scan"): ScanConfig,
    (RunConfig, "feasibility"): FeasibilityConfig,
    (RunConfig, "moea"): MoeaBlock,
    (RunConfig, "fov"): FovConfig,
    (RunConfig, "selection"): SelectionConfig,
    (RunConfig, "physics"): PhysicsConfig,
    (ScanConfig, "thetas"): AxisRange,
    (ScanConfig, "phis"): AxisRange,
}


def config_from_dict(data, base_dir=".") -> RunConfig:
    cfg = _build(RunConfig, data or {}, "config")
    cfg.base_dir = str(base_dir)
    try:
        return cfg.validate()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return config_from_dict(data, path.parent)
