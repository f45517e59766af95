"""Domain types for the SELI misinformation game and the reference scenario.

States are indexed S=0, E=1, L=2, I=3 throughout the package. Per-class
quantities are stored in arrays ordered like ``NetworkModel.classes``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
import numpy as np

from .errors import InvalidConfig

S, E, L, I = 0, 1, 2, 3
STATE_LABELS = ("S", "E", "L", "I")

DEFAULT_NU = 0.5
DEFAULT_KAPPA = 1.0
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 100
DEFAULT_N_STEPS = 900

_PROB_FIELDS = ("lam", "beta_E", "gamma_E", "beta_L", "gamma_L")


@dataclass(frozen=True)
class NodeClassParams:
    """Constants of one (degree, type) class.

    ``delta`` is the per-step probability of remaining in E or L while the
    received item is inspected. ``kappa`` prices that delay in QoI units.
    With ``scaling_enabled`` the QoI of every accepting branch is shifted by
    ``degree + 2`` so the acceptance slope stays positive; ``scale_target``
    additionally shifts the target by the same amount.
    """

    degree: int
    type_id: int = 0
    lam: float = 0.2
    delta: float = 0.0
    beta_E: float = 0.5
    gamma_E: float = 0.5
    beta_L: float = 0.5
    gamma_L: float = 0.5
    nu: float = DEFAULT_NU
    infection_cost: float = 1.0
    target_qoi: float = 1.0
    kappa: float = DEFAULT_KAPPA
    scaling_enabled: bool = True
    scale_target: bool = False

    @property
    def key(self) -> tuple[int, int]:
        return (self.degree, self.type_id)

    @property
    def scale_shift(self) -> float:
        return float(self.degree + 2) if self.scaling_enabled else 0.0

    def violations(self) -> list[str]:
        tag = f"class (k={self.degree}, i={self.type_id})"
        out = []
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 1:
            out.append(f"{tag}: degree must be a positive integer, got {self.degree!r}")
        for name in _PROB_FIELDS:
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                out.append(f"{tag}: {name}={v} outside [0, 1]")
        if not (0.0 <= self.delta < 1.0):
            out.append(f"{tag}: delta={self.delta} outside [0, 1)")
        if abs(self.beta_E + self.gamma_E - 1.0) > 1e-12:
            out.append(f"{tag}: beta_E + gamma_E = {self.beta_E + self.gamma_E} != 1")
        if abs(self.beta_L + self.gamma_L - 1.0) > 1e-12:
            out.append(f"{tag}: beta_L + gamma_L = {self.beta_L + self.gamma_L} != 1")
        for name in ("nu", "infection_cost", "kappa"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                out.append(f"{tag}: {name}={v} must be a finite nonnegative number")
        if not math.isfinite(self.target_qoi):
            out.append(f"{tag}: target_qoi must be finite")
        return out


@dataclass(frozen=True)
class ClassArrays:
    """Column view of the class list; same attribute names as NodeClassParams."""

    degree: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    beta_E: np.ndarray
    gamma_E: np.ndarray
    beta_L: np.ndarray
    gamma_L: np.ndarray
    nu: np.ndarray
    infection_cost: np.ndarray
    target_qoi: np.ndarray
    kappa: np.ndarray
    scale_shift: np.ndarray
    scale_target: np.ndarray


@dataclass(frozen=True)
class NetworkModel:
    classes: tuple[NodeClassParams, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def __len__(self):
        return len(self.classes)

    @cached_property
    def mean_degree(self) -> float:
        return float(np.dot(self.degrees, self.weights))

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([c.degree for c in self.classes], dtype=float)

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @cached_property
    def link_weights(self) -> np.ndarray:
        """k * pi_ik / <k>: the share of link endpoints held by each class."""
        return self.degrees * self.weight_array / self.mean_degree

    @cached_property
    def arrays(self) -> ClassArrays:
        cs = self.classes

        def col(name):
            return np.array([float(getattr(c, name)) for c in cs])

        return ClassArrays(
            degree=self.degrees,
            lam=col("lam"),
            delta=col("delta"),
            beta_E=col("beta_E"),
            gamma_E=col("gamma_E"),
            beta_L=col("beta_L"),
            gamma_L=col("gamma_L"),
            nu=col("nu"),
            infection_cost=col("infection_cost"),
            target_qoi=col("target_qoi"),
            kappa=col("kappa"),
            scale_shift=np.array([c.scale_shift for c in cs]),
            scale_target=np.array([c.scale_target for c in cs], dtype=bool),
        )

    @property
    def max_degree(self) -> int:
        return max(c.degree for c in self.classes)

    def index_of(self, degree: int, type_id: int = 0) -> int:
        for j, c in enumerate(self.classes):
            if c.key == (degree, type_id):
                return j
        raise KeyError(f"no class with degree={degree}, type_id={type_id}")

    def with_class(self, index: int, **changes) -> "NetworkModel":
        classes = list(self.classes)
        classes[index] = replace(classes[index], **changes)
        return NetworkModel(tuple(classes), self.weights)

    def with_all(self, **changes) -> "NetworkModel":
        return NetworkModel(tuple(replace(c, **changes) for c in self.classes), self.weights)

    def violations(self) -> list[str]:
        out = []
        if not self.classes:
            return ["network has no classes"]
        if len(self.weights) != len(self.classes):
            out.append(f"{len(self.weights)} weights for {len(self.classes)} classes")
        for c in self.classes:
            out.extend(c.violations())
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            out.append("weights must be finite and nonnegative")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > 1e-12:
            out.append(f"weights sum {total:.12g}, expected 1")
        keys = [c.key for c in self.classes]
        if len(set(keys)) != len(keys):
            out.append("duplicate (degree, type_id) pairs")
        if not out and not self.mean_degree > 0:
            out.append("mean degree must be positive")
        return out


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    n_steps: int = DEFAULT_N_STEPS

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.n_steps * factor)

    def violations(self) -> list[str]:
        out = []
        if not (isinstance(self.n_steps, (int, np.integer)) and self.n_steps >= 1):
            out.append(f"n_steps must be a positive integer, got {self.n_steps!r}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            out.append(f"horizon must be positive, got {self.horizon!r}")
        return out


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkModel
    grid: TimeGrid
    tolerance: float = DEFAULT_TOL
    max_iterations: int = DEFAULT_MAX_ITER
    damping: float = 1.0
    initial_alpha: float = 0.5
    seed: int = 0
    output_dir: str = "out"
    # keys filled from defaults when loaded from a file
    defaults_applied: tuple[str, ...] = field(default=(), compare=False)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def with_network(self, network: NetworkModel) -> "ScenarioConfig":
        return replace(self, network=network)


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """Check every invariant and populate cached network quantities.

    Raises InvalidConfig listing all violations at once.
    """
    problems = list(config.network.violations())
    problems.extend(config.grid.violations())
    if not (config.tolerance > 0):
        problems.append(f"tolerance must be > 0, got {config.tolerance}")
    if not (isinstance(config.max_iterations, (int, np.integer)) and config.max_iterations >= 1):
        problems.append(f"max_iterations must be >= 1, got {config.max_iterations!r}")
    if not (0.0 < config.damping <= 1.0):
        problems.append(f"damping must lie in (0, 1], got {config.damping}")
    if not (0.0 <= config.initial_alpha <= 1.0):
        problems.append(f"initial_alpha must lie in [0, 1], got {config.initial_alpha}")
    if problems:
        raise InvalidConfig(problems)
    net = config.network
    net.mean_degree, net.arrays, net.link_weights  # noqa: B018 - warm caches
    return config


REF_DEGREES = (1, 10, 15, 20)
REF_WEIGHTS = (0.4, 0.3, 0.2, 0.1)
REF_COSTS = (1.0, 10.0, 20.0, 30.0)
REF_DELTAS = (0.0, 0.4, 0.3, 0.3)
REF_BETA_E = (0.5, 0.3, 0.2, 0.1)
REF_BETA_L = (0.5, 0.6, 0.7, 0.8)
REF_LAMBDA = 0.2
REF_HORIZON = 0.9


def reference_network(nu: float = DEFAULT_NU, kappa: float = DEFAULT_KAPPA, scaling: bool = True,
                  scale_target: bool = False) -> NetworkModel:
    classes = []
    for k, c, d, be, bl in zip(REF_DEGREES, REF_COSTS, REF_DELTAS, REF_BETA_E, REF_BETA_L):
        classes.append(NodeClassParams(
            degree=k, type_id=0, lam=REF_LAMBDA, delta=d,
            beta_E=be, gamma_E=1.0 - be, beta_L=bl, gamma_L=1.0 - bl,
            nu=nu, infection_cost=c, target_qoi=float(k), kappa=kappa,
            scaling_enabled=scaling, scale_target=scale_target,
        ))
    return NetworkModel(tuple(classes), REF_WEIGHTS)


def reference_scenario(nu: float = DEFAULT_NU, kappa: float = DEFAULT_KAPPA, *, scaling: bool = True,
                   scale_target: bool = False, n_steps: int = DEFAULT_N_STEPS,
                   **overrides) -> ScenarioConfig:
    """Four-class hierarchical network with degrees 1, 10, 15, 20 over 0.9 s."""
    cfg = ScenarioConfig(
        network=reference_network(nu, kappa, scaling, scale_target),
        grid=TimeGrid(REF_HORIZON, n_steps),
        **overrides,
    )
    return validate(cfg)


def single_class_scenario(degree: int = 1, *, horizon: float = 0.9, n_steps: int = DEFAULT_N_STEPS, **params) -> ScenarioConfig:
    params.setdefault("target_qoi", float(degree))
    cls = NodeClassParams(degree=degree, **params)
    net = NetworkModel((cls,), (1.0,))
    return validate(ScenarioConfig(net, TimeGrid(horizon, n_steps)))
