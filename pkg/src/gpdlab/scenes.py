"""Scene configuration: declarative descriptions of the objects the
verification suites run on.

A scene file is TOML.  Example::

    [scene]
    kind = "gauge"            # pair | group | bundle | gauge
    group = "SO3"             # SO3 | Heisenberg3 (where applicable)
    cocycle = "x"             # theta(x); transition is exp(theta·B)
    grid = 32
    seed = 0

    [integration]
    steps = 120

    [tolerances]              # optional per-check overrides
    axioms = 1e-9

The cocycle expression gives the angle of a one-parameter-subgroup
transition function; "trivial" is accepted as a shorthand for the
constant identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import ExpressionError, compile_expression
from .groupoids import (GaugeGroupoid, GroupBundle, GroupOverPoint,
                        PairGroupoid, PrincipalBundle)
from .manifolds import make_group


class ConfigError(ValueError):
    pass


@dataclass
class SceneConfig:
    kind: str = "pair"
    group: str = "SO3"
    cocycle: str = "0.4*sin(x) + 0.2*cos(2*x)"
    arcs: list = None
    grid: int = 32
    seed: int = 0
    steps: int = 100
    tolerances: dict = field(default_factory=dict)

    KINDS = ("pair", "group", "bundle", "gauge")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown scene kind {self.kind!r} "
                              f"(expected one of {', '.join(self.KINDS)})")
        if self.grid < 4:
            raise ConfigError("grid must be at least 4")
        if self.steps < 1:
            raise ConfigError("steps must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        for name, tol in self.tolerances.items():
            if not (isinstance(tol, (int, float)) and tol > 0):
                raise ConfigError(f"tolerance {name!r} must be positive")

    @classmethod
    def from_file(cls, path):
        try:
            import tomllib as tomli
        except ImportError:
            import tomli

        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        scene = dict(raw.get("scene", {}))
        integ = dict(raw.get("integration", {}))
        tols = dict(raw.get("tolerances", {}))
        known = {"kind", "group", "cocycle", "arcs", "grid", "seed"}
        unknown = set(scene) - known
        if unknown:
            raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
        return cls(kind=scene.get("kind", "pair"),
                   group=scene.get("group", "SO3"),
                   cocycle=scene.get("cocycle",
                                     "0.4*sin(x) + 0.2*cos(2*x)"),
                   arcs=scene.get("arcs"),
                   grid=int(scene.get("grid", 32)),
                   seed=int(scene.get("seed", 0)),
                   steps=int(integ.get("steps", 100)),
                   tolerances=tols)

    # -- construction ------------------------------------------------------
    def cocycle_fn(self, group):
        if self.cocycle.strip() == "trivial":
            n = group.n
            return lambda x: np.eye(n, dtype=object)
        try:
            theta = compile_expression(self.cocycle, variables=("x",))
        except ExpressionError as exc:
            raise ConfigError(f"bad cocycle expression: {exc}") from exc
        B = group.algebra_basis()[-1]

        def k01(x):
            return group.exp(theta(x) * np.asarray(B, dtype=object))

        return k01

    def build(self):
        """Instantiate the configured groupoid (plus the bundle for
        gauge scenes)."""
        if self.kind == "pair":
            return {"groupoid": PairGroupoid()}
        group = make_group(self.group)
        if self.kind == "group":
            return {"groupoid": GroupOverPoint(group)}
        if self.kind == "bundle":
            return {"groupoid": GroupBundle(group)}
        bundle = PrincipalBundle(group, arcs=self.arcs,
                                 cocycle=self.cocycle_fn(group))
        return {"groupoid": GaugeGroupoid(bundle), "bundle": bundle}

    def rng(self):
        return np.random.default_rng(self.seed)
