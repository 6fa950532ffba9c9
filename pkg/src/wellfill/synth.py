"""Seeded synthetic well logs with configurable inter-property laws.

Each property starts from a base signal: piecewise-constant layer levels
plus a stationary AR(1) walk.  A property may then be coupled to others::

    value = intercept + base_weight * base + sum(a_j * x_j) + sum(b_j * x_j**2) + noise

and is finally clamped to a plausible physical range.  Wells sit on a square
grid so their neighbor order is known in advance.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .rng import StableRng, child_seed
from .synthesis import GapSpec, inject_gaps
from .wells import PROPERTIES, CoordSystem, PropertyKind, WellHeader, WellLog

PHYSICAL_RANGE = {
    PropertyKind.NPHI: (0.0, 1.0),
    PropertyKind.GR: (0.0, 300.0),
    PropertyKind.RHOB: (1.0, 3.5),
    PropertyKind.VP: (40.0, 240.0),
}


@dataclass(frozen=True)
class PropertyLaw:
    level_mean: float = 0.0
    level_std: float = 0.0
    walk_std: float = 0.0
    walk_phi: float = 0.98
    base_weight: float = 1.0
    intercept: float = 0.0
    linear: dict = field(default_factory=dict)  # source property name -> coefficient
    quadratic: dict = field(default_factory=dict)
    noise_std: float = 0.0

    def __post_init__(self):
        if self.level_std < 0 or self.walk_std < 0 or self.noise_std < 0:
            raise ValueError("standard deviations must be non-negative")
        if not 0 <= self.walk_phi < 1:
            raise ValueError("walk_phi must lie in [0, 1)")

    def sources(self) -> set[PropertyKind]:
        return {PropertyKind(s) for s in (*self.linear, *self.quadratic)}

    def perturbed(self, rng: StableRng, spread: float) -> "PropertyLaw":
        """Coupling coefficients and intercept scaled by (1 + spread * z) each."""
        if spread == 0 or not (self.linear or self.quadratic):
            return self
        lin = {k: v * (1.0 + spread * rng.normal()) for k, v in sorted(self.linear.items())}
        quad = {k: v * (1.0 + spread * rng.normal()) for k, v in sorted(self.quadratic.items())}
        return replace(self, linear=lin, quadratic=quad,
                       intercept=self.intercept * (1.0 + spread * rng.normal()))


def _law_order(laws: dict[PropertyKind, PropertyLaw]) -> list[PropertyKind]:
    done: list[PropertyKind] = []
    pending = list(PROPERTIES)
    while pending:
        ready = [k for k in pending if laws[k].sources() <= set(done)]
        if not ready:
            raise ValueError(f"cyclic coupling among {', '.join(k.value for k in pending)}")
        done.extend(ready)
        pending = [k for k in pending if k not in ready]
    return done


@dataclass(frozen=True)
class SynthSpec:
    n_wells: int = 10
    extent: float = 2000.0
    step: float = 0.15
    start_depth: float = 100.0
    layer_thickness: float = 20.0  # mean, meters
    laws: dict = field(default_factory=dict)  # PropertyKind -> PropertyLaw
    law_spread: float = 0.0
    real_gaps: GapSpec | None = field(default_factory=lambda: GapSpec(8.0, 4.0, 1.0, aligned=False))
    top_omission: float = 0.05  # max omitted fraction of the extent at the top
    grid_spacing: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.n_wells < 1 or not (self.extent > 0 and self.step > 0 and self.layer_thickness > 0):
            raise ValueError("n_wells, extent, step and layer_thickness must be positive")
        if self.law_spread < 0 or not 0 <= self.top_omission < 0.5 or not self.grid_spacing > 0:
            raise ValueError("invalid law_spread, top_omission or grid_spacing")
        missing = [k.value for k in PROPERTIES if k not in self.laws]
        if missing:
            raise ValueError(f"no generative law for {', '.join(missing)}")

    @property
    def n_rows(self) -> int:
        return int(math.floor(self.extent / self.step + 1e-9)) + 1

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("laws", "real_gaps")}
        d["laws"] = {k.value: asdict(v) for k, v in self.laws.items()}
        d["real_gaps"] = None if self.real_gaps is None else asdict(self.real_gaps)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        if "preset" in d:
            base = preset(d.pop("preset"))
            laws = base.laws
        else:
            base, laws = cls, {}
        if "laws" in d:
            laws = {PropertyKind(k.upper()): PropertyLaw(**v) for k, v in d.pop("laws").items()}
        if "real_gaps" in d:
            rg = d.pop("real_gaps")
            d["real_gaps"] = None if rg is None else GapSpec(**rg)
        if isinstance(base, SynthSpec):
            return replace(base, laws=laws, **d)
        return cls(laws=laws, **d)

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _base_signal(law: PropertyLaw, n: int, step: float, layer_thickness: float, rng: StableRng) -> np.ndarray:
    n_layers = max(1, int(round(n * step / layer_thickness)))
    cuts = np.sort(np.floor(rng.uniform(n_layers - 1) * n).astype(np.int64))
    levels = law.level_mean + law.level_std * rng.normal(size=n_layers)
    layer_of_row = np.searchsorted(cuts, np.arange(n), side="right")
    base = levels[layer_of_row]
    if law.walk_std > 0:
        shocks = law.walk_std * rng.normal(size=n)
        # start from the stationary distribution
        shocks[0] /= math.sqrt(1.0 - law.walk_phi ** 2)
        base = base + lfilter([1.0], [1.0, -law.walk_phi], shocks)
    return base


def grid_position(index: int, n_wells: int, spacing: float) -> tuple[float, float]:
    cols = int(math.ceil(math.sqrt(n_wells)))
    return (index % cols) * spacing, (index // cols) * spacing


def generate_well(spec: SynthSpec, index: int) -> WellLog:
    name = f"SYN-{index:03d}"
    rng = StableRng(child_seed(spec.seed, "synth", name))
    n = spec.n_rows
    values: dict[PropertyKind, np.ndarray] = {}
    for kind in _law_order(spec.laws):
        law = spec.laws[kind].perturbed(rng.child("law", kind.value), spec.law_spread)
        v = np.full(n, law.intercept, dtype=np.float64)
        if law.base_weight != 0:
            v += law.base_weight * _base_signal(law, n, spec.step, spec.layer_thickness,
                                                rng.child("base", kind.value))
        for src, a in sorted(law.linear.items()):
            v += a * values[PropertyKind(src)]
        for src, b in sorted(law.quadratic.items()):
            v += b * values[PropertyKind(src)] ** 2
        if law.noise_std > 0:
            v += law.noise_std * rng.child("noise", kind.value).normal(size=n)
        lo, hi = PHYSICAL_RANGE[kind]
        values[kind] = np.clip(v, lo, hi)

    omit = rng.child("omit")
    if spec.top_omission > 0:
        for kind in PROPERTIES:
            if omit.uniform() < 0.5:
                rows = int(omit.uniform() * spec.top_omission * n)
                values[kind][:rows] = np.nan

    x, y = grid_position(index, spec.n_wells, spec.grid_spacing)
    header = WellHeader(name, spec.start_depth, spec.start_depth + (n - 1) * spec.step, spec.step,
                        x=x, y=y, coord_system=CoordSystem.PROJECTED)
    well = WellLog(header, values)
    if spec.real_gaps is not None and spec.real_gaps.gaps_per_km > 0:
        gap_spec = replace(spec.real_gaps, seed=child_seed(spec.seed, "real-gaps"), aligned=False)
        well = inject_gaps(well, gap_spec).modified_well
    return well


def generate(spec: SynthSpec) -> list[WellLog]:
    """Deterministic per seed; each well draws from its own derived stream."""
    return [generate_well(spec, i) for i in range(spec.n_wells)]


def _laws_linear() -> dict:
    # independent siblings keep the least-squares solution unique
    return {
        PropertyKind.GR: PropertyLaw(level_mean=50.0, level_std=4.0, walk_std=0.6),
        PropertyKind.RHOB: PropertyLaw(level_mean=2.4, level_std=0.08, walk_std=0.01),
        PropertyKind.VP: PropertyLaw(level_mean=90.0, level_std=8.0, walk_std=1.0),
        PropertyKind.NPHI: PropertyLaw(base_weight=0.0, linear={"GR": 0.01}),
    }


def _laws_standard() -> dict:
    return {
        PropertyKind.NPHI: PropertyLaw(level_mean=0.25, level_std=0.05, walk_std=0.005),
        PropertyKind.GR: PropertyLaw(level_mean=70.0, level_std=20.0, walk_std=2.0),
        PropertyKind.RHOB: PropertyLaw(base_weight=0.0, intercept=2.65, linear={"NPHI": -1.65, "GR": 0.0015},
                                       quadratic={"NPHI": 5.0}, noise_std=0.008),
        PropertyKind.VP: PropertyLaw(base_weight=0.0, intercept=55.0, linear={"NPHI": 134.0, "GR": 0.08},
                                     quadratic={"GR": 0.004}, noise_std=0.8),
    }


PRESETS = ("linear", "standard", "distinct")


def preset(name: str, **overrides) -> SynthSpec:
    """``linear``: NPHI = 0.01 GR, noise free.  ``standard``: coupled with noise and
    quadratic NPHI terms.  ``distinct``: the standard law perturbed per well."""
    if name == "linear":
        spec = SynthSpec(laws=_laws_linear())
    elif name == "standard":
        spec = SynthSpec(laws=_laws_standard())
    elif name == "distinct":
        spec = SynthSpec(laws=_laws_standard(), law_spread=0.5)
    else:
        raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    return replace(spec, **overrides)


def nonlinear_targets(spec: SynthSpec) -> list[PropertyKind]:
    return [k for k in PROPERTIES if spec.laws[k].quadratic]
