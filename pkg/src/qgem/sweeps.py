"""Parameter scans over hold time, decoherence, geometry and shot budget.

Every cell delegates to the single-point functions in the other modules;
results come back as :class:`Table` objects keyed by their grid coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .config import TWO_PI, ExperimentConfig
from .entanglement import build_witness, entanglement_entropy, witness_expectation
from .geometry import is_valid_geometry
from .shots import BudgetError, prepare_campaign
from .states import apply_decoherence, density_matrix, pure_state

METRICS = ("entropy", "ppt-expectation", "vicinity-expectation", "confidence")
VARIABLES = ("time", "gamma", "theta-pair", "width", "budget")


class SweepError(ValueError):
    """Invalid sweep definition."""


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    points: int
    scale: str = "linear"  # or "log"

    def __post_init__(self):
        if self.points < 1:
            raise SweepError("grid must have at least one point")
        if self.scale not in ("linear", "log"):
            raise SweepError(f"unknown grid scale {self.scale!r}")
        if self.points > 1 and not self.stop > self.start:
            raise SweepError("grid must be strictly increasing")
        if self.scale == "log" and self.start <= 0:
            raise SweepError("log grid needs a positive start")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start)])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)

    @classmethod
    def per_decade(cls, start: float, stop: float, density: int = 25) -> "Grid":
        decades = math.log10(stop / start)
        return cls(start, stop, max(2, int(round(decades * density)) + 1), "log")

    def to_dict(self) -> dict:
        return {"start": self.start, "stop": self.stop, "points": self.points, "scale": self.scale}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    grid: Grid
    config: ExperimentConfig
    metric: str = "entropy"
    dimensions: tuple[int, ...] = (2, 3, 4, 5, 6)
    witness: str = "ppt"
    grouped: bool = False
    repetitions: int = 100
    seed: int | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise SweepError(f"unknown swept variable {self.variable!r}")
        if self.metric not in METRICS:
            raise SweepError(f"unknown metric {self.metric!r}")
        if not self.dimensions or min(self.dimensions) < 2:
            raise SweepError("dimensions must be a non-empty list of integers >= 2")
        if self.metric == "entropy":
            if self.variable == "gamma" or self.config.decoherence_rate > 0:
                raise SweepError("entropy is only defined for decoherence-free (pure) states")
        if (self.metric == "confidence") != (self.variable == "budget"):
            raise SweepError("the confidence metric goes with a budget sweep and only there")
        if self.variable == "budget" and self.seed is None:
            raise SweepError("budget sweeps need an explicit seed")

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "grid": self.grid.to_dict(),
            "metric": self.metric,
            "dimensions": list(self.dimensions),
            "witness": self.witness,
            "grouped": self.grouped,
            "repetitions": self.repetitions,
            "seed": self.seed,
            "options": dict(self.options),
        }


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]

    def where(self, **equals) -> list[tuple]:
        idx = {self.columns.index(k): v for k, v in equals.items()}
        return [r for r in self.rows if all(r[k] == v for k, v in idx.items())]

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def _assemble(columns: list[str], cells: dict) -> Table:
    # keyed cells, sorted by key, so the row order never depends on evaluation order
    return Table(columns, [cells[k] for k in sorted(cells)])


# -- single-point metrics ---------------------------------------------------


def entropy_at(config: ExperimentConfig) -> float:
    if config.decoherence_rate > 0:
        raise SweepError("entropy is only defined for decoherence-free (pure) states")
    return entanglement_entropy(density_matrix(pure_state(config)))


def witness_value(config: ExperimentConfig, kind: str = "ppt", witness=None) -> float:
    """Witness (from the decoherence-free state) evaluated on the decohered state.

    Returns NaN when no witness exists, i.e. the generating state is PPT.
    """
    state = pure_state(config)
    if witness is None:
        witness = build_witness(kind, state, config.hold_time)
    if witness is None:
        return float("nan")
    rho = apply_decoherence(density_matrix(state, config.hold_time), config.decoherence_rate, config.hold_time)
    return witness_expectation(witness, rho)


def metric_at(config: ExperimentConfig, metric: str) -> float:
    if metric == "entropy":
        return entropy_at(config)
    if metric == "ppt-expectation":
        return witness_value(config, "ppt")
    if metric == "vicinity-expectation":
        return witness_value(config, "vicinity")
    raise SweepError(f"metric {metric!r} is not a single-point metric")


def _metric_column(metric: str) -> str:
    return "entropy_bits" if metric == "entropy" else "witness_expectation"


# -- sweeps -----------------------------------------------------------------


def time_sweep(spec: SweepSpec) -> Table:
    if spec.variable != "time":
        raise SweepError("time_sweep needs variable='time'")
    cells = {}
    for D in spec.dimensions:
        for tau in spec.grid.values():
            cfg = spec.config.replace(dimension=D, hold_time=float(tau))
            cells[(D, float(tau))] = (float(tau), D, metric_at(cfg, spec.metric))
    return _assemble(["tau_s", "D", _metric_column(spec.metric)], cells)


def decoherence_sweep(spec: SweepSpec) -> Table:
    if spec.variable != "gamma":
        raise SweepError("decoherence_sweep needs variable='gamma'")
    kind = "vicinity" if spec.metric == "vicinity-expectation" else "ppt"
    cells = {}
    for D in spec.dimensions:
        base = spec.config.replace(dimension=D, decoherence_rate=0.0)
        witness = build_witness(kind, pure_state(base), base.hold_time)
        for gamma in spec.grid.values():
            cfg = base.replace(decoherence_rate=float(gamma))
            cells[(D, float(gamma))] = (float(gamma), D, witness_value(cfg, kind, witness))
    return _assemble(["gamma_hz", "D", "witness_expectation"], cells)


def zero_crossing_gamma(config: ExperimentConfig, kind: str = "ppt", upper: float = 10.0) -> float:
    """Decoherence rate at which the witness expectation reaches zero.

    Returns NaN when there is no witness (product state) or no sign change
    below ``upper``.
    """
    base = config.replace(decoherence_rate=0.0)
    witness = build_witness(kind, pure_state(base), base.hold_time)
    if witness is None:
        return float("nan")

    def f(gamma):
        return witness_value(base.replace(decoherence_rate=gamma), kind, witness)

    if f(0.0) >= 0 or f(upper) < 0:
        return float("nan")
    return float(brentq(f, 0.0, upper, xtol=1e-12))


def angle_grid(points: int = 100) -> np.ndarray:
    """``points`` evenly spaced angles covering [0, 2pi) without the endpoint."""
    return np.arange(points) * TWO_PI / points


def angle_heatmap(spec: SweepSpec, points: int | None = None) -> Table:
    """Entropy over all ``(theta_1, theta_2)``; geometrically forbidden cells are NaN."""
    if spec.variable != "theta-pair":
        raise SweepError("angle_heatmap needs variable='theta-pair'")
    n = points or spec.grid.points
    angles = angle_grid(n)
    D = spec.dimensions[0]
    cells = {}
    for a, t1 in enumerate(angles):
        for b, t2 in enumerate(angles):
            cfg = spec.config.replace(dimension=D, theta_1=float(t1), theta_2=float(t2))
            valid = is_valid_geometry(cfg)
            value = metric_at(cfg, spec.metric) if valid else float("nan")
            cells[(a, b)] = (float(t1), float(t2), value, int(valid))
    return _assemble(["theta_1", "theta_2", _metric_column(spec.metric), "valid"], cells)


def width_sweep(spec: SweepSpec, scaled: bool = False, scale_factor=None) -> Table:
    """Entropy against superposition width, or against time with width scaled by ``D``.

    Unscaled: the grid runs over widths (metres) at the configured hold time.
    Scaled: the grid runs over hold times and each dimension uses the width
    ``scale_factor(D) * base``; the default factor ``D - 1`` keeps the spacing
    between neighbouring instances equal to the configured width.
    """
    if spec.variable not in ("width", "time"):
        raise SweepError("width_sweep needs variable='width' (or 'time' when scaled)")
    cells = {}
    if not scaled:
        for D in spec.dimensions:
            for dx in spec.grid.values():
                cfg = spec.config.replace(dimension=D, superposition_width=float(dx))
                cells[(D, float(dx))] = (float(dx), D, metric_at(cfg, spec.metric))
        return _assemble(["delta_x_m", "D", _metric_column(spec.metric)], cells)

    factor = scale_factor or (lambda D: D - 1)
    base = spec.config.superposition_width
    for D in spec.dimensions:
        dx = factor(D) * base
        for tau in spec.grid.values():
            cfg = spec.config.replace(dimension=D, superposition_width=dx, hold_time=float(tau))
            cells[(D, float(tau))] = (float(tau), D, dx, metric_at(cfg, spec.metric))
    return _assemble(["tau_s", "D", "delta_x_m", _metric_column(spec.metric)], cells)


def runtime_tradeoff(spec: SweepSpec, hold_times=(1.5, 2.0, 2.5, 3.0, 3.5)) -> Table:
    """Witness expectation over decoherence rates for several hold times."""
    if spec.variable != "gamma":
        raise SweepError("runtime_tradeoff needs variable='gamma'")
    kind = "vicinity" if spec.metric == "vicinity-expectation" else "ppt"
    cells = {}
    for D in spec.dimensions:
        for tau in hold_times:
            base = spec.config.replace(dimension=D, hold_time=float(tau), decoherence_rate=0.0)
            witness = build_witness(kind, pure_state(base), base.hold_time)
            for gamma in spec.grid.values():
                value = witness_value(base.replace(decoherence_rate=float(gamma)), kind, witness)
                cells[(D, float(tau), float(gamma))] = (float(tau), float(gamma), D, value)
    return _assemble(["tau_s", "gamma_hz", "D", "witness_expectation"], cells)


CURVE_COLUMNS = [
    "M",
    "mean_confidence",
    "std_confidence",
    "W_mean",
    "s_W_mean",
    "mode",
    "D",
    "gamma",
    "tau",
    "seed",
]


def measurement_curve(spec: SweepSpec) -> Table:
    """Mean confidence over repeated simulated campaigns for each shot budget.

    Budgets too small to give every measured unit two shots are skipped.
    """
    if spec.variable != "budget":
        raise SweepError("measurement_curve needs variable='budget'")
    strategy = spec.options.get("strategy", "ldfc")
    cells = {}
    for D in spec.dimensions:
        cfg = spec.config.replace(dimension=D)
        campaign = prepare_campaign(cfg, spec.witness, spec.grouped, strategy)
        for M in sorted({int(round(m)) for m in spec.grid.values()}):
            try:
                res = campaign.run(M, spec.repetitions, spec.seed)
            except BudgetError:
                continue
            cells[(D, M)] = (
                M,
                res.mean_confidence,
                res.std_confidence,
                res.mean_estimate,
                res.mean_standard_error,
                campaign.mode,
                D,
                cfg.decoherence_rate,
                cfg.hold_time,
                spec.seed,
            )
    return _assemble(list(CURVE_COLUMNS), cells)


def crossing_budget(table: Table, level: float = 0.999, D: int | None = None) -> float:
    """Smallest budget whose mean confidence reaches ``level`` (log-interpolated).

    Returns ``inf`` when the curve never reaches the level.
    """
    rows = table.as_dicts()
    if D is not None:
        rows = [r for r in rows if r["D"] == D]
    rows.sort(key=lambda r: r["M"])
    prev = None
    for r in rows:
        if r["mean_confidence"] >= level:
            if prev is None or prev["mean_confidence"] >= r["mean_confidence"]:
                return float(r["M"])
            lo, hi = math.log(prev["M"]), math.log(r["M"])
            f = (level - prev["mean_confidence"]) / (r["mean_confidence"] - prev["mean_confidence"])
            return float(math.exp(lo + f * (hi - lo)))
        prev = r
    return float("inf")
