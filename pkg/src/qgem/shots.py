"""Finite-shot measurement campaigns and the confidence that a witness is negative.

A campaign splits a budget of ``M`` shots across the measured witness terms
(or commuting groups) in proportion to their weight, samples projective
outcomes from the decohered state, and turns the sample means and variances
into a witness estimate, standard error and one-sided t-test confidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .basis import (
    MeasurementGroup,
    WitnessDecomposition,
    basis_stack,
    commutation_graph,
    decompose_witness,
    group_terms_ldfc,
)
from .config import ExperimentConfig
from .entanglement import build_witness
from .states import DensityMatrix, apply_decoherence, density_matrix, pure_state

MIN_SHOTS = 2
CONFIDENCE_CAP = 1 - 1e-15
PROBABILITY_TOLERANCE = 1e-9


class BudgetError(ValueError):
    """Not enough shots to give every measured unit its minimum."""


class StateError(ValueError):
    """Outcome probabilities do not form a distribution."""


@dataclass(frozen=True)
class ShotPlan:
    total: int
    allocations: np.ndarray
    mode: str  # "per-term" | "grouped"

    def __len__(self) -> int:
        return len(self.allocations)


@dataclass(frozen=True)
class MeasurementRecord:
    """Sample statistics of one measured unit; ``members`` index ``decomp.measured``."""

    members: tuple[int, ...]
    shots: int
    means: np.ndarray
    variances: np.ndarray
    seed: int | None = None


@dataclass(frozen=True)
class ConfidenceReport:
    estimate: float
    variance: float
    standard_error: float
    mean_shots: float
    t_statistic: float
    confidence: float
    interval: tuple[float, float]
    interval_level: float

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "variance": self.variance,
            "standard_error": self.standard_error,
            "mean_shots": self.mean_shots,
            "t_statistic": self.t_statistic,
            "confidence": self.confidence,
            "interval": list(self.interval),
            "interval_level": self.interval_level,
        }


# -- allocation -------------------------------------------------------------


def unit_weights(units) -> tuple[np.ndarray, str]:
    if isinstance(units, WitnessDecomposition):
        return np.array([abs(t.coefficient) for t in units.measured]), "per-term"
    units = list(units)
    if units and not isinstance(units[0], MeasurementGroup):
        return np.abs(np.asarray(units, dtype=float)), "per-term"
    return np.array([g.weight for g in units]), "grouped"


def allocate_shots(units, total: int, minimum: int = MIN_SHOTS) -> ShotPlan:
    """Split ``total`` shots proportionally to weight, with at least ``minimum`` each.

    ``units`` is a decomposition (one unit per non-identity term), a list of
    measurement groups, or a plain sequence of weights. Shares are floored,
    the remainder goes to the largest fractional parts, and any unit left
    under the minimum is topped up from the currently largest allocations.
    """
    weights, mode = unit_weights(units)
    n = len(weights)
    total = int(total)
    if n == 0:
        return ShotPlan(total=0, allocations=np.zeros(0, dtype=np.int64), mode=mode)
    if total < minimum * n:
        raise BudgetError(f"{total} shots cannot cover {n} units at {minimum} shots each")
    shares = weights / weights.sum() * total
    alloc = np.floor(shares).astype(np.int64)
    frac = shares - alloc
    remainder = total - int(alloc.sum())
    if remainder:
        # stable sort keeps lower indices first among equal fractions
        alloc[np.argsort(-frac, kind="stable")[:remainder]] += 1

    deficit = np.maximum(minimum - alloc, 0)
    need = int(deficit.sum())
    alloc += deficit
    for _ in range(need):
        # argmax picks the lowest index among equally large donors
        alloc[int(np.argmax(alloc))] -= 1
    return ShotPlan(total=total, allocations=alloc, mode=mode)


# -- sampling ---------------------------------------------------------------


def outcome_probabilities(basis: np.ndarray, rho) -> np.ndarray:
    """Born probabilities ``<v_k|rho|v_k>`` for each basis column."""
    arr = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho)
    p = np.einsum("ik,ij,jk->k", basis.conj(), arr, basis).real
    if p.min() < -PROBABILITY_TOLERANCE or abs(p.sum() - 1.0) > PROBABILITY_TOLERANCE:
        raise StateError(f"outcome probabilities invalid (min {p.min():.3g}, sum {p.sum():.12g})")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _statistics(values: np.ndarray, counts: np.ndarray, shots) -> tuple[np.ndarray, np.ndarray]:
    """Per-row sample mean and (n-1)-denominator variance from outcome counts."""
    means = (values * counts).sum(axis=-1) / shots
    sq = ((values - means[..., None]) ** 2 * counts).sum(axis=-1)
    return means, sq / (np.asarray(shots) - 1)


def _sample_unit(probs, values, shots, rng, members=(0,), seed=None) -> MeasurementRecord:
    if shots < MIN_SHOTS:
        raise BudgetError(f"need at least {MIN_SHOTS} shots, got {shots}")
    counts = rng.multinomial(int(shots), probs)
    means, variances = _statistics(values, counts[None, :], shots)
    return MeasurementRecord(tuple(members), int(shots), means, variances, seed)


def sample_term(operator: np.ndarray, rho, shots: int, rng: np.random.Generator, member: int = 0) -> MeasurementRecord:
    """Measure one Hermitian observable ``shots`` times in its eigenbasis."""
    evals, vecs = np.linalg.eigh(operator)
    probs = outcome_probabilities(vecs, rho)
    return _sample_unit(probs, evals[None, :], shots, rng, members=(member,))


def sample_group(group: MeasurementGroup, rho, shots: int, rng: np.random.Generator) -> MeasurementRecord:
    """Measure a commuting group jointly; every member reads its value off the same outcome."""
    if group.basis is None:
        raise ValueError("group has no joint eigenbasis")
    probs = outcome_probabilities(group.basis, rho)
    return _sample_unit(probs, group.eigenvalues, shots, rng, members=group.members)


# -- statistics -------------------------------------------------------------


def confidence_level(estimate: float, standard_error: float, mean_shots: float) -> float:
    """One-sided confidence that the witness expectation is negative.

    Uses ``t = |W|/s`` against Student-t with ``mean_shots - 1`` degrees of
    freedom; a non-negative estimate gives a value at or below one half.
    """
    if standard_error < 0:
        raise ValueError("standard error must be >= 0")
    if standard_error == 0:
        return CONFIDENCE_CAP if estimate < 0 else 0.5
    dof = max(mean_shots - 1.0, 1.0)
    conf = float(special.stdtr(dof, -estimate / standard_error))
    return min(conf, CONFIDENCE_CAP)


def witness_statistics(
    records: list[MeasurementRecord],
    decomp: WitnessDecomposition,
    interval_level: float = 0.999,
) -> ConfidenceReport:
    """Combine per-term sample statistics into the witness estimate.

    ``W = c_0 + sum c_ij mean_ij``, ``var = sum c_ij^2 var_ij`` and the
    standard error divides ``sqrt(var)`` by the square root of the average
    number of shots per measured unit. The identity coefficient ``c_0`` is
    exact and contributes no variance.
    """
    coeffs = np.array([t.coefficient for t in decomp.measured])
    estimate = decomp.identity_coefficient
    variance = 0.0
    for rec in records:
        c = coeffs[list(rec.members)]
        estimate += float(c @ rec.means)
        variance += float((c**2) @ rec.variances)
    mean_shots = float(np.mean([rec.shots for rec in records])) if records else 0.0
    return _report(estimate, variance, mean_shots, interval_level)


def _report(estimate: float, variance: float, mean_shots: float, interval_level: float) -> ConfidenceReport:
    variance = max(variance, 0.0)
    se = float(np.sqrt(variance / mean_shots)) if mean_shots > 0 else float("inf")
    if se > 0:
        t = abs(estimate) / se
    else:
        t = float("inf") if estimate != 0 else 0.0
    confidence = confidence_level(estimate, se, mean_shots)
    dof = max(mean_shots - 1.0, 1.0)
    mult = float(special.stdtrit(dof, 1 - (1 - interval_level) / 2))
    return ConfidenceReport(
        estimate=float(estimate),
        variance=float(variance),
        standard_error=se,
        mean_shots=mean_shots,
        t_statistic=float(t),
        confidence=confidence,
        interval=(float(estimate - mult * se), float(estimate + mult * se)),
        interval_level=interval_level,
    )


# -- campaigns --------------------------------------------------------------


def merge_outcomes(probs: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Merge basis outcomes on which every member reads the same value.

    ``probs`` has shape ``(K,)`` and ``values`` ``(members, K)``. Returns the
    merged ``(probs, values)``; sampling the merged distribution is
    equivalent and much cheaper for observables with degenerate spectra.
    """
    keys = np.round(values.T, 9)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    n = int(inverse.max()) + 1
    merged_p = np.bincount(inverse, weights=probs, minlength=n)
    merged_v = np.empty((values.shape[0], n))
    merged_v[:, inverse] = values
    return merged_p, merged_v


@dataclass
class Campaign:
    """Everything needed to simulate repeated campaigns for one configuration.

    Built once and reused across budgets: the witness (tailored to the
    decoherence-free state), its decomposition, the optional grouping, the
    decohered state and per-unit outcome distributions (padded to a common
    number of outcome categories with zero-probability entries).
    """

    config: ExperimentConfig
    witness_kind: str
    grouped: bool
    decomposition: WitnessDecomposition
    groups: list[MeasurementGroup] | None
    rho: DensityMatrix
    probabilities: np.ndarray = field(repr=False)  # (units, outcomes)
    member_values: np.ndarray = field(repr=False)  # (rows, outcomes)
    member_unit: np.ndarray = field(repr=False)  # unit index of each row
    member_index: np.ndarray = field(repr=False)  # decomposition.measured index of each row
    exact_value: float = 0.0

    def __post_init__(self):
        coeffs = np.array([t.coefficient for t in self.decomposition.measured])
        self._row_coeffs = coeffs[self.member_index]

    @property
    def mode(self) -> str:
        return "grouped" if self.grouped else "per-term"

    @property
    def units(self):
        return self.groups if self.grouped else self.decomposition

    def plan(self, total: int) -> ShotPlan:
        return allocate_shots(self.units, total)

    def _draw(self, plan: ShotPlan, rng: np.random.Generator):
        shots = plan.allocations
        counts = rng.multinomial(shots, self.probabilities)
        rows = self.member_unit
        means, variances = _statistics(self.member_values, counts[rows], shots[rows])
        return means, variances

    def simulate(self, plan: ShotPlan, rng: np.random.Generator) -> list[MeasurementRecord]:
        """One campaign, returned as per-unit records."""
        means, variances = self._draw(plan, rng)
        rows = self.member_unit
        records = []
        bounds = np.flatnonzero(np.diff(rows)) + 1
        for block in np.split(np.arange(rows.size), bounds):
            u = int(rows[block[0]])
            members = tuple(self.member_index[block].tolist())
            records.append(MeasurementRecord(members, int(plan.allocations[u]), means[block], variances[block]))
        return records

    def report(self, plan: ShotPlan, rng: np.random.Generator, interval_level: float = 0.999) -> ConfidenceReport:
        """Same result as ``witness_statistics(self.simulate(...))`` without building records."""
        means, variances = self._draw(plan, rng)
        c = self._row_coeffs
        estimate = self.decomposition.identity_coefficient + float(c @ means)
        variance = float((c**2) @ variances)
        return _report(estimate, variance, float(np.mean(plan.allocations)), interval_level)

    def run(self, total: int, repetitions: int, seed: int, interval_level: float = 0.999) -> "TrialResult":
        plan = self.plan(total)
        reports = [self.report(plan, repetition_rng(seed, r), interval_level) for r in range(repetitions)]
        conf = np.array([rep.confidence for rep in reports])
        return TrialResult(
            total_shots=int(total),
            mean_confidence=float(conf.mean()),
            std_confidence=float(conf.std(ddof=1)) if len(conf) > 1 else 0.0,
            mean_estimate=float(np.mean([rep.estimate for rep in reports])),
            mean_standard_error=float(np.mean([rep.standard_error for rep in reports])),
            reports=reports,
        )


@dataclass(frozen=True)
class TrialResult:
    total_shots: int
    mean_confidence: float
    std_confidence: float
    mean_estimate: float
    mean_standard_error: float
    reports: list[ConfidenceReport]


def repetition_rng(seed: int, repetition: int) -> np.random.Generator:
    """Independent stream per repetition, keyed by ``(seed, repetition)``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(repetition),)))


def prepare_campaign(
    config: ExperimentConfig,
    witness_kind: str = "ppt",
    grouped: bool = False,
    strategy: str = "ldfc",
) -> Campaign:
    state = pure_state(config)
    witness = build_witness(witness_kind, state, config.hold_time, built_from=config.to_dict())
    if witness is None:
        raise ValueError("state is PPT: no witness can be built")
    decomp = decompose_witness(witness)
    rho = apply_decoherence(density_matrix(state, config.hold_time), config.decoherence_rate, config.hold_time)
    B = basis_stack(config.dimension)

    units = []  # (probabilities, values, member indices)
    groups = None
    if grouped:
        groups = group_terms_ldfc(commutation_graph(decomp), decomp, strategy=strategy)
        for g in groups:
            units.append((outcome_probabilities(g.basis, rho), g.eigenvalues, g.members))
    else:
        for m, t in enumerate(decomp.measured):
            evals, vecs = np.linalg.eigh(np.kron(B[t.i], B[t.j]))
            units.append((outcome_probabilities(vecs, rho), evals[None, :], (m,)))

    merged = [merge_outcomes(p, v) for p, v, _ in units]
    width = max((p.size for p, _ in merged), default=1)
    probs = np.zeros((len(units), width))
    values, unit_of, index = [], [], []
    for u, ((p, v), (_, _, members)) in enumerate(zip(merged, units)):
        probs[u, : p.size] = p
        padded = np.zeros((v.shape[0], width))
        padded[:, : p.size] = v
        values.append(padded)
        unit_of.extend([u] * len(members))
        index.extend(members)
    return Campaign(
        config=config,
        witness_kind=witness_kind,
        grouped=grouped,
        decomposition=decomp,
        groups=groups,
        rho=rho,
        probabilities=probs,
        member_values=np.concatenate(values) if values else np.zeros((0, width)),
        member_unit=np.array(unit_of, dtype=np.int64),
        member_index=np.array(index, dtype=np.int64),
        exact_value=float(np.einsum("ij,ji->", witness.matrix, rho.rho).real),
    )


def run_trial(
    config: ExperimentConfig,
    witness_kind: str = "ppt",
    grouped: bool = False,
    total_shots: int = 1000,
    repetitions: int = 100,
    seed: int = 0,
    strategy: str = "ldfc",
) -> TrialResult:
    """``repetitions`` independent campaigns at one budget; deterministic in ``seed``."""
    return prepare_campaign(config, witness_kind, grouped, strategy).run(total_shots, repetitions, seed)
