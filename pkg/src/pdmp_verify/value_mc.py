"""Monte Carlo estimation of discounted distance values and hitting probabilities.

Each estimator evaluates ONE supplied policy, so viability-type estimates are
upper bounds on the infimum over controls and invariance-type estimates are
lower bounds on the supremum; the reports say so.  Integrands are bounded by
one and discounted by ``exp(-t)``, so every estimate lies in ``[-1, 1]`` and
truncating at horizon ``T`` biases by at most ``exp(-T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import ModeBoxSet
from .pdmp import (ControlPolicy, HybridState, PdmpCharacteristics,
                   PerturbationPolicy, run_ensemble)

Array = np.ndarray


@dataclass
class ValueEstimate:
    """Sample mean with standard error and the exact truncation bound."""

    mean: float
    std_error: float
    paths: int
    horizon: float
    truncation_bound: float
    kind: str = ""
    bound_note: str = ""
    config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "paths": self.paths,
            "horizon": self.horizon,
            "truncation_bound": self.truncation_bound,
            "kind": self.kind,
            "bound_note": self.bound_note,
            "config": self.config,
        }


@dataclass
class HittingEstimate:
    """Fraction of paths entering the target with a Wilson 95% interval."""

    probability: float
    wilson_low: float
    wilson_high: float
    hits: int
    paths: int
    horizon: float

    def to_json(self) -> dict:
        return {
            "probability": self.probability,
            "wilson_low": self.wilson_low,
            "wilson_high": self.wilson_high,
            "hits": self.hits,
            "paths": self.paths,
            "horizon": self.horizon,
        }


@dataclass
class SweepEntry:
    radius: float
    estimate: ValueEstimate
    gap: float
    gap_std_error: float


def wilson_interval(hits: int, n: int, z: float = 1.959963984540054):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need at least one trial")
    p = hits / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    low = 0.0 if hits == 0 else max(0.0, center - half)
    high = 1.0 if hits == n else min(1.0, center + half)
    return low, high


def _mean_se(values: Array):
    mean = float(np.mean(values))
    if len(values) > 1:
        se = float(np.std(values, ddof=1) / math.sqrt(len(values)))
    else:
        se = 0.0
    return mean, se


def _distance_integrals(chars, constraint, start, policy, paths, horizon, seed, step,
                        threads, perturbation=None, integrand=None) -> Array:
    if paths < 1:
        raise ValueError("need at least one path")
    modes = np.full(paths, start.mode, dtype=np.int64)
    xs = np.repeat(start.x[None, :], paths, axis=0)
    fn = integrand if integrand is not None else constraint.capped_distance_batch
    summary = run_ensemble(
        chars, modes, xs, policy, horizon=horizon, step=step, seed=seed,
        integrand=fn, perturbation=perturbation, threads=threads,
    )
    return summary.integrals


def estimate_viability_value(chars: PdmpCharacteristics, constraint: ModeBoxSet,
                             start: HybridState, policy: ControlPolicy,
                             paths: int = 10_000, horizon: float = 30.0, seed: int = 0, *,
                             step: float = 0.01, threads: Optional[int] = None) -> ValueEstimate:
    """Discounted expected capped distance to the constraint set for one policy.

    Upper bound on the infimum over all controls.
    """
    vals = _distance_integrals(chars, constraint, start, policy, paths, horizon, seed,
                               step, threads)
    mean, se = _mean_se(vals)
    return ValueEstimate(
        mean, se, paths, horizon, math.exp(-horizon), kind="viability",
        bound_note="single policy: upper bound on the infimum over controls",
        config={"seed": seed, "step": step},
    )


def estimate_invariance_value(chars: PdmpCharacteristics, constraint: ModeBoxSet,
                              start: HybridState, policy: ControlPolicy,
                              paths: int = 10_000, horizon: float = 30.0, seed: int = 0, *,
                              step: float = 0.01, threads: Optional[int] = None) -> ValueEstimate:
    """Same integral as the viability estimator; lower bound on the supremum."""
    vals = _distance_integrals(chars, constraint, start, policy, paths, horizon, seed,
                               step, threads)
    mean, se = _mean_se(vals)
    return ValueEstimate(
        mean, se, paths, horizon, math.exp(-horizon), kind="invariance",
        bound_note="single policy: lower bound on the supremum over controls",
        config={"seed": seed, "step": step},
    )


def estimate_reach_value(chars: PdmpCharacteristics, target: ModeBoxSet,
                         start: HybridState, policy: ControlPolicy,
                         perturbation: Optional[PerturbationPolicy] = None,
                         paths: int = 10_000, horizon: float = 30.0, seed: int = 0, *,
                         step: float = 0.01, threads: Optional[int] = None) -> ValueEstimate:
    """Negative discounted gap to the target's complement, perturbed dynamics.

    ``target`` is read as an open set (its interior).  With a perturbation the
    flow, rate and kernel are evaluated at the shifted state and the integrand
    at the shifted position.  Always nonpositive; zero exactly when the paths
    never approach the target.
    """
    vals = _distance_integrals(
        chars, target, start, policy, paths, horizon, seed, step, threads,
        perturbation=perturbation, integrand=target.complement_gap_batch,
    )
    mean, se = _mean_se(-vals)
    radius = perturbation.radius if perturbation is not None else 0.0
    return ValueEstimate(
        mean, se, paths, horizon, math.exp(-horizon), kind="reach",
        bound_note="single policy pair: upper bound on the infimum over controls",
        config={"seed": seed, "step": step, "perturbation_radius": radius},
    )


def estimate_hitting_probability(chars: PdmpCharacteristics, target: ModeBoxSet,
                                 start: HybridState, policy: ControlPolicy,
                                 paths: int = 10_000, horizon: float = 30.0, seed: int = 0, *,
                                 step: float = 0.01, threads: Optional[int] = None) -> HittingEstimate:
    """Fraction of paths entering the open target before the horizon."""
    if paths < 1:
        raise ValueError("need at least one path")
    modes = np.full(paths, start.mode, dtype=np.int64)
    xs = np.repeat(start.x[None, :], paths, axis=0)
    summary = run_ensemble(
        chars, modes, xs, policy, horizon=horizon, step=step, seed=seed,
        hit_test=target.interior_contains_batch, stop_on_hit=True, threads=threads,
    )
    hits = int(summary.hit.sum())
    low, high = wilson_interval(hits, paths)
    return HittingEstimate(hits / paths, low, high, hits, paths, horizon)


def convergence_sweep(chars: PdmpCharacteristics, target: ModeBoxSet, start: HybridState,
                      policy: ControlPolicy, radii: Sequence[float],
                      paths: int = 10_000, horizon: float = 30.0, seed: int = 0, *,
                      step: float = 0.01, threads: Optional[int] = None,
                      perturbation_family=None) -> list:
    """Reach-value estimates for shrinking perturbation radii, common random numbers.

    ``radii`` must decrease strictly and end at zero.  The same master seed
    drives every run, so per-path differences against the unperturbed run give
    a paired standard error for each gap.  The default family pushes along the
    first axis by the radius.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2 or radii[-1] != 0.0:
        raise ValueError("radii must end with 0")
    if any(a <= b for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if perturbation_family is None:
        def perturbation_family(radius):
            vec = np.zeros(chars.dim)
            vec[0] = radius
            return PerturbationPolicy.constant(vec)

    per_radius = {}
    for r in radii:
        pert = None if r == 0.0 else perturbation_family(r)
        vals = -_distance_integrals(
            chars, target, start, policy, paths, horizon, seed, step, threads,
            perturbation=pert, integrand=target.complement_gap_batch,
        )
        per_radius[r] = vals
    base = per_radius[0.0]
    out = []
    for r in radii:
        mean, se = _mean_se(per_radius[r])
        diff = per_radius[r] - base
        gap = abs(float(np.mean(diff)))
        _, gap_se = _mean_se(diff)
        est = ValueEstimate(
            mean, se, paths, horizon, math.exp(-horizon), kind="reach",
            bound_note="single policy pair: upper bound on the infimum over controls",
            config={"seed": seed, "step": step, "perturbation_radius": r},
        )
        out.append(SweepEntry(r, est, gap, gap_se))
    return out


def sweep_csv(entries: Sequence[SweepEntry]) -> str:
    lines = ["radius,mean,std_error,gap,gap_std_error"]
    for e in entries:
        lines.append(
            f"{e.radius!r},{e.estimate.mean!r},{e.estimate.std_error!r},{e.gap!r},{e.gap_std_error!r}"
        )
    return "\n".join(lines) + "\n"


def best_over_policies(estimator, policies: Sequence[ControlPolicy], *, objective: str = "min",
                       **kwargs):
    """Enumerate a finite policy family; one-sided bound on the optimal value."""
    if not policies:
        raise ValueError("need at least one policy")
    best = None
    best_est = None
    for policy in policies:
        est = estimator(policy=policy, **kwargs)
        score = est.mean if objective == "min" else -est.mean
        if best is None or score < best:
            best = score
            best_est = est
    best_est.bound_note += "; best over a finite policy family (one-sided bound)"
    return best_est
