"""Built-in gene-expression models: two-state On/Off systems and the phage switch.

The On/Off system is a two-mode hybrid process on one continuous coordinate:
an inactive mode consumes the product, an active mode produces it, and the
only jump flips the mode at a constant per-mode rate.  The haploinsufficiency
instance has linear consumption/production and is the workhorse benchmark.
The phage model tracks monomer and dimer concentrations continuously and the
operator occupancy (free / enhancer-bound / repressor-bound / doubly bound)
as four modes with seven jump channels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import ModeBoxSet
from .network import smooth_gate
from .pdmp import HybridState, PdmpCharacteristics

Array = np.ndarray


def piecewise_linear(xs: Sequence[float], ys: Sequence[float]) -> Callable:
    """Bounded Lipschitz interpolant through breakpoints, flat beyond them."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
        raise ValueError("need matching breakpoint vectors of length >= 2")
    if (np.diff(xs) <= 0).any():
        raise ValueError("breakpoints must increase strictly")

    def fn(x):
        return np.interp(x, xs, ys)

    return fn


@dataclass(frozen=True, eq=False)
class OnOffParams:
    """Consumption/production handles, per-mode switch rates, maximum level.

    ``r0`` and ``r1`` must be nonnegative, bounded, Lipschitz, and accept
    numpy arrays.  When the canonical invariant band ``[0, alpha_max]`` is
    wanted, they must satisfy ``r0(0) = 0`` and ``r1(alpha_max) = 0``;
    ``validate_canonical`` checks exactly that.
    """

    r0: Callable
    r1: Callable
    lambda0: float
    lambda1: float
    alpha_max: float

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise ValueError("switch rates must be nonnegative")
        if self.alpha_max <= 0:
            raise ValueError("alpha_max must be positive")

    def validate_canonical(self, tol: float = 1e-9):
        if abs(float(self.r0(0.0))) > tol or abs(float(self.r1(self.alpha_max))) > tol:
            raise ValueError(
                "canonical invariant band needs zero consumption at 0 and zero production at alpha_max"
            )

    def canonical_set(self) -> ModeBoxSet:
        self.validate_canonical()
        return ModeBoxSet((0, 1), np.array([0.0]), np.array([self.alpha_max]))


@dataclass(frozen=True)
class CookParams:
    """Activation/deactivation/production/degradation rates of the two-state gene."""

    ka: float
    kd: float
    jp: float
    kp: float

    def __post_init__(self):
        if min(self.ka, self.kd, self.jp, self.kp) <= 0:
            raise ValueError("all rates must be positive")

    @property
    def alpha_max(self) -> float:
        return self.jp / self.kp

    def as_onoff(self) -> OnOffParams:
        kp, jp = self.kp, self.jp
        return OnOffParams(
            r0=lambda x: kp * np.asarray(x, dtype=float),
            r1=lambda x: jp - kp * np.asarray(x, dtype=float),
            lambda0=self.ka,
            lambda1=self.kd,
            alpha_max=self.alpha_max,
        )


def build_onoff(p: OnOffParams) -> PdmpCharacteristics:
    """Two-mode, one-dimensional characteristics; the mode flip is the only jump."""

    def flow_batch(modes, xs, us):
        x = xs[:, 0]
        val = np.where(modes == 1, np.asarray(p.r1(x), dtype=float),
                       -np.asarray(p.r0(x), dtype=float))
        return val[:, None]

    def rate_batch(modes, xs, us):
        return np.where(modes == 1, p.lambda1, p.lambda0)

    def kernel_batch(modes, xs, us):
        n = len(modes)
        w = np.ones((n, 1))
        tm = (1 - np.asarray(modes, dtype=np.int64))[:, None]
        tx = xs[:, None, :]
        return w, tm, tx

    def flow(state: HybridState, u: float) -> Array:
        return flow_batch(np.array([state.mode]), state.x[None, :], None)[0]

    def rate(state: HybridState, u: float) -> float:
        return float(p.lambda1 if state.mode == 1 else p.lambda0)

    def kernel(state: HybridState, u: float) -> list:
        return [(1.0, HybridState(1 - state.mode, state.x))]

    return PdmpCharacteristics(
        mode_count=2,
        dim=1,
        flow=flow,
        rate=rate,
        kernel=kernel,
        rate_bound=max(p.lambda0, p.lambda1),
        flow_batch=flow_batch,
        rate_batch=rate_batch,
        kernel_batch=kernel_batch,
        jump_radius=1.0,
    )


def build_cook(p: CookParams) -> PdmpCharacteristics:
    return build_onoff(p.as_onoff())


@dataclass(frozen=True)
class PhageParams:
    """Dimerization/binding/transcription/degradation rates of the phage switch.

    ``n`` is the number of proteins per transcript and ``err`` the depletion
    gate width on the dimer count; every state-dependent channel rate is
    capped at ``cap``.  The largest product of the backward dimerization and
    forward dimerization rates against the squared degradation rate bounds
    the sizes of provably invariant corner boxes, exposed as ``epsilon_max``.
    """

    k1: float
    km1: float
    k2: float
    km2: float
    k3: float
    km3: float
    k4: float
    km4: float
    kt: float
    kd: float
    n: int = 5
    err: float = 0.1
    cap: float = 1e6

    def __post_init__(self):
        rates = (self.k1, self.km1, self.k2, self.km2, self.k3, self.km3,
                 self.k4, self.km4, self.kt, self.kd)
        if min(rates) <= 0:
            raise ValueError("all rates must be positive")
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.err <= 0 or self.cap <= 0:
            raise ValueError("err and cap must be positive")

    @property
    def epsilon_max(self) -> float:
        return min(self.kd ** 2 / (4.0 * self.k1 * self.km1), 1.0)

    def invariant_box(self, eps: float) -> ModeBoxSet:
        if not 0 < eps < self.epsilon_max:
            raise ValueError("eps must lie strictly below epsilon_max")
        return ModeBoxSet(
            (0,), np.array([0.0, 0.0]),
            np.array([2.0 * self.km1 * eps / self.kd, eps]),
        )


def build_phage(p: PhageParams) -> PdmpCharacteristics:
    """Four-mode, two-dimensional characteristics of the phage switch.

    Continuous coordinates: monomer and dimer amounts.  Modes: operator free,
    enhancer site bound, repressor site bound, both sites bound.  The flow is
    mode-independent (dimerization and degradation); the seven jump channels
    move one dimer per binding/unbinding event and add ``n`` monomers per
    transcription burst.
    """

    def channel_rates(modes, xs):
        x2 = xs[:, 1]
        gated = x2 * smooth_gate(x2, p.err)
        rates = np.stack(
            [
                np.where(modes == 0, p.k2 * gated, 0.0),
                np.where(modes == 0, p.k3 * gated, 0.0),
                np.where(modes == 1, p.k4 * gated, 0.0),
                np.where(modes == 1, p.kt, 0.0),
                np.where(modes == 1, p.km2, 0.0),
                np.where(modes == 2, p.km3, 0.0),
                np.where(modes == 3, p.km4, 0.0),
            ],
            axis=1,
        )
        return np.minimum(rates, p.cap)

    shifts = np.array(
        [[0.0, -1.0], [0.0, -1.0], [0.0, -1.0], [float(p.n), 0.0],
         [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]
    )
    targets = np.array([1, 2, 3, 1, 0, 0, 1], dtype=np.int64)

    def flow_batch(modes, xs, us):
        x1 = xs[:, 0]
        x2 = xs[:, 1]
        dim1 = -2.0 * p.k1 * x1 * x1 - p.kd * x1 + 2.0 * p.km1 * x2
        dim2 = p.k1 * x1 * x1 - p.km1 * x2
        return np.stack([dim1, dim2], axis=1)

    def rate_batch(modes, xs, us):
        rates = channel_rates(modes, xs)
        total = np.zeros(len(modes))
        for j in range(rates.shape[1]):
            total = total + rates[:, j]
        return total

    def kernel_batch(modes, xs, us):
        rates = channel_rates(modes, xs)
        total = rates.sum(axis=1, keepdims=True)
        safe = np.where(total > 0, total, 1.0)
        w = np.where(total > 0, rates / safe, 0.0)
        tm = np.repeat(targets[None, :], len(modes), axis=0)
        tm = np.where(w > 0, tm, np.asarray(modes, dtype=np.int64)[:, None])
        tx = xs[:, None, :] + shifts[None, :, :]
        return w, tm, tx

    def flow(state: HybridState, u: float) -> Array:
        return flow_batch(np.array([state.mode]), state.x[None, :], None)[0]

    def rate(state: HybridState, u: float) -> float:
        return float(rate_batch(np.array([state.mode]), state.x[None, :], None)[0])

    def kernel(state: HybridState, u: float) -> list:
        w, tm, tx = kernel_batch(np.array([state.mode]), state.x[None, :], None)
        return [
            (float(w[0, j]), HybridState(int(tm[0, j]), tx[0, j]))
            for j in range(w.shape[1])
            if w[0, j] > 0
        ]

    # Binding/unbinding moves one dimer and one operator coordinate pair;
    # transcription moves n monomers.
    radius = max(math.sqrt(3.0), float(p.n))
    return PdmpCharacteristics(
        mode_count=4,
        dim=2,
        flow=flow,
        rate=rate,
        kernel=kernel,
        rate_bound=3.0 * p.cap + p.kt + p.km2 + p.km3 + p.km4,
        flow_batch=flow_batch,
        rate_batch=rate_batch,
        kernel_batch=kernel_batch,
        jump_radius=radius,
    )
