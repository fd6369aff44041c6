"""Exact simulation of controlled jump-flow (piecewise deterministic) processes.

A process is described by its local characteristics: a vector field driving
deterministic motion between jumps, a state-dependent jump rate, and a finite
transition kernel for the post-jump state.  Jump times are obtained by
integrating the hazard along the flow and inverting it against a unit
exponential draw; the crossing inside a step is refined by bisection.
Controls are piecewise open loop: a policy sees the last post-jump state (the
"anchor") and the time elapsed since that jump.

Ensembles run in lockstep over numpy arrays.  Each path draws from its own
counter-based stream, and no arithmetic crosses paths, so results are
bit-identical for any worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import rng as rngmod

Array = np.ndarray

_TIME_EPS = 1e-12


class IntegrationError(RuntimeError):
    """Flow integration produced a non-finite state."""

    def __init__(self, message: str, mode: int, x: Array, t: float):
        super().__init__(message)
        self.mode = int(mode)
        self.x = np.asarray(x, dtype=float)
        self.t = float(t)


@dataclass(frozen=True, eq=False)
class HybridState:
    """Discrete mode index plus a continuous coordinate vector."""

    mode: int
    x: Array

    def __post_init__(self):
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)).copy())

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"HybridState(mode={self.mode}, x={self.x.tolist()})"


@dataclass(frozen=True, eq=False)
class PdmpCharacteristics:
    """Local characteristics: flow field, jump rate, finite transition kernel.

    The scalar callables define the contract.  ``kernel`` returns a list of
    ``(weight, target)`` pairs; weights are positive and sum to one whenever
    the rate is positive, and every target differs from the source state.
    The optional ``*_batch`` hooks take arrays (``modes (B,)``, ``xs (B,dim)``,
    ``controls (B,)``) so ensembles avoid per-state Python dispatch; when
    absent they are derived from the scalar callables.  ``rate_bound`` is a
    global upper bound on the jump rate (used by the thinning sampler);
    ``jump_radius``, when known exactly, bounds the distance between source
    and target of any jump.
    """

    mode_count: int
    dim: int
    flow: Callable[[HybridState, float], Array]
    rate: Callable[[HybridState, float], float]
    kernel: Callable[[HybridState, float], list]
    rate_bound: float = math.inf
    flow_batch: Optional[Callable[[Array, Array, Array], Array]] = None
    rate_batch: Optional[Callable[[Array, Array, Array], Array]] = None
    kernel_batch: Optional[Callable[[Array, Array, Array], tuple]] = None
    jump_radius: Optional[float] = None

    def batch_flow(self, modes: Array, xs: Array, us: Array) -> Array:
        if self.flow_batch is not None:
            return self.flow_batch(modes, xs, us)
        out = np.empty_like(xs)
        for i in range(len(modes)):
            out[i] = self.flow(HybridState(int(modes[i]), xs[i]), float(us[i]))
        return out

    def batch_rate(self, modes: Array, xs: Array, us: Array) -> Array:
        if self.rate_batch is not None:
            return self.rate_batch(modes, xs, us)
        return np.array(
            [self.rate(HybridState(int(m), x), float(u)) for m, x, u in zip(modes, xs, us)]
        )

    def batch_kernel(self, modes: Array, xs: Array, us: Array) -> tuple:
        """Kernel targets as padded arrays ``(weights, target_modes, target_xs)``.

        Shapes ``(B, R)``, ``(B, R)`` and ``(B, R, dim)``; padding entries have
        weight zero and point back at the source state.
        """
        if self.kernel_batch is not None:
            return self.kernel_batch(modes, xs, us)
        rows = []
        width = 1
        for m, x, u in zip(modes, xs, us):
            pairs = self.kernel(HybridState(int(m), x), float(u))
            width = max(width, len(pairs))
            rows.append(pairs)
        B = len(rows)
        w = np.zeros((B, width))
        tm = np.repeat(np.asarray(modes, dtype=np.int64)[:, None], width, axis=1)
        tx = np.repeat(xs[:, None, :], width, axis=1)
        for i, pairs in enumerate(rows):
            for j, (weight, target) in enumerate(pairs):
                w[i, j] = weight
                tm[i, j] = target.mode
                tx[i, j] = target.x
        return w, tm, tx


@dataclass(frozen=True, eq=False)
class ControlPolicy:
    """Piecewise open-loop control over a finite control grid.

    ``decide(anchor, elapsed)`` returns a member of ``control_space``; it is
    re-evaluated at every integration step with the elapsed time since the
    last jump, and the elapsed-time clock resets at each jump.
    """

    control_space: tuple
    decide: Callable[[HybridState, float], float]
    decide_batch: Optional[Callable[[Array, Array, Array], Array]] = None

    @staticmethod
    def constant(value: float = 0.0) -> "ControlPolicy":
        val = float(value)

        def _batch(modes, xs, elapsed):
            return np.full(len(modes), val)

        return ControlPolicy((val,), lambda s, t: val, _batch)

    def batch_decide(self, modes: Array, xs: Array, elapsed: Array) -> Array:
        if self.decide_batch is not None:
            return self.decide_batch(modes, xs, elapsed)
        return np.array(
            [self.decide(HybridState(int(m), x), float(t)) for m, x, t in zip(modes, xs, elapsed)]
        )


@dataclass(frozen=True, eq=False)
class PerturbationPolicy:
    """Small state shift ``|u| <= radius`` applied to the dynamics' argument.

    The perturbed process flows along ``f(x + u)``, jumps at rate
    ``rate(x + u)``, and its kernel is evaluated at ``x + u`` with the targets
    shifted back by ``u``; running costs are evaluated at ``x + u`` as well.
    Only the continuous coordinates are shifted.
    """

    radius: float
    decide: Callable[[HybridState, float], Array]
    decide_batch: Optional[Callable[[Array, Array, Array], Array]] = None

    @staticmethod
    def constant(vector: Sequence[float]) -> "PerturbationPolicy":
        vec = np.atleast_1d(np.asarray(vector, dtype=float))
        radius = float(np.linalg.norm(vec))

        def _batch(modes, xs, elapsed):
            return np.repeat(vec[None, :], len(modes), axis=0)

        return PerturbationPolicy(radius, lambda s, t: vec.copy(), _batch)

    def batch_decide(self, modes: Array, xs: Array, elapsed: Array) -> Array:
        if self.decide_batch is not None:
            return self.decide_batch(modes, xs, elapsed)
        return np.stack(
            [self.decide(HybridState(int(m), x), float(t)) for m, x, t in zip(modes, xs, elapsed)]
        )


@dataclass(frozen=True, eq=False)
class JumpRecord:
    time: float
    pre: HybridState
    post: HybridState


@dataclass(frozen=True, eq=False)
class TrajectorySegment:
    start_time: float
    anchor: HybridState
    points: tuple  # ((t, x-vector), ...) within one mode


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded sample path: flow segments separated by jumps."""

    segments: tuple
    jumps: tuple
    seed: int
    horizon: float

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)

    @property
    def final_state(self) -> HybridState:
        seg = self.segments[-1]
        return HybridState(seg.anchor.mode, seg.points[-1][1])

    def rows(self):
        """(t, mode, x, event) rows; the first point of a post-jump segment carries ``jump``."""
        for k, seg in enumerate(self.segments):
            for j, (t, x) in enumerate(seg.points):
                event = "jump" if (k > 0 and j == 0) else "flow"
                yield t, seg.anchor.mode, x, event

    def to_csv(self) -> str:
        dim = self.segments[0].anchor.x.shape[0]
        header = "t,mode," + ",".join(f"x_{i + 1}" for i in range(dim)) + ",event"
        lines = [header]
        for t, mode, x, event in self.rows():
            lines.append(f"{t!r},{mode}," + ",".join(repr(float(v)) for v in x) + f",{event}")
        return "\n".join(lines) + "\n"


@dataclass
class EnsembleSummary:
    """Per-path outputs of a lockstep ensemble run (fixed path order)."""

    integrals: Array
    peak: Array
    hit: Array
    hit_times: Array
    jumps: Array
    first_jump_times: Array
    final_modes: Array
    final_xs: Array
    records: Optional[list] = None
    jump_records: Optional[list] = None


class _PathDraws:
    """Per-path uniform blocks; one stream per path, order fixed per path.

    Exponentials come from uniforms via the inverse CDF so a single cached
    block serves thresholds and kernel selection alike.
    """

    BLOCK = 32

    def __init__(self, seed: int, offset: int, count: int):
        self.gens = [rngmod.stream(seed, offset + i, rngmod.PATH) for i in range(count)]
        self.cache = [None] * count
        self.pos = [self.BLOCK] * count

    def uniform(self, i: int) -> float:
        p = self.pos[i]
        if p >= self.BLOCK:
            self.cache[i] = self.gens[i].uniform(size=self.BLOCK)
            p = 0
        self.pos[i] = p + 1
        return self.cache[i][p]

    def exponential(self, i: int) -> float:
        return -math.log1p(-self.uniform(i))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit argument, else PDMP_VERIFY_THREADS, else 1."""
    if threads is not None and threads > 0:
        return int(threads)
    env = os.environ.get("PDMP_VERIFY_THREADS", "")
    if env.strip():
        try:
            n = int(env)
            if n > 0:
                return n
        except ValueError:
            pass
    return 1


def _rk4(chars, modes, xs, us, deltas, shift=None, with_hazard=True):
    """One classical RK4 step of the frozen-control field, per-path step sizes.

    Returns ``(x_end, hazard_increment, stage_rates)``; the hazard increment
    integrates the rate along the same stages (Simpson weights), which is RK4
    applied to the time-augmented system.  ``shift`` is added to every stage
    state before evaluating the field and the rate (perturbed dynamics).
    """
    d = deltas[:, None]

    def field(x):
        pt = x + shift if shift is not None else x
        return chars.batch_flow(modes, pt, us)

    def hz(x):
        pt = x + shift if shift is not None else x
        return chars.batch_rate(modes, pt, us)

    k1 = field(xs)
    x2 = xs + 0.5 * d * k1
    k2 = field(x2)
    x3 = xs + 0.5 * d * k2
    k3 = field(x3)
    x4 = xs + d * k3
    k4 = field(x4)
    x_end = xs + (d / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not with_hazard:
        return x_end, None, None
    r1 = hz(xs)
    r2 = hz(x2)
    r3 = hz(x3)
    r4 = hz(x4)
    dhaz = (deltas / 6.0) * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
    return x_end, dhaz, (r1, r2, r3, r4)


def _invert_hazard(deltas, stage_rates, residuals, tols):
    """Bisect the step's hazard profile for the threshold crossing time.

    The hazard on a step is the quadratic-in-time rate profile through the RK4
    stage rates (its full-step integral coincides with the RK4 increment), so
    the crossing can be bisected without re-integrating.  Each path stops at
    its own tolerance; per-path results do not depend on batch mates.
    """
    r1, r2, r3, r4 = stage_rates
    rm = 0.5 * (r2 + r3)
    # Integrated quadratic profile as a cubic in sigma = elapsed/step.
    c1 = deltas * r1
    c2 = deltas * (2.0 * rm - 1.5 * r1 - 0.5 * r4)
    c3 = deltas * ((2.0 / 3.0) * (r1 + r4) - (4.0 / 3.0) * rm)

    lo = np.zeros_like(deltas)
    hi = np.ones_like(deltas)
    for _ in range(64):
        open_paths = (hi - lo) * deltas > tols
        if not open_paths.any():
            break
        mid = 0.5 * (lo + hi)
        above = ((c3 * mid + c2) * mid + c1) * mid >= residuals
        hi = np.where(open_paths & above, mid, hi)
        lo = np.where(open_paths & ~above, mid, lo)
    return 0.5 * (lo + hi) * deltas


def _simulate_chunk(chars, policy, modes0, xs0, *, horizon, step, seed, offset,
                    integrand, hit_test, stop_on_hit, stop_on_jump, perturbation,
                    record, record_stride):
    B = modes0.shape[0]
    modes = modes0.astype(np.int64).copy()
    xs = xs0.astype(float).copy()
    t = np.zeros(B)
    elapsed = np.zeros(B)
    haz = np.zeros(B)
    anchor_m = modes.copy()
    anchor_x = xs.copy()
    draws = _PathDraws(seed, offset, B)
    thresholds = np.array([draws.exponential(i) for i in range(B)])
    jumps = np.zeros(B, dtype=np.int64)
    first_jump_times = np.full(B, np.nan)
    integrals = np.zeros(B)
    peak = np.zeros(B)
    hit = np.zeros(B, dtype=bool)
    hit_times = np.full(B, np.nan)
    active = t < horizon
    steps_done = np.zeros(B, dtype=np.int64)
    recs = [[] for _ in range(B)] if record else None
    jrecs = [[] for _ in range(B)] if record else None

    def shift_at(m_idx):
        if perturbation is None:
            return None
        return perturbation.batch_decide(anchor_m[m_idx], anchor_x[m_idx], elapsed[m_idx])

    def g_at(m, x, u2):
        if integrand is None:
            return None
        pt = x + u2 if u2 is not None else x
        return integrand(m, pt)

    def mark_hits(idx, m, x, times):
        if hit_test is None:
            return
        inside = hit_test(m, x)
        fresh = inside & ~hit[idx]
        sub = idx[fresh]
        hit[sub] = True
        hit_times[sub] = times[fresh] if isinstance(times, np.ndarray) else times
        if stop_on_hit:
            active[sub] = False

    all_idx = np.arange(B)
    u2_now = shift_at(all_idx)
    g_prev = g_at(modes, xs, u2_now)
    if g_prev is not None:
        peak = g_prev.copy()
    else:
        g_prev = np.zeros(B)
    mark_hits(all_idx, modes, xs, np.zeros(B))
    if record:
        for i in range(B):
            recs[i].append((0.0, int(modes[i]), xs[i].copy(), "flow"))

    while True:
        act = np.nonzero(active)[0]
        if act.size == 0:
            break
        deltas = np.minimum(step, horizon - t[act])
        u1 = policy.batch_decide(anchor_m[act], anchor_x[act], elapsed[act])
        u2 = shift_at(act)
        x_end, dhaz, stages = _rk4(chars, modes[act], xs[act], u1, deltas, shift=u2)
        if not np.isfinite(x_end).all():
            bad = act[~np.isfinite(x_end).all(axis=1)][0]
            raise IntegrationError(
                "flow integration produced a non-finite state", modes[bad], xs[bad], t[bad]
            )
        crossed = haz[act] + dhaz >= thresholds[act]

        ni = act[~crossed]
        if ni.size:
            d_ni = deltas[~crossed]
            t_new = t[ni] + d_ni
            x_new = x_end[~crossed]
            haz[ni] += dhaz[~crossed]
            elapsed[ni] += d_ni
            if integrand is not None:
                u2e = shift_at(ni)
                g_new = g_at(modes[ni], x_new, u2e)
                integrals[ni] += 0.5 * (np.exp(-t[ni]) * g_prev[ni] + np.exp(-t_new) * g_new) * d_ni
                peak[ni] = np.maximum(peak[ni], g_new)
                g_prev[ni] = g_new
            t[ni] = t_new
            xs[ni] = x_new
            steps_done[ni] += 1
            mark_hits(ni, modes[ni], x_new, t_new)
            if record:
                for pos, i in enumerate(ni):
                    done = t_new[pos] >= horizon - _TIME_EPS
                    if done or steps_done[i] % record_stride == 0:
                        recs[i].append((float(t_new[pos]), int(modes[i]), x_new[pos].copy(), "flow"))
            active[ni] &= t[ni] < horizon - _TIME_EPS

        ji = act[crossed]
        if ji.size:
            d_j = deltas[crossed]
            u1j = u1[crossed]
            u2j = u2[crossed] if u2 is not None else None
            resid = thresholds[ji] - haz[ji]
            stages_j = tuple(s[crossed] for s in stages)
            taus = _invert_hazard(d_j, stages_j, resid, 1e-10 * (1.0 + t[ji]))
            pre_x, _, _ = _rk4(chars, modes[ji], xs[ji], u1j, taus, shift=u2j, with_hazard=False)
            t_jump = t[ji] + taus
            elapsed[ji] += taus
            if integrand is not None:
                u2p = shift_at(ji)
                g_pre = g_at(modes[ji], pre_x, u2p)
                integrals[ji] += 0.5 * (np.exp(-t[ji]) * g_prev[ji] + np.exp(-t_jump) * g_pre) * taus
                peak[ji] = np.maximum(peak[ji], g_pre)
            else:
                u2p = shift_at(ji) if perturbation is not None else None
            mark_hits(ji, modes[ji], pre_x, t_jump)

            eval_x = pre_x + u2p if u2p is not None else pre_x
            w, tm, tx = chars.batch_kernel(modes[ji], eval_x, u1j)
            if u2p is not None:
                tx = tx - u2p[:, None, :]
            uniforms = np.array([draws.uniform(int(i)) for i in ji])
            cum = np.cumsum(w, axis=1)
            choice = np.minimum((uniforms[:, None] >= cum).sum(axis=1), w.shape[1] - 1)
            rows = np.arange(ji.size)
            new_m = tm[rows, choice].astype(np.int64)
            new_x = tx[rows, choice]
            if record:
                for pos, i in enumerate(ji):
                    recs[i].append((float(t_jump[pos]), int(modes[i]), pre_x[pos].copy(), "flow"))
                    recs[i].append((float(t_jump[pos]), int(new_m[pos]), new_x[pos].copy(), "jump"))
                    jrecs[i].append(
                        (
                            float(t_jump[pos]),
                            HybridState(int(modes[i]), pre_x[pos]),
                            HybridState(int(new_m[pos]), new_x[pos]),
                        )
                    )
            modes[ji] = new_m
            xs[ji] = new_x
            t[ji] = t_jump
            haz[ji] = 0.0
            elapsed[ji] = 0.0
            anchor_m[ji] = new_m
            anchor_x[ji] = new_x
            fresh = jumps[ji] == 0
            first_jump_times[ji[fresh]] = t_jump[fresh]
            jumps[ji] += 1
            thresholds[ji] = np.array([draws.exponential(int(i)) for i in ji])
            if integrand is not None:
                u2post = shift_at(ji)
                g_post = g_at(modes[ji], xs[ji], u2post)
                peak[ji] = np.maximum(peak[ji], g_post)
                g_prev[ji] = g_post
            mark_hits(ji, modes[ji], xs[ji], t_jump)
            active[ji] &= t[ji] < horizon - _TIME_EPS
            if stop_on_jump:
                active[ji] = False

    return EnsembleSummary(
        integrals=integrals,
        peak=peak,
        hit=hit,
        hit_times=hit_times,
        jumps=jumps,
        first_jump_times=first_jump_times,
        final_modes=modes,
        final_xs=xs,
        records=recs,
        jump_records=jrecs,
    )


def run_ensemble(chars: PdmpCharacteristics, start_modes, start_xs, policy: ControlPolicy, *,
                 horizon: float, step: float = 1e-3, seed: int = 0,
                 integrand=None, hit_test=None, stop_on_hit: bool = False,
                 stop_on_jump: bool = False,
                 perturbation: Optional[PerturbationPolicy] = None,
                 record: bool = False, record_stride: int = 1,
                 threads: Optional[int] = None, chunk_size: int = 4096,
                 stream_offset: int = 0) -> EnsembleSummary:
    """Simulate paths in lockstep; per-path results are chunking-invariant.

    ``integrand(modes, xs) -> (B,)`` is integrated against ``exp(-t)`` by the
    trapezoid rule on step endpoints with both sides of every jump evaluated
    exactly; its running maximum is tracked in ``peak``.  ``hit_test`` flags
    entry into a region.  Chunk boundaries depend only on ``chunk_size``, so
    the worker count never changes results.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if step <= 0:
        raise ValueError("step must be positive")
    modes0 = np.atleast_1d(np.asarray(start_modes, dtype=np.int64))
    xs0 = np.atleast_2d(np.asarray(start_xs, dtype=float))
    if xs0.shape[0] != modes0.shape[0]:
        raise ValueError("start_modes and start_xs disagree on path count")
    if (modes0 < 0).any() or (modes0 >= chars.mode_count).any():
        raise ValueError("start mode out of range")
    n = modes0.shape[0]
    spans = [(lo, min(lo + chunk_size, n)) for lo in range(0, n, chunk_size)]

    def work(span):
        lo, hi = span
        return _simulate_chunk(
            chars, policy, modes0[lo:hi], xs0[lo:hi],
            horizon=horizon, step=step, seed=seed, offset=stream_offset + lo,
            integrand=integrand, hit_test=hit_test, stop_on_hit=stop_on_hit,
            stop_on_jump=stop_on_jump, perturbation=perturbation,
            record=record, record_stride=record_stride,
        )

    workers = resolve_threads(threads)
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(span) for span in spans]

    def cat(attr):
        return np.concatenate([getattr(p, attr) for p in parts])

    records = None
    jump_records = None
    if record:
        records = [r for p in parts for r in p.records]
        jump_records = [r for p in parts for r in p.jump_records]
    return EnsembleSummary(
        integrals=cat("integrals"), peak=cat("peak"), hit=cat("hit"),
        hit_times=cat("hit_times"), jumps=cat("jumps"),
        first_jump_times=cat("first_jump_times"),
        final_modes=cat("final_modes"), final_xs=cat("final_xs"),
        records=records, jump_records=jump_records,
    )


def flow_step(chars: PdmpCharacteristics, state: HybridState, control: float, h: float) -> HybridState:
    """Advance the continuous coordinates by one RK4 step; mode unchanged."""
    if h <= 0:
        raise ValueError("step size must be positive")
    x_end, _, _ = _rk4(
        chars, np.array([state.mode]), state.x[None, :], np.array([float(control)]),
        np.array([float(h)]), with_hazard=False,
    )
    if not np.isfinite(x_end).all():
        raise IntegrationError("flow step produced a non-finite state", state.mode, state.x, 0.0)
    return HybridState(state.mode, x_end[0])


def _check_control(policy: ControlPolicy, value: float):
    if value not in policy.control_space:
        raise ValueError("policy returned a control outside its control space")
    return value


def sample_jump_time(chars: PdmpCharacteristics, anchor: HybridState, policy: ControlPolicy,
                     rng: np.random.Generator, t_max: float, *, step: float = 1e-3):
    """First jump time from the integrated hazard, or ``None`` before ``t_max``.

    Draws one unit exponential, integrates the hazard along the flow with
    fixed step ``step``, and refines the crossing by bisection to tolerance
    ``1e-10 * (1 + t)``.  Returns ``(time, pre-jump state)`` on a crossing and
    ``(None, state at t_max)`` otherwise.
    """
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    threshold = rng.exponential()
    mode = np.array([anchor.mode])
    x = anchor.x[None, :].copy()
    t = 0.0
    haz = 0.0
    while t < t_max - _TIME_EPS:
        delta = min(step, t_max - t)
        u = _check_control(policy, policy.decide(anchor, t))
        us = np.array([float(u)])
        deltas = np.array([delta])
        x_end, dhaz, stages = _rk4(chars, mode, x, us, deltas)
        if not np.isfinite(x_end).all():
            raise IntegrationError("flow integration produced a non-finite state", anchor.mode, x[0], t)
        if haz + dhaz[0] >= threshold:
            tau = _invert_hazard(deltas, stages, np.array([threshold - haz]),
                                 np.array([1e-10 * (1.0 + t)]))
            pre_x, _, _ = _rk4(chars, mode, x, us, tau, with_hazard=False)
            return float(t + tau[0]), HybridState(anchor.mode, pre_x[0])
        haz += dhaz[0]
        x = x_end
        t += delta
    return None, HybridState(anchor.mode, x[0])


def sample_post_jump(chars: PdmpCharacteristics, pre_state: HybridState, control: float,
                     rng: np.random.Generator) -> HybridState:
    """Draw the post-jump state by inverse CDF over the finite kernel."""
    lam = chars.rate(pre_state, float(control))
    if lam <= 0:
        raise ValueError("post-jump draw requires a positive jump rate at the pre-jump state")
    pairs = chars.kernel(pre_state, float(control))
    u = rng.uniform()
    acc = 0.0
    for weight, target in pairs:
        acc += weight
        if u < acc:
            return target
    return pairs[-1][1]


def sample_jump_time_thinning(chars: PdmpCharacteristics, anchor: HybridState,
                              policy: ControlPolicy, rng: np.random.Generator,
                              t_max: float, *, step: float = 1e-3, bound: Optional[float] = None):
    """Thinning (rejection) sampler for the first jump time; cross-check oracle.

    Proposes homogeneous arrivals at the rate bound and accepts each with
    probability ``rate/bound``.  Not the default sampler.
    """
    lam_max = float(bound if bound is not None else chars.rate_bound)
    if not math.isfinite(lam_max) or lam_max <= 0:
        raise ValueError("thinning requires a finite positive rate bound")
    mode = np.array([anchor.mode])
    x = anchor.x[None, :].copy()
    t = 0.0

    def advance(duration):
        nonlocal x, t
        remaining = duration
        while remaining > _TIME_EPS:
            delta = min(step, remaining)
            u = _check_control(policy, policy.decide(anchor, t))
            x_new, _, _ = _rk4(chars, mode, x, np.array([float(u)]), np.array([delta]),
                               with_hazard=False)
            x = x_new
            t += delta
            remaining -= delta

    while True:
        wait = rng.exponential(1.0 / lam_max)
        if t + wait >= t_max:
            advance(t_max - t)
            return None, HybridState(anchor.mode, x[0])
        advance(wait)
        u = _check_control(policy, policy.decide(anchor, t))
        state = HybridState(anchor.mode, x[0])
        if rng.uniform() <= chars.rate(state, float(u)) / lam_max:
            return t, state


def simulate(chars: PdmpCharacteristics, start: HybridState, policy: ControlPolicy,
             horizon: float, seed: int, *, step: float = 1e-3, record_stride: int = 1,
             stream_index: int = 0,
             perturbation: Optional[PerturbationPolicy] = None) -> Trajectory:
    """Full trajectory on ``[0, horizon]``; a pure function of its arguments."""
    summary = run_ensemble(
        chars, [start.mode], [start.x], policy,
        horizon=horizon, step=step, seed=seed, record=True, record_stride=record_stride,
        perturbation=perturbation, threads=1, stream_offset=stream_index,
    )
    rows = summary.records[0]
    segments = []
    seg_points = []
    seg_anchor = HybridState(rows[0][1], rows[0][2])
    seg_start = rows[0][0]
    for t, m, x, event in rows:
        if event == "jump":
            segments.append(TrajectorySegment(seg_start, seg_anchor, tuple(seg_points)))
            seg_anchor = HybridState(m, x)
            seg_start = t
            seg_points = [(t, x)]
        else:
            seg_points.append((t, x))
    segments.append(TrajectorySegment(seg_start, seg_anchor, tuple(seg_points)))
    return Trajectory(tuple(segments), tuple(summary.jump_records[0]), seed, horizon)
