"""Constraint sets, capped distances, normal cones, and geometric set checks.

Constraint and target sets are mode subsets crossed with axis-aligned boxes.
All distances are capped at one, matching how the verification criteria and
value functions consume them; states whose mode lies outside the set count as
distance one.  Invariance is checked by the exact generator decomposition of
the boundary condition (inward flow along every outward face normal plus zero
jump escape mass); viability additionally samples unit directions inside each
normal cone, because the infimum over controls couples the two terms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .pdmp import HybridState, PdmpCharacteristics

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class ModeBoxSet:
    """Closed hybrid set: a subset of modes crossed with a closed box.

    Bounds may be infinite.  ``modes`` is stored sorted and duplicate-free.
    """

    modes: tuple
    lo: Array
    hi: Array

    def __post_init__(self):
        modes = tuple(sorted({int(m) for m in np.atleast_1d(self.modes)}))
        if not modes:
            raise ValueError("mode set must be nonempty")
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be vectors of equal length")
        if not (lo <= hi).all():
            raise ValueError("lower bounds must not exceed upper bounds")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        table = np.zeros(max(modes) + 1, dtype=bool)
        table[list(modes)] = True
        object.__setattr__(self, "_mode_table", table)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def bounded(self) -> bool:
        return bool(np.isfinite(self.lo).all() and np.isfinite(self.hi).all())

    def mode_mask(self, modes: Array) -> Array:
        table = self._mode_table
        clipped = np.clip(modes, 0, len(table) - 1)
        return table[clipped] & (modes >= 0) & (modes < len(table))

    def box_distance(self, xs: Array) -> Array:
        """Euclidean distance from ``xs (B, dim)`` to the box."""
        below = np.clip(self.lo - xs, 0.0, None)
        above = np.clip(xs - self.hi, 0.0, None)
        return np.sqrt((below * below + above * above).sum(axis=1))

    def capped_distance_batch(self, modes: Array, xs: Array) -> Array:
        d = np.minimum(self.box_distance(xs), 1.0)
        return np.where(self.mode_mask(modes), d, 1.0)

    def contains_batch(self, modes: Array, xs: Array, tol: float = 0.0) -> Array:
        inside = ((xs >= self.lo - tol) & (xs <= self.hi + tol)).all(axis=1)
        return inside & self.mode_mask(modes)

    def interior_contains_batch(self, modes: Array, xs: Array) -> Array:
        inside = ((xs > self.lo) & (xs < self.hi)).all(axis=1)
        return inside & self.mode_mask(modes)

    def complement_gap_batch(self, modes: Array, xs: Array) -> Array:
        """Capped distance to the complement of this set's interior.

        Zero outside the open interior; inside, the smallest gap to a face,
        capped at one.  Mode hops count as distance at least one, so they
        never lower the capped value; a set with no finite face and all modes
        therefore gives one everywhere (empty-complement convention).
        """
        below = xs - self.lo
        above = self.hi - xs
        gaps = np.minimum(below.min(axis=1), above.min(axis=1))
        inside = ((below > 0) & (above > 0)).all(axis=1) & self.mode_mask(modes)
        return np.where(inside, np.minimum(gaps, 1.0), 0.0)

    def lattice(self, resolution: int):
        """Per-mode lattice ``(modes, points, boundary_mask)``, corners included."""
        if not self.bounded:
            raise ValueError("lattice requires a bounded box")
        if resolution < 2:
            raise ValueError("resolution must be at least 2")
        axes = [np.linspace(self.lo[i], self.hi[i], resolution) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        on_face = (pts <= self.lo + 0.0) | (pts >= self.hi - 0.0)
        boundary = on_face.any(axis=1)
        n = pts.shape[0]
        all_modes = np.repeat(np.asarray(self.modes, dtype=np.int64), n)
        all_pts = np.tile(pts, (len(self.modes), 1))
        all_boundary = np.tile(boundary, len(self.modes))
        return all_modes, all_pts, all_boundary

    def to_dict(self) -> dict:
        def enc(v, sign):
            return [None if not math.isfinite(x) else float(x) for x in v]

        return {"modes": list(self.modes), "lo": enc(self.lo, -1), "hi": enc(self.hi, 1)}

    @staticmethod
    def from_dict(d: dict) -> "ModeBoxSet":
        lo = [(-math.inf if v is None else float(v)) for v in d["lo"]]
        hi = [(math.inf if v is None else float(v)) for v in d["hi"]]
        return ModeBoxSet(tuple(d["modes"]), np.array(lo), np.array(hi))


@dataclass(frozen=True, eq=False)
class NormalCone:
    """Extreme rays of the outward normal cone; empty at interior points."""

    generators: tuple

    def __post_init__(self):
        gens = tuple(np.asarray(g, dtype=float) for g in self.generators)
        object.__setattr__(self, "generators", gens)


def capped_distance(box_set: ModeBoxSet, state: HybridState) -> float:
    """Distance from a hybrid state to the set, capped at one."""
    if state.x.shape[0] != box_set.dim:
        raise ValueError("state dimension does not match the set")
    return float(box_set.capped_distance_batch(np.array([state.mode]), state.x[None, :])[0])


def normal_cone(box_set: ModeBoxSet, state: HybridState, face_tol: float = 1e-9) -> NormalCone:
    """Outward normal cone at a point of the set (box faces give axis normals)."""
    if state.mode not in box_set.modes:
        raise ValueError("state mode lies outside the set")
    if capped_distance(box_set, state) > face_tol:
        raise ValueError("state is not in the set")
    gens = []
    for i in range(box_set.dim):
        if math.isfinite(box_set.lo[i]) and state.x[i] <= box_set.lo[i] + face_tol:
            e = np.zeros(box_set.dim)
            e[i] = -1.0
            gens.append(e)
        if math.isfinite(box_set.hi[i]) and state.x[i] >= box_set.hi[i] - face_tol:
            e = np.zeros(box_set.dim)
            e[i] = 1.0
            gens.append(e)
    return NormalCone(tuple(gens))


def _escape_mass_batch(chars: PdmpCharacteristics, box_set: ModeBoxSet,
                       modes: Array, xs: Array, control: float) -> Array:
    us = np.full(len(modes), float(control))
    rate = chars.batch_rate(modes, xs, us)
    out = np.zeros(len(modes))
    pos = rate > 0
    if pos.any():
        w, tm, tx = chars.batch_kernel(modes[pos], xs[pos], us[pos])
        flat_inside = box_set.contains_batch(tm.ravel(), tx.reshape(-1, tx.shape[2]))
        inside = flat_inside.reshape(tm.shape)
        out[pos] = rate[pos] * (w * (~inside)).sum(axis=1)
    return out


def jump_escape_mass(chars: PdmpCharacteristics, box_set: ModeBoxSet,
                     state: HybridState, control: float = 0.0) -> float:
    """Jump rate times the kernel mass landing outside the set; exact."""
    return float(
        _escape_mass_batch(chars, box_set, np.array([state.mode]), state.x[None, :], control)[0]
    )


@dataclass
class CheckReport:
    """Outcome of a grid-based set check with the worst violating tuple."""

    passed: bool
    kind: str
    worst: Optional[dict]
    grid: dict
    tolerance: float
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "pass": self.passed,
            "kind": self.kind,
            "worst": self.worst,
            "grid": self.grid,
            "tolerance": self.tolerance,
            "notes": self.notes,
        }


class _Worst:
    def __init__(self):
        self.value = -math.inf
        self.entry = None

    def offer(self, value, mode, point, control, direction, condition):
        if value > self.value:
            self.value = value
            self.entry = {
                "mode": int(mode),
                "point": [float(v) for v in np.atleast_1d(point)],
                "control": float(control),
                "direction": None if direction is None else [float(v) for v in direction],
                "value": float(value),
                "condition": condition,
            }


def _face_normals(box_set: ModeBoxSet, pts: Array, face_tol: float):
    """Boolean masks (B, dim) marking lower/upper face contact per axis."""
    at_lo = np.isfinite(box_set.lo) & (pts <= box_set.lo + face_tol)
    at_hi = np.isfinite(box_set.hi) & (pts >= box_set.hi - face_tol)
    return at_lo, at_hi


def check_invariance(chars: PdmpCharacteristics, box_set: ModeBoxSet, resolution: int = 33, *,
                     control_grid: Sequence[float] = (0.0,), tol: float = 1e-9) -> CheckReport:
    """Grid check of the invariance conditions over faces, corners and interior.

    At boundary points the condition must hold for every cone element; since
    the flow term is linear in the direction and the escape mass does not
    depend on it, scaling forces both parts separately, so checking outward
    face normals and zero escape mass is exact for box cones.  Interior points
    only need zero escape mass.
    """
    if not box_set.bounded:
        raise ValueError("invariance check requires bounded faces")
    modes, pts, boundary = box_set.lattice(resolution)
    at_lo, at_hi = _face_normals(box_set, pts, 1e-9)
    worst = _Worst()
    passed = True
    for u in control_grid:
        us = np.full(len(modes), float(u))
        flows = chars.batch_flow(modes, pts, us)
        escape = _escape_mass_batch(chars, box_set, modes, pts, u)
        for i in range(box_set.dim):
            direction = np.zeros(box_set.dim)
            for sign, mask in ((-1.0, at_lo[:, i]), (1.0, at_hi[:, i])):
                sel = mask & boundary
                if not sel.any():
                    continue
                vals = sign * flows[sel, i]
                k = int(np.argmax(vals))
                direction[i] = sign
                worst.offer(vals[k], modes[sel][k], pts[sel][k], u, direction.copy(), "flow")
                direction[i] = 0.0
                if vals[k] > tol:
                    passed = False
        k = int(np.argmax(escape))
        worst.offer(escape[k], modes[k], pts[k], u, None, "jump-escape")
        if escape[k] > tol:
            passed = False
    grid = {
        "density": resolution,
        "faces": int(2 * box_set.dim * len(box_set.modes)),
        "points": int(len(modes)),
    }
    return CheckReport(passed, "invariance", worst.entry, grid, tol)


def _cone_directions(gens: list, samples: int) -> list:
    """Unit directions spanning the conic hull of orthogonal generators."""
    if len(gens) <= 1:
        return [g.copy() for g in gens]
    if len(gens) == 2:
        out = []
        for theta in np.linspace(0.0, math.pi / 2.0, samples):
            out.append(math.cos(theta) * gens[0] + math.sin(theta) * gens[1])
        return out
    # Higher-dimensional corners: normalized convex combinations on a weight grid.
    out = []
    levels = max(samples - 1, 1)

    def rec(prefix, remaining, k):
        if k == len(gens) - 1:
            weights = prefix + [remaining]
            vec = sum(w * g for w, g in zip(weights, gens))
            norm = np.linalg.norm(vec)
            if norm > 0:
                out.append(vec / norm)
            return
        for w in range(remaining + 1):
            rec(prefix + [w], remaining - w, k + 1)

    rec([], levels, 0)
    return out


def check_viability(chars: PdmpCharacteristics, box_set: ModeBoxSet, resolution: int = 33, *,
                    control_grid: Sequence[float] = (0.0,), tol: float = 1e-9,
                    cone_samples: int = 9) -> CheckReport:
    """Grid check of the viability conditions (inf over the control grid).

    The infimum couples the flow and escape terms, so cone elements are
    sampled (generators plus ``cone_samples`` unit conic combinations per
    multi-generator cone); density is the soundness knob and the result is
    resolution-limited evidence, not a certificate.
    """
    if not box_set.bounded:
        raise ValueError("viability check requires bounded faces")
    modes, pts, boundary = box_set.lattice(resolution)
    worst = _Worst()
    passed = True
    flows = {}
    escapes = {}
    for u in control_grid:
        us = np.full(len(modes), float(u))
        flows[u] = chars.batch_flow(modes, pts, us)
        escapes[u] = _escape_mass_batch(chars, box_set, modes, pts, u)

    esc_stack = np.stack([escapes[u] for u in control_grid])
    esc_min = esc_stack.min(axis=0)
    esc_arg = esc_stack.argmin(axis=0)
    k = int(np.argmax(esc_min))
    worst.offer(esc_min[k], modes[k], pts[k], control_grid[esc_arg[k]], None, "jump-escape")
    if esc_min[k] > tol:
        passed = False

    b_idx = np.nonzero(boundary)[0]
    at_lo, at_hi = _face_normals(box_set, pts[b_idx], 1e-9)
    for pos, idx in enumerate(b_idx):
        gens = []
        for i in range(box_set.dim):
            if at_lo[pos, i]:
                e = np.zeros(box_set.dim)
                e[i] = -1.0
                gens.append(e)
            if at_hi[pos, i]:
                e = np.zeros(box_set.dim)
                e[i] = 1.0
                gens.append(e)
        for direction in _cone_directions(gens, cone_samples):
            best = math.inf
            best_u = control_grid[0]
            for u in control_grid:
                val = float(flows[u][idx] @ direction) + float(escapes[u][idx])
                if val < best:
                    best = val
                    best_u = u
            worst.offer(best, modes[idx], pts[idx], best_u, direction, "boundary-inf")
            if best > tol:
                passed = False
    grid = {
        "density": resolution,
        "faces": int(2 * box_set.dim * len(box_set.modes)),
        "points": int(len(modes)),
        "cone_samples": cone_samples,
    }
    return CheckReport(passed, "viability", worst.entry, grid, tol)
