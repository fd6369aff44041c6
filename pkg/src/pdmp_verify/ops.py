"""Scenario execution: build the model, run the requested operation, collect artifacts.

This is the single dispatch layer behind both the HTTP service and the CLI.
Artifacts are returned as named file contents; ``run_scenario`` additionally
writes them to disk and maps the outcome to an exit status (0 success,
1 failed check or unreachable target, 2 configuration error).
"""
from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from . import geometry, hjb, models, network, plotting, value_mc
from .pdmp import ControlPolicy, HybridState, PerturbationPolicy, simulate
from .schemas import (CheckConfig, HjbConfig, ModeBoxModel, Outcome, PlotConfig,
                      ReachConfig, Scenario, SimulateConfig, StateModel, ValueConfig)


class ScenarioError(ValueError):
    """Configuration problem detected after schema validation."""


def _mode_box(m: ModeBoxModel) -> geometry.ModeBoxSet:
    lo = [(-math.inf if v is None else float(v)) for v in m.lo]
    hi = [(math.inf if v is None else float(v)) for v in m.hi]
    return geometry.ModeBoxSet(tuple(m.modes), np.array(lo), np.array(hi))


def _state(s: StateModel) -> HybridState:
    return HybridState(s.mode, np.array(s.x, dtype=float))


def build_characteristics(spec) -> tuple:
    """Characteristics plus a metadata dict from a model spec."""
    if spec.type == "cook":
        params = models.CookParams(spec.ka, spec.kd, spec.jp, spec.kp)
        return models.build_cook(params), {"alpha_max": params.alpha_max}
    if spec.type == "onoff":
        params = models.OnOffParams(
            r0=models.piecewise_linear(spec.r0.x, spec.r0.y),
            r1=models.piecewise_linear(spec.r1.x, spec.r1.y),
            lambda0=spec.lambda0,
            lambda1=spec.lambda1,
            alpha_max=spec.alpha_max,
        )
        return models.build_onoff(params), {"alpha_max": params.alpha_max}
    if spec.type == "phage":
        params = models.PhageParams(
            spec.k1, spec.km1, spec.k2, spec.km2, spec.k3, spec.km3,
            spec.k4, spec.km4, spec.kt, spec.kd, spec.n, spec.err, spec.cap,
        )
        return models.build_phage(params), {"epsilon_max": params.epsilon_max}
    if spec.type == "network":
        net = network.ReactionNetwork(
            tuple(network.Species(s.name, s.kind) for s in spec.species),
            tuple(network.Reaction(r.alpha, r.beta, r.rate, r.klass) for r in spec.reactions),
            network.SmoothingProfile(spec.smoothing.err, spec.smoothing.cap),
        )
        modes = None if spec.modes is None else [tuple(m) for m in spec.modes]
        return network.compile(net, modes), {"species": [s.name for s in spec.species]}
    raise ScenarioError(f"unknown model type {spec.type!r}")


def _require(value, name: str):
    if value is None:
        raise ScenarioError(f"scenario is missing the {name!r} section")
    return value


def _resolve_threads(explicit: Optional[int], scenario_threads: Optional[int]) -> int:
    """Worker count: explicit flag > PDMP_VERIFY_THREADS > scenario > 1."""
    if explicit is not None and explicit > 0:
        return int(explicit)
    env = os.environ.get("PDMP_VERIFY_THREADS", "").strip()
    if env:
        try:
            n = int(env)
            if n > 0:
                return n
        except ValueError:
            pass
    if scenario_threads is not None and scenario_threads > 0:
        return int(scenario_threads)
    return 1


def _op_simulate(chars, cfg: SimulateConfig, seed: int, threads) -> Outcome:
    traj = simulate(
        chars, _state(cfg.start), ControlPolicy.constant(0.0), cfg.horizon, seed,
        step=cfg.step, record_stride=cfg.record_stride,
    )
    artifacts = {"trajectory.csv": traj.to_csv()}
    if cfg.plot is not None:
        times = []
        coords = []
        for t, _, x, _ in traj.rows():
            times.append(t)
            coords.append(x)
        style = plotting.PlotStyle(
            kind=cfg.plot.kind, component=cfg.plot.component,
            invariant_bounds=cfg.plot.invariant_bounds,
            target_bounds=cfg.plot.target_bounds, box=cfg.plot.box, title=cfg.plot.title,
        )
        artifacts["trajectory.svg"] = plotting.trajectory_svg(times, np.array(coords), style)
    final = traj.final_state
    summary = {
        "jumps": traj.n_jumps,
        "final": {"mode": final.mode, "x": final.x.tolist()},
        "horizon": cfg.horizon,
        "seed": seed,
    }
    artifacts["result.json"] = json.dumps({"op": "simulate", "status": "ok", **summary}, indent=2)
    return Outcome(op="simulate", status="ok", exit_code=0, summary=summary, artifacts=artifacts)


def _op_check(chars, cfg: CheckConfig, kind: str, threads) -> Outcome:
    box = _mode_box(cfg.set)
    if kind == "invariance":
        report = geometry.check_invariance(
            chars, box, cfg.resolution, control_grid=tuple(cfg.controls), tol=cfg.tolerance,
        )
    else:
        report = geometry.check_viability(
            chars, box, cfg.resolution, control_grid=tuple(cfg.controls),
            tol=cfg.tolerance, cone_samples=cfg.cone_samples,
        )
    payload = report.to_json()
    status = "ok" if report.passed else "fail"
    artifacts = {"report.json": json.dumps(payload, indent=2)}
    op = f"check-{kind}"
    artifacts["result.json"] = json.dumps({"op": op, "status": status, **payload}, indent=2)
    return Outcome(op=op, status=status, exit_code=0 if report.passed else 1,
                   summary=payload, artifacts=artifacts)


def _op_value(chars, cfg: ValueConfig, seed: int, threads) -> Outcome:
    box = _mode_box(cfg.set)
    start = _state(cfg.start)
    policy = ControlPolicy.constant(0.0)
    artifacts = {}
    if cfg.kind == "hitting":
        est = value_mc.estimate_hitting_probability(
            chars, box, start, policy, cfg.paths, cfg.horizon, seed,
            step=cfg.step, threads=threads,
        )
        summary = est.to_json()
    elif cfg.radii is not None:
        entries = value_mc.convergence_sweep(
            chars, box, start, policy, cfg.radii, cfg.paths, cfg.horizon, seed,
            step=cfg.step, threads=threads,
        )
        artifacts["sweep.csv"] = value_mc.sweep_csv(entries)
        summary = {
            "sweep": [
                {"radius": e.radius, "estimate": e.estimate.to_json(), "gap": e.gap,
                 "gap_std_error": e.gap_std_error}
                for e in entries
            ]
        }
    else:
        pert = None
        if cfg.perturbation is not None:
            pert = PerturbationPolicy.constant(np.array(cfg.perturbation.vector))
        if cfg.kind == "viability":
            est = value_mc.estimate_viability_value(
                chars, box, start, policy, cfg.paths, cfg.horizon, seed,
                step=cfg.step, threads=threads,
            )
        elif cfg.kind == "invariance":
            est = value_mc.estimate_invariance_value(
                chars, box, start, policy, cfg.paths, cfg.horizon, seed,
                step=cfg.step, threads=threads,
            )
        else:
            est = value_mc.estimate_reach_value(
                chars, box, start, policy, pert, cfg.paths, cfg.horizon, seed,
                step=cfg.step, threads=threads,
            )
        summary = est.to_json()
    artifacts["estimate.json"] = json.dumps(summary, indent=2)
    artifacts["result.json"] = json.dumps({"op": "value", "status": "ok", **summary}, indent=2)
    return Outcome(op="value", status="ok", exit_code=0, summary=summary, artifacts=artifacts)


def _op_hjb(chars, cfg: HjbConfig, threads) -> Outcome:
    box = _mode_box(cfg.set)
    domain = _mode_box(cfg.domain)
    if cfg.cost == "reach":
        cost = hjb.reach_cost(box)
        objective = cfg.objective or "min"
    else:
        cost = hjb.viability_cost(box)
        objective = cfg.objective or ("max" if cfg.cost == "invariance" else "min")
    grid, report = hjb.solve_discounted(
        chars, cost, objective, domain, cfg.shape,
        step=cfg.step, tol=cfg.tol, control_grid=tuple(cfg.controls),
    )
    probes = [
        {"mode": p.mode, "x": p.x, "value": grid.interpolate(_state(p))} for p in cfg.probes
    ]
    summary = {"solve_report": report.to_json(), "probes": probes, "cost": cfg.cost,
               "objective": objective}
    artifacts = {
        "value_grid.json": grid.to_json(),
        "solve_report.json": json.dumps(report.to_json(), indent=2),
        "result.json": json.dumps({"op": "solve-hjb", "status": "ok", **summary}, indent=2),
    }
    if domain.dim <= 2:
        artifacts["value_grid.csv"] = grid.to_csv()
    return Outcome(op="solve-hjb", status="ok", exit_code=0, summary=summary, artifacts=artifacts)


def _op_reach(chars, cfg: ReachConfig, seed: int, threads) -> Outcome:
    target = _mode_box(cfg.target)
    domain = _mode_box(cfg.domain)
    corroborate = None
    if cfg.corroborate:
        corroborate = {
            "policy": ControlPolicy.constant(0.0),
            "paths": cfg.paths,
            "horizon": cfg.horizon,
            "seed": seed,
            "threads": threads,
        }
    decision = hjb.decide_reachability(
        chars, target, _state(cfg.start), domain, cfg.shape,
        step=cfg.step, tol=cfg.tol, control_grid=tuple(cfg.controls),
        margin=cfg.margin, audit_functions=cfg.audit_functions,
        audit_slack=cfg.audit_slack, seed=seed, corroborate=corroborate,
    )
    payload = decision.to_json()
    status = "ok" if decision.reachable else "fail"
    artifacts = {
        "decision.json": json.dumps(payload, indent=2),
        "result.json": json.dumps({"op": "reach", "status": status, **payload}, indent=2),
    }
    return Outcome(op="reach", status=status, exit_code=0 if decision.reachable else 1,
                   summary=payload, artifacts=artifacts)


def _op_plot(cfg: PlotConfig) -> Outcome:
    path = Path(cfg.source_csv)
    if not path.exists():
        raise ScenarioError(f"trajectory CSV not found: {path}")
    rows = path.read_text().strip().splitlines()
    if len(rows) < 2:
        raise ScenarioError("trajectory CSV has no samples")
    times = []
    coords = []
    for line in rows[1:]:
        cells = line.split(",")
        times.append(float(cells[0]))
        coords.append([float(v) for v in cells[2:-1]])
    style = plotting.PlotStyle(
        kind=cfg.style.kind, component=cfg.style.component,
        invariant_bounds=cfg.style.invariant_bounds,
        target_bounds=cfg.style.target_bounds, box=cfg.style.box, title=cfg.style.title,
    )
    svg = plotting.trajectory_svg(times, np.array(coords), style)
    summary = {"samples": len(times), "source": str(path)}
    artifacts = {
        "plot.svg": svg,
        "result.json": json.dumps({"op": "plot", "status": "ok", **summary}, indent=2),
    }
    return Outcome(op="plot", status="ok", exit_code=0, summary=summary, artifacts=artifacts)


def execute(scenario: Scenario, op: Optional[str] = None, *, seed: Optional[int] = None,
            threads: Optional[int] = None) -> Outcome:
    """Run one operation of a validated scenario and return its outcome."""
    requested = op or scenario.op
    if requested is None:
        raise ScenarioError("no operation requested (scenario has no 'op' and none was given)")
    if scenario.op is not None and op is not None and scenario.op != op:
        raise ScenarioError(f"scenario declares op {scenario.op!r} but {op!r} was invoked")
    use_seed = scenario.seed if seed is None else seed
    use_threads = _resolve_threads(threads, scenario.threads)
    if requested == "plot":
        return _op_plot(_require(scenario.plot, "plot"))
    chars, _meta = build_characteristics(scenario.model)
    if requested == "simulate":
        return _op_simulate(chars, _require(scenario.simulate, "simulate"), use_seed, use_threads)
    if requested == "check-invariance":
        return _op_check(chars, _require(scenario.check, "check"), "invariance", use_threads)
    if requested == "check-viability":
        return _op_check(chars, _require(scenario.check, "check"), "viability", use_threads)
    if requested == "value":
        return _op_value(chars, _require(scenario.value, "value"), use_seed, use_threads)
    if requested == "solve-hjb":
        return _op_hjb(chars, _require(scenario.hjb, "hjb"), use_threads)
    if requested == "reach":
        return _op_reach(chars, _require(scenario.reach, "reach"), use_seed, use_threads)
    raise ScenarioError(f"unknown operation {requested!r}")


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; errors carry path and line details."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                            f"{exc.msg}") from exc
    try:
        return Scenario.model_validate(payload)
    except ValidationError as exc:
        details = "; ".join(
            f"{'/'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise ScenarioError(f"{path}: {details}") from exc


def run_scenario(path, out_dir, op: Optional[str] = None, *, seed: Optional[int] = None,
                 threads: Optional[int] = None) -> int:
    """Execute a scenario file and write its artifacts; returns the exit status.

    Nothing is written on a configuration error; artifacts land only after the
    computation finishes.
    """
    try:
        scenario = load_scenario(path)
        outcome = execute(scenario, op, seed=seed, threads=threads)
    except (ScenarioError, ValueError) as exc:
        print(f"configuration error: {exc}")
        return 2
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in outcome.artifacts.items():
        (out / name).write_text(content, encoding="utf-8")
    print(json.dumps({"op": outcome.op, "status": outcome.status,
                      "artifacts": sorted(outcome.artifacts)}, indent=2))
    return outcome.exit_code
