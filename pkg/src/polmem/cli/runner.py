"""Scenario execution and artefact writing."""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .. import analysis
from ..dynamics.evolve import Trajectory, evolve, write_columns
from ..errors import InvalidArgument, NoCrossing, PolmemError
from ..model import Gaussian, ModelInstance, PulseTrain
from .config import ScenarioConfig

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
PLASTIC_THRESHOLD = 0.10


@dataclass(eq=False)
class RunResult:
    config: ScenarioConfig
    model: ModelInstance
    trajectory: Trajectory
    loop: analysis.HysteresisLoop
    summary: dict
    circuit: analysis.CircuitSeries | None = None
    files: tuple = ()


def _response_kind(model: ModelInstance) -> str:
    return "var_N" if model.kind == "jch" else "photons"


def simulate(cfg: ScenarioConfig, *, samples: int | None = None, rtol: float | None = None,
             atol: float | None = None, initial=None) -> RunResult:
    """Run one scenario in memory and build its summary."""
    model = cfg.build_model()
    icfg = cfg.integrator_config(output_samples=samples, rtol=rtol, atol=atol)
    duration = cfg.resolved_duration(model.drive)
    init = cfg.initial_state() if initial is None else initial
    obs = cfg.observables
    circuit = bool(obs.get("circuit", False))
    populations = None if obs.get("populations", True) else ()
    traj = evolve(init, model, duration, icfg, populations=populations,
                  record_circuit=circuit, store_states=bool(obs.get("store_states", False)))
    kind = _response_kind(model)
    loop = analysis.loop_from_trajectory(traj, kind)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "model": model.kind,
        "response": kind,
        "duration": duration,
        "signed_area_numeric": loop.signed_area,
        "signed_area_analytic": None,
        "circulation": loop.circulation,
        "epsilon_area": loop.eps_area,
        "loop": {"closure_area": loop.closure_area, "response_start": float(loop.y[0]),
                 "response_end": float(loop.y[-1]), "response_drop": loop.response_drop,
                 "closed": loop.closed},
        "eta": None,
        "tau_formula": None,
        "tau_empirical": None,
        "max_tail": float(np.max(traj.tail)),
        "min_eigenvalue": float(np.min(traj.min_eigenvalue)),
        "stats": {k: v for k, v in traj.stats.items() if k != "seconds"},
        "notes": [],
    }
    if not loop.closed:
        summary["notes"].append("loop-not-closed")
    if model.kind == "jch":
        eta = analysis.eta_from_state(init, model)
        tau = analysis.estimate_tau(model.params)
        summary.update(eta=eta, tau_formula=tau)
        dissipative = bool(model.collapse_ops)
        if isinstance(model.drive, Gaussian) and not dissipative:
            d = model.drive
            pred = analysis.AreaPrediction(d.xi_i, d.xi_f, d.sigma_w, d.T, tau, eta)
            summary["signed_area_analytic"] = analysis.loop_area_analytic(pred)
        if "1-,1-" in traj.populations:
            try:
                summary["tau_empirical"] = analysis.estimate_tau_empirical(traj)
            except NoCrossing:
                summary["notes"].append("no-population-crossing")
    if isinstance(model.drive, PulseTrain):
        rep = analysis.spiral_report(traj, model.drive, kind)
        summary["spiral"] = {
            "is_spiral": rep.is_spiral,
            "endpoint_tolerance": rep.endpoint_tolerance,
            "endpoint_gaps": [float(x) for x in rep.endpoint_gaps],
            "segments": [dict(index=s.index, t_start=s.t_start, t_end=s.t_end,
                              y_start=s.y_start, y_end=s.y_end, signed_area=s.signed_area,
                              epsilon_area=s.eps_area, circulation=s.circulation)
                         for s in rep.segments],
        }
    cs = None
    if circuit:
        cs = analysis.circuit_series(traj, model)
        scale = float(np.max(np.abs(cs.y_dot)))
        summary["circuit"] = {
            "V_R_initial": float(cs.V_R[0]),
            "max_abs_V_R": scale,
            "max_ehrenfest_residual": float(np.max(np.abs(cs.ehrenfest_residual[1:-1]))),
            "max_abs_b": float(np.max(np.abs(cs.b))),
        }
    return RunResult(cfg, model, traj, loop, summary, cs)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n")


def run(cfg: ScenarioConfig, out_dir, **kw) -> RunResult:
    """Simulate and write ``<prefix>_trajectory.csv`` and ``<prefix>_summary.json``.

    Partial outputs are removed if anything fails.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj_path = out / f"{cfg.prefix}_trajectory.csv"
    summary_path = out / f"{cfg.prefix}_summary.json"
    try:
        res = simulate(cfg, **kw)
        extra = None
        if res.circuit is not None:
            extra = {k: v for k, v in res.circuit.columns().items() if k not in ("a", "b")}
        res.trajectory.to_csv(traj_path, extra)
        write_json(summary_path, res.summary)
    except BaseException:
        for p in (traj_path, summary_path):
            p.unlink(missing_ok=True)
        raise
    res.files = (traj_path, summary_path)
    return res


def sweep(base: ScenarioConfig, parameter: str, values, out_dir=None, **kw) -> list[dict]:
    """Run ``base`` once per value of a dotted parameter; abort on the first failure."""
    from .config import set_path

    rows = []
    for v in values:
        try:
            cfg = set_path(base, parameter, v)
            cfg = replace(cfg, name=f"{base.name}[{parameter}={v}]")
            s = simulate(cfg, **kw).summary
        except PolmemError as exc:
            raise type(exc)(f"sweep aborted at {parameter} = {v}: {exc}") from exc
        rows.append({"value": v, "signed_area_numeric": s["signed_area_numeric"],
                     "signed_area_analytic": s["signed_area_analytic"],
                     "circulation": s["circulation"], "tau_empirical": s["tau_empirical"],
                     "loop_closed": s["loop"]["closed"]})
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        cols = {k: [r[k] for r in rows] for k in ("signed_area_numeric", "signed_area_analytic",
                                                  "tau_empirical")}
        cols = {"value": [_maybe_float(r["value"]) for r in rows],
                **{k: [np.nan if x is None else x for x in c] for k, c in cols.items()}}
        write_columns(out / f"{base.prefix}_sweep.csv", cols)
    return rows


def _maybe_float(v):
    try:
        return float(v)
    except (TypeError, ValueError):
        return np.nan


def plasticity(areas) -> tuple[float, str]:
    """Largest pairwise relative area difference and its classification."""
    areas = [float(a) for a in areas]
    if len(areas) < 2:
        raise InvalidArgument("plasticity needs at least two initial states")
    diff = max(analysis.relative_difference(a, b) for a, b in itertools.combinations(areas, 2))
    return diff, ("plastic" if diff > PLASTIC_THRESHOLD else "non-plastic")


def compare_models(configs, initial_states, **kw) -> dict:
    """Loop areas of each scenario under several initial states."""
    from .config import parse_initial

    if len(configs) != len(initial_states):
        raise InvalidArgument("one list of initial states per scenario")
    report = {"schema_version": SCHEMA_VERSION, "threshold": PLASTIC_THRESHOLD, "models": []}
    for cfg, states in zip(configs, initial_states):
        areas = []
        for spec in states:
            areas.append(simulate(cfg, initial=parse_initial(spec), **kw).summary[
                "signed_area_numeric"])
        diff, label = plasticity(areas)
        report["models"].append({"name": cfg.name, "model": cfg.model,
                                 "initial_states": states, "signed_areas": areas,
                                 "max_relative_difference": diff, "classification": label})
    return report
