"""Command-line front end: plan, simulate, and check.

`plan` runs the reduced-model trajectory optimizer alone and writes the
reference as CSV.  `simulate` runs the full closed loop and writes the
decimated log as CSV plus a summary JSON.  `check` runs the invariant
battery and prints one verdict line per check.  Every artifact-producing
command also writes a manifest recording the resolved configuration,
seeds, and wall time, so a run can be reproduced from the manifest alone.

Exit codes are a stable contract:

    0  success
    1  configuration error (missing/invalid config file or flag values)
    2  planner failure (reference optimization did not converge)
    3  divergence (closed loop aborted; log truncated at the abort)
    4  check failure (one or more invariant checks failed)

Set ``WIPHWBC_LOG=debug`` or ``info`` for progress logging on stderr.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__, ddp, diagnostics
from .model import ConfigError, RobotDescription, load_description, upright_rest
from .mpc import MpcConfig, make_reference
from .sim import (ControllerConfig, PlannerError, SimConfig, SimLog,
                  run_closed_loop)
from .wbc import WbcConfig
from .wipm import extract_params

__all__ = ["main"]

PLAN_SCHEMA = "wiphwbc-plan-v1"
SIM_SCHEMA = "wiphwbc-sim-v1"

_log = logging.getLogger("wiphwbc")


def _setup_logging():
    level = {"debug": logging.DEBUG, "info": logging.INFO}.get(
        os.environ.get("WIPHWBC_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _jsonable(obj):
    """Recursively convert to JSON-encodable values; non-finite floats
    become strings so the manifest stays strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write_json_atomic(path: str, payload: dict):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def _manifest(command: str, args: argparse.Namespace, out_dir: str,
              parameters: dict, outputs: dict, status: str,
              wall_s: float, notes: dict | None = None) -> dict:
    m = {
        "schema": "wiphwbc-manifest-v1",
        "tool": "wiphwbc",
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "argv": sys.argv[1:],
        "config_paths": {"robot": args.robot,
                         "sim": getattr(args, "sim", None)},
        "parameters": parameters,
        "out_dir": os.path.abspath(out_dir),
        "outputs": outputs,
        "status": status,
        "wall_time_s": round(wall_s, 3),
    }
    if notes:
        m.update(notes)
    return m


def _robot_snapshot(desc: RobotDescription) -> dict:
    return dataclasses.asdict(desc)


def _load_robot(path: str) -> RobotDescription:
    return load_description(path)


# ---------------------------------------------------------------- sim config

_SIM_KEYS = {
    "duration": float, "goal": float, "tf": float, "dt_physics": float,
    "wbc_period": float, "mpc_period": float, "decimation": int,
    "perturbation": float, "seed": int, "divergence_angle": float,
}
_CTRL_KEYS = {
    "decoupled": bool, "balance_weight": float, "ee_weight": float,
    "reg_weight": float, "mpc_horizon": float, "warm_start": bool,
}


def _coerce(raw: str, typ, where: str, key: str):
    try:
        if typ is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(
            f"[{where}] {key} = {raw!r} is not a {typ.__name__}") from None


def _read_sim_file(path: str) -> tuple[dict, dict]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cp.read_string(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read sim config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"sim config parse failure: {exc}") from exc
    sim_kw: dict = {}
    ctrl_kw: dict = {}
    for section, keys, sink in (("sim", _SIM_KEYS, sim_kw),
                                ("controller", _CTRL_KEYS, ctrl_kw)):
        if section not in cp:
            continue
        for key, raw in cp[section].items():
            if key not in keys:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            sink[key] = _coerce(raw, keys[key], section, key)
    return sim_kw, ctrl_kw


def _build_configs(args: argparse.Namespace) -> tuple[SimConfig, ControllerConfig]:
    sim_kw: dict = {}
    ctrl_kw: dict = {}
    if args.sim is not None:
        sim_kw, ctrl_kw = _read_sim_file(args.sim)
    # command-line flags win over the file
    if args.goal is not None:
        sim_kw["goal"] = args.goal
    if args.tf is not None:    # flag means "run the whole tf"
        sim_kw["tf"] = args.tf
        sim_kw["duration"] = args.tf
    if args.seed is not None:
        sim_kw["seed"] = args.seed
    if args.decoupled:
        ctrl_kw["decoupled"] = True

    horizon = ctrl_kw.pop("mpc_horizon", 1.0)
    warm = ctrl_kw.pop("warm_start", True)
    try:
        sim_cfg = SimConfig(**sim_kw)
        mpc_cfg = MpcConfig(period=sim_cfg.mpc_period, horizon_time=horizon,
                            warm_start=warm)
        wbc_cfg = WbcConfig(period=sim_cfg.wbc_period)
        ctrl_cfg = ControllerConfig(mpc=mpc_cfg, wbc=wbc_cfg, **ctrl_kw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if sim_cfg.tf < mpc_cfg.horizon_time:
        raise ConfigError(f"tf = {sim_cfg.tf} is shorter than the "
                          f"controller horizon {mpc_cfg.horizon_time}")
    return sim_cfg, ctrl_cfg


# ---------------------------------------------------------------- csv output

def _write_plan_csv(path: str, traj: ddp.Trajectory, dt: float):
    n_rows = traj.states.shape[0]
    u = np.append(traj.controls, 0.0)  # no control after the last knot
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema: {PLAN_SCHEMA}\n")
        fh.write("t,theta_ref,thetadot_ref,x_ref,xdot_ref,u_ref\n")
        for i in range(n_rows):
            X = traj.states[i]
            fh.write(",".join((_fmt(i * dt), _fmt(X[0]), _fmt(X[1]),
                               _fmt(X[2]), _fmt(X[3]), _fmt(u[i]))) + "\n")


def sim_csv_columns(n: int) -> list[str]:
    cols = ["t", "x", "xdot"]
    cols += [f"q{j}" for j in range(1, n + 1)]
    cols += [f"qd{j}" for j in range(1, n + 1)]
    cols += ["theta", "thetadot", "theta_traj", "x_traj", "u"]
    cols += [f"tau{j}" for j in range(1, n + 1)]
    cols += ["ee_x", "ee_z", "ee_phi", "E_kin", "E_pot",
             "qp_status", "mpc_iters", "thetadot_traj", "xdot_traj"]
    return cols


def _write_sim_csv(path: str, log: SimLog, n: int):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# schema: {SIM_SCHEMA}\n")
        fh.write(",".join(sim_csv_columns(n)) + "\n")
        for i in range(log.t.size):
            row = [_fmt(log.t[i]), _fmt(log.x[i]), _fmt(log.xdot[i])]
            row += [_fmt(v) for v in log.q[i]]
            row += [_fmt(v) for v in log.qdot[i]]
            row += [_fmt(log.theta[i]), _fmt(log.thetadot[i]),
                    _fmt(log.theta_traj[i]), _fmt(log.x_traj[i]),
                    _fmt(log.u[i])]
            row += [_fmt(v) for v in log.torques[i]]
            row += [_fmt(log.ee_x[i]), _fmt(log.ee_z[i]),
                    _fmt(log.ee_phi[i]), _fmt(log.e_kin[i]),
                    _fmt(log.e_pot[i]), str(log.qp_status[i]),
                    str(int(log.mpc_iters[i])),
                    _fmt(log.thetadot_traj[i]), _fmt(log.xdot_traj[i])]
            fh.write(",".join(row) + "\n")


# --------------------------------------------------------------- subcommands

def _parse_weights(raw: str | None, what: str) -> tuple | None:
    if raw is None:
        return None
    parts = raw.split(",")
    if len(parts) != 4:
        raise ConfigError(f"{what} needs 4 comma-separated values, got {raw!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{what} has a non-numeric entry: {raw!r}") from None


def cmd_plan(args: argparse.Namespace) -> int:
    t_start = time.perf_counter()
    desc = _load_robot(args.robot)
    goal_state = np.array([0.0, 0.0, args.goal, 0.0])
    run_w = _parse_weights(args.run_weights, "--run-weights")
    term_w = _parse_weights(args.term_weights, "--term-weights")
    cost_kw = {}
    if run_w is not None:
        cost_kw["run_weight_diag"] = run_w
    if term_w is not None:
        cost_kw["term_weight_diag"] = term_w
    if args.control_weight is not None:
        cost_kw["control_weight"] = args.control_weight
    try:
        cost = ddp.goal_cost(goal_state, **cost_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    s0 = upright_rest(desc)
    p0 = extract_params(desc, s0)
    cfg = MpcConfig()
    try:
        traj = make_reference(p0, p0.state(s0.x, s0.xdot), goal_state,
                              args.tf, cfg, cost)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _log.info("plan solved: converged=%s iterations=%d cost=%.6g",
              traj.converged, traj.iterations, traj.cost)

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "plan.csv")
    _write_plan_csv(csv_path, traj, cfg.dt)
    status = "ok" if traj.converged else "planner_failure"
    parameters = {
        "robot": _robot_snapshot(desc),
        "goal": args.goal, "tf": args.tf, "dt": cfg.dt,
        "cost": {"run_weight_diag": list(cost.run_weight_diag),
                 "control_weight": cost.control_weight,
                 "term_weight_diag": list(cost.term_weight_diag)},
    }
    notes = {"planner": {"converged": traj.converged,
                         "iterations": traj.iterations,
                         "cost": traj.cost,
                         "partial_output": not traj.converged}}
    _write_json_atomic(os.path.join(args.out, "manifest.json"),
                       _manifest("plan", args, args.out, parameters,
                                 {"plan_csv": "plan.csv"}, status,
                                 time.perf_counter() - t_start, notes))
    if not traj.converged:
        print(f"error: plan did not converge after {traj.iterations} "
              "iterations; partial output written", file=sys.stderr)
        return 2
    print(f"plan: {traj.states.shape[0]} rows -> {csv_path}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    t_start = time.perf_counter()
    desc = _load_robot(args.robot)
    sim_cfg, ctrl_cfg = _build_configs(args)
    os.makedirs(args.out, exist_ok=True)

    parameters = {
        "robot": _robot_snapshot(desc),
        "sim": {f.name: getattr(sim_cfg, f.name)
                for f in dataclasses.fields(sim_cfg) if f.name != "initial"},
        "controller": {
            "decoupled": ctrl_cfg.decoupled,
            "balance_weight": ctrl_cfg.balance_weight,
            "ee_weight": ctrl_cfg.ee_weight,
            "reg_weight": ctrl_cfg.reg_weight,
            "mpc": dataclasses.asdict(ctrl_cfg.mpc),
            "wbc": dataclasses.asdict(ctrl_cfg.wbc),
        },
    }

    try:
        log = run_closed_loop(desc, sim_cfg, ctrl_cfg)
    except PlannerError as exc:
        _write_json_atomic(os.path.join(args.out, "manifest.json"),
                           _manifest("simulate", args, args.out, parameters,
                                     {}, "planner_failure",
                                     time.perf_counter() - t_start,
                                     {"error": str(exc)}))
        print(f"error: {exc}", file=sys.stderr)
        return 2

    csv_path = os.path.join(args.out, "sim_log.csv")
    _write_sim_csv(csv_path, log, desc.n)
    summary = log.summary()
    _write_json_atomic(os.path.join(args.out, "summary.json"), summary)
    status = "diverged" if log.diverged else "ok"
    outputs = {"sim_csv": "sim_log.csv", "summary_json": "summary.json"}
    _write_json_atomic(os.path.join(args.out, "manifest.json"),
                       _manifest("simulate", args, args.out, parameters,
                                 outputs, status,
                                 time.perf_counter() - t_start,
                                 {"summary": summary}))
    if log.diverged:
        print(f"error: simulation diverged: {log.divergence_reason}; "
              f"log truncated at {log.t.size} rows", file=sys.stderr)
        return 3
    completion = summary.get("completion_time")
    done = "not reached" if completion is None else f"{completion:.3f} s"
    print(f"simulate: {log.t.size} rows -> {csv_path} (goal {done})")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    desc = _load_robot(args.robot)
    print(f"invariant battery: {args.robot} (n={desc.n})")
    results = diagnostics.run_battery(desc)
    print(diagnostics.format_report(results))
    return 0 if all(r.passed for r in results) else 4


# --------------------------------------------------------------------- entry

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wiphwbc",
        description="Plan, simulate, and check a planar wheeled-pendulum "
                    "humanoid control stack.")
    sub = ap.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="reference trajectory optimization only")
    plan.add_argument("--robot", required=True, help="robot config path")
    plan.add_argument("--goal", type=float, default=2.0,
                      help="heading target in meters (default 2.0)")
    plan.add_argument("--tf", type=float, default=20.0,
                      help="trajectory horizon in seconds (default 20)")
    plan.add_argument("--out", default=".", help="output directory")
    plan.add_argument("--run-weights", default=None, metavar="W1,W2,W3,W4",
                      help="running state weight diagonal override")
    plan.add_argument("--control-weight", type=float, default=None,
                      help="running control weight override")
    plan.add_argument("--term-weights", default=None, metavar="W1,W2,W3,W4",
                      help="terminal state weight diagonal override")
    plan.set_defaults(func=cmd_plan)

    simu = sub.add_parser("simulate", help="full closed-loop run")
    simu.add_argument("--robot", required=True, help="robot config path")
    simu.add_argument("--sim", default=None, help="sim config path (optional)")
    simu.add_argument("--goal", type=float, default=None,
                      help="override heading target in meters")
    simu.add_argument("--tf", type=float, default=None,
                      help="override horizon and duration in seconds")
    simu.add_argument("--seed", type=int, default=None,
                      help="override perturbation seed")
    simu.add_argument("--decoupled", action="store_true",
                      help="ablation: balance on the base joint only")
    simu.add_argument("--out", default=".", help="output directory")
    simu.set_defaults(func=cmd_simulate)

    chk = sub.add_parser("check", help="invariant diagnostics battery")
    chk.add_argument("--robot", required=True, help="robot config path")
    chk.set_defaults(func=cmd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
