"""Command-line runner.

    adiabatic-majorization COMMAND [--config PATH] [--out DIR] [--seed INT] ...

Exit codes: 0 success, 1 configuration error, 2 a checked invariant failed,
3 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis
from .errors import ConfigError, InvariantViolation, NumericalFailure
from .evolution import NORM_TOL, evolve
from .majorization import DEFAULT_TOL
from .model import ProblemSpec, ScheduleSpec, problem_from_dict, schedule_from_dict
from .output import config_hash, write_csv, write_json
from .spectrum import ground_state, spectral_report

log = logging.getLogger("adiabatic_majorization")

COMMANDS = ("ground-curve", "evolve", "verify-ground", "verify-actual", "bounds", "gap", "sweep", "figure1")
DEFAULT_T = {"figure1": [10.0, 50.0, 250.0], "sweep": [100.0, 200.0, 400.0]}
FULL_K_MAX_N = 64


@dataclass
class ExperimentConfig:
    command: str
    problem: dict
    schedule: Optional[dict]
    grid: object  # point count or explicit list of s values
    k_list: Optional[List[int]]
    dt: Optional[float]
    T_list: List[float]
    tol: float
    tail_window: List[float]
    seed: int
    out: Path
    parallel: int = 1
    _problem: Optional[ProblemSpec] = field(default=None, repr=False)

    def resolved(self) -> dict:
        """Everything that determines the output bytes (the output directory does not)."""
        return {
            "command": self.command,
            "problem": self.problem,
            "schedule": self.schedule,
            "grid": self.grid,
            "k_list": self.k_list,
            "dt": self.dt,
            "T_list": self.T_list,
            "tol": self.tol,
            "tail_window": self.tail_window,
            "seed": self.seed,
        }

    @property
    def meta(self) -> dict:
        return {
            "command": self.command,
            "config_hash": config_hash(self.resolved()),
            "seed": self.seed,
            "tolerances": {
                "partial_sum_tol": self.tol,
                "sandwich_slack": analysis.SANDWICH_SLACK,
                "norm_tol": NORM_TOL,
            },
        }

    @property
    def problem_spec(self) -> ProblemSpec:
        if self._problem is None:
            self._problem = problem_from_dict(self.problem)
        return self._problem

    def grid_points(self, interior: bool = False) -> np.ndarray:
        if isinstance(self.grid, list):
            g = np.asarray(self.grid, dtype=float)
        else:
            g = np.linspace(0.0, 1.0, int(self.grid))
            if interior:
                g = g[1:-1]
        return g

    def schedule_for(self, T: float) -> ScheduleSpec:
        if self.schedule is not None and len(self.T_list) <= 1:
            return schedule_from_dict(self.schedule)
        return ScheduleSpec.linear(T)

    def dt_for(self, T: float) -> float:
        if self.dt is not None:
            return self.dt
        return analysis.sweep_dt(self.problem_spec, T, self.grid_points().size)

    def ks(self, N: int, full_small: bool = False) -> List[int]:
        if self.k_list:
            return list(self.k_list)
        if full_small and N <= FULL_K_MAX_N:
            return list(range(1, N + 1))
        return analysis.default_k_list(N)


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = _load_json(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    command = args.command
    seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))

    problem = cfg.get("problem")
    if isinstance(problem, str):
        problem = _load_json(str(Path(args.config).parent / problem) if args.config else problem)
    if problem is None and "n" in cfg:
        problem = {k: cfg[k] for k in ("n", "f", "cost", "marked", "seed", "ceiling") if k in cfg}
    if args.family or args.n is not None:
        problem = dict(problem or {})
        if args.family:
            problem.pop("f", None)
            problem["cost"] = args.family
        if args.n is not None:
            problem["n"] = args.n
    if problem is None:
        problem = {"n": 5, "cost": "grover"} if command == "figure1" else {"n": 6, "cost": "random-int"}
    problem = dict(problem)
    if args.marked is not None:
        problem["marked"] = args.marked
    if problem.get("cost") == "random-int":
        problem.setdefault("seed", seed)
    if problem.get("cost") == "grover":
        problem.setdefault("marked", 0)

    grid = args.grid if args.grid is not None else cfg.get("grid", 1001)
    if isinstance(grid, list):
        if len(grid) < 2:
            raise ConfigError("grid needs at least 2 points")
        grid = [float(v) for v in grid]
    else:
        grid = int(grid)
        if grid < 2:
            raise ConfigError(f"grid needs at least 2 points, got {grid}")

    schedule = cfg.get("schedule")
    T_list = args.T or cfg.get("T_list")
    if not T_list:
        if schedule is not None and "T" in schedule:
            T_list = [schedule["T"]]
        else:
            T_list = DEFAULT_T.get(command, [100.0])
    T_list = [float(T) for T in T_list]
    if any(T <= 0 for T in T_list):
        raise ConfigError("runtimes must be positive")
    if schedule is not None and schedule.get("kind", "linear") == "linear" and args.T:
        schedule = None

    k_list = args.k or cfg.get("k_list")
    dt = args.dt if args.dt is not None else cfg.get("dt")
    if dt is not None and float(dt) <= 0:
        raise ConfigError("dt must be positive")
    tol = float(args.tol if args.tol is not None else cfg.get("tol", DEFAULT_TOL))
    if not tol >= 0:
        raise ConfigError("tol must be non-negative")
    tail = [float(v) for v in cfg.get("tail_window", analysis.DEFAULT_TAIL)]
    out = Path(args.out or cfg.get("out", "results"))
    parallel = int(args.parallel if args.parallel is not None else cfg.get("parallel", 1))

    return ExperimentConfig(
        command=command,
        problem=problem,
        schedule=schedule,
        grid=grid,
        k_list=[int(k) for k in k_list] if k_list else None,
        dt=float(dt) if dt is not None else None,
        T_list=T_list,
        tol=tol,
        tail_window=tail,
        seed=seed,
        out=out,
        parallel=max(1, parallel),
    )


# --- commands ----------------------------------------------------------------

SUMMARY_KEYS = ("violation_count", "worst_deficit", "g_min", "D_max", "max_delta", "oscillation_amplitude_by_T")


def _summary(cfg: ExperimentConfig, **values) -> None:
    payload = {key: None for key in SUMMARY_KEYS}
    payload.update(values)
    write_json(cfg.out / "summary.json", cfg.meta, payload)


def cmd_ground_curve(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    ks = cfg.ks(p.N, full_small=True)
    rows = []
    for s in cfg.grid_points():
        gs = ground_state(p, float(s))
        rows.append([s, gs.t, p.original_eigenvalue(gs.lam, s), *gs.A[np.asarray(ks) - 1]])
    write_csv(cfg.out / "ground_curve.csv", cfg.meta, ["s", "t", "lambda", *[f"A_{k}" for k in ks]], rows)
    _summary(cfg)
    return 0


def _trajectory(cfg: ExperimentConfig, T: float):
    p = cfg.problem_spec
    return evolve(p, cfg.schedule_for(T), cfg.dt_for(T), cfg.grid_points())


def cmd_evolve(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    T = cfg.T_list[0]
    traj = _trajectory(cfg, T)
    ks = cfg.ks(p.N)
    B = traj.B[:, np.asarray(ks) - 1]
    rows = [
        [traj.times[j], traj.s[j], traj.norm[j], traj.fidelity[j], traj.delta[j], *B[j]]
        for j in range(len(traj))
    ]
    header = ["time", "s", "norm", "overlap", "delta", *[f"B_{k}" for k in ks]]
    write_csv(cfg.out / "trajectory.csv", cfg.meta, header, rows)
    _summary(cfg, max_delta=float(traj.delta.max()))
    return 0


def _report_rows(report, extra_cols=()):
    rows = []
    for j, s in enumerate(report.grid):
        if j < len(report.verdicts):
            v = report.verdicts[j]
            tail = [v.deficit, v.holds]
        else:
            tail = [float("nan"), True]
        rows.append([s, *report.curves[j], *[c[j] for c in extra_cols], *tail])
    return rows


def cmd_verify_ground(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    report = analysis.ground_report(p, cfg.grid_points(), cfg.ks(p.N), cfg.tol)
    header = ["s", *[f"A_{k}" for k in report.k_list], "deficit_to_next", "majorized"]
    write_csv(cfg.out / "ground_report.csv", cfg.meta, header, _report_rows(report))
    _summary(
        cfg,
        violation_count=report.violation_count,
        worst_deficit=report.worst_deficit,
        violations=report.violations(),
    )
    if report.violation_count:
        print(f"ground-state majorization violated at {report.violation_count} grid steps", file=sys.stderr)
        return 2
    return 0


def cmd_verify_actual(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    traj = _trajectory(cfg, cfg.T_list[0])
    report = analysis.trajectory_report(traj, cfg.ks(p.N), cfg.tol)
    header = ["s", *[f"B_{k}" for k in report.k_list], "delta", "deficit_to_next", "majorized"]
    write_csv(cfg.out / "trajectory_report.csv", cfg.meta, header, _report_rows(report, [traj.delta]))
    _summary(
        cfg,
        violation_count=report.violation_count,
        worst_deficit=report.worst_deficit,
        max_delta=float(traj.delta.max()),
        sandwich_fraction=report.sandwich_fraction,
        violations=report.violations(),
    )
    return 0


def cmd_bounds(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    grid = cfg.grid_points(interior=True)
    k_list = cfg.k_list or analysis.default_k_list(p.N, full=p.N <= FULL_K_MAX_N)
    bm = analysis.bound_margins(p, grid, k_list)
    header = ["s", *[f"margin_{k}" for k in bm.k_list]]
    rows = [[s, *bm.margin[j]] for j, s in enumerate(bm.grid)]
    write_csv(cfg.out / "bounds.csv", cfg.meta, header, rows)
    _summary(cfg, c=bm.c, vacuous=bm.vacuous, min_margin=bm.min_margin, passed=bm.passed)
    if not bm.passed:
        print(f"logistic lower bound on dA_k/ds violated (min margin {bm.min_margin:.3e})", file=sys.stderr)
        return 2
    return 0


def cmd_gap(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    sched = cfg.schedule_for(cfg.T_list[0])
    rep = spectral_report(p, sched, cfg.grid_points())
    payload = {
        "s_grid": rep.s_grid,
        "E0": rep.E0,
        "E1": rep.E1,
        "coupling": rep.coupling,
        "g_min": rep.g_min,
        "s_at_g_min": rep.s_at_g_min,
        "D_max": rep.D_max,
        "epsilon_bound": rep.epsilon_bound,
        "T": sched.T,
    }
    write_json(cfg.out / "spectral_report.json", cfg.meta, payload)
    _summary(cfg, g_min=rep.g_min, D_max=rep.D_max, epsilon_bound=rep.epsilon_bound)
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    grid = cfg.grid_points()
    res = analysis.oscillation_sweep(
        p,
        cfg.T_list,
        dt_rule=cfg.dt,
        tail_window=tuple(cfg.tail_window),
        k_list=cfg.ks(p.N),
        grid=grid,
        parallel=cfg.parallel,
    )
    rows = [[T, a, d] for T, a, d in zip(res.T_list, res.oscillation_amplitude, res.max_delta)]
    write_csv(cfg.out / "sweep.csv", cfg.meta, ["T", "oscillation_amplitude", "max_delta"], rows)
    _summary(
        cfg,
        max_delta=float(res.max_delta.max()),
        oscillation_amplitude_by_T={fmt_T(T): a for T, a in zip(res.T_list, res.oscillation_amplitude)},
        trend_monotone=res.trend_monotone(),
    )
    return 0


def fmt_T(T: float) -> str:
    return format(float(T), "g")


def cmd_figure1(cfg: ExperimentConfig) -> int:
    p = cfg.problem_spec
    grid = cfg.grid_points()
    A1 = np.array([ground_state(p, float(s)).A[0] for s in grid])
    cols, amps, counts = [], {}, {}
    for T in cfg.T_list:
        traj = _trajectory(cfg, T)
        cols.append(traj.B[:, 0])
        drops = analysis.tail_drops(traj, 1, tuple(cfg.tail_window))
        amps[fmt_T(T)] = max(0.0, float(drops.max())) if drops.size else 0.0
        counts[fmt_T(T)] = int(np.count_nonzero(drops > 0))
    header = ["s", "A_1", *[f"B_1_T{fmt_T(T)}" for T in cfg.T_list]]
    rows = [[s, A1[j], *[c[j] for c in cols]] for j, s in enumerate(grid)]
    write_csv(cfg.out / "figure1.csv", cfg.meta, header, rows)
    a1_monotone = bool(np.all(np.diff(A1) >= -cfg.tol))
    _summary(
        cfg,
        oscillation_amplitude_by_T=amps,
        tail_decrease_count_by_T=counts,
        A1_monotone=a1_monotone,
    )
    if not a1_monotone:
        print("ground curve A_1 is not monotone", file=sys.stderr)
        return 2
    return 0


HANDLERS = {
    "ground-curve": cmd_ground_curve,
    "evolve": cmd_evolve,
    "verify-ground": cmd_verify_ground,
    "verify-actual": cmd_verify_actual,
    "bounds": cmd_bounds,
    "gap": cmd_gap,
    "sweep": cmd_sweep,
    "figure1": cmd_figure1,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="adiabatic-majorization", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--out", help="output directory (default: results)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--grid", type=int, help="number of s grid points")
    ap.add_argument("--T", type=float, action="append", help="runtime; repeat for several")
    ap.add_argument("--dt", type=float)
    ap.add_argument("--k", type=int, action="append", help="prefix length k; repeatable")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--parallel", type=int)
    ap.add_argument("--family", choices=("grover", "random-int"), help="built-in problem family")
    ap.add_argument("--n", type=int, help="qubit count for --family")
    ap.add_argument("--marked", type=int, help="marked item (0-based) for the grover family")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = build_config(args)
        log.info("running %s -> %s", cfg.command, cfg.out)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
