"""Step-by-step majorization checks on ground-state and evolved-state data."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigError, SandwichViolation
from .evolution import Trajectory, default_dt, evolve
from .majorization import (
    DEFAULT_TOL,
    Distribution,
    MajorizationVerdict,
    check_majorization,
    distribution_from_state,
)
from .model import ProblemSpec, ScheduleSpec
from .spectrum import ground_derivatives, ground_state

SANDWICH_SLACK = 1e-9
DEFAULT_TAIL = (0.8, 1.0)


def default_k_list(N: int, full: bool = False) -> List[int]:
    """``{1, 2, N/2, N-1}`` (1-based), or every ``k`` below ``N`` when ``full``."""
    if full:
        return list(range(1, N))
    ks = {k for k in (1, 2, N // 2, N - 1) if 1 <= k <= N - 1}
    return sorted(ks) or [1]


def _k_index(k_list, N) -> np.ndarray:
    ks = np.asarray(k_list, dtype=int)
    if ks.ndim != 1 or ks.size == 0 or ks.min() < 1 or ks.max() > N:
        raise ConfigError(f"k values must lie in 1..{N}")
    return ks - 1


def _check_grid(grid, interior: bool = False) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 1 or np.any(np.diff(g) <= 0):
        raise ConfigError("grid must be strictly increasing")
    if interior and (g[0] <= 0.0 or g[-1] >= 1.0):
        raise ConfigError("grid must lie strictly inside (0, 1)")
    if g[0] < 0.0 or g[-1] > 1.0:
        raise ConfigError("grid must lie in [0, 1]")
    return g


@dataclass(frozen=True)
class MajorizationReport:
    grid: np.ndarray
    k_list: Tuple[int, ...]
    curves: np.ndarray  # prefix sums in canonical order, grid x k_list
    verdicts: Tuple[MajorizationVerdict, ...]
    sandwich_fraction: Optional[float] = None

    @property
    def deficits(self) -> np.ndarray:
        return np.array([v.deficit for v in self.verdicts])

    @property
    def worst_deficit(self) -> float:
        # consecutive comparisons always have a zero gap at k = N, so 0 is the empty value
        return float(self.deficits.min()) if self.verdicts else 0.0

    @property
    def violation_count(self) -> int:
        return sum(not v.holds for v in self.verdicts)

    def violations(self):
        """``(s_from, s_to, witness_k, deficit)`` for every failed comparison."""
        return [
            (float(self.grid[j]), float(self.grid[j + 1]), v.witness_k, v.deficit)
            for j, v in enumerate(self.verdicts)
            if not v.holds
        ]


def _consecutive_verdicts(dists: Sequence[Distribution], tol: float):
    return tuple(check_majorization(x, y, tol) for x, y in zip(dists[:-1], dists[1:]))


def ground_report(
    p: ProblemSpec,
    grid: Sequence[float],
    k_list: Optional[Sequence[int]] = None,
    tol: float = DEFAULT_TOL,
) -> MajorizationReport:
    """Compare ground-state distributions at every consecutive pair of ``grid``."""
    g = _check_grid(grid)
    ks = tuple(default_k_list(p.N) if k_list is None else k_list)
    idx = _k_index(ks, p.N)
    states = [ground_state(p, float(s)) for s in g]
    dists = [Distribution(gs.a**2) for gs in states]
    curves = np.array([gs.A[idx] for gs in states])
    return MajorizationReport(g, ks, curves, _consecutive_verdicts(dists, tol))


def trajectory_report(
    traj: Trajectory,
    k_list: Optional[Sequence[int]] = None,
    tol: float = DEFAULT_TOL,
) -> MajorizationReport:
    """Same comparison for the evolved state; violations are data, not errors.

    The sandwich bound between ground and actual prefix sums is asserted on
    every call and raises ``SandwichViolation`` if broken.
    """
    N = traj.b.shape[1]
    ks = tuple(default_k_list(N) if k_list is None else k_list)
    idx = _k_index(ks, N)
    fraction = delta_sandwich_check(traj, traj.problem) if len(traj) else None
    dists = [distribution_from_state(b) for b in traj.b]
    curves = traj.B[:, idx] if len(traj) else np.empty((0, len(ks)))
    return MajorizationReport(traj.s, ks, curves, _consecutive_verdicts(dists, tol), fraction)


@dataclass(frozen=True)
class BoundMargins:
    grid: np.ndarray
    k_list: Tuple[int, ...]
    margin: np.ndarray  # grid x k_list: dA_k/ds - (2c/k) A_k (1 - A_k)
    c: float
    vacuous: bool

    @property
    def min_margin(self) -> float:
        return float(self.margin.min())

    @property
    def passed(self) -> bool:
        return self.vacuous or bool(np.all(self.margin > 0))


def bound_margins(
    p: ProblemSpec,
    grid: Sequence[float],
    k_list: Optional[Sequence[int]] = None,
) -> BoundMargins:
    """Margins of the logistic lower bound ``dA_k/ds > (2c/k) A_k (1 - A_k)``.

    ``c = min(m, 1)`` with ``m`` the smallest non-minimal canonical cost.  A
    tied minimum gives ``c = 0``; the bound is then empty and reported as
    vacuous.  ``k = N`` is excluded by default since both sides vanish there.
    """
    g = _check_grid(grid, interior=True)
    ks = tuple(default_k_list(p.N, full=True) if k_list is None else k_list)
    idx = _k_index(ks, p.N)
    kk = np.asarray(ks, dtype=float)
    c = min(p.second_cost, 1.0)
    margin = np.empty((g.size, len(ks)))
    for j, s in enumerate(g):
        gs = ground_state(p, float(s))
        _, dA = ground_derivatives(p, float(s))
        # 1 - A_k from tail sums, accurate when A_k is close to 1
        w = gs.a**2
        tail = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
        margin[j] = dA[idx] - 2.0 * c / kk * gs.A[idx] * tail[idx]
    return BoundMargins(g, ks, margin, c, c == 0.0)


def delta_sandwich_check(
    traj: Trajectory,
    p: Optional[ProblemSpec] = None,
    k_list: Optional[Sequence[int]] = None,
    slack: float = SANDWICH_SLACK,
) -> float:
    """Assert ``|A_k - B_k| <= 2 sqrt(k) delta + slack`` at every sample and ``k``.

    Returns the largest fraction of the allowance consumed.  ``A_k`` is
    recomputed from ``p`` when given, otherwise taken from the trajectory.
    """
    N = traj.b.shape[1]
    ks = np.arange(1, N + 1) if k_list is None else np.asarray(k_list, dtype=int)
    idx = _k_index(ks, N)
    if p is not None:
        A = np.array([ground_state(p, float(s)).A for s in traj.s])
    else:
        A = traj.A
    gap = np.abs(A[:, idx] - traj.B[:, idx])
    allowance = 2.0 * np.sqrt(ks)[None, :] * traj.delta[:, None] + slack
    bad = gap > allowance
    if np.any(bad):
        j, kpos = np.argwhere(bad)[0]
        raise SandwichViolation(
            f"sandwich bound |A_k - B_k| <= 2 sqrt(k) delta violated at s = {traj.s[j]:.6g}, "
            f"k = {ks[kpos]}: gap {gap[j, kpos]:.3e} > {allowance[j, kpos]:.3e}"
        )
    return float((gap / allowance).max()) if gap.size else 0.0


def _tail_mask(s, tail_window) -> np.ndarray:
    lo, hi = tail_window
    if not 0.0 <= lo < hi <= 1.0:
        raise ConfigError(f"tail window {tail_window!r} must be a sub-interval of [0, 1]")
    return (s >= lo) & (s <= hi)


def tail_drops(traj: Trajectory, k: int, tail_window=DEFAULT_TAIL) -> np.ndarray:
    """``B_k(s_j) - B_k(s_{j+1})`` over consecutive tail samples (positive = decrease)."""
    Bk = traj.B[_tail_mask(traj.s, tail_window), k - 1]
    return Bk[:-1] - Bk[1:]


def oscillation_amplitude(
    traj: Trajectory,
    k_list: Optional[Sequence[int]] = None,
    tail_window=DEFAULT_TAIL,
) -> float:
    """Largest consecutive decrease of any ``B_k`` on the tail window (0 if none)."""
    N = traj.b.shape[1]
    ks = default_k_list(N) if k_list is None else k_list
    amp = 0.0
    for k in ks:
        d = tail_drops(traj, k, tail_window)
        if d.size:
            amp = max(amp, float(d.max()))
    return amp


@dataclass(frozen=True)
class SweepResult:
    T_list: np.ndarray
    oscillation_amplitude: np.ndarray
    max_delta: np.ndarray
    tail_window: Tuple[float, float]
    k_list: Tuple[int, ...]

    def trend_monotone(self, slack: float = 0.1, atol: float = 1e-12) -> bool:
        """Non-increasing in ``T`` allowing each step to grow by ``slack`` (relative)."""
        a = self.oscillation_amplitude
        return bool(np.all(a[1:] <= a[:-1] * (1.0 + slack) + atol))

    def strictly_decreasing(self) -> bool:
        a = self.oscillation_amplitude
        return bool(np.all(a[1:] < a[:-1]))


def _sweep_one(args):
    p, T, dt, grid, k_list, tail_window = args
    traj = evolve(p, ScheduleSpec.linear(T), dt, grid)
    return oscillation_amplitude(traj, k_list, tail_window), float(traj.delta.max())


def sweep_dt(p: ProblemSpec, T: float, grid_size: int) -> float:
    """Default step for sweeps: ``default_dt`` but fine enough to resolve the grid."""
    return min(default_dt(p), T / max(grid_size - 1, 1))


def oscillation_sweep(
    p: ProblemSpec,
    T_list: Sequence[float],
    dt_rule: Union[None, float, Callable[[ProblemSpec, float], float]] = None,
    tail_window=DEFAULT_TAIL,
    k_list: Optional[Sequence[int]] = None,
    grid: Optional[Sequence[float]] = None,
    parallel: int = 1,
) -> SweepResult:
    """Oscillation amplitude and worst fidelity deficit for each runtime."""
    Ts = np.asarray(T_list, dtype=float)
    if Ts.ndim != 1 or Ts.size == 0 or np.any(np.diff(Ts) <= 0):
        raise ConfigError("T_list must be strictly increasing")
    _tail_mask(np.zeros(1), tail_window)
    g = np.linspace(0.0, 1.0, 1001) if grid is None else _check_grid(grid)
    ks = tuple(default_k_list(p.N) if k_list is None else k_list)

    def dt_for(T):
        if dt_rule is None:
            return sweep_dt(p, T, g.size)
        if callable(dt_rule):
            return dt_rule(p, T)
        return float(dt_rule)

    jobs = [(p, float(T), dt_for(T), g, ks, tuple(tail_window)) for T in Ts]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    amps = np.array([r[0] for r in results])
    deltas = np.array([r[1] for r in results])
    return SweepResult(Ts, amps, deltas, tuple(tail_window), ks)


@dataclass(frozen=True)
class ThresholdCheck:
    """Outcome of the "small enough delta forces a monotone tail" test for one ``k``."""

    k: int
    c: float
    ds: float
    min_spread: float  # min over the tail of A_k (1 - A_k)
    delta_star: float
    max_delta: float
    saturated: bool
    premise: bool
    tail_monotone: bool

    @property
    def implication_holds(self) -> bool:
        return (not self.premise) or self.tail_monotone


def delta_threshold_check(
    traj: Trajectory,
    p: ProblemSpec,
    k: int = 1,
    tail_window=DEFAULT_TAIL,
    saturation_tol: float = 1e-15,
    monotone_tol: float = 1e-12,
) -> ThresholdCheck:
    """Compute ``delta* = c / (2 k sqrt(k)) * min A_k (1 - A_k) * ds`` on the tail.

    ``ds`` is the smallest spacing between consecutive tail samples.  When
    ``A_k(1 - A_k)`` vanishes somewhere on the tail (``A_k`` saturated at 1)
    or ``c = 0`` the threshold is empty and the result is flagged
    ``saturated``; the premise is then false.
    """
    mask = _tail_mask(traj.s, tail_window)
    s_tail = traj.s[mask]
    if s_tail.size < 2:
        raise ConfigError("tail window holds fewer than two samples")
    c = min(p.second_cost, 1.0)
    ds = float(np.diff(s_tail).min())
    spreads = []
    for s in s_tail:
        gs = ground_state(p, float(s))
        w = gs.a**2
        spreads.append(gs.A[k - 1] * float(w[k:].sum()))
    min_spread = float(min(spreads))
    saturated = min_spread <= saturation_tol or c == 0.0
    delta_star = 0.0 if saturated else c / (2.0 * k * math.sqrt(k)) * min_spread * ds
    max_delta = float(traj.delta[mask].max())
    drops = tail_drops(traj, k, tail_window)
    monotone = bool(np.all(drops <= monotone_tol))
    return ThresholdCheck(
        k=k,
        c=c,
        ds=ds,
        min_spread=min_spread,
        delta_star=delta_star,
        max_delta=max_delta,
        saturated=saturated,
        premise=(not saturated) and max_delta < delta_star,
        tail_monotone=monotone,
    )
