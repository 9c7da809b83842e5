"""Time-dependent Schrödinger integration for the actual state.

Classical fourth-order Runge-Kutta on ``db/dtau = -i scale(tau) H(s(tau)) b``
using only the O(N) Hamiltonian action.  No renormalization is applied: the
norm drift is monitored and treated as a failure, so integrator defects
surface instead of being hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .errors import ConfigError, NonConvergent, NormDriftExceeded, StepTooLarge
from .model import ProblemSpec, ScheduleSpec, eval_schedule, hamiltonian_norm_bound
from .spectrum import GroundStateSolution, ground_state

NORM_TOL = 1e-8
STABILITY_LIMIT = 0.1


@dataclass(frozen=True)
class EvolutionState:
    time: float
    s: float
    b: np.ndarray
    norm: float


@dataclass(frozen=True)
class Trajectory:
    """States sampled at the steps nearest to a requested ``s`` grid.

    Row ``j`` of ``b`` (actual amplitudes) and ``ground`` (instantaneous
    ground amplitudes) are both in the canonical frame.
    """

    times: np.ndarray
    s: np.ndarray
    b: np.ndarray
    norm: np.ndarray
    ground: np.ndarray
    fidelity: np.ndarray
    delta: np.ndarray
    dt: float
    T: float
    problem: Optional[ProblemSpec] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> List[EvolutionState]:
        return [
            EvolutionState(float(t), float(s), b, float(nrm))
            for t, s, b, nrm in zip(self.times, self.s, self.b, self.norm)
        ]

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.b) ** 2

    @property
    def B(self) -> np.ndarray:
        """``B_k`` prefix sums of ``|b_i|^2`` in canonical label order."""
        return np.cumsum(self.probabilities, axis=1)

    @property
    def A(self) -> np.ndarray:
        return np.cumsum(self.ground**2, axis=1)

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - 1.0)))


def default_dt(p: ProblemSpec, sched: Optional[ScheduleSpec] = None, target: float = 0.01) -> float:
    """Step of ``target / ||H||`` with ``||H|| >= 1``; keeps RK4 norm loss ~1e-14 per step."""
    return target / hamiltonian_norm_bound(p, sched)


def _stage_tables(sched: ScheduleSpec, t0: float, h: float, n_steps: int):
    """Schedule values at every step start and midpoint (index 2k and 2k+1)."""
    taus = t0 + 0.5 * h * np.arange(2 * n_steps + 1)
    if sched.kind == "linear":
        return np.clip(taus / sched.T, 0.0, 1.0), np.ones_like(taus)
    vals = [eval_schedule(sched, float(tau)) for tau in taus]
    s = np.array([v[0] for v in vals])
    scale = np.array([v[2] for v in vals])
    return s, scale


def _check_step(p: ProblemSpec, sched: ScheduleSpec, h: float, limit: float):
    z = abs(h) * hamiltonian_norm_bound(p, sched)
    if z > limit:
        raise StepTooLarge(f"dt * ||H|| = {z:.3g} exceeds stability limit {limit:g}")


def _rk4_run(f, b, s_tab, scale_tab, h, n_steps, record=None):
    """Advance ``b`` by ``n_steps``; ``record(k, b)`` is called after step ``k``."""
    f = np.asarray(f, dtype=float)
    mh = -1j * h

    def gen(v, j):
        s = s_tab[j]
        return (scale_tab[j] * mh) * ((1.0 - s) * (v - v.mean()) + s * (f * v))

    for k in range(n_steps):
        j = 2 * k
        k1 = gen(b, j)
        k2 = gen(b + 0.5 * k1, j + 1)
        k3 = gen(b + 0.5 * k2, j + 1)
        k4 = gen(b + k3, j + 2)
        b = b + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if record is not None:
            record(k + 1, b)
    return b


def propagate(
    p: ProblemSpec,
    sched: ScheduleSpec,
    b0,
    t_start: float,
    t_end: float,
    dt: float,
    norm_tol: float = NORM_TOL,
    stability_limit: float = STABILITY_LIMIT,
) -> np.ndarray:
    """Integrate from ``t_start`` to ``t_end`` (either direction); final state only."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    span = t_end - t_start
    n_steps = max(1, math.ceil(abs(span) / dt - 1e-9))
    h = span / n_steps
    _check_step(p, sched, h, stability_limit)
    s_tab, scale_tab = _stage_tables(sched, t_start, h, n_steps)
    b = _rk4_run(p.f, np.asarray(b0, dtype=complex), s_tab, scale_tab, h, n_steps)
    drift = abs(np.linalg.norm(b) - np.linalg.norm(b0))
    if drift > norm_tol:
        raise NormDriftExceeded(f"norm drift {drift:.3g} exceeds {norm_tol:g}")
    return b


def gauge_fixed_overlap(state, gs):
    """Fix the global phase of the actual state so ``<psi|psi'>`` is real and >= 0.

    Returns ``(overlap, delta, b_gauged)`` with ``delta = sqrt(2 (1 - overlap))``.
    ``state`` may be an ``EvolutionState`` or a bare amplitude vector, ``gs`` a
    ``GroundStateSolution`` or a real vector.
    """
    b = np.asarray(getattr(state, "b", state), dtype=complex)
    a = np.asarray(getattr(gs, "a", gs), dtype=float)
    if a.shape != b.shape:
        raise ConfigError("state and ground state differ in length")
    inner = np.dot(a, b)
    mag = abs(inner)
    phase = inner / mag if mag > 0 else 1.0
    b_g = b * np.conj(phase)
    # 1 - overlap from ||a - b_g||^2 = 1 + ||b||^2 - 2 overlap, without cancellation
    d = a - b_g
    one_minus = 0.5 * (np.vdot(d, d).real + (1.0 - np.vdot(b, b).real))
    one_minus = max(one_minus, 0.0)
    return float(mag), math.sqrt(2.0 * one_minus), b_g


def evolve(
    p: ProblemSpec,
    sched: ScheduleSpec,
    dt: Optional[float] = None,
    output_grid: Optional[Sequence[float]] = None,
    norm_tol: float = NORM_TOL,
    stability_limit: float = STABILITY_LIMIT,
) -> Trajectory:
    """Evolve from the uniform superposition over ``[0, T]``.

    The step is shrunk so ``T`` is an integer number of steps.  Each requested
    ``s`` is served by the step whose ``s`` is nearest; amplitudes are never
    interpolated.
    """
    T = sched.T
    if dt is None:
        dt = default_dt(p, sched)
    if dt <= 0:
        raise ConfigError("dt must be positive")
    grid = np.linspace(0.0, 1.0, 1001) if output_grid is None else np.asarray(output_grid, float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError("output grid must be strictly increasing")
    if grid[0] < 0.0 or grid[-1] > 1.0:
        raise ConfigError("output grid must lie in [0, 1]")

    n_steps = max(1, math.ceil(T / dt - 1e-9))
    h = T / n_steps
    _check_step(p, sched, h, stability_limit)
    s_tab, scale_tab = _stage_tables(sched, 0.0, h, n_steps)
    s_steps = s_tab[::2]
    pos = np.clip(np.searchsorted(s_steps, grid), 1, n_steps)
    left = s_steps[pos - 1]
    right = s_steps[pos]
    steps = np.where(grid - left <= right - grid, pos - 1, pos)
    if np.any(np.diff(steps) <= 0):
        raise ConfigError("output grid is finer than the step grid; decrease dt")

    N = p.N
    out = np.empty((steps.size, N), dtype=complex)
    wanted = {int(k): j for j, k in enumerate(steps)}

    def record(k, b):
        j = wanted.get(k)
        if j is not None:
            out[j] = b

    b0 = np.full(N, 1.0 / math.sqrt(N), dtype=complex)
    record(0, b0)
    _rk4_run(p.f, b0, s_tab, scale_tab, h, n_steps, record)

    norms = np.linalg.norm(out, axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > norm_tol:
        raise NormDriftExceeded(f"norm drift {drift:.3g} exceeds {norm_tol:g} (dt = {h:g})")

    s_samples = s_steps[steps]
    ground = np.empty((steps.size, N))
    fid = np.empty(steps.size)
    delta = np.empty(steps.size)
    for j, s in enumerate(s_samples):
        gs = ground_state(p, float(s))
        ground[j] = gs.a
        fid[j], delta[j], _ = gauge_fixed_overlap(out[j], gs)
    for arr in (out, ground, fid, delta, norms):
        arr.setflags(write=False)
    return Trajectory(
        times=steps * h,
        s=s_samples,
        b=out,
        norm=norms,
        ground=ground,
        fidelity=fid,
        delta=delta,
        dt=h,
        T=T,
        problem=p,
    )


@dataclass(frozen=True)
class ConvergenceProbe:
    dts: np.ndarray
    errors: np.ndarray
    order: float

    @property
    def pairs(self):
        return list(zip(self.dts.tolist(), self.errors.tolist()))


def convergence_probe(
    p: ProblemSpec,
    sched: ScheduleSpec,
    dt_list: Sequence[float],
    reference=None,
    min_order: float = 2.0,
) -> ConvergenceProbe:
    """Self-convergence of the final state over a decreasing list of steps.

    Without ``reference`` the finest step serves as reference and is itself
    excluded from the fit; otherwise ``reference`` is the exact final state and
    every entry is measured against it.
    """
    dts = np.asarray(dt_list, dtype=float)
    if dts.size < 3 or np.any(np.diff(dts) >= 0):
        raise NonConvergent("need at least three strictly decreasing step sizes")
    b0 = np.full(p.N, 1.0 / math.sqrt(p.N), dtype=complex)
    # coarse probe steps may drift; that drift is part of the measured error
    finals = [propagate(p, sched, b0, 0.0, sched.T, dt, norm_tol=math.inf) for dt in dts]
    if reference is None:
        ref, finals, dts = finals[-1], finals[:-1], dts[:-1]
    else:
        ref = np.asarray(reference, dtype=complex)
    errors = np.array([np.linalg.norm(b - ref) for b in finals])
    if np.any(errors <= 0):
        raise NonConvergent("zero error: reference coincides with a probe run")
    order = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    if order < min_order:
        raise NonConvergent(f"fitted order {order:.2f} below {min_order}")
    return ConvergenceProbe(dts, errors, order)
