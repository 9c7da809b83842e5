"""Instantaneous ground state from the secular equation, plus a dense oracle.

Writing ``t = 1 - s - lambda``, the eigenvalue equation of ``H(s)`` in the
canonical frame gives ``a_i ∝ 1 / (t + s f_i)`` and the scalar condition

    phi(t) = (1 - s) / N * sum_i 1 / (t + s f_i) = 1.

``phi`` decreases strictly on ``t > 0`` and ``f_1 = 0`` makes it blow up at
``t -> 0+`` while ``phi(1) <= 1 - s < 1``, so the ground root is the unique
zero of ``phi - 1`` in ``(0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConvergenceFailure, DomainError, EigensolveFailure, SignPatternViolation
from .model import (
    ORACLE_CEILING,
    OperatorHandle,
    ProblemSpec,
    ScheduleSpec,
    dense_hamiltonian,
    eval_schedule,
)

_T_FLOOR = 1e-300
RESIDUAL_TOL = 1e-13
WIDTH_TOL = 1e-15
MAX_ITER = 400


@dataclass(frozen=True)
class GroundStateSolution:
    s: float
    t: float
    lam: float  # canonical-frame eigenvalue, 1 - s - t
    a: np.ndarray  # positive amplitudes in canonical order (descending)
    A: np.ndarray  # A_k = sum_{i<=k} a_i^2

    @property
    def probabilities(self) -> np.ndarray:
        return self.a**2


def _check_s(s: float, open_interval: bool = False):
    if open_interval:
        if not 0.0 < s < 1.0:
            raise DomainError(f"s = {s!r} must lie in (0, 1)")
    elif not 0.0 <= s <= 1.0:
        raise DomainError(f"s = {s!r} must lie in [0, 1]")


def secular_residual(p: ProblemSpec, s: float, t: float) -> float:
    """``phi(t) - 1``; strictly decreasing in ``t`` where defined."""
    _check_s(s)
    den = t + s * p.f
    if np.any(den <= 0):
        raise DomainError(f"t = {t!r} leaves a non-positive denominator")
    return float((1.0 - s) / p.N * np.sum(1.0 / den) - 1.0)


def solve_t(p: ProblemSpec, s: float) -> float:
    """Ground secular root ``t(s)`` by safeguarded Newton.

    The root is bracketed by ``[(1-s) z / N, 1 - s]`` where ``z`` counts the
    zero costs: ``phi(t) >= (1-s) z / (N t)`` and ``phi(t) <= (1-s) / t``.
    Newton steps leaving the bracket, or not shrinking fast enough, are
    replaced by bisection.
    """
    _check_s(s)
    if s == 0.0:
        return 1.0
    if s == 1.0:
        return 0.0
    f = p.f
    c = (1.0 - s) / p.N
    sf = s * f
    zeros = int(np.count_nonzero(f == 0.0))
    lo, hi = max(c * zeros, _T_FLOOR), 1.0 - s
    if hi <= lo:
        return hi

    def eval_(t):
        inv = 1.0 / (t + sf)
        return c * inv.sum() - 1.0, -c * np.dot(inv, inv)

    res, slope = eval_(hi)
    if res >= 0.0:
        return hi
    t = lo
    res, slope = eval_(t)
    if res <= 0.0:
        return t
    step_old = hi - lo
    step = step_old
    for _ in range(MAX_ITER):
        if res > 0:
            lo = t
        else:
            hi = t
        newton = t - res / slope
        if not lo < newton < hi or abs(2.0 * res) > abs(step_old * slope):
            step_old, step = step, 0.5 * (hi - lo)
            t = lo + step
        else:
            step_old, step = step, newton - t
            t = newton
        res, slope = eval_(t)
        if abs(res) <= RESIDUAL_TOL or hi - lo <= WIDTH_TOL * hi:
            # one polishing step, kept only if it stays bracketed
            polished = t - res / slope
            return polished if lo <= polished <= hi else t
    raise ConvergenceFailure(f"secular root did not converge at s = {s!r}")


def _amplitudes(p: ProblemSpec, s: float, t: float) -> np.ndarray:
    if s == 1.0:
        r = (p.f == p.f[0]).astype(float)
    else:
        # ratios to the largest component (f_1 = 0), bounded in (0, 1]
        r = t / (t + s * p.f)
    return r / np.linalg.norm(r)


def ground_state(p: ProblemSpec, s: float) -> GroundStateSolution:
    t = solve_t(p, s)
    a = _amplitudes(p, s, t)
    A = np.cumsum(a**2)
    return GroundStateSolution(s=float(s), t=t, lam=1.0 - s - t, a=a, A=A)


def ground_derivatives(p: ProblemSpec, s: float):
    """``(dt/ds, dA/ds)`` from implicit differentiation of the secular equation.

    ``dA_k/ds`` uses the split double-sum form

        2 sum_{i=2..k} sum_{j>k} a_i^2 a_j^2 (g_j - g_i) + 2 a_1^2 sum_{j>k} a_j^2 g_j,
        g_i = f_i u' / (1 + u f_i),  u = s / t,

    evaluated with prefix sums so the cost is O(N).
    """
    _check_s(s, open_interval=True)
    gs = ground_state(p, s)
    t, f, N = gs.t, p.f, p.N
    inv = 1.0 / (t + s * f)
    inv2 = inv * inv
    # d/dt and d/ds of (1-s)/N * sum 1/(t + s f)
    F_t = -(1.0 - s) / N * inv2.sum()
    F_s = -inv.sum() / N - (1.0 - s) / N * np.dot(f, inv2)
    dt_ds = -F_s / F_t

    u = s / t
    du = (t - s * dt_ds) / t**2
    g = f * du / (1.0 + u * f)
    w = gs.a**2
    wg = w * g
    head_w = np.cumsum(w)
    head_wg = np.cumsum(wg)
    # tail sums taken directly, not as 1 - head, to keep 1 - A_k accurate
    tail_w = np.concatenate([np.cumsum(w[::-1])[::-1][1:], [0.0]])
    tail_wg = np.concatenate([np.cumsum(wg[::-1])[::-1][1:], [0.0]])
    # i ranges over 2..k, i.e. drop the first entry from the head sums
    cross = (head_w - w[0]) * tail_wg - (head_wg - wg[0]) * tail_w
    dA_ds = 2.0 * cross + 2.0 * w[0] * tail_wg
    return float(dt_ds), dA_ds


def crossing_index(p: ProblemSpec, s: float, ds: float, slack: float = 1e-12) -> int:
    """Largest 1-based ``i`` with ``a_i(s + ds) >= a_i(s)`` (0 if none).

    Checks that the growing amplitudes form a prefix and the shrinking ones
    the complementary suffix.
    """
    if not (s > 0 and ds > 0 and s + ds <= 1.0):
        raise DomainError("need 0 < s, ds > 0 and s + ds <= 1")
    a0 = ground_state(p, s).a
    a1 = ground_state(p, s + ds).a
    grows = a1 >= a0 - slack
    shrinks = a1 < a0 + slack
    idx = np.flatnonzero(a1 >= a0)
    i0 = int(idx[-1]) + 1 if idx.size else 0
    if not (np.all(grows[:i0]) and np.all(shrinks[i0:])):
        raise SignPatternViolation(f"amplitude changes at s = {s!r} are not a single sign change")
    return i0


def dense_spectrum_oracle(
    p: ProblemSpec,
    s: float,
    frame: str = "original",
    ceiling: int = ORACLE_CEILING,
    full: bool = False,
):
    """Two lowest eigenpairs of the dense ``H(s)`` from a LAPACK eigensolver.

    Eigenvalues are those of the user's Hamiltonian (shift included) when
    ``frame="original"``.  The ground vector's sign is fixed by a positive
    component sum.  With ``full`` the whole ``(w, V)`` is returned as well.
    """
    H = dense_hamiltonian(OperatorHandle(p, s, frame), ceiling=ceiling)
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc
    v0, v1 = V[:, 0].copy(), V[:, 1].copy()
    if v0.sum() < 0:
        v0 = -v0
    scale = max(1.0, float(np.abs(w).max()))
    for E, v in ((w[0], v0), (w[1], v1)):
        if np.linalg.norm(H @ v - E * v) > 1e-9 * scale:
            raise EigensolveFailure(f"eigenpair residual too large at s = {s!r}")
    if full:
        return float(w[0]), float(w[1]), v0, v1, w, V
    return float(w[0]), float(w[1]), v0, v1


@dataclass(frozen=True)
class SpectralReport:
    s_grid: np.ndarray
    E0: np.ndarray
    E1: np.ndarray
    coupling: np.ndarray  # |<E1| dH/dt |E0>| per grid point
    g_min: float
    s_at_g_min: float
    D_max: float

    @property
    def epsilon_bound(self) -> float:
        return self.D_max / self.g_min**2 if self.g_min > 0 else float("inf")

    @property
    def gaps(self) -> np.ndarray:
        return self.E1 - self.E0


def spectral_report(
    p: ProblemSpec,
    sched: ScheduleSpec,
    grid: Sequence[float],
    degeneracy_tol: float = 1e-9,
    ceiling: int = ORACLE_CEILING,
) -> SpectralReport:
    """Gap and adiabatic coupling along the path, from the dense oracle.

    ``dH/dt = scale * ds/dt * (H1 - H0)`` (the ``d(scale)/dt`` part is
    proportional to ``H`` and has no off-diagonal element).  If the first
    excited level is degenerate the coupling is the norm of ``dH/dt |E0>``
    projected on that eigenspace, which does not depend on the basis the
    eigensolver happens to pick.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) < 0):
        raise DomainError("grid must be a sorted non-empty sequence")
    E0 = np.empty(grid.size)
    E1 = np.empty(grid.size)
    coupling = np.empty(grid.size)
    alpha = np.full(p.N, 1.0 / np.sqrt(p.N))
    for j, s in enumerate(grid):
        e0, e1, v0, _, w, V = dense_spectrum_oracle(p, s, "original", ceiling, full=True)
        E0[j], E1[j] = e0, e1
        _, rate, scale = eval_schedule(sched, sched.time_at(s))
        # (H1 - H0) v0 with H0 = I - |alpha><alpha|
        dv = p.f_raw * v0 - (v0 - alpha * np.dot(alpha, v0))
        band = np.abs(w - e1) <= degeneracy_tol * max(1.0, abs(e1))
        band[0] = False
        proj = V[:, band].T @ dv
        coupling[j] = abs(scale * rate) * np.linalg.norm(proj)
    gaps = E1 - E0
    jmin = int(np.argmin(gaps))
    return SpectralReport(
        s_grid=grid,
        E0=E0,
        E1=E1,
        coupling=coupling,
        g_min=float(gaps[jmin]),
        s_at_g_min=float(grid[jmin]),
        D_max=float(coupling.max()),
    )
