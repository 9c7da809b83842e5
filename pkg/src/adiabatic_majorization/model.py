"""Problem definition, Hamiltonian action and schedules.

The Hamiltonian family is

    H(s) = (1 - s) (I - |alpha><alpha|) + s diag(f),

with ``|alpha>`` the uniform superposition over ``N = 2**n`` labels.
Internally every problem is kept in a canonical frame: costs shifted so the
minimum is 0 and sorted ascending (ties keep index order).  Relabelling the
basis permutes the ground state the same way and the shift only moves
eigenvalues, so nothing of interest changes; ``perm`` maps back.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import (
    CeilingExceeded,
    CeilingWarning,
    ConfigError,
    LengthMismatch,
    NonFiniteCost,
    NonMonotoneSchedule,
    NotPowerOfTwo,
    OracleTooLarge,
    TimeOutOfRange,
)

ORACLE_CEILING = 2**12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    f_raw: np.ndarray
    f: np.ndarray  # canonical: shifted to min 0, ascending
    shift: float
    perm: np.ndarray  # canonical index -> original index (0-based)

    @property
    def N(self) -> int:
        return self.f.size

    def to_original(self, v_canonical) -> np.ndarray:
        v = np.asarray(v_canonical)
        out = np.empty_like(v)
        out[self.perm] = v
        return out

    def to_canonical(self, v_original) -> np.ndarray:
        return np.asarray(v_original)[self.perm]

    def original_eigenvalue(self, lam: float, s: float) -> float:
        """Eigenvalue of the user's H(s) given the canonical one."""
        return lam + s * self.shift

    @property
    def second_cost(self) -> float:
        """``m = min_{i>=2} f(i)`` in the canonical frame (0 for a tied minimum)."""
        return float(self.f[1]) if self.N > 1 else 0.0


def build_problem(
    f_raw: Sequence[float],
    *,
    ceiling: Optional[float] = None,
    strict_ceiling: bool = False,
    require_power_of_two: bool = True,
) -> ProblemSpec:
    """Canonicalize a cost table.

    ``ceiling`` bounds the shifted costs (default ``n**3``).  Exceeding it is a
    warning unless ``strict_ceiling`` is set.
    """
    f_raw = np.array(f_raw, dtype=float).ravel()
    N = f_raw.size
    if N == 0:
        raise NotPowerOfTwo("empty cost table")
    is_pow2 = N & (N - 1) == 0
    if require_power_of_two and (not is_pow2 or N < 2):
        raise NotPowerOfTwo(f"cost table length {N} is not a power of two >= 2")
    if not np.all(np.isfinite(f_raw)):
        raise NonFiniteCost("cost values must be finite")
    n = max(1, math.ceil(math.log2(N)))

    perm = np.argsort(f_raw, kind="stable")
    shift = float(f_raw[perm[0]])
    f = f_raw[perm] - shift

    limit = float(n**3) if ceiling is None else float(ceiling)
    if f[-1] > limit:
        msg = f"max shifted cost {f[-1]:g} exceeds ceiling {limit:g}"
        if strict_ceiling:
            raise CeilingExceeded(msg)
        warnings.warn(msg, CeilingWarning, stacklevel=2)

    return ProblemSpec(
        n=n,
        f_raw=_readonly(f_raw),
        f=_readonly(f),
        shift=shift,
        perm=_readonly(perm),
    )


def grover_problem(n: int, marked: int = 0) -> ProblemSpec:
    """Search instance: cost 0 on ``marked``, 1 elsewhere."""
    N = 2**n
    if not 0 <= marked < N:
        raise ConfigError(f"marked item {marked} outside 0..{N - 1}")
    f = np.ones(N)
    f[marked] = 0.0
    return build_problem(f)


def random_int_problem(n: int, seed: int, unique_minimum: bool = False) -> ProblemSpec:
    """Integer costs in ``[0, n**3]`` with at least one zero.

    With ``unique_minimum`` every other cost is drawn from ``[1, n**3]``.
    """
    rng = np.random.default_rng(seed)
    N = 2**n
    top = max(1, n**3)
    f = rng.integers(1 if unique_minimum else 0, top + 1, size=N).astype(float)
    f[rng.integers(N)] = 0.0
    return build_problem(f)


def problem_from_dict(d: dict) -> ProblemSpec:
    """Build a problem from its JSON form (see README for the schema)."""
    if "n" not in d:
        raise ConfigError("problem needs an 'n' field")
    n = int(d["n"])
    if n < 1:
        raise ConfigError("n must be positive")
    if "f" in d:
        f = d["f"]
        if len(f) != 2**n:
            raise ConfigError(f"'f' has length {len(f)}, expected 2**{n} = {2**n}")
        return build_problem(f, ceiling=d.get("ceiling"))
    cost = d.get("cost")
    if cost == "grover":
        return grover_problem(n, int(d.get("marked", 0)))
    if cost == "random-int":
        if "seed" not in d:
            raise ConfigError("random-int problems need a 'seed'")
        return random_int_problem(n, int(d["seed"]), bool(d.get("unique_minimum", False)))
    raise ConfigError(f"problem needs 'f' or a known 'cost' family, got {cost!r}")


# --- schedules ---------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleSpec:
    """Map from physical time in ``[0, T]`` to the path parameter ``s``.

    Use the ``linear``, ``tabulated`` and ``interpolation`` constructors.
    """

    kind: str
    T: float
    _s: Optional[Callable] = field(default=None, repr=False, compare=False)
    _rate: Optional[Callable] = field(default=None, repr=False, compare=False)
    _scale: Optional[Callable] = field(default=None, repr=False, compare=False)
    table: Optional[tuple] = None

    @classmethod
    def linear(cls, T: float) -> "ScheduleSpec":
        T = float(T)
        if not T > 0 or not math.isfinite(T):
            raise ConfigError(f"runtime T must be positive, got {T!r}")
        return cls("linear", T)

    @classmethod
    def tabulated(cls, times, s_values) -> "ScheduleSpec":
        times = np.asarray(times, dtype=float)
        s_values = np.asarray(s_values, dtype=float)
        if times.shape != s_values.shape or times.size < 2:
            raise ConfigError("tabulated schedule needs matching (t, s) arrays of length >= 2")
        if times[0] != 0.0 or s_values[0] != 0.0 or s_values[-1] != 1.0:
            raise NonMonotoneSchedule("tabulated schedule must start at (0, 0) and end at s = 1")
        if np.any(np.diff(times) <= 0) or np.any(np.diff(s_values) <= 0):
            raise NonMonotoneSchedule("tabulated times and s values must be strictly increasing")
        interp = PchipInterpolator(times, s_values)
        deriv = interp.derivative()
        T = float(times[-1])
        table = (tuple(times.tolist()), tuple(s_values.tolist()))
        return cls("tabulated", T, interp, deriv, None, table)

    @classmethod
    def interpolation(
        cls,
        T: float,
        f_path: Callable[[float], float],
        g_path: Callable[[float], float],
        samples: int = 1001,
    ) -> "ScheduleSpec":
        """``H(t) = f(t) H0 + g(t) H1`` rewritten as ``(f+g) H(g/(f+g))``."""
        T = float(T)
        if not T > 0:
            raise ConfigError("runtime T must be positive")

        def sigma(t):
            fv, gv = f_path(t), g_path(t)
            return gv / (fv + gv)

        def scale(t):
            return f_path(t) + g_path(t)

        h = 1e-6 * T

        def rate(t):
            lo, hi = max(0.0, t - h), min(T, t + h)
            return (sigma(hi) - sigma(lo)) / (hi - lo)

        ts = np.linspace(0.0, T, samples)
        scales = np.array([scale(t) for t in ts])
        if np.any(scales <= 0):
            raise NonMonotoneSchedule("f + g must stay positive along the path")
        sig = np.array([sigma(t) for t in ts])
        if abs(sig[0]) > 1e-12 or abs(sig[-1] - 1.0) > 1e-12:
            raise NonMonotoneSchedule("path must satisfy g(0) = 0 and f(T) = 0")
        if np.any(np.diff(sig) <= 0):
            raise NonMonotoneSchedule("g/(f+g) is not increasing on the sampled grid")
        return cls("interpolation", T, sigma, rate, scale)

    @classmethod
    def frozen(cls, T: float, s: float) -> "ScheduleSpec":
        """Constant ``s`` over ``[0, T]``; a time-independent generator for certification runs."""
        T, s = float(T), float(s)
        if not T > 0 or not 0.0 <= s <= 1.0:
            raise ConfigError("frozen schedule needs T > 0 and s in [0, 1]")
        return cls("frozen", T, lambda t: s, lambda t: 0.0, None)

    def time_at(self, s: float) -> float:
        """Inverse of the schedule."""
        if not 0.0 <= s <= 1.0:
            raise ConfigError(f"s = {s!r} outside [0, 1]")
        if self.kind == "linear":
            return s * self.T
        if self.kind == "frozen":
            raise ConfigError("a frozen schedule has no inverse")
        if s == 0.0:
            return 0.0
        if s == 1.0:
            return self.T
        return brentq(lambda t: eval_schedule(self, t)[0] - s, 0.0, self.T, xtol=1e-14)

    def max_scale(self, samples: int = 257) -> float:
        if self._scale is None:
            return 1.0
        return float(max(self._scale(t) for t in np.linspace(0.0, self.T, samples)))


def eval_schedule(sched: ScheduleSpec, time: float):
    """Return ``(s, ds/dt, scale)`` at ``time``."""
    T = sched.T
    if not -1e-12 * T <= time <= T * (1 + 1e-12):
        raise TimeOutOfRange(f"time {time!r} outside [0, {T!r}]")
    time = min(max(time, 0.0), T)
    if sched.kind == "linear":
        return time / T, 1.0 / T, 1.0
    s = float(sched._s(time))
    rate = float(sched._rate(time))
    scale = 1.0 if sched._scale is None else float(sched._scale(time))
    return min(max(s, 0.0), 1.0), rate, scale


def schedule_from_dict(d: dict) -> ScheduleSpec:
    kind = d.get("kind", "linear")
    if kind == "linear":
        if "T" not in d:
            raise ConfigError("linear schedule needs 'T'")
        return ScheduleSpec.linear(d["T"])
    if kind == "tabulated":
        pts = np.asarray(d.get("points", []), dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError("tabulated schedule needs 'points': [[t, s], ...]")
        return ScheduleSpec.tabulated(pts[:, 0], pts[:, 1])
    raise ConfigError(f"unknown schedule kind {kind!r}")


# --- Hamiltonian -------------------------------------------------------------


@dataclass(frozen=True)
class OperatorHandle:
    problem: ProblemSpec
    s: float
    frame: str = "canonical"

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ConfigError(f"s = {self.s!r} outside [0, 1]")
        if self.frame not in ("canonical", "original"):
            raise ConfigError(f"unknown frame {self.frame!r}")

    @property
    def costs(self) -> np.ndarray:
        return self.problem.f if self.frame == "canonical" else self.problem.f_raw


def apply_hamiltonian(h: OperatorHandle, v) -> np.ndarray:
    """``H(s) v`` in O(N) via the projector-plus-diagonal structure."""
    v = np.asarray(v)
    f = h.costs
    if v.shape != f.shape:
        raise LengthMismatch(f"vector of length {v.size} for N = {f.size}")
    return (1.0 - h.s) * (v - v.mean()) + h.s * (f * v)


def dense_hamiltonian(h: OperatorHandle, ceiling: int = ORACLE_CEILING) -> np.ndarray:
    f = h.costs
    N = f.size
    if N > ceiling:
        raise OracleTooLarge(f"N = {N} exceeds dense oracle ceiling {ceiling}")
    H = np.full((N, N), -(1.0 - h.s) / N)
    H[np.diag_indices(N)] += (1.0 - h.s) + h.s * f
    return H


def hamiltonian_norm_bound(problem: ProblemSpec, sched: Optional[ScheduleSpec] = None) -> float:
    """Upper bound on the spectral radius of ``scale * H(s)`` in the canonical frame."""
    scale = 1.0 if sched is None else sched.max_scale()
    return scale * max(1.0, float(problem.f[-1]))
