"""Majorization primitives on finite probability distributions.

``x`` is majorized by ``y`` (``x ≺ y``) when every prefix sum of ``x`` sorted
in decreasing order is bounded by the corresponding prefix sum of ``y``;
``y`` is then the more ordered of the two.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LengthMismatch, NormError

DEFAULT_TOL = 1e-9
SUM_TOL = 1e-10
STATE_NORM_TOL = 1e-8


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Distribution:
    """Probability vector, validated once on construction."""

    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("distribution must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("distribution entries must be finite and non-negative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "p", p)

    def __len__(self) -> int:
        return self.p.size

    @classmethod
    def uniform(cls, n: int) -> "Distribution":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, index: int = 0) -> "Distribution":
        p = np.zeros(n)
        p[index] = 1.0
        return cls(p)


@dataclass(frozen=True)
class PartialSumCurve:
    """Cumulative sums of a distribution sorted in decreasing order."""

    cumulative: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cumulative", _frozen(self.cumulative))

    def __len__(self) -> int:
        return self.cumulative.size


class Relation(enum.Enum):
    MAJORIZED = "Majorized"
    EQUAL = "Equal"
    NOT_MAJORIZED = "NotMajorized"


@dataclass(frozen=True)
class MajorizationVerdict:
    relation: Relation
    deficit: float
    witness_k: Optional[int] = None  # 1-based prefix length of the worst gap

    @property
    def holds(self) -> bool:
        return self.relation is not Relation.NOT_MAJORIZED


def distribution_from_state(amplitudes, tol: float = STATE_NORM_TOL) -> Distribution:
    """Measurement distribution ``|b_i|^2`` of a state vector.

    The squared moduli are divided by their sum so the result satisfies the
    tighter ``Distribution`` normalization; the admissible norm error of the
    input is ``tol``.
    """
    b = np.asarray(amplitudes)
    p = (b.real**2 + b.imag**2) if np.iscomplexobj(b) else np.asarray(b, dtype=float) ** 2
    norm = np.sqrt(p.sum())
    if not np.isfinite(norm) or abs(norm - 1.0) > tol:
        raise NormError(f"state norm {norm!r} deviates from 1 by more than {tol:g}")
    return Distribution(p / p.sum())


def sorted_descending(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    # stable sort on -p keeps ties in ascending index order
    return p[np.argsort(-p, kind="stable")]


def partial_sums(d: Distribution) -> PartialSumCurve:
    return PartialSumCurve(np.cumsum(sorted_descending(d.p)))


def _gaps(x: Distribution, y: Distribution) -> np.ndarray:
    if len(x) != len(y):
        raise LengthMismatch(f"length {len(x)} vs {len(y)}")
    return partial_sums(y).cumulative - partial_sums(x).cumulative


def lorenz_deficit(x: Distribution, y: Distribution) -> float:
    """Smallest prefix-sum gap ``min_k (Y_k - X_k)``; non-negative iff ``x ≺ y``."""
    return float(_gaps(x, y).min())


def check_majorization(
    x: Distribution,
    y: Distribution,
    tol: float = DEFAULT_TOL,
    detect_equal: bool = False,
) -> MajorizationVerdict:
    """Decide whether ``x ≺ y`` up to ``tol`` on every partial sum.

    With ``detect_equal`` the relation ``Equal`` is returned when the two
    partial-sum curves agree within ``tol`` (majorization in both directions).
    """
    gaps = _gaps(x, y)
    k = int(np.argmin(gaps))
    deficit = float(gaps[k])
    if deficit < -tol:
        return MajorizationVerdict(Relation.NOT_MAJORIZED, deficit, k + 1)
    if detect_equal and float(np.max(np.abs(gaps))) <= tol:
        return MajorizationVerdict(Relation.EQUAL, deficit)
    return MajorizationVerdict(Relation.MAJORIZED, deficit)
