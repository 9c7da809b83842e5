import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabatic_majorization.errors import LengthMismatch, NormError
from adiabatic_majorization.majorization import (
    Distribution,
    Relation,
    check_majorization,
    distribution_from_state,
    lorenz_deficit,
    partial_sums,
)


@st.composite
def distributions(draw, n=None):
    n = draw(st.integers(2, 12)) if n is None else n
    w = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    w = np.asarray(w) + 1e-3
    return Distribution(w / w.sum())


@pytest.mark.parametrize(
    "amps, expected",
    [
        ([1, 0, 0, 0], [1, 0, 0, 0]),
        ([0.5, 0.5, 0.5, 0.5], [0.25] * 4),
        ([(1 + 1j) / 2, (1 - 1j) / 2, 0, 0], [0.5, 0.5, 0, 0]),
    ],
)
def test_distribution_from_state(amps, expected):
    np.testing.assert_allclose(distribution_from_state(amps).p, expected, atol=1e-15)


def test_distribution_from_state_rejects_unnormalized():
    with pytest.raises(NormError):
        distribution_from_state([1.0, 1.0])


def test_distribution_validation():
    with pytest.raises(ValueError):
        Distribution([0.5, 0.6])
    with pytest.raises(ValueError):
        Distribution([1.5, -0.5])


@pytest.mark.parametrize(
    "p, expected",
    [
        ([0.2, 0.5, 0.3], [0.5, 0.8, 1.0]),
        ([0.25] * 4, [0.25, 0.5, 0.75, 1.0]),
        ([0, 0, 1], [1, 1, 1]),
    ],
)
def test_partial_sums(p, expected):
    np.testing.assert_allclose(partial_sums(Distribution(p)).cumulative, expected, atol=1e-15)


def test_check_majorization_examples():
    v = check_majorization(Distribution([0.4, 0.35, 0.25]), Distribution([0.5, 0.3, 0.2]))
    assert v.relation is Relation.MAJORIZED
    v = check_majorization(Distribution([0.5, 0.5, 0]), Distribution([0.6, 0.3, 0.1]))
    assert v.relation is Relation.NOT_MAJORIZED
    assert v.witness_k == 2
    assert v.deficit == pytest.approx(-0.1, abs=1e-15)


def test_equal_detection_is_opt_in():
    x = Distribution([0.3, 0.7])
    assert check_majorization(x, x).relation is Relation.MAJORIZED
    assert check_majorization(x, Distribution([0.7, 0.3]), detect_equal=True).relation is Relation.EQUAL


def test_lorenz_deficit_examples():
    x = Distribution([0.5, 0.5, 0])
    assert lorenz_deficit(x, x) == 0.0
    assert lorenz_deficit(x, Distribution([0.6, 0.3, 0.1])) == pytest.approx(-0.1, abs=1e-15)
    assert lorenz_deficit(Distribution.uniform(4), Distribution.point_mass(4)) == pytest.approx(0.0, abs=1e-15)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        check_majorization(Distribution.uniform(2), Distribution.uniform(3))
    with pytest.raises(LengthMismatch):
        lorenz_deficit(Distribution.uniform(2), Distribution.uniform(3))


@settings(max_examples=200, deadline=None)
@given(distributions())
def test_uniform_bottom_point_mass_top(x):
    n = len(x)
    assert check_majorization(Distribution.uniform(n), x).holds
    assert check_majorization(x, Distribution.point_mass(n)).holds


@settings(max_examples=200, deadline=None)
@given(distributions())
def test_reflexive(x):
    v = check_majorization(x, x, 0.0)
    assert v.relation is Relation.MAJORIZED
    assert v.deficit == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(*[distributions(n)] * 3)))
def test_transitive(triple):
    x, y, z = triple
    if check_majorization(x, y, 0.0).holds and check_majorization(y, z, 0.0).holds:
        assert check_majorization(x, z, 1e-15).holds


@settings(max_examples=200, deadline=None)
@given(distributions(), st.randoms(use_true_random=False))
def test_permutation_invariance(x, r):
    perm = list(range(len(x)))
    r.shuffle(perm)
    np.testing.assert_allclose(
        partial_sums(Distribution(x.p[perm])).cumulative, partial_sums(x).cumulative, atol=1e-15
    )


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 8).flatmap(lambda n: st.tuples(distributions(n), distributions(n))))
def test_deficit_sign_matches_verdict(pair):
    x, y = pair
    assert (lorenz_deficit(x, y) >= 0) == check_majorization(x, y, 0.0).holds
