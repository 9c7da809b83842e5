import math

import numpy as np
import pytest

from adiabatic_majorization.analysis import (
    default_k_list,
    delta_sandwich_check,
    delta_threshold_check,
    ground_report,
    oscillation_amplitude,
    oscillation_sweep,
    bound_margins,
    tail_drops,
    trajectory_report,
)
from adiabatic_majorization.errors import ConfigError, SandwichViolation
from adiabatic_majorization.evolution import Trajectory, evolve
from adiabatic_majorization.majorization import Distribution, Relation, check_majorization
from adiabatic_majorization.model import (
    ScheduleSpec,
    build_problem,
    grover_problem,
    random_int_problem,
)
from adiabatic_majorization.spectrum import ground_state


def fake_trajectory(b, ground, delta, s=None):
    b = np.atleast_2d(np.asarray(b, dtype=complex))
    ground = np.atleast_2d(np.asarray(ground, dtype=float))
    n = b.shape[0]
    s = np.linspace(0, 1, n) if s is None else np.asarray(s, float)
    return Trajectory(
        times=s.copy(), s=s, b=b, norm=np.linalg.norm(b, axis=1), ground=ground,
        fidelity=np.ones(n), delta=np.asarray(delta, float), dt=0.01, T=1.0,
    )


@pytest.fixture(scope="module")
def grover5_short():
    return evolve(grover_problem(5), ScheduleSpec.linear(10), 0.01, np.linspace(0, 1, 1001))


def test_default_k_list():
    assert default_k_list(32) == [1, 2, 16, 31]
    assert default_k_list(2) == [1]
    assert default_k_list(8, full=True) == list(range(1, 8))


def test_ground_report_random_n6_has_no_violations():
    rep = ground_report(random_int_problem(6, 11), np.linspace(0, 1, 501))
    assert len(rep.verdicts) == 500
    assert rep.violation_count == 0
    assert rep.worst_deficit >= -1e-9
    assert rep.worst_deficit == pytest.approx(min(v.deficit for v in rep.verdicts))


def test_ground_report_constant_cost_is_flat():
    p = build_problem([5.0] * 8)
    rep = ground_report(p, np.linspace(0, 1, 11), k_list=[1, 2, 4, 7])
    np.testing.assert_allclose(rep.curves, np.tile([1 / 8, 2 / 8, 4 / 8, 7 / 8], (11, 1)), atol=1e-14)
    assert rep.violation_count == 0
    assert np.all(np.abs(rep.deficits) <= 1e-14)


def test_ground_report_two_level_curve():
    grid = np.linspace(0, 1, 101)
    rep = ground_report(build_problem([0.0, 1.0]), grid, k_list=[1])
    A1 = rep.curves[:, 0]
    assert A1[0] == pytest.approx(0.5, abs=1e-15) and A1[-1] == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(A1) > 0)
    # closed form: a_1^2 = (1 + s / sqrt(1 - 2s + 2s^2)) / 2 for the two-level problem
    exact = 0.5 * (1 + grid / np.sqrt(1 - 2 * grid + 2 * grid**2))
    np.testing.assert_allclose(A1, exact, atol=1e-12)


def test_endpoint_ordering():
    p = random_int_problem(4, 21, unique_minimum=True)
    grid = np.linspace(0, 1, 41)
    dists = [Distribution(ground_state(p, s).a ** 2) for s in grid]
    for d in dists:
        assert check_majorization(dists[0], d).holds
        assert check_majorization(d, dists[-1]).holds


def test_single_state_trajectory_gives_empty_report():
    a = ground_state(grover_problem(2), 0.0).a
    rep = trajectory_report(fake_trajectory(a, a, [0.0], s=[0.0]))
    assert rep.verdicts == () and rep.violation_count == 0 and rep.worst_deficit == 0.0


def test_small_T_grover_shows_late_violations(grover5_short):
    rep = trajectory_report(grover5_short, k_list=[1, 2])
    assert rep.violation_count > 0
    late = [s_to for _, s_to, _, _ in rep.violations()]
    assert max(late) > 0.8
    assert rep.sandwich_fraction <= 1.0


def test_large_T_deficits_are_tiny():
    traj = evolve(grover_problem(3), ScheduleSpec.linear(2000), 0.05, np.linspace(0, 1, 201))
    assert traj.delta.max() <= 1e-2
    rep = trajectory_report(traj)
    assert rep.worst_deficit >= -1e-3


def test_bound_margin_two_level():
    bm = bound_margins(build_problem([0.0, 1.0]), [0.5], k_list=[1])
    assert bm.c == 1.0 and not bm.vacuous
    gs = ground_state(build_problem([0.0, 1.0]), 0.5)
    assert gs.A[0] == pytest.approx(0.8535534, abs=1e-7)
    rhs = 2 * gs.A[0] * (1 - gs.A[0])
    assert rhs == pytest.approx(0.25, abs=1e-12)
    # dA_1/ds at s = 1/2 from the closed form above is 1/sqrt(2)
    assert bm.margin[0, 0] == pytest.approx(1 / math.sqrt(2) - 0.25, abs=1e-10)
    assert bm.passed


@pytest.mark.parametrize("f", [[0, 0, 1, 3], [2.0] * 4])
def test_bound_vacuous_cases(f):
    bm = bound_margins(build_problem(f), np.linspace(0.1, 0.9, 5))
    assert bm.vacuous and bm.passed and bm.c == 0.0


def test_bound_small_c():
    p = build_problem([0.0, 0.25, 1.0, 2.0])
    bm = bound_margins(p, np.linspace(0.05, 0.95, 19))
    assert bm.c == 0.25 and bm.passed and bm.min_margin > 0


def test_bound_grid_must_be_interior():
    with pytest.raises(ConfigError):
        bound_margins(grover_problem(2), [0.0, 0.5])


def test_sandwich_identical_states():
    a = ground_state(grover_problem(2), 0.3).a
    assert delta_sandwich_check(fake_trajectory(a, a, [0.0], s=[0.3])) == 0.0


def test_sandwich_orthogonal_state_never_binds():
    a = np.array([1.0, 0.0])
    tr = fake_trajectory([0.0, 1.0], a, [math.sqrt(2)], s=[1.0])
    frac = delta_sandwich_check(tr)
    assert frac <= 1 / (2 * math.sqrt(2))


def test_sandwich_detects_inconsistent_delta():
    a = np.array([1.0, 0.0])
    with pytest.raises(SandwichViolation):
        delta_sandwich_check(fake_trajectory([0.0, 1.0], a, [1e-3], s=[1.0]))


def test_sandwich_on_grover_run():
    traj = evolve(grover_problem(5), ScheduleSpec.linear(100), 0.01, np.linspace(0, 1, 501))
    frac = delta_sandwich_check(traj, grover_problem(5))
    assert 0 < frac <= 1


def test_oscillation_amplitude_and_drops(grover5_short):
    d = tail_drops(grover5_short, 1)
    assert d.size == 200
    amp = oscillation_amplitude(grover5_short, [1])
    assert amp == pytest.approx(max(d.max(), 0.0))
    with pytest.raises(ConfigError):
        tail_drops(grover5_short, 1, (0.9, 0.8))


def test_sweep_single_entry():
    r = oscillation_sweep(grover_problem(3), [20.0], grid=np.linspace(0, 1, 101))
    assert r.oscillation_amplitude.shape == (1,)
    assert r.trend_monotone() and r.strictly_decreasing()


def test_sweep_rejects_unsorted():
    with pytest.raises(ConfigError):
        oscillation_sweep(grover_problem(3), [20.0, 10.0])


@pytest.mark.slow
def test_sweep_doubling_runtime_suppresses_oscillation():
    r = oscillation_sweep(grover_problem(5), [100.0, 200.0, 400.0], parallel=3)
    assert r.strictly_decreasing() and r.trend_monotone()
    assert np.all(np.diff(r.max_delta) < 0)


def test_threshold_check_saturates_at_end(grover5_short):
    chk = delta_threshold_check(grover5_short, grover_problem(5))
    # A_1 reaches 1 at s = 1 so the threshold is empty
    assert chk.saturated and not chk.premise and chk.implication_holds


def test_threshold_check_premise_on_inner_window():
    p = grover_problem(2)
    traj = evolve(p, ScheduleSpec.linear(4000), 0.05, np.linspace(0, 1, 51))
    chk = delta_threshold_check(traj, p, k=1, tail_window=(0.1, 0.6))
    assert not chk.saturated and chk.delta_star > 0
    assert chk.premise
    assert chk.tail_monotone and chk.implication_holds
