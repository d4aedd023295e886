"""Iteration schemes against closed forms, naive enumeration and hand composition."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import identity_map, naive_rode, scalar_map
from kronfix.errors import (
    BadSchedule,
    BudgetExceeded,
    DomainNotCompact,
    NoConvergence,
    SNotInUnitInterval,
    WordBudgetExceeded,
)
from kronfix.fixedsets import Mapping, combined_map, make_basis
from kronfix.geometry import Ball, WholeSpace
from kronfix.iterate import (
    FULL_HISTORY,
    Schedule,
    ishikawa_word,
    ishikawa_word_length,
    rode_trace,
    run_browder,
    run_cesaro,
    run_halpern,
    run_ishikawa,
    run_km,
    run_rode,
    solve_browder,
)
from kronfix.semigroup import (
    make_identity,
    make_matexp,
    make_rotation,
    make_translation_counterexample,
)


def _builtin_pairs():
    rng = np.random.default_rng(8)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    b1 = make_basis([[1]], ["sqrt(2)"])
    b2 = make_basis([[1, 0], [0, 1]], ["sqrt(2)", "sqrt(3)"])
    b2s = make_basis([[1, 1], [0, 1]], ["sqrt(5)", "sqrt(7)"])
    return [
        ("rotation", make_rotation(1.0), b1, [0.3, -0.8]),
        ("rotation_ball", make_rotation(3.0, Ball([0, 0], 1)), b1, [0.3, -0.8]),
        ("scalar", make_matexp(1, [[0.7]], [[1.0]], [2.0]), b1, [0.5]),
        ("identity1", make_identity(1, 2), b1, [1.0, 2.0]),
        ("identity2", make_identity(2, 2), b2, [1.0, 2.0]),
        ("matexp_diag", make_matexp(2, [[1, 0], [0, 1]], np.eye(2), [0, 0]), b2, [1.0, 1.0]),
        ("matexp_rot", make_matexp(2, [[0.2, 1.0], [0.5, 0.0]], Q, [1, -1]), b2s, [0.0, 3.0]),
        ("translation", make_translation_counterexample(), b2, [4.0]),
    ]


# Cesaro and KM


def test_cesaro_identity_and_scalar():
    trace = run_cesaro(identity_map(2), [1.0, 2.0], 10)
    assert all(np.array_equal(x, [1.0, 2.0]) for x in trace.iterates)
    assert max(trace.residuals) == 0.0
    trace = run_cesaro(scalar_map(0.5), [1.0], 40)
    for k, x in zip(trace.ks, trace.iterates):
        assert x[0] == pytest.approx((1 - 2.0 ** -k) / k, abs=1e-15)


def test_cesaro_incremental_mean_equals_direct_sum():
    S = scalar_map(0.9)
    trace = run_cesaro(S, [3.0], 50)
    for k in (1, 7, 50):
        direct = sum(3.0 * 0.9 ** i for i in range(1, k + 1)) / k
        assert trace.iterates[k - 1][0] == pytest.approx(direct, abs=1e-10)


def test_cesaro_on_rotation_average():
    sg = make_rotation(1.0)
    S = combined_map(sg, make_basis([[1]], ["sqrt(2)"]), [0.5, 0.5])
    trace = run_cesaro(S, [1.0, 0.0], 10_000)
    assert np.linalg.norm(trace.final) <= 1e-2
    assert trace.oracle_dist[-1] == pytest.approx(np.linalg.norm(trace.final))


def test_km_identity_and_scalar():
    trace = run_km(identity_map(1), [5.0], 5)
    assert [x[0] for x in trace.iterates] == [5.0] * 5
    trace = run_km(scalar_map(0.5), [1.0], 30)
    for k, x in zip(trace.ks, trace.iterates):
        assert x[0] == pytest.approx(0.75 ** (k - 1), abs=1e-15)


def test_km_on_matexp_decays_geometrically(matexp_diag, unit_basis_2d):
    S = combined_map(matexp_diag, unit_basis_2d, ["1/3", "1/3", "1/3"])
    a = np.array([(math.exp(-math.sqrt(2)) + math.exp(-1) + 1) / 3,
                  (math.exp(-math.sqrt(3)) + 1 + math.exp(-1)) / 3])
    trace = run_km(S, [1.0, 1.0], 60)
    for k, y in zip(trace.ks, trace.iterates):
        assert np.allclose(y, ((1 + a) / 2) ** (k - 1), rtol=1e-12, atol=0)
    # the slower coordinate dominates eventually
    late = run_km(S, [1.0, 1.0], 400).oracle_dist
    assert late[-1] / late[-2] == pytest.approx((1 + a.max()) / 2, rel=1e-6)


# Browder


def test_browder_closed_form():
    S = scalar_map(0.5)
    for s in (0.5, 0.1, 0.01):
        x = solve_browder(S, [1.0], s)
        assert x[0] == pytest.approx(s / (1 - (1 - s) * 0.5), abs=1e-10)
    assert solve_browder(S, [1.0], 0.5)[0] == pytest.approx(2 / 3, abs=1e-12)
    u = np.array([0.3, -7.0])
    assert np.allclose(solve_browder(identity_map(2), u, 0.2), u)


def test_browder_fixed_point_equation_and_errors():
    S = Mapping(lambda v: np.array([-v[1], v[0]]), WholeSpace(2), "quarter turn")
    x = solve_browder(S, [1.0, 0.0], 0.05, tol=1e-13)
    assert np.linalg.norm(x - (0.95 * S(x) + 0.05 * np.array([1.0, 0.0]))) <= 1e-12
    with pytest.raises(SNotInUnitInterval):
        solve_browder(S, [1.0, 0.0], 1.0)
    expanding = Mapping(lambda v: 3 * v + 1, WholeSpace(1), "3x+1")
    with pytest.raises(NoConvergence):
        solve_browder(expanding, [1.0], 0.1, max_iter=200)


def test_browder_sweep_counts_applications(matexp_diag, unit_basis_2d):
    S = combined_map(matexp_diag, unit_basis_2d, ["1/3", "1/3", "1/3"])
    trace = run_browder(S, [1.0, 1.0], Schedule(), 5)
    assert trace.map_applications > 0
    assert all(a > b for a, b in zip(trace.oracle_dist, trace.oracle_dist[1:]))


# Halpern and schedules


def test_reciprocal_schedule_variation_telescopes():
    sched = Schedule()
    for N in (1, 10, 1000):
        assert sched.total_variation(N) == pytest.approx(0.5 - 1 / (N + 2), abs=1e-12)
    t = sched.check_halpern(100)
    assert np.all((t > 0) & (t < 1))


def test_schedule_validation():
    with pytest.raises(BadSchedule):
        Schedule("geometric")
    with pytest.raises(BadSchedule):
        Schedule("powerlaw", gamma=1.5)
    with pytest.raises(BadSchedule):
        Schedule("custom", custom=[0.5] * 20).check_halpern(20)
    with pytest.raises(BadSchedule):
        Schedule("custom", custom=[0.01] * 20).check_halpern(20)
    with pytest.raises(BadSchedule):
        Schedule("custom", custom=[0.5, 1.0]).values(2)


def test_halpern_identity_converges_to_anchor():
    u = np.array([2.0, -1.0])
    trace = run_halpern(identity_map(2), u, [10.0, 10.0], Schedule(), 2000)
    # y_{k+1} - u = (1 - t_k)(y_k - u) with t_k = 1/(k+1) gives (y_1 - u)/(k)
    k = trace.ks[-1]
    assert np.allclose(trace.final - u, (np.array([10.0, 10.0]) - u) / k, rtol=1e-9)


def test_halpern_on_matexp(matexp_diag, unit_basis_2d):
    S = combined_map(matexp_diag, unit_basis_2d, ["1/3", "1/3", "1/3"])
    trace = run_halpern(S, [1.0, 1.0], [1.0, 1.0], Schedule(), 20_000)
    assert trace.oracle_dist[-1] < 1e-2
    assert len(trace.ks) <= FULL_HISTORY + 1 and trace.ks[-1] == 20_000


def test_schemes_hold_a_fixed_start(matexp_diag, unit_basis_2d):
    S = combined_map(matexp_diag, unit_basis_2d, ["1/3", "1/3", "1/3"])
    z = np.zeros(2)
    for trace in (run_cesaro(S, z, 20), run_km(S, z, 20),
                  run_halpern(S, z, z, Schedule(), 20), run_browder(S, z, Schedule(), 5)):
        assert max(np.max(np.abs(x - z)) for x in trace.iterates) <= 1e-10


def test_oracle_distance_strictly_decreases(matexp_diag, unit_basis_2d):
    S = combined_map(matexp_diag, unit_basis_2d, ["1/3", "1/3", "1/3"])
    for trace in (run_cesaro(S, [1.0, 1.0], 500), run_km(S, [1.0, 1.0], 500),
                  run_halpern(S, [1.0, 1.0], [1.0, 1.0], Schedule(), 500)):
        d = np.array(trace.oracle_dist[10:])
        nonzero = d[d > 0]
        assert np.all(np.diff(nonzero) < 0), trace.scheme
    assert run_km(S, [1.0, 1.0], 500).oracle_dist[-1] <= 1e-6


def test_trace_thinning_and_csv():
    trace = run_km(scalar_map(0.5), [1.0], 5000)
    assert trace.ks[0] == 1 and trace.ks[-1] == 5000
    assert all(b - a == 5 for a, b in zip(trace.ks[:-2], trace.ks[1:-1]))
    lines = trace.to_csv().splitlines()
    assert lines[0] == "k,residual,oracle_dist,x_0"
    assert len(lines) == len(trace.ks) + 1


# Rode mean


@pytest.mark.parametrize("name, sg, basis, x", _builtin_pairs(), ids=lambda v: v if isinstance(v, str) else "")
def test_rode_matches_naive_enumeration(name, sg, basis, x):
    for k in range(1, 6):
        assert np.allclose(run_rode(sg, basis, x, k), naive_rode(sg, basis, x, k),
                           atol=1e-12, rtol=0), (name, k)


def test_rode_scalar_hand_computed(scalar_semigroup, scalar_basis):
    r2 = math.sqrt(2)
    expected = (math.exp(-(r2 + 1)) + math.exp(-(r2 + 2))
                + math.exp(-(2 * r2 + 1)) + math.exp(-(2 * r2 + 2))) / 4
    assert run_rode(scalar_semigroup, scalar_basis, [1.0], 2)[0] == pytest.approx(expected, abs=1e-12)
    assert np.array_equal(run_rode(make_identity(1, 2), scalar_basis, [3.0, 4.0], 4), [3.0, 4.0])


def test_rode_budget():
    basis = make_basis([[1, 0], [0, 1]], ["sqrt(2)", "sqrt(3)"])
    with pytest.raises(BudgetExceeded):
        run_rode(make_identity(2, 1), basis, [0.0], 300, cap=10**6)


def test_rode_trace_converges_on_rotation():
    trace = rode_trace(make_rotation(1.0), make_basis([[1]], ["sqrt(2)"]), [1.0, 0.0], 30)
    assert trace.oracle_dist[-1] < 0.1 * trace.oracle_dist[0]


# Ishikawa nested product


def test_ishikawa_word_examples():
    assert ishikawa_word(0, 3) == [0, 0, 0]
    assert ishikawa_word(1, 1) == [1, 0]
    assert ishikawa_word(1, 2) == [1, 0, 1, 0, 0]
    for k in range(1, 21):
        assert len(ishikawa_word(1, k)) == ishikawa_word_length(1, k) == k + k * (k + 1) // 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 3), st.integers(2, 7))
def test_ishikawa_word_extends_previous(n, k):
    prev, cur = ishikawa_word(n, k - 1), ishikawa_word(n, k)
    assert cur[:len(prev)] == prev
    if n == 0:
        assert cur[len(prev):] == [0]
    else:
        assert cur[len(prev):] == [n] + ishikawa_word(n - 1, k)


def test_ishikawa_word_budget():
    with pytest.raises(WordBudgetExceeded):
        ishikawa_word(3, 200, cap=10**5)


def test_ishikawa_hand_composition():
    sg = make_rotation(1.0, Ball([0, 0], 1.0))
    basis = make_basis([[1]], ["sqrt(2)"])
    x1 = np.array([0.6, 0.3])
    trace = run_ishikawa(sg, basis, x1, 2)

    def half(p):
        return lambda v: 0.5 * sg.evaluator(np.array([p]), v) + 0.5 * v

    S0, S1 = half(math.sqrt(2)), half(1.0)
    inner = S1(S0(S0(x1)))          # [S_1 S_0 S_0] x_1
    expected = S1(S0(inner))        # [S_1 S_0][S_1 S_0 S_0] x_1
    assert np.allclose(trace.iterates[2], expected, atol=1e-12, rtol=0)
    assert np.allclose(trace.iterates[1], S1(S0(x1)), atol=1e-12, rtol=0)


def test_ishikawa_requires_compact_domain():
    with pytest.raises(DomainNotCompact):
        run_ishikawa(make_rotation(1.0), make_basis([[1]], ["sqrt(2)"]), [0.5, 0.0], 3)


def test_ishikawa_identity_on_ball_is_constant():
    sg = make_identity(1, 2, Ball([0, 0], 2.0))
    trace = run_ishikawa(sg, make_basis([[1]], ["sqrt(2)"]), [0.5, 1.0], 6)
    assert all(np.array_equal(x, [0.5, 1.0]) for x in trace.iterates)


def test_ishikawa_application_budget():
    sg = make_rotation(1.0, Ball([0, 0], 1.0))
    with pytest.raises(WordBudgetExceeded):
        run_ishikawa(sg, make_basis([[1]], ["sqrt(2)"]), [0.5, 0.0], 200, max_map_applications=10**4)
