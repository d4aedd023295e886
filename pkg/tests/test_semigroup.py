"""Builtin semigroup instances, evaluation and the empirical law checkers."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kronfix.errors import InvalidInstance, NegativeParameter, OutOfDomain
from kronfix.geometry import L1, Ball, WholeSpace
from kronfix.semigroup import (
    EMPTY,
    AffineSubspace,
    check_nonexpansive,
    check_semigroup_law,
    continuity_modulus,
    evaluate,
    make_identity,
    make_matexp,
    make_rotation,
    make_translation_counterexample,
    power_apply,
)

SQ2, SQ3 = math.sqrt(2), math.sqrt(3)


def builtins():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return [
        make_translation_counterexample(),
        make_rotation(1.0),
        make_rotation(2.5, Ball([0, 0], 1.0)),
        make_matexp(2, [[1.0, 0.0], [0.0, 1.0]], np.eye(2), [0.0, 0.0]),
        make_matexp(2, [[0.3, 0.0, 1.0], [0.0, 0.0, 2.0]], Q, [1.0, -1.0, 0.5]),
        make_identity(2, 3, WholeSpace(3)),
    ]


def test_counterexample_examples():
    sg = make_translation_counterexample()
    assert evaluate(sg, [1, 0], [5]) == pytest.approx([6])
    assert evaluate(sg, [0, 1], [5]) == pytest.approx([4])
    assert evaluate(sg, [2.5, 2.5], [5]) == pytest.approx([5])
    assert evaluate(sg, [SQ2, SQ3], [0])[0] == pytest.approx(-0.317837, abs=1e-6)
    assert sg.fixed_set_oracle(np.array([1.0, 1.0])).dim == 1
    assert sg.fixed_set_oracle(np.array([1.0, 0.0])) is EMPTY
    assert sg.common_fixed_set is EMPTY


def test_rotation_examples():
    sg = make_rotation(1.0)
    assert np.allclose(evaluate(sg, [1.0], [1, 0]), [1, 0], atol=1e-12)
    assert np.allclose(evaluate(sg, [0.5], [1, 0]), [-1, 0], atol=1e-12)
    assert np.allclose(evaluate(sg, [0.25], [1, 0]), [0, 1], atol=1e-12)
    with pytest.raises(InvalidInstance):
        make_rotation(0.0)


def test_matexp_examples():
    sg = make_matexp(2, [[1.0, 0.0], [0.0, 1.0]], np.eye(2), [0.0, 0.0])
    assert np.allclose(evaluate(sg, [1, 0], [2.0, 3.0]), [2 * math.exp(-1), 3.0])
    oracle = sg.fixed_set_oracle(np.array([1.0, 0.0]))
    assert oracle.contains([0.0, 7.0], 1e-12) and not oracle.contains([1.0, 0.0], 1e-3)
    assert np.allclose(evaluate(sg, [0, 0], [2.0, 3.0]), [2.0, 3.0])
    assert np.allclose(evaluate(sg, [4.0, 9.0], [0.0, 0.0]), [0.0, 0.0])
    with pytest.raises(InvalidInstance):
        make_matexp(1, [[-1.0]], [[1.0]], [0.0])
    with pytest.raises(InvalidInstance):
        make_matexp(1, [[1.0, 1.0]], [[1.0, 1.0], [0.0, 1.0]], [0.0, 0.0])


def test_evaluate_validates_inputs():
    sg = make_rotation(1.0, Ball([0, 0], 1.0))
    with pytest.raises(NegativeParameter):
        evaluate(sg, [-0.1], [0.1, 0.0])
    with pytest.raises(OutOfDomain):
        evaluate(sg, [0.1], [2.0, 0.0])


def test_power_apply_examples():
    sg = make_translation_counterexample()
    assert power_apply(sg, [1, 0], 0, [0.25]) == pytest.approx([0.25])
    assert power_apply(sg, [1, 0], 3, [0.0]) == pytest.approx([3.0])
    scalar = make_matexp(1, [[1.0]], [[1.0]], [0.0])
    assert power_apply(scalar, [1.0], 2, [1.0]) == pytest.approx([math.exp(-2)], abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.integers(0, 6), st.integers(0, 6))
def test_power_apply_composes(t, a, b):
    sg = make_matexp(2, [[0.2, 1.0], [0.0, 0.5]], np.eye(2), [1.0, -1.0])
    p, x = [t, 0.5], np.array([0.3, 2.0])
    lhs = power_apply(sg, p, a + b, x)
    rhs = power_apply(sg, p, a, power_apply(sg, p, b, x))
    assert np.allclose(lhs, rhs, atol=1e-9, rtol=0)


@pytest.mark.parametrize("sg", builtins(), ids=lambda s: s.name)
def test_builtins_satisfy_laws(sg):
    assert check_semigroup_law(sg, 1000, 1e-9).passed
    assert check_nonexpansive(sg, 1000, 1e-9).passed
    x = sg.domain.sample(np.random.default_rng(0), 1)[0]
    assert np.allclose(sg.evaluator(np.zeros(sg.n), x), x, atol=1e-12, rtol=0)


@pytest.mark.parametrize("sg", builtins(), ids=lambda s: s.name)
def test_oracle_consistency(sg):
    rng = np.random.default_rng(9)
    for p in rng.uniform(0, 10, size=(20, sg.n)):
        fs = sg.fixed_set_oracle(p)
        if fs is EMPTY:
            continue
        for z in fs.sample(rng, 5, scale=3.0):
            z = sg.domain.project(z)
            if fs.contains(z, 1e-12):
                assert np.linalg.norm(sg.evaluator(p, z) - z) <= 1e-9


def test_off_oracle_points_move():
    sg = make_matexp(2, [[1.0, 0.0], [0.0, 1.0]], np.eye(2), [0.0, 0.0])
    rng = np.random.default_rng(4)
    for _ in range(100):
        p = rng.uniform(0.1, 10, size=2)
        x = rng.uniform(-5, 5, size=2)
        if sg.fixed_set_oracle(p).distance(x) >= 0.1:
            assert np.linalg.norm(sg.evaluator(p, x) - x) >= 1e-6


def test_affine_subspace_requires_orthonormal_basis():
    with pytest.raises(ValueError):
        AffineSubspace(np.zeros(2), np.array([[1.0, 1.0]]))
    line = AffineSubspace(np.array([0.0, 1.0]), np.array([[1.0, 0.0]]))
    assert np.allclose(line.project([3.0, 5.0]), [3.0, 1.0])
    assert line.distance([3.0, 5.0]) == pytest.approx(4.0)


def test_broken_family_violation_at_unit_points(broken):
    report = check_semigroup_law(broken, 1000, 1e-9)
    assert not report.passed
    first = report.first_violation
    assert first["p"] == [1.0] and first["q"] == [1.0]
    assert first["violation"] == pytest.approx(2.0)
    assert "first violating sample" in report.summary()


def test_rotation_is_not_l1_nonexpansive():
    report = check_nonexpansive(make_rotation(1.0), 1000, 1e-9, norm_kind=L1)
    assert not report.passed and report.max_violation > 0.1


def test_checkers_are_seeded():
    sg = make_rotation(1.0)
    a = check_nonexpansive(sg, 50, 1e-9, seed=3)
    b = check_nonexpansive(sg, 50, 1e-9, seed=3)
    assert a.worst == b.worst


def test_continuity_modulus_small_for_smooth_instance():
    sg = make_rotation(1.0)
    mod = continuity_modulus(sg, np.array([1.0, 0.0]))
    # rotation speed is 2 pi per unit parameter
    assert mod == pytest.approx(2 * math.pi, rel=1e-3)
