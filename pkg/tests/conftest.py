"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from kronfix.fixedsets import Mapping, make_basis
from kronfix.geometry import WholeSpace
from kronfix.semigroup import make_broken_family, make_matexp, make_rotation

ORACLE_BITS = 200


def mp_value(x) -> mpmath.mpf:
    """Evaluate an ExactReal at ORACLE_BITS of working precision."""
    with mpmath.workprec(ORACLE_BITS):
        total = mpmath.mpf(x.rational_part.numerator) / x.rational_part.denominator
        for d, q in x.surd_coeffs.items():
            total += mpmath.mpf(q.numerator) / q.denominator * mpmath.sqrt(d)
        return total


def mp_fracs(alphas_sqrt: list[int], k: int) -> list[mpmath.mpf]:
    """Fractional parts of k*sqrt(d) at ORACLE_BITS."""
    with mpmath.workprec(ORACLE_BITS):
        out = []
        for d in alphas_sqrt:
            t = k * mpmath.sqrt(d)
            out.append(t - mpmath.floor(t))
        return out


def brute_force_first_hits(alphas_sqrt, target, eps, count, k_max=10_000):
    """Scan k = 1, 2, ... in 200-bit arithmetic; strict box test, no wraparound.

    Independent of the package: no exact arithmetic, no blocked recurrence.
    """
    hits = []
    with mpmath.workprec(ORACLE_BITS):
        tgt = [mpmath.mpf(str(t)) for t in target]
        e = mpmath.mpf(str(eps))
        for k in range(1, k_max + 1):
            fr = mp_fracs(alphas_sqrt, k)
            if all(abs(f - t) < e for f, t in zip(fr, tgt)):
                hits.append(k)
                if len(hits) == count:
                    break
    return hits


def naive_rode(sg, basis, x, k):
    """Direct enumeration: one evaluation of T(sum nu_j p_j) per grid point."""
    params = basis.parameters
    total = np.zeros_like(np.asarray(x, dtype=float))
    for nu in itertools.product(range(1, k + 1), repeat=len(params)):
        p = sum(v * q for v, q in zip(nu, params))
        total = total + sg.evaluator(np.asarray(p, dtype=float), np.asarray(x, dtype=float))
    return total / k ** len(params)


def scalar_map(a: float) -> Mapping:
    return Mapping(lambda v: a * v, WholeSpace(1), f"{a}x")


def identity_map(dim: int) -> Mapping:
    return Mapping(lambda v: v.copy(), WholeSpace(dim), "I")


@pytest.fixture
def scalar_semigroup():
    """T(t)x = exp(-t) x on the real line."""
    return make_matexp(1, [[1.0]], [[1.0]], [0.0])


@pytest.fixture
def scalar_basis():
    return make_basis([[1]], ["sqrt(2)"])


@pytest.fixture
def matexp_diag():
    return make_matexp(2, [[1.0, 0.0], [0.0, 1.0]], np.eye(2), [0.0, 0.0])


@pytest.fixture
def unit_basis_2d():
    return make_basis([[1, 0], [0, 1]], ["sqrt(2)", "sqrt(3)"])


@pytest.fixture
def rotation():
    return make_rotation(1.0)


@pytest.fixture
def broken():
    return make_broken_family()


def frac(text: str) -> Fraction:
    return Fraction(text)


# acceptance bookkeeping: one line per criterion, echoed after the run

ACCEPTANCE_LINES: list[str] = []


def record_criterion(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
