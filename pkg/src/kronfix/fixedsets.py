"""Common fixed points of an n-parameter semigroup via n+1 mappings.

Given a basis ``p_1..p_n`` of R^n and ``alpha_1..alpha_n`` with
``{1, alpha}`` independent over the rationals, a point fixed by
``T(p_0), T(p_1), ..., T(p_n)`` (with ``p_0 = sum alpha_j p_j``) is fixed
by every ``T(p)``.  :func:`verify_main_theorem` walks that argument stage
by stage on a concrete instance; fixed sets are never materialised, only
probed through residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BadWeights,
    NegativeParameter,
    NoCommonFixedPointWitness,
    NormNotStrictlyConvex,
    OutOfDomain,
    P0NotNonnegative,
    QIndependenceViolated,
    SolveFailed,
    UsualIndependenceViolated,
)
from .exactreal import ExactReal, is_independent_over_q, rational_rank
from .geometry import EUCLIDEAN, ConvexSet, NormKind, as_vector, norm
from .kronecker import beta_shift, find_indices
from .report import StructuredReport
from .semigroup import (
    DEFAULT_SEED,
    DOMAIN_TOL,
    EMPTY,
    SemigroupInstance,
    as_parameter,
    continuity_modulus,
    evaluate,
    make_rotation,
    make_translation_counterexample,
    power_apply,
)

__all__ = [
    "ParameterBasis",
    "Mapping",
    "make_basis",
    "prime_root_basis",
    "decompose",
    "semigroup_map",
    "combined_map",
    "residual",
    "is_fixed",
    "verify_main_theorem",
    "bruck_check",
    "counterexample_demo",
    "counterexample_weights",
    "one_parameter_demo",
]

DEFAULT_TOL = 1e-8
SVD_THRESHOLD = 1e-10


@dataclass(frozen=True, eq=False)
class ParameterBasis:
    """Validated ``(p_1..p_n, alpha_1..alpha_n, p_0)``.

    ``ps`` holds ``p_j`` as rows.  ``exact_ps`` is set when every
    coordinate was given as a rational, in which case ``p0_exact`` is the
    exact ``sum alpha_j p_j``.
    """

    ps: np.ndarray
    alphas: tuple
    p0: np.ndarray
    exact_ps: Optional[tuple] = None
    p0_exact: Optional[tuple] = None

    @property
    def n(self) -> int:
        return len(self.alphas)

    @property
    def parameters(self) -> list[np.ndarray]:
        """``[p_0, p_1, ..., p_n]``."""
        return [self.p0] + list(self.ps)


def _is_exact_coord(v) -> bool:
    return isinstance(v, (int, Fraction, str, Rational)) and not isinstance(v, bool)


def make_basis(ps: Sequence[Sequence], alphas: Sequence) -> ParameterBasis:
    """Validate a parameter basis.

    Coordinates given as ints, Fractions or strings like ``"1/2"`` are
    treated exactly; floats switch the usual-independence check to a
    singular-value threshold.
    """
    alphas = tuple(ExactReal.coerce(a) for a in alphas)
    n = len(alphas)
    rows = [list(p) for p in ps]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"need {n} parameter vectors of length {n}")
    exact = all(_is_exact_coord(v) for r in rows for v in r)
    if exact:
        exact_rows = tuple(tuple(Fraction(v) for v in r) for r in rows)
        float_rows = np.array([[float(v) for v in r] for r in exact_rows])
    else:
        exact_rows = None
        float_rows = np.array(rows, dtype=float)
    if not np.all(np.isfinite(float_rows)):
        raise ValueError("non-finite parameter coordinate")
    if np.any(float_rows < 0):
        raise NegativeParameter("basis vectors must lie in R_+^n")

    if exact:
        independent = rational_rank(exact_rows) == n
    else:
        sv = np.linalg.svd(float_rows, compute_uv=False)
        independent = sv[-1] > SVD_THRESHOLD * max(sv[0], 1.0)
    if not independent:
        raise UsualIndependenceViolated("p_1..p_n are linearly dependent")
    if not is_independent_over_q(alphas, include_one=True):
        raise QIndependenceViolated("{1, alpha_1..alpha_n} is dependent over Q")

    if exact:
        p0_exact = tuple(
            sum((a.scale(r[i]) for a, r in zip(alphas, exact_rows)), ExactReal(0)) for i in range(n))
        if any(c.sign() < 0 for c in p0_exact):
            raise P0NotNonnegative(f"p_0 = ({', '.join(map(str, p0_exact))}) leaves R_+^n")
        p0 = np.array([c.to_float(1e-17) for c in p0_exact])
    else:
        p0_exact = None
        af = np.array([a.to_float(1e-17) for a in alphas])
        p0 = af @ float_rows
        if np.any(p0 < 0):
            raise P0NotNonnegative(f"p_0 = {p0.tolist()} leaves R_+^n")
    check = np.array([a.to_float(1e-17) for a in alphas]) @ float_rows
    if np.max(np.abs(check - p0)) > 1e-12 * (1 + np.max(np.abs(p0))):
        raise ArithmeticError("p_0 disagrees with sum alpha_j p_j")
    return ParameterBasis(float_rows, alphas, p0, exact_rows, p0_exact)


def _primes(count: int) -> list[int]:
    out, c = [], 2
    while len(out) < count:
        if all(c % q for q in out if q * q <= c):
            out.append(c)
        c += 1
    return out


def prime_root_basis(n: int) -> ParameterBasis:
    """Unit vectors with ``alpha_k = sqrt(k-th prime)``."""
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    return make_basis(eye, [ExactReal.sqrt(q) for q in _primes(n)])


def _solve_rational(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise SolveFailed("singular rational system")
        m[col], m[pivot] = m[pivot], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [u - f * v for u, v in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def decompose(basis: ParameterBasis, p) -> np.ndarray:
    """Coefficients ``lam`` with ``sum lam_j p_j = p`` (entries may be negative)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != basis.n:
        raise ValueError(f"parameter must have length {basis.n}")
    if basis.exact_ps is not None:
        cols = [[basis.exact_ps[j][i] for j in range(basis.n)] for i in range(basis.n)]
        lam = np.array([float(v) for v in _solve_rational(cols, [Fraction(v) for v in p])])
    else:
        try:
            lam = np.linalg.solve(basis.ps.T, p)
        except np.linalg.LinAlgError as exc:
            raise SolveFailed(str(exc)) from exc
    resid = np.linalg.norm(lam @ basis.ps - p)
    if resid > 1e-10 * (1 + np.linalg.norm(p)):
        raise SolveFailed(f"decomposition residual {resid:.3e} too large")
    return lam


@dataclass(frozen=True, eq=False)
class Mapping:
    """A single self-map of ``domain`` such as ``T(p_j)`` or the averaged ``S``."""

    apply: Callable[[np.ndarray], np.ndarray]
    domain: ConvexSet
    label: str
    norm: NormKind = EUCLIDEAN
    fixed_set: object = None

    def __call__(self, x) -> np.ndarray:
        return self.apply(np.asarray(x, dtype=float))


def semigroup_map(sg: SemigroupInstance, p, label: str | None = None) -> Mapping:
    p = as_parameter(p, sg.n)
    oracle = sg.fixed_set_oracle(p) if sg.fixed_set_oracle else None
    return Mapping(lambda x: sg.evaluator(p, x), sg.domain, label or f"T({p.tolist()})",
                   sg.norm, oracle)


def _float_weights(weights) -> np.ndarray:
    out = []
    for w in weights:
        if isinstance(w, (ExactReal, str)):
            w = ExactReal.coerce(w).to_float(1e-17)
        out.append(float(w))
    return np.array(out)


def combined_map(sg: SemigroupInstance, basis: ParameterBasis, weights: Sequence) -> Mapping:
    """``S x = sum_{j=0}^n w_j T(p_j) x`` with weights in (0, 1) summing to one."""
    w = _float_weights(weights)
    if w.size != basis.n + 1:
        raise BadWeights(f"need {basis.n + 1} weights, got {w.size}")
    if np.any(w <= 0) or np.any(w >= 1):
        raise BadWeights(f"weights {w.tolist()} must lie in (0, 1)")
    if abs(w.sum() - 1.0) > 1e-12:
        raise BadWeights(f"weights sum to {w.sum()!r}, not 1")
    params = [as_parameter(p, sg.n) for p in basis.parameters]
    ev = sg.evaluator

    def apply(x):
        acc = w[0] * ev(params[0], x)
        for wj, pj in zip(w[1:], params[1:]):
            acc = acc + wj * ev(pj, x)
        return acc

    common = sg.common_fixed_set
    oracle = None if common is None or common is EMPTY else common
    return Mapping(apply, sg.domain, "S", sg.norm, oracle)


def residual(m: Mapping, x) -> float:
    x = as_vector(x, m.domain.dim)
    if not m.domain.contains(x, DOMAIN_TOL):
        raise OutOfDomain(f"{x.tolist()} lies outside the domain of {m.label}")
    return norm(m.apply(x) - x, m.norm)


def is_fixed(m: Mapping, x, tol: float = DEFAULT_TOL) -> bool:
    return residual(m, x) <= tol


# verification of the n+1 mapping reduction


def _res(sg, p, z) -> float:
    return norm(evaluate(sg, p, z) - z, sg.norm)


def _exact_combination(coeffs: Sequence[ExactReal], basis: ParameterBasis) -> np.ndarray:
    """``sum_j coeffs_j p_j``, exact when the basis coordinates are rational."""
    n = basis.n
    if basis.exact_ps is None:
        return np.array([c.to_float(1e-17) for c in coeffs]) @ basis.ps
    out = []
    for i in range(n):
        total = sum((c.scale(basis.exact_ps[j][i]) for j, c in enumerate(coeffs)), ExactReal(0))
        out.append(total.to_float(1e-17))
    return np.array(out)


def verify_main_theorem(sg: SemigroupInstance, basis: ParameterBasis, z,
                        sample_count: int = 100, tol: float = DEFAULT_TOL, eps: float = 1e-3,
                        cone: float = 10.0, k_max: int = 10**8,
                        seed: int = DEFAULT_SEED) -> StructuredReport:
    """Check that ``z`` is a common fixed point by following the proof pipeline.

    Stages: (a) hypothesis residuals under ``T(p_0)..T(p_n)``; (b) the
    shifted parameter ``p_0' = sum beta_j p_j``; (c) points of
    ``[0,1)^n`` reached through Kronecker indices; (d) the positive cone;
    (e) arbitrary ``p`` after the ``+m`` shift.  Every stage runs even when
    (a) fails, so a non-fixed ``z`` shows where the chain breaks.
    """
    if sg.n != basis.n:
        raise ValueError(f"instance has {sg.n} parameters, basis has {basis.n}")
    z = as_vector(z, sg.dim)
    if not sg.domain.contains(z, DOMAIN_TOL):
        raise OutOfDomain(f"z = {z.tolist()} lies outside the domain")
    rng = np.random.default_rng(seed)
    n = basis.n
    params = basis.parameters
    report = StructuredReport(f"common fixed point check on {sg.name} (n={n}) at z={z.tolist()}")

    a = report.stage("a_hypothesis", "z is fixed by T(p_0), ..., T(p_n)", tol)
    for j, p in enumerate(params):
        a.add(f"p{j}", _res(sg, p, z))

    b = report.stage("b_beta_shift", "T(p_0')z = z with p_0' = p_0 + ell*(p_1+...+p_n)", tol)
    shift = beta_shift(basis.alphas)
    p0_shifted = _exact_combination(shift.betas, basis)
    algebraic = basis.p0 + shift.ell * basis.ps.sum(axis=0)
    b.add("identity", np.max(np.abs(p0_shifted - algebraic)), ok=bool(
        np.max(np.abs(p0_shifted - algebraic)) <= 1e-10))
    b.add("T(p0')", _res(sg, p0_shifted, z))
    y = z
    for pj in reversed(basis.ps):
        y = power_apply(sg, pj, shift.ell, y)
    y = evaluate(sg, basis.p0, y)
    b.add("composition", norm(y - z, sg.norm))
    b.diagnostics["ell"] = shift.ell
    b.diagnostics["betas"] = "(" + ", ".join(map(str, shift.betas)) + ")"

    c = report.stage("c_unit_cube", "T(sum lam_j p_j)z = z for lam in [0,1)^n via Kronecker indices", tol)
    worst_gap, largest_k, misses = 0.0, 0, 0
    lams = rng.uniform(0.0, 1.0, size=(sample_count, n))
    indices = find_indices(shift.betas, lams, eps, k_max)
    for i, (lam, k) in enumerate(zip(lams, indices)):
        if k is None:
            misses += 1
            c.add(f"s{i}", math.inf, ok=False, note="no Kronecker index within k_max")
            continue
        fracs = np.array([b_.scale(k).fractional_part().to_float(1e-17) for b_ in shift.betas])
        q = fracs @ basis.ps
        tq = evaluate(sg, q, z)
        tl = evaluate(sg, lam @ basis.ps, z)
        worst_gap = max(worst_gap, norm(tq - tl, sg.norm))
        largest_k = max(largest_k, k)
        c.add(f"s{i}", max(norm(tq - z, sg.norm), norm(tl - z, sg.norm)), k=k)
    c.diagnostics.update(eps=eps, largest_index=largest_k, kronecker_misses=misses,
                         max_gap_T_orbit_vs_T_target=f"{worst_gap:.3e}",
                         continuity_modulus=f"{continuity_modulus(sg, z):.3e}")

    d = report.stage("d_cone", f"T(sum lam_j p_j)z = z for lam in [0,{cone:g}]^n", tol)
    for i in range(sample_count):
        lam = rng.uniform(0.0, cone, size=n)
        direct = _res(sg, lam @ basis.ps, z)
        # literal route: fractional part first, then integer powers of each T(p_j)
        whole = np.floor(lam)
        y = z
        for j in reversed(range(n)):
            y = power_apply(sg, basis.ps[j], int(whole[j]), y)
        y = evaluate(sg, (lam - whole) @ basis.ps, y)
        d.add(f"s{i}", max(direct, norm(y - z, sg.norm)))

    e = report.stage("e_full", "T(p)z = z for p in R_+^n (including p_0..p_n)", tol)
    probes = [np.asarray(p) for p in params]
    probes += list(rng.uniform(0.0, 10.0, size=(max(0, sample_count - len(probes)), n)))
    largest_m = 0
    for i, p in enumerate(probes):
        lam = decompose(basis, p)
        m = max(int(math.floor(abs(v))) + 1 for v in lam)
        largest_m = max(largest_m, m)
        shifted = p + m * basis.ps.sum(axis=0)
        e.add(f"q{i}", max(_res(sg, p, z), _res(sg, shifted, z)), m=m)
    e.diagnostics["largest_shift_m"] = largest_m

    if e.passed and not a.passed:
        raise AssertionError("stage e passed while stage a failed; p_0..p_n are among e's probes")
    if not a.passed:
        report.notes.append("hypothesis fails: z is not fixed by all of T(p_0)..T(p_n)")
    return report


def bruck_check(maps: Sequence[Mapping], weights: Sequence, probe_points, tol: float = 1e-9,
                witness=None, norm_kind: NormKind | None = None) -> StructuredReport:
    """Pointwise check of ``F(sum w_j T_j) = intersection of F(T_j)``.

    Needs a strictly convex norm and a witness common fixed point.
    """
    kind = norm_kind or maps[0].norm
    if not kind.strictly_convex:
        raise NormNotStrictlyConvex(f"{kind} norm is not strictly convex")
    w = _float_weights(weights)
    if w.size != len(maps) or np.any(w <= 0) or np.any(w > 1) or abs(w.sum() - 1) > 1e-12:
        raise BadWeights(f"weights {w.tolist()} must lie in (0, 1] and sum to 1")
    if witness is None:
        raise NoCommonFixedPointWitness("a common fixed point witness is required")
    witness = as_vector(witness)
    wres = max(norm(m(witness) - witness, kind) for m in maps)
    if wres > tol:
        raise NoCommonFixedPointWitness(f"witness moves by {wres:.3e} under some T_j")

    report = StructuredReport(f"averaged-map fixed set check ({len(maps)} maps, {kind} norm)")
    st = report.stage("biconditional", "S-fixed iff fixed by every T_j", tol)
    for i, x in enumerate(np.atleast_2d(np.asarray(probe_points, dtype=float))):
        sx = sum(wj * m(x) for wj, m in zip(w, maps))
        rs = norm(sx - x, kind)
        rt = max(norm(m(x) - x, kind) for m in maps)
        st.add(f"x{i}", rs, ok=(rs <= tol) == (rt <= tol), max_component_residual=rt)
    return report


def counterexample_weights() -> list[ExactReal]:
    r2, r3 = ExactReal.sqrt(2), ExactReal.sqrt(3)
    return [(r2 + r3 + 1) / 6, (3 - r2) / 6, (2 - r3) / 6]


def counterexample_demo(probes: int = 100, seed: int = DEFAULT_SEED, tol: float = 1e-9) -> StructuredReport:
    """Without a common fixed point the averaged map can fix everything.

    The translation family has no common fixed point, yet the averaged
    map built from ``T(sqrt2 e1 + sqrt3 e2)``, ``T(e1)``, ``T(e2)`` is the
    identity because the three translation amounts cancel exactly.
    """
    sg = make_translation_counterexample()
    basis = make_basis([[1, 0], [0, 1]], [ExactReal.sqrt(2), ExactReal.sqrt(3)])
    w = counterexample_weights()
    S = combined_map(sg, basis, w)
    t_e1 = semigroup_map(sg, [1.0, 0.0], "T(e1)")
    rng = np.random.default_rng(seed)
    xs = np.concatenate([[17.5], rng.uniform(-1e3, 1e3, size=probes - 1)]) if probes > 1 else np.array([17.5])

    report = StructuredReport("translation counterexample: empty common fixed set, F(S) = C")
    s1 = report.stage("i_S_identity", "|Sx - x| at probes", tol)
    s2 = report.stage("ii_T_e1_moves", "| |T(e1)x - x| - 1 | at probes", tol)
    for i, x in enumerate(xs):
        s1.add(f"x{i}", residual(S, [x]), x=float(x))
        s2.add(f"x{i}", abs(residual(t_e1, [x]) - 1.0), x=float(x))

    s3 = report.stage("iii_exact_identities", "exact weight sum and translation cancellation", 0.0)
    total = w[0] + w[1] + w[2]
    shift_p0 = basis.p0_exact[0] - basis.p0_exact[1]
    cancel = w[0] * shift_p0 + w[1] * 1 + w[2] * (-1)
    s3.add("weight_sum_minus_one", 0.0 if total == 1 else math.inf, expr=str(total - 1))
    s3.add("cancellation", 0.0 if cancel == 0 else math.inf, expr=str(cancel))
    report.notes.append(f"weights = {', '.join(str(v) for v in w)}")
    report.notes.append(f"sum of weights = {total} (exact)")
    report.notes.append(
        f"({w[0]})*({shift_p0}) + ({w[1]})*1 + ({w[2]})*(-1) = {cancel} (exact)")
    report.notes.append("common fixed set of the family is empty, F(T(e1)) is empty")
    return report


def one_parameter_demo(period: float = 1.0, probes: int = 200, seed: int = DEFAULT_SEED,
                       tol: float = 1e-9) -> StructuredReport:
    """Two rotations with an irrational ratio pin the origin; a rational ratio does not.

    ``T(1)`` and ``T(sqrt 2)`` (period one) fix only the origin, so any
    probe away from it is moved by ``T(sqrt 2)``.  ``T(1)`` and ``T(2)`` are
    both the identity while ``T(1/3)`` moves ``(1, 0)`` by ``sqrt 3``.
    """
    sg = make_rotation(period)
    rng = np.random.default_rng(seed)
    report = StructuredReport(f"rotation (period {period:g}): irrational vs rational parameter pairs")

    irr = report.stage("irrational_pair", "probes with |x| >= 0.1 are moved by T(sqrt2) by >= 0.05", 0.05)
    angles = rng.uniform(0, 2 * np.pi, probes)
    radii = rng.uniform(0.1, 10.0, probes)
    r2 = math.sqrt(2.0) * period
    for i, (th, r) in enumerate(zip(angles, radii)):
        x = r * np.array([np.cos(th), np.sin(th)])
        moved = _res(sg, [r2], x)
        irr.add(f"x{i}", moved, ok=moved >= 0.05, t1_residual=_res(sg, [period], x))
    origin = report.stage("origin", "the origin is fixed by T(1) and T(sqrt2)", tol)
    origin.add("T(1)", _res(sg, [period], [0.0, 0.0]))
    origin.add("T(sqrt2)", _res(sg, [r2], [0.0, 0.0]))

    rat = report.stage("rational_pair", "(1,0) fixed by T(1), T(2); moved by T(1/3) by sqrt3", tol)
    x = np.array([1.0, 0.0])
    rat.add("T(1)", _res(sg, [period], x))
    rat.add("T(2)", _res(sg, [2 * period], x))
    third = _res(sg, [period / 3], x)
    rat.add("T(1/3)-sqrt3", abs(third - math.sqrt(3.0)), moved=third)
    return report
