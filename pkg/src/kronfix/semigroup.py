"""n-parameter semigroups ``p -> T(p)`` on a convex domain.

Builtin instances carry closed-form fixed-set oracles so that identities
between fixed-point sets can be checked pointwise.  The checkers sample
the semigroup law ``T(p+q) = T(p) T(q)`` and nonexpansiveness; continuity
is only estimated, never pass/fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInstance, NegativeParameter, OutOfDomain
from .geometry import EUCLIDEAN, Ball, ConvexSet, NormKind, WholeSpace, as_vector, norm

__all__ = [
    "DEFAULT_SEED",
    "DOMAIN_TOL",
    "AffineSubspace",
    "EMPTY",
    "EmptySet",
    "SemigroupInstance",
    "as_parameter",
    "make_translation_counterexample",
    "make_rotation",
    "make_matexp",
    "make_identity",
    "make_broken_family",
    "evaluate",
    "power_apply",
    "CheckReport",
    "check_semigroup_law",
    "check_nonexpansive",
    "continuity_modulus",
]

DEFAULT_SEED = 20060417
DOMAIN_TOL = 1e-9
PARAM_BOX = 10.0


class EmptySet:
    """The empty fixed-point set."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    is_empty = True

    def contains(self, x, tol: float = 0.0) -> bool:
        return False

    def project(self, x):
        return None

    def distance(self, x) -> float:
        return float("inf")

    def __repr__(self):
        return "EMPTY"


EMPTY = EmptySet()


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """``base + span(basis)``; ``basis`` rows are orthonormal."""

    base: np.ndarray
    basis: np.ndarray

    is_empty = False

    def __post_init__(self):
        base = as_vector(self.base)
        basis = np.asarray(self.basis, dtype=float).reshape(-1, base.size)
        if basis.shape[0]:
            gram = basis @ basis.T
            if not np.allclose(gram, np.eye(basis.shape[0]), atol=1e-12, rtol=0):
                raise ValueError("affine subspace basis is not orthonormal")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def point(cls, x) -> "AffineSubspace":
        x = as_vector(x)
        return cls(x, np.zeros((0, x.size)))

    @classmethod
    def whole(cls, dim: int) -> "AffineSubspace":
        return cls(np.zeros(dim), np.eye(dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def project(self, x) -> np.ndarray:
        d = np.asarray(x, float) - self.base
        return self.base + self.basis.T @ (self.basis @ d)

    def distance(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, float) - self.project(x)))

    def contains(self, x, tol: float = 0.0) -> bool:
        return self.distance(x) <= tol

    def sample(self, rng: np.random.Generator, count: int, scale: float = 1.0) -> np.ndarray:
        coef = rng.uniform(-scale, scale, size=(count, self.dim))
        return self.base + coef @ self.basis

    def __repr__(self):
        return f"AffineSubspace(base={self.base.tolist()}, dim={self.dim})"


Oracle = Callable[[np.ndarray], "AffineSubspace | EmptySet"]


@dataclass(frozen=True, eq=False)
class SemigroupInstance:
    """A family ``{T(p) : p in R_+^n}`` acting on ``domain``.

    ``evaluator(p, x)`` receives a validated parameter and point and returns
    ``T(p)x``.  ``fixed_set_oracle(p)`` gives ``F(T(p))`` in closed form and
    ``common_fixed_set`` the intersection over all ``p``.
    """

    name: str
    n: int
    domain: ConvexSet
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    claims_nonexpansive: bool = True
    exact_arithmetic_hint: bool = False
    fixed_set_oracle: Optional[Oracle] = None
    common_fixed_set: "AffineSubspace | EmptySet | None" = None
    norm: NormKind = EUCLIDEAN
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __call__(self, p, x) -> np.ndarray:
        return evaluate(self, p, x)

    def with_domain(self, domain: ConvexSet) -> "SemigroupInstance":
        if domain.dim != self.dim:
            raise InvalidInstance("replacement domain has the wrong dimension")
        return SemigroupInstance(
            self.name, self.n, domain, self.evaluator, self.claims_nonexpansive,
            self.exact_arithmetic_hint, self.fixed_set_oracle, self.common_fixed_set,
            self.norm, dict(self.params),
        )


def as_parameter(p, n: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.shape != (n,):
        raise ValueError(f"parameter must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NegativeParameter(f"parameter {arr.tolist()} is not finite")
    if np.any(arr < 0):
        raise NegativeParameter(f"parameter {arr.tolist()} lies outside R_+^{n}")
    return arr


def _check_point(sg: SemigroupInstance, x, what: str) -> np.ndarray:
    x = as_vector(x, sg.dim)
    if not sg.domain.contains(x, DOMAIN_TOL):
        raise OutOfDomain(f"{what} {x.tolist()} lies outside the domain of {sg.name}")
    return x


def evaluate(sg: SemigroupInstance, p, x) -> np.ndarray:
    """``T(p)x`` with parameter and domain validation."""
    p = as_parameter(p, sg.n)
    x = _check_point(sg, x, "point")
    y = np.asarray(sg.evaluator(p, x), dtype=float)
    if not sg.domain.contains(y, DOMAIN_TOL):
        raise OutOfDomain(f"{sg.name} mapped {x.tolist()} out of its domain")
    return y


def power_apply(sg: SemigroupInstance, p, m: int, x) -> np.ndarray:
    """``T(p)^m x``; ``m = 0`` gives ``x`` back."""
    if m < 0:
        raise ValueError("power must be nonnegative")
    p = as_parameter(p, sg.n)
    y = _check_point(sg, x, "point")
    for _ in range(m):
        y = np.asarray(sg.evaluator(p, y), dtype=float)
    if not sg.domain.contains(y, DOMAIN_TOL):
        raise OutOfDomain(f"{sg.name} left its domain under iteration")
    return y


# builtin instances


def make_translation_counterexample() -> SemigroupInstance:
    """``T(l1 e1 + l2 e2) x = x + l1 - l2`` on the real line."""

    def ev(p, x):
        return x + (p[0] - p[1])

    def oracle(p):
        return AffineSubspace.whole(1) if p[0] == p[1] else EMPTY

    return SemigroupInstance(
        "translation_counterexample", 2, WholeSpace(1), ev,
        claims_nonexpansive=True, exact_arithmetic_hint=True,
        fixed_set_oracle=oracle, common_fixed_set=EMPTY,
        params={"kind": "translation_counterexample"},
    )


def _rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def make_rotation(period: float = 1.0, domain: ConvexSet | None = None) -> SemigroupInstance:
    """Planar rotation by ``2*pi*t/period``; the origin is the only common fixed point."""
    if not period > 0:
        raise InvalidInstance(f"rotation period must be positive, got {period}")
    domain = domain if domain is not None else WholeSpace(2)
    if domain.dim != 2:
        raise InvalidInstance("rotation acts on the plane")
    if isinstance(domain, Ball) and np.any(domain.center != 0):
        raise InvalidInstance("rotation needs a ball centred at the origin")

    def ev(p, x):
        turns = p[0] / period
        # reduce before scaling so whole turns are exact
        return _rotation_matrix(2.0 * np.pi * (turns - np.floor(turns))) @ x

    def oracle(p):
        turns = p[0] / period
        return AffineSubspace.whole(2) if turns == np.floor(turns) else AffineSubspace.point([0.0, 0.0])

    return SemigroupInstance(
        "rotation", 1, domain, ev, claims_nonexpansive=True,
        fixed_set_oracle=oracle, common_fixed_set=AffineSubspace.point([0.0, 0.0]),
        params={"kind": "rotation", "period": float(period), "domain": domain.describe()},
    )


def make_matexp(n: int, mu, Q, b, domain: ConvexSet | None = None) -> SemigroupInstance:
    """Commuting contractions ``T(p)x = Q diag(exp(-p @ mu)) Q^T (x - b) + b``.

    ``mu`` has shape ``(n, d)`` with nonnegative rates; ``mu[j][i]`` is the
    decay rate of eigendirection ``i`` along parameter axis ``j``.
    """
    mu = np.asarray(mu, dtype=float)
    Q = np.asarray(Q, dtype=float)
    b = as_vector(b)
    d = b.size
    if mu.ndim == 1 and n == 1:
        mu = mu.reshape(1, -1)
    if mu.shape != (n, d):
        raise InvalidInstance(f"mu must have shape ({n}, {d}), got {mu.shape}")
    if Q.shape != (d, d):
        raise InvalidInstance(f"Q must have shape ({d}, {d}), got {Q.shape}")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise InvalidInstance("decay rates mu must be nonnegative")
    if not np.allclose(Q.T @ Q, np.eye(d), atol=1e-10, rtol=0):
        raise InvalidInstance("Q is not orthogonal")
    domain = domain if domain is not None else WholeSpace(d)
    if domain.dim != d:
        raise InvalidInstance("domain dimension does not match b")
    if domain.bounded and not domain.contains(b):
        raise InvalidInstance("bounded domain must contain the centre b")
    diagonal = np.allclose(Q, np.eye(d), atol=0, rtol=0)
    Qt = Q.T

    def ev(p, x):
        factors = np.exp(-(p @ mu))
        if diagonal:
            return factors * (x - b) + b
        return Q @ (factors * (Qt @ (x - b))) + b

    def oracle(p):
        idle = np.flatnonzero(p @ mu == 0.0)
        return AffineSubspace(b, Q[:, idle].T)

    idle_everywhere = np.flatnonzero(~np.any(mu > 0, axis=0))
    return SemigroupInstance(
        "matexp", n, domain, ev, claims_nonexpansive=True,
        fixed_set_oracle=oracle, common_fixed_set=AffineSubspace(b, Q[:, idle_everywhere].T),
        params={"kind": "matexp", "n": n, "mu": mu.tolist(), "Q": Q.tolist(),
                "b": b.tolist(), "domain": domain.describe()},
    )


def make_identity(n: int = 1, dim: int = 1, domain: ConvexSet | None = None) -> SemigroupInstance:
    sg = make_matexp(n, np.zeros((n, dim)), np.eye(dim), np.zeros(dim), domain)
    return SemigroupInstance(
        "identity", n, sg.domain, lambda p, x: x.copy(), True, True,
        sg.fixed_set_oracle, sg.common_fixed_set,
        params={"kind": "identity", "n": n, "dim": dim, "domain": sg.domain.describe()},
    )


def make_broken_family(n: int = 1, dim: int = 1) -> SemigroupInstance:
    """``T(p)x = x + p_1^2``: a test fixture that violates the semigroup law."""
    return SemigroupInstance(
        "broken", n, WholeSpace(dim), lambda p, x: x + p[0] ** 2,
        claims_nonexpansive=True, params={"kind": "broken", "n": n, "dim": dim},
    )


# checkers


@dataclass
class CheckReport:
    check: str
    instance: str
    samples: int
    tol: float
    max_violation: float
    worst: dict
    violations: int
    first_violation: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"{status} {self.check} on {self.instance}: max violation "
                f"{self.max_violation:.3e} (tol {self.tol:.1e}, {self.samples} samples, "
                f"{self.violations} violations)")
        if not self.passed:
            for label, sample in (("first violating sample", self.first_violation),
                                  ("worst sample", self.worst)):
                if sample:
                    line += f"; {label} " + ", ".join(f"{k}={v}" for k, v in sample.items())
        return line


def _sample_params(rng, count, n):
    # unit vectors first: cheapest place for a broken law to show
    units = list(np.eye(n))[:count]
    rest = rng.uniform(0.0, PARAM_BOX, size=(count - len(units), n))
    return np.vstack(units + [rest]) if len(rest) else np.array(units)


def check_semigroup_law(sg: SemigroupInstance, sample_count: int = 1000, tol: float = 1e-9,
                        seed: int = DEFAULT_SEED) -> CheckReport:
    """Max of ``||T(p+q)x - T(p)T(q)x||`` over sampled ``(p, q, x)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    ps = _sample_params(rng, sample_count, sg.n)
    qs = _sample_params(rng, sample_count, sg.n)
    xs = sg.domain.sample(rng, sample_count)
    worst, worst_v, count, first = {}, 0.0, 0, None
    for p, q, x in zip(ps, qs, xs):
        lhs = sg.evaluator(p + q, x)
        rhs = sg.evaluator(p, sg.evaluator(q, x))
        v = norm(lhs - rhs, sg.norm)
        if not sg.domain.contains(lhs, DOMAIN_TOL):
            v = max(v, norm(lhs - sg.domain.project(lhs), sg.norm))
        sample = {"p": p.tolist(), "q": q.tolist(), "x": x.tolist(), "violation": float(v)}
        if v > tol:
            count += 1
            first = first or sample
        if v > worst_v or not worst:
            worst_v = max(v, worst_v)
            worst = sample
    return CheckReport("semigroup_law", sg.name, sample_count, tol, worst_v, worst, count, first)


def check_nonexpansive(sg: SemigroupInstance, sample_count: int = 1000, tol: float = 1e-9,
                       norm_kind: NormKind | None = None, seed: int = DEFAULT_SEED) -> CheckReport:
    """Max of ``||T(p)x - T(p)y|| - ||x - y||`` (clipped at 0) over sampled ``(p, x, y)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    kind = norm_kind or sg.norm
    rng = np.random.default_rng(seed)
    ps = _sample_params(rng, sample_count, sg.n)
    xs = sg.domain.sample(rng, sample_count)
    ys = sg.domain.sample(rng, sample_count)
    worst, worst_v, count, first = {}, 0.0, 0, None
    for p, x, y in zip(ps, xs, ys):
        v = max(0.0, norm(sg.evaluator(p, x) - sg.evaluator(p, y), kind) - norm(x - y, kind))
        sample = {"p": p.tolist(), "x": x.tolist(), "y": y.tolist(), "violation": float(v)}
        if v > tol:
            count += 1
            first = first or sample
        if v > worst_v or not worst:
            worst_v = max(v, worst_v)
            worst = sample
    return CheckReport(f"nonexpansive[{kind}]", sg.name, sample_count, tol, worst_v, worst, count, first)


def continuity_modulus(sg: SemigroupInstance, x, h: float = 1e-6, grid: int = 5,
                       box: float = PARAM_BOX) -> float:
    """Largest difference quotient ``||T(p + h e_j)x - T(p)x|| / h`` over a parameter grid.

    A diagnostic for translating parameter error into value error; it does
    not certify continuity.
    """
    x = _check_point(sg, x, "point")
    axes = [np.linspace(0.0, box, grid)] * sg.n
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, sg.n)
    worst = 0.0
    for p in mesh:
        base = sg.evaluator(p, x)
        for j in range(sg.n):
            step = p.copy()
            step[j] += h
            worst = max(worst, norm(sg.evaluator(step, x) - base, sg.norm) / h)
    return worst
