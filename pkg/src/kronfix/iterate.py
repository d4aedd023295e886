"""Iteration schemes converging to a common fixed point.

All drivers are deterministic and return a :class:`ConvergenceTrace`.
Schemes working with a single averaged map ``S`` (Cesaro mean, the
half-averaged Krasnoselskii-Mann step, Browder's implicit anchor and
Halpern's explicit anchor) take a :class:`~kronfix.fixedsets.Mapping`;
Rode's multi-index mean and Ishikawa's nested product work with the
semigroup and a parameter basis directly.

Product convention for nested compositions: ``prod_{i=1}^m A_i`` means
``A_1 o A_2 o ... o A_m``, so ``A_m`` is applied first.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BadSchedule,
    BudgetExceeded,
    DomainNotCompact,
    NoConvergence,
    OutOfDomain,
    SNotInUnitInterval,
    WordBudgetExceeded,
)
from .fixedsets import Mapping, ParameterBasis
from .geometry import as_vector, norm
from .semigroup import DOMAIN_TOL, EMPTY, SemigroupInstance, as_parameter

__all__ = [
    "ConvergenceTrace",
    "Schedule",
    "run_cesaro",
    "run_km",
    "solve_browder",
    "run_browder",
    "run_halpern",
    "run_rode",
    "rode_trace",
    "ishikawa_word",
    "ishikawa_word_length",
    "run_ishikawa",
]

FULL_HISTORY = 1000
RODE_CAP = 10**7
WORD_CAP = 10**7
ISHIKAWA_APPLICATIONS = 10**6


@dataclass
class ConvergenceTrace:
    scheme: str
    ks: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    oracle_dist: Optional[list] = None
    budget: dict = field(default_factory=dict)
    map_applications: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def to_csv(self) -> str:
        d = len(self.iterates[0]) if self.iterates else 0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "residual", "oracle_dist"] + [f"x_{i}" for i in range(d)])
        for idx, (k, x, r) in enumerate(zip(self.ks, self.iterates, self.residuals)):
            od = "" if self.oracle_dist is None else repr(float(self.oracle_dist[idx]))
            w.writerow([k, repr(float(r)), od] + [repr(float(v)) for v in x])
        return buf.getvalue()


class _Recorder:
    """Stores every iterate up to FULL_HISTORY, then a stride; first and last always kept."""

    def __init__(self, scheme, K, residual_fn, target, budget):
        self.trace = ConvergenceTrace(scheme, oracle_dist=None if target is None else [],
                                      budget=budget)
        self.K = K
        self.stride = 1 if K <= FULL_HISTORY else math.ceil(K / FULL_HISTORY)
        self.residual_fn = residual_fn
        self.target = target

    def wants(self, k: int) -> bool:
        return (k - 1) % self.stride == 0 or k == self.K

    def record(self, k: int, x: np.ndarray):
        t = self.trace
        t.ks.append(k)
        t.iterates.append(np.array(x, dtype=float))
        t.residuals.append(float(self.residual_fn(x)))
        if self.target is not None:
            t.oracle_dist.append(float(np.linalg.norm(x - self.target)))


def _oracle_target(mapping_or_set, anchor) -> Optional[np.ndarray]:
    """Projection of ``anchor`` onto the known fixed set, or None when unknown or empty."""
    fs = mapping_or_set
    if fs is None or fs is EMPTY:
        return None
    return fs.project(anchor)


def _start(m: Mapping, x) -> np.ndarray:
    x = as_vector(x, m.domain.dim)
    if not m.domain.contains(x, DOMAIN_TOL):
        raise OutOfDomain(f"start point {x.tolist()} lies outside the domain of {m.label}")
    return x


def _target(m: Mapping, anchor, oracle) -> Optional[np.ndarray]:
    if oracle is not None:
        return as_vector(oracle)
    return _oracle_target(m.fixed_set, anchor)


def run_cesaro(S: Mapping, x, K: int, oracle=None) -> ConvergenceTrace:
    """Running means ``x_k = (S x + S^2 x + ... + S^k x) / k`` for ``k = 1..K``.

    ``oracle`` overrides the limit point used for ``oracle_dist``; by default
    it is the projection of ``x`` onto ``S.fixed_set``, which is the limit
    for the linear normal maps built from the builtin instances.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    x = _start(S, x)
    rec = _Recorder("cesaro", K, lambda v: norm(S(v) - v, S.norm), _target(S, x, oracle),
                    {"max_iter": K, "max_map_applications": K})
    power = x
    mean = np.zeros_like(x)
    for k in range(1, K + 1):
        power = S(power)
        mean = mean + (power - mean) / k
        if rec.wants(k):
            rec.record(k, mean)
    rec.trace.map_applications = K
    return rec.trace


def run_km(S: Mapping, y1, K: int, oracle=None) -> ConvergenceTrace:
    """``y_{k+1} = (S y_k + y_k) / 2`` starting from ``y_1``; records ``y_1..y_K``."""
    if K < 1:
        raise ValueError("K must be at least 1")
    y = _start(S, y1)
    rec = _Recorder("km", K, lambda v: norm(S(v) - v, S.norm), _target(S, y, oracle),
                    {"max_iter": K, "max_map_applications": K - 1})
    for k in range(1, K + 1):
        if rec.wants(k):
            rec.record(k, y)
        if k < K:
            y = 0.5 * S(y) + 0.5 * y
    rec.trace.map_applications = K - 1
    return rec.trace


def solve_browder(S: Mapping, u, s: float, tol: float = 1e-13, max_iter: int = 10**6,
                  start=None) -> np.ndarray:
    """Solve ``x = (1 - s) S x + s u`` by iterating the contraction from ``u`` (or ``start``).

    The returned point satisfies ``||x - ((1-s) S x + s u)|| <= tol`` when
    ``S`` is nonexpansive.
    """
    if not 0 < s < 1:
        raise SNotInUnitInterval(f"anchor weight s = {s} must lie in (0, 1)")
    u = _start(S, u)
    z = u if start is None else _start(S, start)
    for _ in range(max_iter):
        nxt = (1 - s) * S(z) + s * u
        if norm(nxt - z, S.norm) <= tol:
            return nxt
        z = nxt
    raise NoConvergence(f"no fixed point of the anchored map within {max_iter} steps; is S nonexpansive?")


def run_browder(S: Mapping, u, schedule: "Schedule", K: int, tol: float = 1e-13,
                max_iter: int = 10**6, oracle=None) -> ConvergenceTrace:
    """Solutions ``x(s_k)`` along a vanishing schedule, each warm-started from the last."""
    u = _start(S, u)
    s_values = schedule.values(K)
    rec = _Recorder("browder", K, lambda v: norm(S(v) - v, S.norm), _target(S, u, oracle),
                    {"max_iter": K, "max_map_applications": K * max_iter})
    calls = 0

    def counted(v):
        nonlocal calls
        calls += 1
        return S.apply(v)

    S_counted = Mapping(counted, S.domain, S.label, S.norm, S.fixed_set)
    x = None
    for k, s in enumerate(s_values, start=1):
        x = solve_browder(S_counted, u, float(s), tol, max_iter, start=x)
        if rec.wants(k):
            rec.record(k, x)
    rec.trace.map_applications = calls
    return rec.trace


@dataclass(frozen=True)
class Schedule:
    """Step sizes ``t_k`` in (0, 1), indexed from ``k = 1``.

    ``kind`` is ``"reciprocal"`` (``1/(k+1)``), ``"powerlaw"``
    (``(k+1)^-gamma`` with gamma in (0, 1]) or ``"custom"``.
    """

    kind: str = "reciprocal"
    gamma: float = 1.0
    custom: tuple = ()

    def __post_init__(self):
        if self.kind not in ("reciprocal", "powerlaw", "custom"):
            raise BadSchedule(f"unknown schedule kind {self.kind!r}")
        if self.kind == "powerlaw" and not 0 < self.gamma <= 1:
            raise BadSchedule(f"power-law exponent {self.gamma} must lie in (0, 1]")
        if self.kind == "custom":
            object.__setattr__(self, "custom", tuple(float(v) for v in self.custom))

    def values(self, K: int) -> np.ndarray:
        k = np.arange(1, K + 1, dtype=float)
        if self.kind == "reciprocal":
            t = 1.0 / (k + 1)
        elif self.kind == "powerlaw":
            t = (k + 1) ** -self.gamma
        else:
            if len(self.custom) < K:
                raise BadSchedule(f"custom schedule has {len(self.custom)} values, need {K}")
            t = np.array(self.custom[:K])
        if np.any(t <= 0) or np.any(t >= 1):
            raise BadSchedule("schedule values must lie in (0, 1)")
        return t

    def total_variation(self, K: int) -> float:
        t = self.values(K + 1)
        return float(np.sum(np.abs(np.diff(t))))

    def check_halpern(self, K: int, sum_threshold: float = 1.0, variation_bound: float = 1.0):
        """Finite-horizon stand-ins for ``t_k -> 0``, divergent sum and bounded variation."""
        t = self.values(K)
        if K >= 10 and t.sum() < sum_threshold:
            raise BadSchedule(f"partial sum {t.sum():.3g} of t_k stays below {sum_threshold}")
        if K > 1 and self.total_variation(K - 1) > variation_bound:
            raise BadSchedule("partial sums of |t_(k+1) - t_k| exceed the bound")
        if K >= 10 and t[-1] >= t[0]:
            raise BadSchedule("t_k does not decrease toward 0")
        return t


def run_halpern(S: Mapping, u, y1, schedule: Schedule, K: int, oracle=None) -> ConvergenceTrace:
    """``y_{k+1} = (1 - t_k) S y_k + t_k u``; the limit is the projection of ``u`` onto F(S)."""
    u = _start(S, u)
    y = _start(S, y1)
    t = schedule.check_halpern(K)
    rec = _Recorder("halpern", K, lambda v: norm(S(v) - v, S.norm), _target(S, u, oracle),
                    {"max_iter": K, "max_map_applications": K - 1})
    for k in range(1, K + 1):
        if rec.wants(k):
            rec.record(k, y)
        if k < K:
            y = (1 - t[k - 1]) * S(y) + t[k - 1] * u
    rec.trace.map_applications = K - 1
    return rec.trace


# multi-parameter schemes


def _basis_params(sg: SemigroupInstance, basis: ParameterBasis) -> list[np.ndarray]:
    if sg.n != basis.n:
        raise ValueError(f"instance has {sg.n} parameters, basis has {basis.n}")
    return [as_parameter(p, sg.n) for p in basis.parameters]


def _sg_start(sg: SemigroupInstance, x) -> np.ndarray:
    x = as_vector(x, sg.dim)
    if not sg.domain.contains(x, DOMAIN_TOL):
        raise OutOfDomain(f"start point {x.tolist()} lies outside the domain")
    return x


def run_rode(sg: SemigroupInstance, basis: ParameterBasis, x, k: int,
             cap: int = RODE_CAP) -> np.ndarray:
    """Average of ``T(sum_j nu_j p_j) x`` over ``nu in {1..k}^(n+1)``.

    Uses ``T(sum nu_j p_j) = T(p_0)^nu_0 o ... o T(p_n)^nu_n`` and walks the
    index grid as a prefix tree (``nu_n`` slowest), so each node costs one
    map application.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    params = _basis_params(sg, basis)
    x = _sg_start(sg, x)
    depth = len(params)
    if k ** depth > cap:
        raise BudgetExceeded(f"k^(n+1) = {k ** depth} grid points exceed the cap {cap}")
    ev = sg.evaluator
    total = np.zeros_like(x)

    def descend(level: int, v: np.ndarray):
        nonlocal total
        p = params[level]
        for _ in range(k):
            v = ev(p, v)
            if level == 0:
                total = total + v
            else:
                descend(level - 1, v)

    descend(depth - 1, x)
    return total / k ** depth


def rode_trace(sg: SemigroupInstance, basis: ParameterBasis, x, K: int,
               cap: int = RODE_CAP) -> ConvergenceTrace:
    """``run_rode`` for ``k = 1..K``; residual is ``max_j ||T(p_j)x_k - x_k||``."""
    params = _basis_params(sg, basis)
    x = _sg_start(sg, x)

    def resid(v):
        return max(norm(sg.evaluator(p, v) - v, sg.norm) for p in params)

    target = _oracle_target(sg.common_fixed_set, x)
    rec = _Recorder("rode", K, resid, target, {"max_iter": K, "max_map_applications": cap})
    depth = len(params)
    for k in range(1, K + 1):
        rec.record(k, run_rode(sg, basis, x, k, cap))
        rec.trace.map_applications += sum(k ** (d + 1) for d in range(depth))
    return rec.trace


def ishikawa_word_length(n: int, k: int) -> int:
    # L_0(m) = m, L_j(m) = sum_{i<=m} (1 + L_{j-1}(i))
    lengths = list(range(k + 1))
    for _ in range(n):
        acc, nxt = 0, [0]
        for m in range(1, k + 1):
            acc += 1 + lengths[m]
            nxt.append(acc)
        lengths = nxt
    return lengths[k]


def ishikawa_word(n: int, k: int, cap: int = WORD_CAP) -> list[int]:
    """Indices of the nested product ``W_n(k)``, outermost first (apply right to left).

    ``W_0(m) = [0] * m`` and ``W_j(m)`` concatenates ``[j] + W_{j-1}(i)`` for
    ``i = 1..m``.
    """
    if n < 0 or k < 1:
        raise ValueError("need n >= 0 and k >= 1")
    length = ishikawa_word_length(n, k)
    if length > cap:
        raise WordBudgetExceeded(f"word W_{n}({k}) has {length} symbols, cap is {cap}")
    prev = {m: [0] * m for m in range(1, k + 1)}
    for j in range(1, n + 1):
        cur, acc = {}, []
        for m in range(1, k + 1):
            acc = acc + [j] + prev[m]
            cur[m] = acc
        prev = cur
    return list(prev[k])


def run_ishikawa(sg: SemigroupInstance, basis: ParameterBasis, x1, K: int,
                 max_map_applications: int = ISHIKAWA_APPLICATIONS) -> ConvergenceTrace:
    """``x_{k+1} = W_n(k) x_1`` with ``S_j = (T(p_j) + I) / 2``; records ``x_1..x_{K+1}``."""
    if not sg.domain.bounded:
        raise DomainNotCompact("the nested product scheme needs a compact domain")
    params = _basis_params(sg, basis)
    x1 = _sg_start(sg, x1)
    n = basis.n
    needed = sum(ishikawa_word_length(n, k) for k in range(1, K + 1))
    if needed > max_map_applications:
        raise WordBudgetExceeded(
            f"{K} steps need {needed} map applications, budget is {max_map_applications}")
    ev = sg.evaluator
    halves = [lambda v, p=p: 0.5 * ev(p, v) + 0.5 * v for p in params]

    def resid(v):
        return max(norm(S(v) - v, sg.norm) for S in halves)

    target = _oracle_target(sg.common_fixed_set, x1)
    rec = _Recorder("ishikawa", K + 1, resid, target,
                    {"max_iter": K, "max_map_applications": max_map_applications})
    rec.record(1, x1)
    for k in range(1, K + 1):
        v = x1
        for idx in reversed(ishikawa_word(n, k)):
            v = halves[idx](v)
        if rec.wants(k + 1):
            rec.record(k + 1, v)
    rec.trace.map_applications = needed
    return rec.trace
