"""Constructive Kronecker approximation on the unit cube.

For ``{1, a_1, ..., a_n}`` independent over the rationals the fractional
parts of ``(k a_1, ..., k a_n)`` are dense in ``[0, 1]^n``.  This module
finds concrete indices ``k`` landing in an ``eps``-box around a target,
with every reported hit certified against exact fractional parts.

The orbit is generated in blocks: each block starts from an exact
fractional part and advances by adding ``frac(a_j)``, so float drift is
bounded by the block length times one ulp.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import IndependenceViolated, SearchBudgetExceeded
from .exactreal import ExactReal, is_independent_over_q

__all__ = [
    "RESYNC_INTERVAL",
    "DEFAULT_CAP",
    "KroneckerProblem",
    "BetaShift",
    "beta_shift",
    "orbit_fractions",
    "certify_index",
    "find_index",
    "approx_sequence",
    "orbit_dispersion",
]

log = logging.getLogger(__name__)

RESYNC_INTERVAL = 10_000
DEFAULT_CAP = 10**8
# drift after RESYNC_INTERVAL float additions stays near 1e-12; anything closer
# to the eps boundary than this margin is decided exactly
_MARGIN = 1e-10
_PROGRESS_EVERY = 10**7


def _coerce_alphas(alphas) -> tuple[ExactReal, ...]:
    return tuple(ExactReal.coerce(a) for a in alphas)


@dataclass(frozen=True)
class KroneckerProblem:
    alphas: tuple
    target: tuple
    eps: float

    def __post_init__(self):
        alphas = _coerce_alphas(self.alphas)
        target = tuple(float(t) for t in self.target)
        if not alphas:
            raise ValueError("need at least one alpha")
        if len(target) != len(alphas):
            raise ValueError(f"target has {len(target)} coordinates for {len(alphas)} alphas")
        if not all(0.0 <= t < 1.0 for t in target):
            raise ValueError(f"target {target} must lie in [0, 1)^n")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not is_independent_over_q(alphas, include_one=True):
            raise IndependenceViolated(
                f"{{1, {', '.join(map(str, alphas))}}} is linearly dependent over Q")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "eps", float(self.eps))

    @property
    def n(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class BetaShift:
    ell: int
    betas: tuple


def beta_shift(alphas: Sequence) -> BetaShift:
    """Shift every alpha by ``ell = max_j([|alpha_j|] + 1)`` so all become positive.

    The shift is by an integer, so independence of ``{1} U betas`` follows
    from that of ``{1} U alphas``; both are checked exactly anyway.
    """
    alphas = _coerce_alphas(alphas)
    if not alphas:
        raise ValueError("alphas must be nonempty")
    if not is_independent_over_q(alphas, include_one=True):
        raise IndependenceViolated(
            f"{{1, {', '.join(map(str, alphas))}}} is linearly dependent over Q")
    ell = max(a.floor_abs() + 1 for a in alphas)
    betas = tuple(a + ell for a in alphas)
    if any(b.sign() <= 0 for b in betas):
        raise ArithmeticError("beta shift produced a nonpositive value")
    if not is_independent_over_q(betas, include_one=True):
        raise IndependenceViolated("shifted betas lost independence over Q")
    return BetaShift(ell, betas)


def orbit_fractions(alphas: Sequence, start: int, stop: int,
                    block: int = RESYNC_INTERVAL) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(k0, F)`` where ``F[i, j]`` approximates ``frac((k0 + i) * alphas[j])``.

    Covers ``start <= k <= stop``.  Each block is re-anchored at an exact
    fractional part.
    """
    alphas = _coerce_alphas(alphas)
    steps = np.array([a.fractional_part().to_float(1e-17) for a in alphas])
    k = start
    while k <= stop:
        m = min(block, stop - k + 1)
        f0 = np.array([a.scale(k).fractional_part().to_float(1e-17) for a in alphas])
        offsets = np.arange(m, dtype=float)[:, None]
        yield k, np.mod(f0 + offsets * steps, 1.0)
        k += m


def _exact_deviations(alphas, k: int, target) -> list[ExactReal]:
    return [abs(a.scale(k).fractional_part() - Fraction(t)) for a, t in zip(alphas, target)]


def certify_index(problem: KroneckerProblem, k: int) -> bool:
    """Exact check of ``|frac(k a_j) - target_j| < eps`` for every ``j``."""
    eps = Fraction(problem.eps)
    return all(d < eps for d in _exact_deviations(problem.alphas, k, problem.target))


def _hits(problem: KroneckerProblem, k_stop: int) -> Iterator[int]:
    target = np.array(problem.target)
    eps = problem.eps
    seen = 0
    for k0, fr in orbit_fractions(problem.alphas, 1, k_stop):
        dev = np.max(np.abs(fr - target), axis=1)
        near = np.flatnonzero(dev < eps + _MARGIN)
        for i in near:
            k = k0 + int(i)
            if dev[i] < eps - _MARGIN or certify_index(problem, k):
                yield k
        seen += fr.shape[0]
        if seen // _PROGRESS_EVERY != (seen - fr.shape[0]) // _PROGRESS_EVERY:
            log.info("kronecker search: %d candidates scanned", seen)


def find_index(problem: KroneckerProblem, k_max: int) -> Optional[int]:
    """Smallest ``k <= k_max`` whose orbit point is within ``eps`` of the target.

    Returns ``None`` when no such index exists.
    """
    return next(_hits(problem, k_max), None)


def find_indices(alphas: Sequence, targets, eps: float, k_max: int) -> list[Optional[int]]:
    """``find_index`` for many targets sharing one orbit, scanned once.

    Entry ``i`` is the smallest certified ``k <= k_max`` for ``targets[i]``,
    or None.
    """
    problems = [KroneckerProblem(tuple(alphas), tuple(t), eps) for t in targets]
    if not problems:
        return []
    tgt = np.array([p.target for p in problems])
    result: list[Optional[int]] = [None] * len(problems)
    open_ = np.arange(len(problems))
    for k0, fr in orbit_fractions(problems[0].alphas, 1, k_max):
        dev = np.max(np.abs(fr[:, None, :] - tgt[None, open_, :]), axis=2)
        done = []
        for col, i in enumerate(open_):
            for r in np.flatnonzero(dev[:, col] < eps + _MARGIN):
                k = k0 + int(r)
                if dev[r, col] < eps - _MARGIN or certify_index(problems[i], k):
                    result[i] = k
                    done.append(col)
                    break
        if done:
            open_ = np.delete(open_, done)
        if open_.size == 0:
            break
    return result


def approx_sequence(problem: KroneckerProblem, count: int, cap: int = DEFAULT_CAP) -> list[int]:
    """The first ``count`` hitting indices, increasing.

    Raises :class:`SearchBudgetExceeded` carrying the partial list when
    ``cap`` candidates are exhausted first.
    """
    if count < 1:
        raise ValueError("count must be positive")
    found = []
    for k in _hits(problem, cap):
        found.append(k)
        if len(found) == count:
            return found
    raise SearchBudgetExceeded(
        f"found {len(found)} of {count} indices within {cap} candidates", found)


def orbit_dispersion(alphas: Sequence, K: int, grid: int) -> float:
    """Max over grid cell centres ``c`` of ``min_{k<=K} max_j |frac(k a_j) - c_j|``."""
    if K < 1 or grid < 2:
        raise ValueError("need K >= 1 and grid >= 2")
    alphas = _coerce_alphas(alphas)
    n = len(alphas)
    axis = (np.arange(grid) + 0.5) / grid
    centres = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    best = np.full(len(centres), np.inf)
    block = max(1, min(RESYNC_INTERVAL, 4_000_000 // len(centres)))
    for _, fr in orbit_fractions(alphas, 1, K, block=block):
        dev = np.max(np.abs(fr[:, None, :] - centres[None, :, :]), axis=2)
        np.minimum(best, dev.min(axis=0), out=best)
    return float(best.max())
