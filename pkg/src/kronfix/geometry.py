"""Finite-dimensional normed spaces and convex domains.

Vectors are plain 1-d float64 numpy arrays; :func:`as_vector` validates
them.  A :class:`NormKind` carries the convexity metadata that decides
which fixed-point results are applicable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "as_vector",
    "NormKind",
    "EUCLIDEAN",
    "L1",
    "LINF",
    "lp",
    "norm",
    "WholeSpace",
    "Ball",
    "Box",
    "ConvexSet",
    "contains",
    "project",
    "format_vector",
    "parse_vector",
]


def as_vector(v, dim: int | None = None) -> np.ndarray:
    """Validate and copy ``v`` into a finite float64 vector."""
    arr = np.array(v, dtype=float).reshape(-1) if np.ndim(v) else np.array([v], dtype=float)
    if arr.size == 0:
        raise ValueError("vectors must have at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinate in {arr!r}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class NormKind:
    """Which p-norm the ambient space carries.

    ``tag`` is one of ``"euclidean"``, ``"lp"``, ``"l1"``, ``"linf"``; ``p``
    is only meaningful for ``"lp"`` and must lie strictly between 1 and
    infinity.
    """

    tag: str = "euclidean"
    p: float | None = None

    def __post_init__(self):
        if self.tag not in ("euclidean", "lp", "l1", "linf"):
            raise ValueError(f"unknown norm tag {self.tag!r}")
        if self.tag == "lp":
            if self.p is None or not (1 < self.p < np.inf):
                raise ValueError(f"Lp norm needs 1 < p < inf, got {self.p}")
        elif self.p is not None:
            raise ValueError(f"{self.tag} norm takes no exponent")

    @property
    def strictly_convex(self) -> bool:
        return self.tag in ("euclidean", "lp")

    @property
    def uniformly_convex(self) -> bool:
        return self.tag in ("euclidean", "lp")

    @property
    def frechet_differentiable(self) -> bool:
        return self.tag in ("euclidean", "lp")

    @property
    def order(self) -> float:
        return {"euclidean": 2.0, "l1": 1.0, "linf": np.inf}.get(self.tag, self.p)

    def __call__(self, v) -> float:
        return norm(v, self)

    def __str__(self):
        return f"lp({self.p:g})" if self.tag == "lp" else self.tag

    @classmethod
    def parse(cls, text: str) -> "NormKind":
        t = text.strip().lower()
        if t.startswith("lp(") and t.endswith(")"):
            return cls("lp", float(t[3:-1]))
        if t in ("euclidean", "l2"):
            return cls("euclidean")
        return cls(t)


EUCLIDEAN = NormKind("euclidean")
L1 = NormKind("l1")
LINF = NormKind("linf")


def lp(p: float) -> NormKind:
    return NormKind("lp", float(p))


def norm(v, kind: NormKind = EUCLIDEAN) -> float:
    a = np.abs(np.asarray(v, dtype=float))
    m = a.max(initial=0.0)
    if m == 0.0 or kind.tag == "linf":
        return float(m)
    # rescale by the largest entry so powers neither overflow nor underflow
    a = a / m
    if kind.tag == "lp":
        return float(m * np.sum(a ** kind.p) ** (1.0 / kind.p))
    return float(m * np.linalg.norm(a, ord=kind.order))


@dataclass(frozen=True)
class WholeSpace:
    dim: int

    bounded = False

    def contains(self, v, tol: float = 0.0) -> bool:
        return np.size(v) == self.dim

    def project(self, v) -> np.ndarray:
        return as_vector(v, self.dim)

    def sample(self, rng: np.random.Generator, count: int, scale: float = 10.0) -> np.ndarray:
        """Uniform samples from the cube [-scale, scale]^dim."""
        return rng.uniform(-scale, scale, size=(count, self.dim))

    def describe(self) -> dict:
        return {"kind": "whole"}


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    bounded = True

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.size

    def contains(self, v, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(v, float) - self.center) <= self.radius + tol)

    def project(self, v) -> np.ndarray:
        v = as_vector(v, self.dim)
        d = v - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return v
        return self.center + d * (self.radius / r)

    def sample(self, rng: np.random.Generator, count: int, scale: float | None = None) -> np.ndarray:
        g = rng.standard_normal((count, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / self.dim)
        return self.center + g * r

    def describe(self) -> dict:
        return {"kind": "ball", "center": self.center.tolist(), "radius": float(self.radius)}


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    bounded = True

    def __post_init__(self):
        lo, hi = as_vector(self.lo), as_vector(self.hi)
        if lo.size != hi.size:
            raise ValueError("box corners differ in dimension")
        if np.any(lo > hi):
            raise ValueError("box needs lo <= hi coordinatewise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, v, tol: float = 0.0) -> bool:
        v = np.asarray(v, float)
        return bool(np.all(v >= self.lo - tol) and np.all(v <= self.hi + tol))

    def project(self, v) -> np.ndarray:
        return np.clip(as_vector(v, self.dim), self.lo, self.hi)

    def sample(self, rng: np.random.Generator, count: int, scale: float | None = None) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, self.dim))

    def describe(self) -> dict:
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


ConvexSet = Union[WholeSpace, Ball, Box]


def contains(c: ConvexSet, v, tol: float = 0.0) -> bool:
    return c.contains(v, tol)


def project(c: ConvexSet, v) -> np.ndarray:
    """Nearest point of ``c`` in the Euclidean norm (identity on the whole space)."""
    return c.project(v)


def format_vector(v: Sequence[float]) -> str:
    return ",".join(repr(float(x)) for x in v)


def parse_vector(text: str) -> np.ndarray:
    return as_vector([float(tok) for tok in text.split(",") if tok.strip()])
