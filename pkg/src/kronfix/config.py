"""TOML experiment configs: schema validation, object construction, round-trip."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, KronfixError
from .exactreal import ExactReal
from .fixedsets import ParameterBasis, make_basis
from .geometry import Ball, Box, NormKind, WholeSpace, as_vector
from .semigroup import (
    DEFAULT_SEED,
    SemigroupInstance,
    make_broken_family,
    make_identity,
    make_matexp,
    make_rotation,
    make_translation_counterexample,
)

INSTANCE_KINDS = ("translation_counterexample", "rotation", "matexp", "identity", "broken")

_INSTANCE_KEYS = {"kind", "n", "dim", "period", "mu", "Q", "b", "domain", "norm"}
_DOMAIN_KEYS = {"kind", "center", "radius", "lo", "hi"}
_BASIS_KEYS = {"ps", "alphas"}
_SCHEME_KEYS = {
    "name", "K", "weights", "schedule", "gamma", "u", "x1", "s", "eps", "k_max", "z",
    "samples", "tol", "target", "count", "cone", "alphas", "grid", "dispersion_K",
    "probes", "params", "witness", "norm", "period", "max_applications",
}
_OUTPUT_KEYS = {"csv_path", "report_path", "stride"}
_TOP_KEYS = {"seed", "instance", "basis", "scheme", "output"}


@dataclass
class ExperimentConfig:
    seed: int = DEFAULT_SEED
    instance: dict = field(default_factory=dict)
    basis: dict = field(default_factory=dict)
    scheme: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"seed": self.seed}
        for name in ("instance", "basis", "scheme", "output"):
            section = getattr(self, name)
            if section:
                out[name] = section
        return out

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _reject_unknown(section: dict, allowed: set, where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def parse_config(data: dict) -> ExperimentConfig:
    """Validate the whole structure; any problem raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a table")
    _reject_unknown(data, _TOP_KEYS, "top level")
    sections = {}
    for name, allowed in (("instance", _INSTANCE_KEYS), ("basis", _BASIS_KEYS),
                          ("scheme", _SCHEME_KEYS), ("output", _OUTPUT_KEYS)):
        sec = data.get(name, {})
        if not isinstance(sec, dict):
            raise ConfigError(f"[{name}] must be a table")
        _reject_unknown(sec, allowed, name)
        sections[name] = dict(sec)
    dom = sections["instance"].get("domain")
    if dom is not None:
        if not isinstance(dom, dict):
            raise ConfigError("instance.domain must be a table")
        _reject_unknown(dom, _DOMAIN_KEYS, "instance.domain")
    seed = data.get("seed", DEFAULT_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    cfg = ExperimentConfig(seed, **sections)
    # build everything once so errors surface before any computation
    if cfg.instance:
        build_instance(cfg)
    if cfg.basis:
        build_basis(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


def loads_config(text: str) -> ExperimentConfig:
    try:
        return parse_config(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from exc


def vector_value(value, what: str) -> np.ndarray:
    """Vectors may be given as arrays or comma-separated strings."""
    try:
        if isinstance(value, str):
            value = [float(tok) for tok in value.split(",") if tok.strip()]
        return as_vector(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def exact_value(value, what: str) -> ExactReal:
    try:
        if isinstance(value, float):
            return ExactReal(Fraction(value))
        return ExactReal.coerce(value)
    except (KronfixError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def _domain(spec, dim: int):
    if spec is None:
        return None
    kind = spec.get("kind", "whole")
    if kind == "whole":
        return WholeSpace(dim)
    if kind == "ball":
        center = vector_value(spec.get("center", [0.0] * dim), "domain.center")
        return Ball(center, float(spec.get("radius", 1.0)))
    if kind == "box":
        return Box(vector_value(spec["lo"], "domain.lo"), vector_value(spec["hi"], "domain.hi"))
    raise ConfigError(f"unknown domain kind {kind!r}")


def build_instance(cfg: ExperimentConfig) -> SemigroupInstance:
    spec = cfg.instance
    kind = spec.get("kind")
    if kind not in INSTANCE_KINDS:
        raise ConfigError(f"instance.kind must be one of {', '.join(INSTANCE_KINDS)}; got {kind!r}")
    try:
        if kind == "translation_counterexample":
            sg = make_translation_counterexample()
        elif kind == "rotation":
            sg = make_rotation(float(spec.get("period", 1.0)), _domain(spec.get("domain"), 2))
        elif kind == "matexp":
            b = vector_value(spec["b"], "instance.b")
            mu = np.array(spec["mu"], dtype=float)
            n = int(spec.get("n", mu.shape[0] if mu.ndim == 2 else 1))
            Q = np.array(spec.get("Q", np.eye(b.size).tolist()), dtype=float)
            sg = make_matexp(n, mu, Q, b, _domain(spec.get("domain"), b.size))
        elif kind == "identity":
            dim = int(spec.get("dim", 1))
            sg = make_identity(int(spec.get("n", 1)), dim, _domain(spec.get("domain"), dim))
        else:
            sg = make_broken_family(int(spec.get("n", 1)), int(spec.get("dim", 1)))
        if "norm" in spec:
            sg = _with_norm(sg, NormKind.parse(spec["norm"]))
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError(f"instance of kind {kind} needs key {exc}") from exc
    except (KronfixError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from exc
    return sg


def _with_norm(sg: SemigroupInstance, kind: NormKind) -> SemigroupInstance:
    return SemigroupInstance(sg.name, sg.n, sg.domain, sg.evaluator, sg.claims_nonexpansive,
                             sg.exact_arithmetic_hint, sg.fixed_set_oracle, sg.common_fixed_set,
                             kind, sg.params)


def _coord(v):
    if isinstance(v, bool):
        raise ConfigError("boolean basis coordinate")
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError as exc:
            raise ConfigError(f"basis coordinate {v!r} is not rational") from exc
    return v


def build_basis(cfg: ExperimentConfig) -> ParameterBasis:
    spec = cfg.basis
    if "ps" not in spec or "alphas" not in spec:
        raise ConfigError("[basis] needs both ps and alphas")
    alphas = [exact_value(a, "basis.alphas") for a in spec["alphas"]]
    try:
        ps = [[_coord(v) for v in row] for row in spec["ps"]]
        return make_basis(ps, alphas)
    except ConfigError:
        raise
    except (KronfixError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid basis: {exc}") from exc


def resolve_output(cfg: ExperimentConfig, key: str, override) -> Path | None:
    path = override if override is not None else cfg.output.get(key)
    return None if path is None else Path(path)
