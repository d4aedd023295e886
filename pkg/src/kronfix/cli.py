"""Command-line experiment runner.

Every subcommand reads an optional TOML config, writes a human report
(stdout unless a report path is given) and a deterministic CSV, and exits
with 0 (pass), 1 (a mathematical check failed), 2 (config error) or
3 (search/iteration budget exhausted).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fixedsets, iterate, kronecker
from .config import (
    ExperimentConfig,
    build_basis,
    build_instance,
    exact_value,
    load_config,
    resolve_output,
    vector_value,
)
from .errors import (
    BudgetExceeded,
    ConfigError,
    IndependenceViolated,
    KronfixError,
    NormNotStrictlyConvex,
    SearchBudgetExceeded,
)
from .geometry import NormKind
from .semigroup import check_nonexpansive, check_semigroup_law

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

log = logging.getLogger("kronfix")


@dataclass
class Outcome:
    code: int
    report: str
    csv: str | None = None


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"[{where}] needs key {key!r}")
    return section[key]


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _stride_csv(text: str, stride: int) -> str:
    if stride <= 1:
        return text
    lines = text.splitlines()
    body = lines[1:]
    kept = [row for i, row in enumerate(body) if i % stride == 0 or i == len(body) - 1]
    return "\n".join([lines[0]] + kept) + "\n"


# subcommands


def cmd_check_semigroup(cfg: ExperimentConfig, seed: int) -> Outcome:
    sg = build_instance(cfg)
    sc = cfg.scheme
    samples = int(sc.get("samples", 1000))
    tol = float(sc.get("tol", 1e-9))
    reports = [check_semigroup_law(sg, samples, tol, seed=seed)]
    if sg.claims_nonexpansive:
        kind = NormKind.parse(sc["norm"]) if "norm" in sc else None
        reports.append(check_nonexpansive(sg, samples, tol, norm_kind=kind, seed=seed))
    text = "\n".join(r.summary() for r in reports) + "\n"
    rows = [[r.check, r.instance, r.samples, repr(r.max_violation), r.tol, int(r.passed)]
            for r in reports]
    code = EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    return Outcome(code, text, _csv(rows, ["check", "instance", "samples", "max_violation", "tol", "pass"]))


def cmd_kronecker_search(cfg: ExperimentConfig, seed: int) -> Outcome:
    sc = cfg.scheme
    raw = sc.get("alphas", cfg.basis.get("alphas"))
    if raw is None:
        raise ConfigError("kronecker-search needs [scheme] alphas (or [basis] alphas)")
    alphas = [exact_value(a, "alphas") for a in raw]
    target = [float(t) for t in _need(sc, "target", "scheme")]
    eps = float(_need(sc, "eps", "scheme"))
    k_max = int(sc.get("k_max", kronecker.DEFAULT_CAP))
    count = int(sc.get("count", 1))
    try:
        problem = kronecker.KroneckerProblem(alphas, target, eps)
    except (IndependenceViolated, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    lines = [f"kronecker search: alphas=({', '.join(map(str, alphas))}) target={target} eps={eps} k_max={k_max}"]
    code = EXIT_PASS
    try:
        ks = kronecker.approx_sequence(problem, count, cap=k_max)
    except SearchBudgetExceeded as exc:
        ks = list(exc.partial)
        code = EXIT_BUDGET
        lines.append(f"budget exhausted: {exc}")
    rows = []
    for k in ks:
        fr = [a.scale(k).fractional_part().to_float(1e-17) for a in alphas]
        dev = max(abs(f - t) for f, t in zip(fr, target))
        certified = kronecker.certify_index(problem, k)
        if not certified:
            code = EXIT_FAIL
        rows.append([k] + [repr(f) for f in fr] + [repr(dev)])
        lines.append(f"k={k} fractions={fr} max_dev={dev:.6e} certified={certified}")
    if "grid" in sc:
        disp = kronecker.orbit_dispersion(alphas, int(sc.get("dispersion_K", 10_000)), int(sc["grid"]))
        lines.append(f"dispersion(K={sc.get('dispersion_K', 10_000)}, grid={sc['grid']}) = {disp:.6e}")
    header = ["k"] + [f"frac_{j + 1}" for j in range(len(alphas))] + ["max_dev"]
    return Outcome(code, "\n".join(lines) + "\n", _csv(rows, header))


def cmd_verify_theorem(cfg: ExperimentConfig, seed: int) -> Outcome:
    sg = build_instance(cfg)
    basis = build_basis(cfg)
    sc = cfg.scheme
    z = vector_value(_need(sc, "z", "scheme"), "scheme.z")
    report = fixedsets.verify_main_theorem(
        sg, basis, z, sample_count=int(sc.get("samples", 100)), tol=float(sc.get("tol", 1e-8)),
        eps=float(sc.get("eps", 1e-3)), cone=float(sc.get("cone", 10.0)),
        k_max=int(sc.get("k_max", 10**8)), seed=seed)
    return Outcome(EXIT_PASS if report.passed else EXIT_FAIL, report.to_text(), report.to_csv())


def _default_weights(n: int) -> list:
    return [1.0 / (n + 1)] * (n + 1)


def _schedule(sc: dict) -> iterate.Schedule:
    kind = sc.get("schedule", "reciprocal")
    if isinstance(kind, list):
        return iterate.Schedule("custom", custom=tuple(float(v) for v in kind))
    return iterate.Schedule(kind, gamma=float(sc.get("gamma", 1.0)))


def cmd_iterate(cfg: ExperimentConfig, seed: int) -> Outcome:
    sg = build_instance(cfg)
    basis = build_basis(cfg)
    sc = cfg.scheme
    name = _need(sc, "name", "scheme")
    K = int(sc.get("K", 100))
    start = sc.get("x1")
    if name in ("cesaro", "km", "browder", "halpern"):
        S = fixedsets.combined_map(sg, basis, sc.get("weights", _default_weights(basis.n)))
        x1 = vector_value(start if start is not None else np.zeros(sg.dim), "scheme.x1")
        u = vector_value(sc["u"], "scheme.u") if "u" in sc else x1
        if name == "cesaro":
            trace = iterate.run_cesaro(S, x1, K)
        elif name == "km":
            trace = iterate.run_km(S, x1, K)
        elif name == "halpern":
            trace = iterate.run_halpern(S, u, x1, _schedule(sc), K)
        else:
            s = sc.get("s")
            sched = (iterate.Schedule("custom", custom=tuple(s) if isinstance(s, list) else (float(s),))
                     if s is not None else _schedule(sc))
            K = len(sched.custom) if sched.kind == "custom" else K
            trace = iterate.run_browder(S, u, sched, K)
    elif name == "rode":
        x1 = vector_value(_need(sc, "x1", "scheme"), "scheme.x1")
        trace = iterate.rode_trace(sg, basis, x1, K)
    elif name == "ishikawa":
        x1 = vector_value(_need(sc, "x1", "scheme"), "scheme.x1")
        trace = iterate.run_ishikawa(sg, basis, x1, K,
                                     int(sc.get("max_applications", iterate.ISHIKAWA_APPLICATIONS)))
    else:
        raise ConfigError(f"unknown scheme {name!r}")
    final_res = trace.residuals[-1]
    lines = [f"scheme {name} on {sg.name}: {len(trace.ks)} stored iterates, "
             f"{trace.map_applications} map applications",
             f"final residual = {final_res:.6e}"]
    code = EXIT_PASS
    if trace.oracle_dist is not None:
        lines.append(f"final oracle distance = {trace.oracle_dist[-1]:.6e}")
    if "tol" in sc:
        tol = float(sc["tol"])
        measure = trace.oracle_dist[-1] if trace.oracle_dist is not None else final_res
        ok = measure <= tol
        lines.append(f"{'PASS' if ok else 'FAIL'}: final distance {measure:.3e} vs tol {tol:.1e}")
        code = EXIT_PASS if ok else EXIT_FAIL
    return Outcome(code, "\n".join(lines) + "\n", trace.to_csv())


def cmd_counterexample(cfg: ExperimentConfig, seed: int) -> Outcome:
    probes = int(cfg.scheme.get("probes", 100))
    report = fixedsets.counterexample_demo(probes=probes, seed=seed)
    return Outcome(EXIT_PASS if report.passed else EXIT_FAIL, report.to_text(), report.to_csv())


def cmd_bruck_check(cfg: ExperimentConfig, seed: int) -> Outcome:
    sg = build_instance(cfg)
    sc = cfg.scheme
    params = [[exact_value(v, "scheme.params").to_float(1e-17) for v in p]
              for p in _need(sc, "params", "scheme")]
    maps = [fixedsets.semigroup_map(sg, p) for p in params]
    weights = sc.get("weights", [1.0 / len(maps)] * len(maps))
    rng = np.random.default_rng(seed)
    count = int(sc.get("probes", 1000))
    probes = np.vstack([np.zeros((1, sg.dim)), sg.domain.sample(rng, count - 1)])
    witness = vector_value(sc.get("witness", [0.0] * sg.dim), "scheme.witness")
    kind = NormKind.parse(sc["norm"]) if "norm" in sc else None
    try:
        report = fixedsets.bruck_check(maps, weights, probes, float(sc.get("tol", 1e-9)),
                                       witness=witness, norm_kind=kind)
    except NormNotStrictlyConvex as exc:
        raise ConfigError(str(exc)) from exc
    return Outcome(EXIT_PASS if report.passed else EXIT_FAIL, report.to_text(), report.to_csv())


def cmd_one_parameter(cfg: ExperimentConfig, seed: int) -> Outcome:
    sc = cfg.scheme
    report = fixedsets.one_parameter_demo(float(sc.get("period", 1.0)), int(sc.get("probes", 200)), seed)
    return Outcome(EXIT_PASS if report.passed else EXIT_FAIL, report.to_text(), report.to_csv())


COMMANDS = {
    "check-semigroup": cmd_check_semigroup,
    "kronecker-search": cmd_kronecker_search,
    "verify-theorem": cmd_verify_theorem,
    "iterate": cmd_iterate,
    "counterexample": cmd_counterexample,
    "bruck-check": cmd_bruck_check,
    "one-parameter": cmd_one_parameter,
}
CONFIG_OPTIONAL = {"counterexample", "one-parameter"}


def run_one(command: str, config_path, seed_override, csv_override, report_override,
            stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = load_config(config_path) if config_path is not None else ExperimentConfig()
        seed = seed_override if seed_override is not None else cfg.seed
        outcome = COMMANDS[command](cfg, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, SearchBudgetExceeded) as exc:
        print(f"budget exhausted: {exc}", file=stderr)
        return EXIT_BUDGET
    except KronfixError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CONFIG
    csv_path = resolve_output(cfg, "csv_path", csv_override)
    report_path = resolve_output(cfg, "report_path", report_override)
    if outcome.csv is not None and csv_path is not None:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(_stride_csv(outcome.csv, int(cfg.output.get("stride", 1))))
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(outcome.report)
    else:
        stdout.write(outcome.report)
    if outcome.code == EXIT_FAIL:
        print(f"{command}: mathematical check failed", file=stderr)
    elif outcome.code == EXIT_BUDGET:
        print(f"{command}: search budget exhausted", file=stderr)
    return outcome.code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kronfix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", action="append", type=Path, default=None,
                       required=name not in CONFIG_OPTIONAL,
                       help="TOML experiment file (repeatable)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=1, help="configs run concurrently")
        p.add_argument("--csv", type=Path, default=None)
        p.add_argument("--report", type=Path, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    configs = args.config or [None]
    if len(configs) > 1 and (args.csv or args.report):
        print("config error: --csv/--report need a single --config", file=sys.stderr)
        return EXIT_CONFIG

    def job(path):
        # buffer per job so concurrent reports never interleave
        out, err = io.StringIO(), io.StringIO()
        code = run_one(args.command, path, args.seed, args.csv, args.report, out, err)
        return code, out.getvalue(), err.getvalue()

    if args.jobs > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(job, configs))
    else:
        results = [job(c) for c in configs]
    for _, out, err in results:
        sys.stdout.write(out)
        sys.stderr.write(err)
    return max(code for code, _, _ in results)


if __name__ == "__main__":
    sys.exit(main())
