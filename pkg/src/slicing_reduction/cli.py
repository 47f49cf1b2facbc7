"""Command-line front end: every check writes a CSV or JSON table with a provenance header.

Exit status: 0 when all requested checks pass, 1 when one fails, 2 on bad configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .alpha1d import DEFAULT_ALPHAS, monotonicity_suite
from .ballbodies import (INCLUSION_SLACK, BallBodyQuery, ballbody_volume, equality_case_fingerprint,
                         inclusion_alpha_check, inclusion_logconcave_check)
from .bodies import ConvexBody, Cube, EuclideanBall, RegularSimplex, VPolytope, body_from_json
from .combinatorics import catalan, dn, dn_le_sqrt2_exact, lemma41_lhs, lemma41_holds, lemma42_holds
from .covariogram import (Covariogram, check_one_over_n_concavity, check_probability_density,
                          second_moment_identity, simplex_levelset_check)
from .errors import ConfigError, DomainError
from .report import _plain
from .verifier import (CSV_COLUMNS, Theorem1Config, symmetric_reduction_report,
                       theorem1_verify, volume_bound_check)

SUBCOMMANDS = ("dn", "catalan", "lemma41", "lemma42", "covariogram", "ballbody", "inclusion",
               "gmono", "theorem1", "volbound", "reduce")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    body: str = "builtin:simplex"
    dim: int = 2
    p: float | None = None
    q: float | None = None
    alpha: float | None = None
    samples: int = 200_000
    dirs: int | None = None
    seed: int = 0
    tol: float | None = None
    out: str | None = None
    format: str = "csv"
    max: int = 10
    trials: int = 1000
    workers: int = 1

    def echo(self) -> dict[str, Any]:
        # thread count is excluded so outputs match across worker settings
        d = asdict(self)
        d.pop("workers")
        d.pop("out")
        return d


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    passed: bool
    tolerances: dict[str, Any]
    extra: dict[str, Any] | None = None


def load_body(source: str, dim: int) -> ConvexBody:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        builders = {"cube": lambda: Cube(dim), "ball": lambda: EuclideanBall.of_volume(dim),
                    "simplex": lambda: RegularSimplex(dim)}
        if name not in builders:
            raise ConfigError(f"unknown builtin body {name!r}")
        return builders[name]()
    if source.startswith("vpolytope:"):
        data = _read_json(source.split(":", 1)[1])
        verts = data["vertices"] if isinstance(data, dict) else data
        return VPolytope(verts)
    return body_from_json(_read_json(source))


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read body file {path}: {exc}") from exc


def _label(cfg: RunConfig) -> str:
    return cfg.body.split(":", 1)[1] if cfg.body.startswith("builtin:") else Path(cfg.body.split(":")[-1]).stem


def _check_rows(reports) -> Table:
    rows = [[r.name, bool(r.passed), _num(r.values), r.error] for r in reports]
    return Table(["check", "passed", "value", "error"], rows, all(r.passed for r in reports),
                 {r.name: r.tolerance for r in reports})


def _num(values: dict) -> Any:
    for v in values.values():
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return v
    return ""


# -- subcommands -------------------------------------------------------------

def cmd_dn(cfg: RunConfig) -> Table:
    rows = []
    for n in range(1, cfg.max + 1):
        value = float(dn(n).value)
        rows.append([n, value, math.sqrt(2.0) - value, dn_le_sqrt2_exact(n)])
    return Table(["n", "D_n", "sqrt2_gap", "certificate"], rows, all(r[3] for r in rows), {})


def cmd_catalan(cfg: RunConfig) -> Table:
    rows = []
    for n in range(1, cfg.max + 1):
        c, c_next = catalan(n), catalan(n + 1)
        rows.append([n, c, c_next * (n + 2) == 2 * (2 * n + 1) * c])
    return Table(["n", "catalan", "recurrence"], rows, all(r[2] for r in rows), {})


def cmd_lemma41(cfg: RunConfig) -> Table:
    rows = [[n, float(lemma41_lhs(n)), lemma41_holds(n)] for n in range(1, cfg.max + 1)]
    return Table(["n", "lhs", "holds"], rows, all(r[2] for r in rows), {"exact": 0})


def cmd_lemma42(cfg: RunConfig) -> Table:
    rows = []
    for n in range(1, cfg.max + 1):
        lhs = (16 * n) ** n
        rhs = (n + 2) ** n * (n + 1) ** 2 * catalan(n) ** 2
        rows.append([n, float(Fraction(lhs, rhs)), lemma42_holds(n)])
    return Table(["n", "lhs_over_rhs", "holds"], rows, all(r[2] for r in rows), {"exact": 0})


def _covariogram(cfg: RunConfig, body: ConvexBody | None = None) -> Covariogram:
    body = body or load_body(cfg.body, cfg.dim)
    return Covariogram(body, samples=cfg.samples, seed=cfg.seed)


def cmd_covariogram(cfg: RunConfig) -> Table:
    body = load_body(cfg.body, cfg.dim)
    g = _covariogram(cfg, body)
    reports = [check_probability_density(g, cfg.samples, cfg.seed),
               check_one_over_n_concavity(g, cfg.trials, cfg.seed, **_tol(cfg, "tol"))]
    vol, bary, _ = body.moments()
    if abs(vol - 1.0) < 1e-9 and np.abs(bary).max() < 1e-9:
        theta = np.eye(body.dim)[0]
        reports.append(second_moment_identity(g, theta, cfg.samples, cfg.seed, cfg.dirs or 256))
    if g.backend == "closed" and g.kind == "simplex":
        reports.append(simplex_levelset_check(g, seed=cfg.seed, **_tol(cfg, "tol")))
    return _check_rows(reports)


def _tol(cfg: RunConfig, key: str) -> dict[str, float]:
    return {} if cfg.tol is None else {key: cfg.tol}


def cmd_ballbody(cfg: RunConfig) -> Table:
    g = _covariogram(cfg)
    p = cfg.p if cfg.p is not None else g.dim + 2
    v, err = ballbody_volume(BallBodyQuery(g, p), cfg.dirs or (256 if g.dim == 2 else 4096),
                             cfg.seed, cfg.workers)
    return Table(["body", "n", "p", "volume", "error", "backend"],
                 [[_label(cfg), g.dim, p, v, err, g.backend]], True, {"quadrature": err})


def cmd_inclusion(cfg: RunConfig) -> Table:
    g = _covariogram(cfg)
    n = g.dim
    pairs = [(cfg.p, cfg.q)] if cfg.p is not None and cfg.q is not None else list(dict.fromkeys([(1, 2), (2, 4), (n, n + 2)]))
    dirs = cfg.dirs or 64
    slack = _tol(cfg, "slack")
    rows, ok = [], True
    for p, q in pairs:
        for rep in (inclusion_logconcave_check(g, p, q, dirs, cfg.seed, **slack),
                    inclusion_alpha_check(g, cfg.alpha, p, q, dirs, cfg.seed, **slack)):
            margin = rep.values.get("worst_margin", min(rep.values.get("worst_left_margin", 0.0),
                                                        rep.values.get("worst_right_margin", 0.0)))
            rows.append([rep.name, p, q, bool(rep.passed), margin])
            ok = ok and rep.passed
    fp = equality_case_fingerprint(g, cfg.alpha, dirs, seed=cfg.seed)
    rows.append(["equality_fingerprint", "", "", bool(fp.passed), fp.values["fingerprint"]])
    return Table(["check", "p", "q", "passed", "worst_margin"], rows, ok,
                 {"slack": cfg.tol if cfg.tol is not None else INCLUSION_SLACK})


def cmd_gmono(cfg: RunConfig) -> Table:
    alphas = (cfg.alpha,) if cfg.alpha is not None else DEFAULT_ALPHAS
    tol = cfg.tol if cfg.tol is not None else 1e-7
    rep = monotonicity_suite(cfg.trials, seed=cfg.seed, tol=tol, alphas=alphas)
    return Table(["trials", "alphas", "violations", "worst_excess_over_tol", "passed"],
                 [[cfg.trials, " ".join(repr(float(a)) for a in alphas), rep.values["violations"],
                   rep.values["worst_excess_over_tol"], bool(rep.passed)]],
                 rep.passed, {"monotonicity": tol}, {"worst_case": rep.details["worst_case"]})


def cmd_theorem1(cfg: RunConfig) -> Table:
    body = load_body(cfg.body, cfg.dim)
    tc = Theorem1Config(directions=cfg.dirs, seed=cfg.seed, samples=cfg.samples, workers=cfg.workers,
                        **({"equality_tol": cfg.tol} if cfg.tol is not None else {}))
    rep = theorem1_verify(body, tc, _label(cfg))
    return Table(list(CSV_COLUMNS), [rep.csv_row()], rep.passed, rep.tolerances,
                 {"errors": {"L_K": rep.L_K_error, "V": rep.V_error, "L_ball": rep.L_ball_error,
                             "ratio": rep.ratio_error}, "backend": rep.backend})


def cmd_volbound(cfg: RunConfig) -> Table:
    body = load_body(cfg.body, cfg.dim)
    rep = volume_bound_check(body, cfg.dirs, cfg.seed)
    v = rep.values
    return Table(["body", "n", "volume", "bound", "gap", "equality", "passed"],
                 [[_label(cfg), body.dim, v["volume"], v["bound"], v["gap"], v["equality"], bool(rep.passed)]],
                 rep.passed, {"slack": rep.tolerance})


def cmd_reduce(cfg: RunConfig) -> Table:
    body = load_body(cfg.body, cfg.dim)
    rep = symmetric_reduction_report(body, cfg.dirs, cfg.seed, **_tol(cfg, "tol"))
    v = rep.values
    return Table(["body", "n", "volume_T", "asymmetry", "L_T_identity", "L_T_direct", "C", "passed"],
                 [[_label(cfg), body.dim, v["volume_T"], v["asymmetry"], v["L_T_identity"],
                   v["L_T_direct"], v["reduction_constant"], bool(rep.passed)]],
                 rep.passed, {"symmetry": rep.tolerance})


COMMANDS: dict[str, Callable[[RunConfig], Table]] = {
    "dn": cmd_dn, "catalan": cmd_catalan, "lemma41": cmd_lemma41, "lemma42": cmd_lemma42,
    "covariogram": cmd_covariogram, "ballbody": cmd_ballbody, "inclusion": cmd_inclusion,
    "gmono": cmd_gmono, "theorem1": cmd_theorem1, "volbound": cmd_volbound, "reduce": cmd_reduce,
}


# -- output ------------------------------------------------------------------

def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render(cfg: RunConfig, table: Table) -> str:
    meta = {"version": __version__, "seed": cfg.seed, "tolerances": _plain(table.tolerances),
            "config": cfg.echo(), "passed": bool(table.passed)}
    if cfg.format == "json":
        rows = [dict(zip(table.columns, (_plain(c) for c in r))) for r in table.rows]
        doc = {"metadata": meta, "columns": table.columns, "rows": rows}
        if table.extra:
            doc["extra"] = _plain(table.extra)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    for key in ("version", "seed", "passed"):
        buf.write(f"# {key}: {_cell(meta[key])}\n")
    buf.write(f"# tolerances: {json.dumps(meta['tolerances'], sort_keys=True)}\n")
    buf.write(f"# config: {json.dumps(meta['config'], sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for r in table.rows:
        writer.writerow([_cell(c) for c in r])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slicing-reduction", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--body", default="builtin:simplex",
                    help="builtin:cube|ball|simplex, vpolytope:<path> or a body JSON file")
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--p", type=float)
    ap.add_argument("--q", type=float)
    ap.add_argument("--alpha", type=float)
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--dirs", type=int)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--max", type=int, default=10)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--workers", type=int, default=1)
    return ap


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    if cfg.dim < 1 or cfg.max < 1 or cfg.trials < 1 or cfg.workers < 1 or cfg.samples < 1:
        raise ConfigError("dim, max, trials, workers and samples must be positive")
    if cfg.dirs is not None and cfg.dirs < 1:
        raise ConfigError("--dirs must be positive")
    return cfg


def run(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return 0 if exc.code == 0 else 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        table = COMMANDS[cfg.subcommand](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(cfg, table)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    if not table.passed:
        print(f"{cfg.subcommand}: check failed", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
