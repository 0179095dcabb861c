"""Configuration-driven experiment runner.

Every experiment is a JSON config executed by a subcommand of the same
kind; runs are deterministic (seeds always explicit, threads pinned when
requested) and leave behind CSV/JSON artifacts plus a manifest echoing the
config and recording package versions. Exit codes: 0 success, 1 config or
operational error, 2 "ran fine, but a bound was violated" -- CI treats 2
as a red experiment rather than a crash.

Config validation is strict: unknown fields are rejected by name, as are
missing required ones, before any computation starts.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cantor import CantorSpec, cantor_stage, stage_for_scale
from .discrete import (
    PointSet,
    count_unit_pairs_bruteforce,
    count_unit_pairs_grid,
    normalized_pair_count,
    random_general_position,
    two_circles_r4,
    unit_step_census,
)
from .geom import unit_frame_solutions
from .grids import alpha_set_verify, rasterize
from .incidence import incidence_census, section_histogram
from .intervals import IntervalUnion
from .scaling import (
    Bound,
    BoundTable,
    CantorAxis,
    IntervalAxis,
    PointsAxis,
    ScaleSample,
    ScalingSeries,
    compare_report,
    fit_exponent,
    sweep,
    theory_bounds,
)
from .spectral import ball_convolution_l2, mollify_transform, weighted_energy

KINDS = (
    "count",
    "frames",
    "cantor",
    "sweep",
    "alpha-verify",
    "spectral",
    "incidence",
    "report",
)

THREADS_ENV = "UNITDIST_THREADS"


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the field."""


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _take(cfg: dict, field: str, *, required: bool = False, default=None, where: str = "config"):
    if field in cfg:
        return cfg.pop(field)
    if required:
        raise ConfigError(f"missing required field '{field}' in {where}")
    return default


def _done(cfg: dict, where: str = "config") -> None:
    if cfg:
        raise ConfigError(f"unknown field '{next(iter(cfg))}' in {where}")


def _parse_scale(x, where: str):
    """Accept 0.015625, "1/64", or "2^-6" as exact scales."""
    if isinstance(x, str):
        m = x.strip()
        if "^" in m:
            base, _, exp = m.partition("^")
            if base.strip() != "2":
                raise ConfigError(f"bad scale '{x}' in {where}")
            return Fraction(2) ** int(exp)
        return Fraction(m)
    if isinstance(x, (int, float)):
        return Fraction(x)
    raise ConfigError(f"bad scale '{x}' in {where}")


def _axis_from_config(spec, where: str):
    if not isinstance(spec, dict):
        raise ConfigError(f"axis entry must be an object in {where}")
    spec = dict(spec)
    kind = _take(spec, "kind", required=True, where=where)
    if kind == "cantor":
        p = _take(spec, "p", required=True, where=where)
        q = _take(spec, "q", required=True, where=where)
        shift = _take(spec, "shift", where=where)
        _done(spec, where)
        return CantorAxis(int(p), int(q), None if shift is None else _parse_scale(shift, where))
    if kind == "interval":
        lo = _take(spec, "lo", required=True, where=where)
        hi = _take(spec, "hi", required=True, where=where)
        _done(spec, where)
        return IntervalAxis(_parse_scale(lo, where), _parse_scale(hi, where))
    if kind == "points":
        at = _take(spec, "at", required=True, where=where)
        _done(spec, where)
        return PointsAxis(tuple(_parse_scale(x, where) for x in at))
    raise ConfigError(f"unknown axis kind '{kind}' in {where}")


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, Fraction):
        return str(x)
    return str(x)


def _csv_quote(s: str) -> str:
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def emit_csv(path: Path, schema: list[str], rows) -> None:
    """RFC-4180-style CSV: header, LF endings, 17-significant-digit floats;
    byte-identical across runs with identical inputs."""
    lines = [",".join(schema)]
    for row in rows:
        if len(row) != len(schema):
            raise ValueError(
                f"row arity {len(row)} does not match schema arity {len(schema)}"
            )
        lines.append(",".join(_csv_quote(_fmt(v)) for v in row))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode())


def _write_json(path: Path, obj) -> None:
    Path(path).write_bytes(
        (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()
    )


class _Run:
    """Artifact directory plus the manifest bookkeeping."""

    def __init__(self, kind: str, out: Path, config_echo: dict, threads):
        self.kind = kind
        self.out = out
        self.config_echo = config_echo
        self.threads = threads
        self.artifacts: list[str] = []
        self.started = time.perf_counter()
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    def finish(self) -> None:
        manifest = {
            "kind": self.kind,
            "config": self.config_echo,
            "artifacts": sorted(self.artifacts),
            "versions": {
                "unitdist": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "threads": self.threads,
            "wall_time_s": round(time.perf_counter() - self.started, 6),
        }
        _write_json(self.out / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# experiment runners (each returns the exit code)
# ---------------------------------------------------------------------------

_BUILTIN_SETS = {
    "triangle": [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)],
    "square": [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
}


def _run_count(cfg: dict, run: _Run) -> int:
    where = "count config"
    spec = _take(cfg, "set", required=True, where=where)
    eps = float(_take(cfg, "eps", default=1e-9, where=where))
    census = bool(_take(cfg, "census", default=False, where=where))
    _done(cfg, where)

    spec = dict(spec if isinstance(spec, dict) else {"kind": spec})
    kind = _take(spec, "kind", required=True, where="count.set")
    if kind in _BUILTIN_SETS:
        _done(spec, "count.set")
        P = PointSet(np.array(_BUILTIN_SETS[kind]), eps=eps, label=kind)
    elif kind == "two_circles":
        n = int(_take(spec, "n", required=True, where="count.set"))
        seed = int(_take(spec, "seed", default=0, where="count.set"))
        _done(spec, "count.set")
        P = two_circles_r4(n, seed=seed)
        if eps != 1e-9:
            P = PointSet(P.points, eps=eps, label=P.label)
    elif kind == "random":
        n = int(_take(spec, "n", required=True, where="count.set"))
        d = int(_take(spec, "d", required=True, where="count.set"))
        seed = int(_take(spec, "seed", default=0, where="count.set"))
        _done(spec, "count.set")
        P = random_general_position(n, d, seed=seed)
        if eps != 1e-9:
            P = PointSet(P.points, eps=eps, label=P.label)
    else:
        raise ConfigError(f"unknown set kind '{kind}' in count.set")

    brute = count_unit_pairs_bruteforce(P)
    grid = count_unit_pairs_grid(P)
    emit_csv(
        run.path("counts.csv"),
        ["label", "d", "n", "eps", "brute_count", "grid_count", "normalized"],
        [[P.label, P.d, P.n, P.eps, brute, grid, normalized_pair_count(P)]],
    )
    if census:
        rep = unit_step_census(P)
        _write_json(
            run.path("census.json"),
            {
                "edge_count": rep.edge_count,
                "tuple_count": rep.tuple_count,
                "distinct_tuple_count": rep.distinct_tuple_count,
                "holder_lhs": rep.holder_lhs,
                "max_endpoint_fiber": rep.max_endpoint_fiber,
            },
        )
    return 0 if brute == grid else 2


def _run_frames(cfg: dict, run: _Run) -> int:
    where = "frames config"
    d = int(_take(cfg, "d", required=True, where=where))
    count = int(_take(cfg, "count", default=1000, where=where))
    seed = int(_take(cfg, "seed", default=0, where=where))
    _done(cfg, where)
    if not 2 <= d <= 8:
        raise ConfigError("'d' must be in [2, 8] in frames config")

    rng = np.random.default_rng(seed)
    rows = []
    worst_resid = 0.0
    max_solutions = 0
    for i in range(count):
        scale = float(np.exp(rng.uniform(np.log(0.05), np.log(2.0))))
        a = rng.normal(size=(d - 1, d)) * scale
        try:
            sols = unit_frame_solutions(a)
        except ValueError:
            rows.append([i, d, math.nan, -1, math.nan])
            continue
        resid = 0.0
        for s in sols:
            for j in range(d - 1):
                resid = max(resid, abs(np.linalg.norm(s.b[0] + a[j]) - 1.0))
            resid = max(resid, abs(np.linalg.norm(s.b[0]) - 1.0))
        r0 = float(np.linalg.norm(sols[0].section.offset)) if sols else math.nan
        rows.append([i, d, r0, len(sols), resid])
        worst_resid = max(worst_resid, resid)
        max_solutions = max(max_solutions, len(sols))
    emit_csv(
        run.path("frames.csv"),
        ["index", "d", "r0", "n_solutions", "max_residual"],
        rows,
    )
    _write_json(
        run.path("summary.json"),
        {
            "frames": count,
            "max_solutions": max_solutions,
            "worst_residual": worst_resid,
        },
    )
    return 0 if (max_solutions <= 2 and worst_resid <= 1e-9) else 2


def _run_cantor(cfg: dict, run: _Run) -> int:
    where = "cantor config"
    p = int(_take(cfg, "p", required=True, where=where))
    q = int(_take(cfg, "q", required=True, where=where))
    stage = int(_take(cfg, "stage", required=True, where=where))
    delta = _take(cfg, "delta", where=where)
    _done(cfg, where)

    spec = CantorSpec(p, q)
    U = cantor_stage(spec, stage)
    stats = {
        "p": p,
        "q": q,
        "stage": stage,
        "dimension": spec.dimension(),
        "intervals": U.n_intervals,
        "total_length": str(U.total_length),
    }
    run.path("intervals.txt").write_text(U.to_text())
    if delta is not None:
        fat = U.neighborhood(_parse_scale(delta, where))
        run.path("fattened.txt").write_text(fat.to_text())
        stats["fattened_intervals"] = fat.n_intervals
        stats["fattened_length"] = str(fat.total_length)
    _write_json(run.path("stats.json"), stats)
    return 0


def _verdict_table(axes, d: int, alpha: float) -> BoundTable:
    """Bound table for a sweep verdict.

    For the planted-distance product (first axis doubled by a shift) the
    table's lower bounds -- which constrain the extremal set, not this
    particular one -- are replaced by the construction's own guaranteed
    exponent beta + 3 gamma / 2.
    """
    table = theory_bounds(d, alpha)
    shifted = [getattr(ax, "shift", None) is not None for ax in axes]
    if d == 2 and len(axes) == 2 and shifted[0] and not shifted[1]:
        beta = axes[0].dimension
        gamma = axes[1].dimension
        bounds = tuple(b for b in table.bounds if b.kind == "upper") + (
            Bound("construction_product", "lower", beta + 1.5 * gamma, alpha, alpha),
        )
        return BoundTable(d=d, alpha=alpha, bounds=bounds, open_interval=False)
    return table


def _series_rows(series: ScalingSeries, d: int, alpha: float):
    for s in series.samples:
        yield [series.label, d, alpha, s.delta, s.value, s.low, s.high]


_SCALING_SCHEMA = ["label", "d", "alpha", "delta", "value", "value_low", "value_high"]


def _run_sweep(cfg: dict, run: _Run) -> int:
    where = "sweep config"
    axes_cfg = _take(cfg, "axes", required=True, where=where)
    deltas = _take(cfg, "deltas", required=True, where=where)
    method = _take(cfg, "method", default="grid", where=where)
    widthm = float(_take(cfg, "width_multiplier", default=2.0, where=where))
    tol = float(_take(cfg, "tol", default=0.2, where=where))
    label = str(_take(cfg, "label", default="sweep", where=where))
    alpha_cfg = _take(cfg, "alpha", where=where)
    _done(cfg, where)

    axes = [
        _axis_from_config(a, f"sweep.axes[{i}]") for i, a in enumerate(axes_cfg)
    ]
    d = len(axes)
    alpha = (
        float(alpha_cfg)
        if alpha_cfg is not None
        else min(float(d), sum(ax.dimension for ax in axes))
    )
    delta_list = [_parse_scale(x, "sweep.deltas") for x in deltas]
    try:
        series = sweep(
            axes, delta_list, method=method, width_multiplier=widthm, label=label
        )
        fit = fit_exponent(series)
    except ValueError as exc:
        raise ConfigError(f"sweep failed: {exc}") from exc
    verdict = compare_report(fit, _verdict_table(axes, d, alpha), tol)
    emit_csv(run.path("scaling.csv"), _SCALING_SCHEMA, _series_rows(series, d, alpha))
    payload = verdict.to_json()
    payload["fit"] = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "max_residual": fit.max_residual,
        "n_points": fit.n_points,
    }
    _write_json(run.path("verdict.json"), payload)
    return 0 if verdict.within_bounds else 2


def _run_alpha_verify(cfg: dict, run: _Run) -> int:
    where = "alpha-verify config"
    p = int(_take(cfg, "p", required=True, where=where))
    q = int(_take(cfg, "q", required=True, where=where))
    delta = _parse_scale(_take(cfg, "delta", required=True, where=where), where)
    alpha = float(_take(cfg, "alpha", default=p / q, where=where))
    cell = _take(cfg, "cell", where=where)
    samples = int(_take(cfg, "samples", default=10_000, where=where))
    seed = int(_take(cfg, "seed", default=0, where=where))
    max_ratio = _take(cfg, "max_ratio", where=where)
    _done(cfg, where)

    spec = CantorSpec(p, q)
    U = cantor_stage(spec, stage_for_scale(spec, delta))
    cell_q = delta / 2 if cell is None else _parse_scale(cell, where)
    G = rasterize([U], delta, cell_q, alpha=alpha, label=f"C({p},{q})")
    rep = alpha_set_verify(G, alpha, samples, seed=seed)
    _write_json(
        run.path("report.json"),
        {
            "sup_ratio": rep.sup_ratio,
            "samples_tested": rep.samples_tested,
            "worst_x": list(rep.worst_x),
            "worst_r": rep.worst_r,
            "alpha": alpha,
            "delta": float(delta),
        },
    )
    if max_ratio is not None and rep.sup_ratio > float(max_ratio):
        return 2
    return 0


def _run_spectral(cfg: dict, run: _Run) -> int:
    where = "spectral config"
    p = int(_take(cfg, "p", required=True, where=where))
    q = int(_take(cfg, "q", required=True, where=where))
    alpha = float(_take(cfg, "alpha", default=p / q, where=where))
    delta_exps = _take(cfg, "delta_exps", required=True, where=where)
    r_exps = _take(cfg, "r_exps", where=where)
    max_abs_slope = _take(cfg, "max_abs_slope", where=where)
    _done(cfg, where)

    spec = CantorSpec(p, q)
    energy_rows = []
    conv_rows = []
    for e in delta_exps:
        delta = Fraction(1, 1 << int(e))
        U = cantor_stage(spec, stage_for_scale(spec, delta))
        G = rasterize([U], delta, delta / 4, alpha=alpha)
        S = mollify_transform(G)
        rep = weighted_energy(S, 1, alpha, float(delta))
        energy_rows.append([float(delta), rep.energy, rep.reference, rep.ratio])
        for re_ in r_exps or []:
            r = 2.0 ** -int(re_)
            if r < float(delta):
                continue
            conv = ball_convolution_l2(G, r)
            conv_rows.append([float(delta), conv.r, conv.l2_norm, conv.ratio])
    emit_csv(
        run.path("energy.csv"),
        ["delta", "energy", "reference", "ratio"],
        energy_rows,
    )
    if conv_rows:
        emit_csv(
            run.path("convolution.csv"),
            ["delta", "r", "l2_norm", "ratio"],
            conv_rows,
        )
    logs = np.log([row[0] for row in energy_rows])
    ratios = np.log([row[3] for row in energy_rows])
    slope = float(np.polyfit(logs, ratios, 1)[0]) if len(energy_rows) >= 2 else 0.0
    _write_json(
        run.path("summary.json"),
        {"alpha": alpha, "ratio_log_slope": slope, "scales": len(energy_rows)},
    )
    if max_abs_slope is not None and abs(slope) > float(max_abs_slope):
        return 2
    return 0


def _run_incidence(cfg: dict, run: _Run) -> int:
    where = "incidence config"
    axes_cfg = _take(cfg, "axes", required=True, where=where)
    delta = _parse_scale(_take(cfg, "delta", required=True, where=where), where)
    cell = _take(cfg, "cell", where=where)
    lam = _take(cfg, "lam", where=where)
    c = float(_take(cfg, "c", default=0.1, where=where))
    alpha_cfg = _take(cfg, "alpha", where=where)
    _done(cfg, where)

    axes = [
        _axis_from_config(a, f"incidence.axes[{i}]") for i, a in enumerate(axes_cfg)
    ]
    alpha = (
        float(alpha_cfg)
        if alpha_cfg is not None
        else sum(ax.dimension for ax in axes)
    )
    sets = [ax.at_scale(delta) for ax in axes]
    cell_q = delta / 2 if cell is None else _parse_scale(cell, where)
    G = rasterize(sets, delta, cell_q, alpha=alpha)
    hist = section_histogram(G)
    emit_csv(
        run.path("sections.csv"),
        ["bin_lo", "bin_hi", "count"],
        [
            [float(hist.edges[m]), float(hist.edges[m + 1]), int(hist.counts[m])]
            for m in range(len(hist.counts))
        ],
    )
    lam_val = hist.top_threshold() if lam is None else float(lam)
    census = incidence_census(G, lam_val, c=c)
    _write_json(
        run.path("incidence.json"),
        {
            "j_size": int(census.j_points.shape[0]),
            "center_count": int(census.centers.shape[0]),
            "section_size_max": int(census.section_sizes.max(initial=0)),
            "tuple_count": census.tuple_count,
            "separation_threshold": census.separation_threshold,
            "max_projection_fiber": census.max_projection_fiber,
            "lam": lam_val,
            "c": c,
        },
    )
    return 0


def _run_report(cfg: dict, run: _Run) -> int:
    where = "report config"
    series_csv = _take(cfg, "series_csv", required=True, where=where)
    d = int(_take(cfg, "d", required=True, where=where))
    alpha = float(_take(cfg, "alpha", required=True, where=where))
    tol = float(_take(cfg, "tol", default=0.2, where=where))
    _done(cfg, where)

    rows = Path(series_csv).read_text().splitlines()
    if not rows or rows[0].split(",") != _SCALING_SCHEMA:
        raise ConfigError(f"'{series_csv}' is not a scaling CSV")
    samples = []
    label = ""
    for line in rows[1:]:
        parts = line.split(",")
        label = parts[0]
        samples.append(
            ScaleSample(
                delta=float(parts[3]),
                value=float(parts[4]),
                low=float(parts[5]),
                high=float(parts[6]),
            )
        )
    series = ScalingSeries(tuple(samples), label=label)
    fit = fit_exponent(series)
    verdict = compare_report(fit, theory_bounds(d, alpha), tol)
    _write_json(run.path("verdict.json"), verdict.to_json())
    return 0 if verdict.within_bounds else 2


_RUNNERS = {
    "count": _run_count,
    "frames": _run_frames,
    "cantor": _run_cantor,
    "sweep": _run_sweep,
    "alpha-verify": _run_alpha_verify,
    "spectral": _run_spectral,
    "incidence": _run_incidence,
    "report": _run_report,
}


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

def run_config(
    path,
    kind: str | None = None,
    out_override=None,
    seed_override: int | None = None,
    threads: int | None = None,
) -> int:
    """Execute one experiment config; returns the process exit code."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 1
    if not isinstance(raw, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return 1

    cfg = dict(raw)
    cfg_kind = cfg.pop("kind", None)
    if kind is None:
        kind = cfg_kind
    elif cfg_kind is not None and cfg_kind != kind:
        print(
            f"error: config kind '{cfg_kind}' does not match subcommand '{kind}'",
            file=sys.stderr,
        )
        return 1
    if kind not in _RUNNERS:
        print(f"error: unknown experiment kind '{kind}'", file=sys.stderr)
        return 1

    out = Path(out_override) if out_override else Path(cfg.pop("out", f"runs/{kind}"))
    if seed_override is not None:
        if "set" in cfg and isinstance(cfg["set"], dict):
            cfg["set"] = {**cfg["set"], "seed": seed_override}
        else:
            cfg["seed"] = seed_override

    if threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)

    echo = {"kind": kind, **cfg, "out": str(out)}
    run = _Run(kind, out, echo, threads)
    try:
        code = _RUNNERS[kind](cfg, run)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    run.finish()
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="unitdist",
        description="experiment runner for discrete and continuous "
        "unit-distance measurements",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run a '{kind}' experiment config")
        sp.add_argument("--config", required=True, help="path to the JSON config")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"BLAS/FFT thread cap (default: ${THREADS_ENV} if set)",
        )
    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None and os.environ.get(THREADS_ENV):
        try:
            threads = int(os.environ[THREADS_ENV])
        except ValueError:
            print(f"error: ${THREADS_ENV} is not an integer", file=sys.stderr)
            return 1
    return run_config(
        args.config,
        kind=args.kind,
        out_override=args.out,
        seed_override=args.seed,
        threads=threads,
    )
