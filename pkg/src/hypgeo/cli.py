"""Command-line front end: polygon solves, verification suites and random-cover experiments.

Exit codes: 0 success, 1 verification failure, 2 domain error, 64 usage error.
Every output file embeds the run configuration; JSON and CSV bytes depend
only on that configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, covers, hyptrig, svg
from .errors import HypGeoError
from .suites import SUITES, run_suites

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 64
FORMATS = ("csv", "json", "svg")
SEED_LIMIT = 2**64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are 64 here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# -- configuration ----------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    seed: int | None
    output_dir: str | None
    formats: tuple[str, ...]
    version: str = __version__
    timestamp: str | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["formats"] = list(self.formats)
        d.pop("timestamp")
        return d

    def compact(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, separators=(",", ":"))


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _seed(text: str) -> int:
    try:
        v = int(text, 0) if isinstance(text, str) else int(text)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < SEED_LIMIT:
        raise UsageError(f"seed must lie in [0, 2^64), got {v}")
    return v


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(sorted({x.strip() for x in str(text).split(",") if x.strip()}))
    bad = [x for x in items if x not in FORMATS]
    if bad or not items:
        raise UsageError(f"formats must be a non-empty subset of {FORMATS}, got {text!r}")
    return items


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


# parameter name -> (converter, default); None default means required
Param = tuple[Callable[[Any], Any], Any]

POLYGON_PARAMS: dict[str, Param] = {"a": (float, None), "b": (float, None), "c": (float, None), "regular": (_bool, False)}
VERIFY_PARAMS: dict[str, Param] = {
    "suite": (lambda v: [x.strip() for x in v.split(",")] if isinstance(v, str) else list(v), None),
    "delta": (float, None),
    "trials": (int, None),
}
FIXFREE_PARAMS: dict[str, Param] = {"word": (str, "a"), "n": (int, 500), "trials": (int, 10_000)}
SYSTOLE_PARAMS: dict[str, Param] = {"eps": (float, None), "n": (int, 300), "trials": (int, 2000), "max_word_len": (int, 8)}
JOINT_PARAMS: dict[str, Param] = {"words": (lambda v: v.split(",") if isinstance(v, str) else list(v), None), "n": (int, 500), "trials": (int, 10_000)}
COMMON = {"seed": (_seed, 0), "output_dir": (str, None), "formats": (_formats, ("csv", "json")), "timestamp": (_bool, False)}


def _resolve(args: argparse.Namespace, spec: dict[str, Param], command: str) -> tuple[RunConfig, dict]:
    """Merge command-line values over config-file values over defaults; reject unknown keys."""
    file_vals = _read_config_file(args.config) if getattr(args, "config", None) else {}
    allowed = set(spec) | set(COMMON)
    unknown = sorted(set(file_vals) - allowed)
    if unknown:
        raise UsageError(f"unknown configuration keys: {', '.join(unknown)}")
    merged = {}
    for key, (conv, default) in {**spec, **COMMON}.items():
        cli = getattr(args, key, None)
        if cli is not None and cli is not False:
            merged[key] = conv(cli) if key in COMMON else cli
        elif key in file_vals:
            merged[key] = conv(file_vals[key])
        else:
            merged[key] = default
    params = {k: merged[k] for k in spec}
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if merged["timestamp"] else None
    cfg = RunConfig(command, params, merged["seed"], merged["output_dir"], tuple(merged["formats"]), timestamp=stamp)
    return cfg, params


# -- output ------------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings, tuples to lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    return obj


def dumps_report(cfg: RunConfig, result: dict) -> str:
    return json.dumps(_clean({"config": cfg.to_dict(), "result": result}), sort_keys=True, indent=2, allow_nan=False) + "\n"


def csv_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# run_config={cfg.compact()}\n")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(header)
    for row in rows:
        out.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _svg_meta(cfg: RunConfig) -> str:
    meta = json.loads(cfg.compact())
    if cfg.timestamp:
        meta["timestamp"] = cfg.timestamp
    return json.dumps(meta, sort_keys=True, separators=(",", ":"))


class Outputs:
    """Writes report.json, tables/*.csv and plots/*.svg according to the formats."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.output_dir) if cfg.output_dir else None
        self.written: list[str] = []

    def _write(self, rel: str, text: str) -> None:
        if self.root is None:
            return
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        self.written.append(str(path))

    def report(self, result: dict) -> None:
        if "json" in self.cfg.formats:
            self._write("report.json", dumps_report(self.cfg, result))

    def table(self, name: str, header: list[str], rows: list[list]) -> None:
        if "csv" in self.cfg.formats:
            self._write(f"tables/{name}.csv", csv_text(self.cfg, header, rows))

    def plot(self, name: str, render: Callable[[str], str]) -> None:
        if "svg" in self.cfg.formats:
            self._write(f"plots/{name}.svg", render(_svg_meta(self.cfg)))


# -- polygon ---------------------------------------------------------------------------------


def cmd_polygon(args) -> int:
    cfg, p = _resolve(args, POLYGON_PARAMS, f"polygon {args.kind}")
    kind = args.kind
    if kind == "hexagon" and p["regular"]:
        s = hyptrig.REGULAR_HEXAGON_SIDE
        shape = hyptrig.hexagon_solve(s, s, s)
    elif kind == "pentagon" and p["regular"]:
        s = hyptrig.REGULAR_PENTAGON_SIDE
        shape = hyptrig.pentagon_from_legs(s, s)
    else:
        need = ("a", "b", "c") if kind == "hexagon" else ("a", "b")
        missing = [k for k in need if p[k] is None]
        if missing:
            raise UsageError(f"polygon {kind} needs --{' --'.join(missing)}" + (" or --regular" if kind != "trirectangle" else ""))
        if kind == "pentagon":
            shape = hyptrig.pentagon_from_legs(p["a"], p["b"])
        elif kind == "hexagon":
            shape = hyptrig.hexagon_solve(p["a"], p["b"], p["c"])
        else:
            shape = hyptrig.trirectangle_solve(p["a"], p["b"])
    record = {"kind": kind, **asdict(shape)}
    residuals = shape.residuals()
    worst = max(residuals.values())
    result = {"polygon": record, "residuals": residuals, "max_residual": worst, "passed": worst <= 1e-10}
    out = Outputs(cfg)
    out.report(result)
    out.table("polygon", ["field", "value"], [[k, v] for k, v in record.items() if k != "kind"])
    print(json.dumps(_clean(result), sort_keys=True, indent=2))
    return EXIT_OK if worst <= 1e-10 else EXIT_FAIL


# -- verify-all -------------------------------------------------------------------------------


def _suite_plots(out: Outputs, results) -> None:
    by = {r.name: r for r in results}
    if "curvature" in by and "profile" in by["curvature"].data:
        d = by["curvature"].data
        delta = by["curvature"].parameters["delta"]
        out.plot("curvature_band", lambda m: svg.line_chart(
            {"K(rho)": (d["profile"]["rho"], d["profile"]["K"])}, hlines=(-1 - delta, -1 + delta),
            title="Curvature of the blended density", xlabel="rho", ylabel="K", metadata=m))
        dens = d["densities"]
        out.plot("densities", lambda m: svg.line_chart(
            {k: (dens["rho"], dens[k]) for k in ("punctured_disk", "annulus", "blend")},
            title="Conformal densities", xlabel="rho", ylabel="h", metadata=m))
    if "pants-maps" in by and "heatmap" in by["pants-maps"].data:
        hm = by["pants-maps"].data["heatmap"]
        vals = [[x - 1.0 for x in row] for row in hm["ratio_max"]]
        out.plot("distortion_heatmap", lambda m: svg.heatmap(
            vals, x_range=(hm["u"][0], hm["u"][-1]), y_range=(0.0, 1.0),
            title="Largest metric ratio minus 1", xlabel="u", ylabel="v / altitude", metadata=m))
    if "covers" in by and "histograms" in by["covers"].data:
        h = by["covers"].data["histograms"]["a"]
        out.plot("fixed_point_histogram", lambda m: svg.bar_chart(
            h, title="Fixed points of phi(a)", xlabel="fixed points", ylabel="trials", metadata=m))
    if "cheng" in by or "surface" in by:
        series = {}
        if "cheng" in by:
            d = by["cheng"].data
            series["Cheng bound, k=1 (log10 g)"] = ([math.log10(g) for g in d["genus"]], d["bound_k1"])
        if "surface" in by:
            d = by["surface"].data
            series["test-function bound (log10 piece genus)"] = ([math.log10(g) for g in d["piece_genus"]], d["bound"])
        out.plot("bound_vs_genus", lambda m: svg.line_chart(
            {k: (x, [math.log10(v) for v in y]) for k, (x, y) in series.items()},
            title="Eigenvalue bounds against genus", xlabel="log10 genus", ylabel="log10 bound", metadata=m))


def cmd_verify_all(args) -> int:
    cfg, p = _resolve(args, VERIFY_PARAMS, "verify-all")
    names = p["suite"] or list(SUITES)
    bad = [n for n in names if n not in SUITES]
    if bad:
        raise UsageError(f"unknown suite(s) {bad}; choose from {sorted(SUITES)}")
    results = []
    timings = {}
    for name in names:
        t0 = time.perf_counter()
        results.extend(run_suites([name], cfg.seed, trials=p["trials"], delta=p["delta"]))
        timings[name] = time.perf_counter() - t0
    all_ok = all(r.passed for r in results)
    out = Outputs(cfg)
    out.report({"passed": all_ok, "suites": [r.to_dict() for r in results]})
    out.table("suites", ["suite", "check", "value", "relation", "limit", "passed"],
              [[r.name, c.name, c.value, c.relation, c.limit, c.passed] for r in results for c in r.checks])
    _suite_plots(out, results)
    width = max(len(n) for n in names)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {len(r.checks):3d} checks  {timings[r.name]:7.2f} s")
    if not all_ok:
        print("failing suites:", file=sys.stderr)
        for r in results:
            for c in r.failures:
                print(f"  {r.name}: {c.name} = {c.value!r} (need {c.relation} {c.limit!r})", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- covers ---------------------------------------------------------------------------------------


def cmd_covers(args) -> int:
    spec = {"fixfree": FIXFREE_PARAMS, "systole": SYSTOLE_PARAMS, "joint": JOINT_PARAMS}[args.experiment]
    cfg, p = _resolve(args, spec, f"covers {args.experiment}")
    out = Outputs(cfg)
    for key in ("n", "trials"):
        if p[key] < 1:
            raise covers.DomainError(f"{key} must be positive, got {p[key]}")
    if args.experiment == "fixfree":
        w = covers.word(p["word"])
        core, d = w.power_decomposition
        counts = covers.cycle_length_counts(w, p["n"], p["trials"], cfg.seed)
        hits = counts[:, 0] == 0
        est = float(hits.mean())
        se = float(math.sqrt(est * (1 - est) / hits.size))
        limit = covers.nica_limit(d)
        result = {"word": str(w), "power": d, "estimate": est, "stderr": se, "limit": limit,
                  "z": (est - limit) / se if se > 0 else None}
        hist = np.bincount(counts[:, 0]).tolist()
        mean_cycles = counts.mean(axis=0).tolist()
        out.table("fixed_points", ["fixed_points", "trials"], [[k, v] for k, v in enumerate(hist)])
        out.table("cycle_types", ["cycle_length", "mean_count"], [[k + 1, v] for k, v in enumerate(mean_cycles)])
        out.plot("cycle_type_histogram", lambda m: svg.bar_chart(
            mean_cycles, title=f"Mean number of k-cycles of phi({w})", xlabel="k - 1", ylabel="mean count", metadata=m))
        print(f"P(Fix(phi({w})) = 0) = {est:.4f} +- {se:.4f}   limit {limit:.4f}")
    elif args.experiment == "joint":
        if not p["words"]:
            raise UsageError("covers joint needs --words")
        r = covers.joint_fixed_point_free(p["words"], p["n"], p["trials"], cfg.seed)
        result = {k: v for k, v in r.items()}
        result["limit_product"] = float(np.prod([covers.nica_limit(covers.word(x).power_decomposition[1]) for x in p["words"]]))
        out.table("joint", ["quantity", "value"], [[k, v] for k, v in result.items() if isinstance(v, (int, float))])
        print(f"joint {r['joint']:.4f}  product {r['product']:.4f}  difference {r['difference']:+.4f} +- {r['difference_stderr']:.4f}")
    else:
        if p["eps"] is None:
            raise UsageError("covers systole needs --eps")
        r = covers.systole_prob(p["eps"], p["n"], p["trials"], cfg.seed, max_word_len=p["max_word_len"])
        result = r
        out.table("systole_words", ["word", "length", "no_short_cycle", "power_fixed_point_free", "limit"],
                  [[pw.get("word"), pw.get("length"), pw.get("no_short_cycle"), pw.get("power_fixed_point_free"), pw.get("nica_limit")]
                   for pw in r["per_word"]])
        print(f"P(no closed geodesic shorter than {p['eps']}) = {r['estimate']:.4f} +- {r['stderr']:.4f}"
              f"   limit product {r['nica_product']:.4f}   classes {len(r['classes'])}")
    out.report(result)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", help="64-bit integer seed recorded in every output (default 0)")
    common.add_argument("--output-dir", help="directory for report.json, tables/ and plots/")
    common.add_argument("--formats", help="comma-separated subset of csv,json,svg (default csv,json)")
    common.add_argument("--config", help="file of key=value lines; command-line flags take precedence")
    common.add_argument("--timestamp", action="store_true", default=None, help="embed the run time in SVG metadata")

    parser = _Parser(prog="hypgeo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hypgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pol = sub.add_parser("polygon", parents=[common], help="solve a right-angled polygon and print its identity residuals")
    pol.add_argument("kind", choices=("pentagon", "hexagon", "trirectangle"))
    for k in ("a", "b", "c"):
        pol.add_argument(f"--{k}", type=float, help=f"side length {k} (hexagon needs a, b, c; the others need a, b)")
    pol.add_argument("--regular", action="store_true", default=None, help="use the regular polygon instead of given sides")
    pol.set_defaults(func=cmd_polygon)

    ver = sub.add_parser("verify-all", parents=[common], help="run the verification suites")
    ver.add_argument("--suite", action="append", choices=sorted(SUITES), help="restrict to a suite (repeatable)")
    ver.add_argument("--delta", type=float, help="perturbation size for the pants-maps and curvature suites")
    ver.add_argument("--trials", type=int, help="sample count for the randomized suites")
    ver.set_defaults(func=cmd_verify_all)

    cov = sub.add_parser("covers", help="random permutation covers of the thrice-punctured sphere")
    csub = cov.add_subparsers(dest="experiment", required=True, parser_class=_Parser)
    ff = csub.add_parser("fixfree", parents=[common], help="probability that a word acts without fixed points")
    ff.add_argument("--word", help="word in a, b and their inverses A, B (default a)")
    sy = csub.add_parser("systole", parents=[common], help="probability that every short closed geodesic has no lift of the same length")
    sy.add_argument("--eps", type=float, help="length threshold for short closed geodesics")
    sy.add_argument("--max-word-len", type=int, help="longest reduced word enumerated (default 8)")
    jo = csub.add_parser("joint", parents=[common], help="joint fixed-point-free probability of several words")
    jo.add_argument("--words", nargs="+", help="words that must all act without fixed points")
    for p in (ff, sy, jo):
        p.add_argument("--n", type=int, help="degree of the cover")
        p.add_argument("--trials", type=int, help="number of sampled covers")
        p.set_defaults(func=cmd_covers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hypgeo: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypGeoError as exc:
        print(f"hypgeo: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
