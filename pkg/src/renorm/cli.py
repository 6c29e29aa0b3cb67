"""Command-line driver: ``renorm <subcommand> [options]``.

Tables are written as CSV, reports as JSON and diagrams as DOT, either to
stdout or into ``--out``.  Exit status is 0 when every requested check
passes, 1 on a failed check (with a JSON failure report) and 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import causal_order as co
from . import fields_hopf as fh
from ._numerics import thread_cap

__all__ = ["ConfigError", "RunConfig", "main", "run"]


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    def __init__(self, report: dict):
        super().__init__(report.get("summary", "check failed"))
        self.report = report


# Allowed top-level keys per subcommand; anything else is rejected.
SCHEMAS: dict[str, set[str]] = {
    "wick": {"vev", "graphs", "star", "symmetric"},
    "causal": {"points", "c", "hasse", "cover", "n", "samples", "chi", "sharpness"},
    "extend": {"distribution", "test", "cutoff", "ambiguity", "eps_route"},
    "mellin": {"symbol", "test", "poles", "lowest", "rg", "ells", "degree", "residue"},
    "microlocal": {"cone", "check", "chart", "eps", "samples"},
    "wightman": {"poisson", "subordination", "delta_plus", "klein_gordon", "wick"},
    "criterion": {"numbers"},
}

SAMPLED = {"causal", "microlocal", "criterion"}


@dataclass
class RunConfig:
    """Everything a subcommand needs, merged from the TOML/JSON file and flags."""

    subcommand: str
    input: Path | None = None
    settings: dict = field(default_factory=dict)
    tol: float | None = None
    seed: int | None = None
    out: Path | None = None

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError(f"{self.subcommand}: a seed is required (--seed or 'seed' in the config)")
        return self.seed


def load_config(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def build_config(args: argparse.Namespace) -> RunConfig:
    settings: dict = {}
    seed = args.seed
    tol = args.tol
    if args.config is not None:
        settings = load_config(Path(args.config))
        if not isinstance(settings, dict):
            raise ConfigError("config root must be a table")
        settings = dict(settings)
        # command-line flags win over the file
        file_seed, file_tol = settings.pop("seed", None), settings.pop("tol", None)
        seed = file_seed if seed is None else seed
        tol = file_tol if tol is None else tol
    for key, value in vars(args).items():
        if key in {"config", "seed", "tol", "out", "command", "func"} or value is None:
            continue
        if value is False:
            continue
        settings[key] = value
    unknown = set(settings) - SCHEMAS[args.command]
    if unknown:
        raise ConfigError(f"{args.command}: unknown keys {sorted(unknown)}")
    if seed is not None and not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    out = Path(args.out) if args.out else None
    return RunConfig(args.command, Path(args.config) if args.config else None, settings, tol, seed, out)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def _fmt(v: Any) -> Any:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+.17g}j"
    return v


def _json(obj: Any) -> str:
    from .checks import _jsonable

    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


class Emitter:
    """Collects named outputs and writes them to ``--out`` or stdout."""

    def __init__(self, out: Path | None):
        self.out = out
        self.files: list[tuple[str, str]] = []

    def add(self, name: str, text: str) -> None:
        self.files.append((name, text))

    def flush(self) -> None:
        if self.out is None:
            for _, text in self.files:
                sys.stdout.write(text)
            return
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files:
            (self.out / name).write_text(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _parse_p(text: str | Sequence[int]) -> list[int]:
    if isinstance(text, str):
        try:
            values = [int(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad exponent list {text!r}") from exc
    else:
        values = [int(v) for v in text]
    if not values or any(v < 0 for v in values):
        raise ConfigError(f"exponents must be non-negative integers, got {text!r}")
    return values


def cmd_wick(cfg: RunConfig, emit: Emitter) -> None:
    s = cfg.settings
    rows = []
    for p in _as_list(s.get("vev")):
        p = _parse_p(p)
        rows.append({"p": ",".join(map(str, p)), "amp": str(fh.vev(p))})
    if rows:
        emit.add("vev.csv", _csv(rows))
    graph_rows = []
    for p in _as_list(s.get("graphs")):
        p = _parse_p(p)
        for g in fh.enumerate_graphs(p):
            graph_rows.append({"p": ",".join(map(str, p)), "upper": " ".join(map(str, g.upper))})
    if graph_rows:
        emit.add("graphs.csv", _csv(graph_rows))
    star_rows = []
    for pair in _as_list(s.get("star")):
        factors = [_parse_p(x) for x in (pair.split(";") if isinstance(pair, str) else pair)]
        # each factor takes the next block of labels, so factors never share one
        polys, offset = [], 0
        for f in factors:
            polys.append(fh.FieldPoly.monomial({offset + i + 1: e for i, e in enumerate(f) if e}))
            offset += len(f)
        if len(polys) < 2:
            raise ConfigError("star needs at least two factors separated by ';'")
        product = fh.star_chain(polys, symmetric=bool(s.get("symmetric", False)))
        for m, amp in sorted(product.terms.items(), key=lambda kv: kv[0].items):
            star_rows.append({"factors": pair if isinstance(pair, str) else ";".join(map(str, pair)), "monomial": str(m), "amp": str(amp)})
    if star_rows:
        emit.add("star.csv", _csv(star_rows))
    if not (rows or graph_rows or star_rows):
        raise ConfigError("wick: nothing requested (use --vev, --graphs or --star)")


def _as_list(value: Any) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def cmd_causal(cfg: RunConfig, emit: Emitter) -> None:
    s = cfg.settings
    structure = co.CausalStructure(1, float(s.get("c", 0.0)))
    if "hasse" in s:
        spec = s["hasse"]
        pts = spec if isinstance(spec, list) else load_config(Path(spec)).get("points")
        if not pts:
            raise ConfigError("hasse: no points given")
        diagram = co.hasse(structure, pts)
        emit.add("hasse.dot", diagram.to_dot())
    if s.get("cover"):
        seed = cfg.require_seed()
        rng = np.random.default_rng(seed)
        n = int(s.get("n", 4))
        samples = int(s.get("samples", 1000))
        sizes = []
        for _ in range(samples):
            sizes.append(len(co.admissible_sets(structure, rng.normal(size=(n, structure.dim)))))
        report = {"n": n, "samples": samples, "empty": sizes.count(0), "min_sets": min(sizes), "mean_sets": float(np.mean(sizes))}
        emit.add("cover.json", _json(report))
        if report["empty"]:
            raise CheckFailure({"summary": "configurations without an admissible region", **report})
    if s.get("chi"):
        seed = cfg.require_seed()
        rng = np.random.default_rng(seed)
        n = int(s.get("n", 3))
        fam = co.PartitionFamily(structure.widened(max(structure.c, 0.5)), n, float(s.get("sharpness", 4.0)))
        worst = 0.0
        for _ in range(int(s.get("samples", 200))):
            worst = max(worst, abs(sum(fam.values(rng.normal(size=(n, 2))).values()) - 1.0))
        tol = cfg.tol or 1e-12
        emit.add("chi.json", _json({"n": n, "max_sum_defect": worst, "tol": tol}))
        if worst > tol:
            raise CheckFailure({"summary": "partition of unity defect", "max_sum_defect": worst})
    if not ({"hasse"} & set(s) or s.get("cover") or s.get("chi")):
        raise ConfigError("causal: nothing requested (use --hasse, --cover or --chi)")


def _test_function(spec: dict | None, dim: int = 1):
    from .dist_core import TestFunction

    spec = dict(spec or {})
    kind = spec.pop("kind", "gaussian")
    allowed = {"center", "width", "poly", "name", "expr", "support_radius"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"test: unknown keys {sorted(unknown)}")
    if kind == "gaussian":
        return TestFunction.gaussian(spec.get("center", 0.3), spec.get("width", 1.0), spec.get("poly", [1.0, 0.5]), dim=dim, name=spec.get("name", "phi"))
    if kind == "bump":
        return TestFunction.bump(spec.get("center", 0.0), spec.get("width", 1.0), spec.get("poly", [1.0]), dim=dim, name=spec.get("name", "phi"))
    if kind == "expr":
        return TestFunction.from_string(spec["expr"], dim, spec.get("support_radius", 10.0), spec.get("name", "phi"))
    raise ConfigError(f"test: unknown kind {kind!r}")


def cmd_extend(cfg: RunConfig, emit: Emitter) -> None:
    from .dist_core import CutoffPair, SampledDistribution
    from .extension import extend, extension_difference_chi

    s = cfg.settings
    dist = dict(s.get("distribution", {}))
    allowed = {"exponent", "support", "dim", "coef", "log_power", "degree"}
    if set(dist) - allowed:
        raise ConfigError(f"distribution: unknown keys {sorted(set(dist) - allowed)}")
    if "exponent" not in dist:
        raise ConfigError("distribution.exponent is required")
    dim = int(dist.get("dim", 1))
    t = SampledDistribution.power(float(dist["exponent"]), dim, dist.get("support", "all"), int(dist.get("log_power", 0)), float(dist.get("coef", 1.0)))
    cut = s.get("cutoff", {})
    cutoff = CutoffPair(float(cut.get("a", 1.0)), float(cut.get("b", 3.0)), dim)
    phi = _test_function(s.get("test"), dim)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ext = extend(t, dist.get("degree"), cutoff)
    report = {
        "distribution": dist,
        "subtraction_order": ext.order,
        "log_demoted": ext.log_demoted,
        "warnings": [str(w.message) for w in caught],
        "extended": ext.pair(phi).value,
    }
    if s.get("eps_route") and dim == 1:
        limit = ext.limit_value(phi).value
        report["eps_route"] = limit
        report["route_discrepancy"] = abs(limit - report["extended"])
    if s.get("ambiguity"):
        # change of cutoff: a second (a, b) pair, by default twice as wide
        other = s["ambiguity"] if isinstance(s["ambiguity"], dict) else {}
        second = CutoffPair(float(other.get("a", 2 * cutoff.a)), float(other.get("b", 2 * cutoff.b)), dim)
        diff = extension_difference_chi(t, dist.get("degree"), cutoff, second, phi)
        report["cutoff_change"] = {"formula": diff.formula, "direct": diff.direct, "discrepancy": diff.discrepancy}
    emit.add("extend.json", _json(report))
    tol = cfg.tol or 1e-6
    worst = max(report.get("route_discrepancy", 0.0), report.get("cutoff_change", {}).get("discrepancy", 0.0))
    if worst > tol:
        raise CheckFailure({"summary": "extension routes disagree", **report})


def _symbol(spec: dict | None):
    from .mellin_riesz import FuchsianSymbol

    spec = dict(spec or {})
    allowed = {"exponent", "coef", "log_power", "parity"}
    if set(spec) - allowed:
        raise ConfigError(f"symbol: unknown keys {sorted(set(spec) - allowed)}")
    if "exponent" not in spec:
        raise ConfigError("symbol.exponent is required")
    return FuchsianSymbol.single(float(spec["exponent"]), float(spec.get("coef", 1.0)), int(spec.get("log_power", 0)), spec.get("parity", "half"))


def cmd_mellin(cfg: RunConfig, emit: Emitter) -> None:
    from .mellin_riesz import pole_table, residue_rho, residue_rho_direct, rg_flow

    s = dict(cfg.settings)
    if isinstance(s.get("poles"), str):
        s.update({k: v for k, v in load_config(Path(s["poles"])).items() if k not in s or k == "poles"})
        s["poles"] = True
        unknown = set(s) - SCHEMAS["mellin"]
        if unknown:
            raise ConfigError(f"mellin: unknown keys {sorted(unknown)}")
    t = _symbol(s.get("symbol"))
    phi = _test_function(s.get("test"))
    did = False
    if s.get("poles"):
        rows = pole_table(t, [phi], float(s.get("lowest", -1.0)))
        emit.add("poles.csv", _csv(rows))
        did = True
    if s.get("rg"):
        fit = rg_flow(t, phi, s.get("ells"), s.get("degree"))
        rows = [{"k": k, "coefficient": c} for k, c in enumerate(fit.coefficients)]
        emit.add("rg.csv", _csv(rows))
        emit.add("rg.json", _json({"residual": fit.residual, "degree": fit.degree, "slope": fit.slope}))
        did = True
    if s.get("residue"):
        formula, direct = residue_rho(t, phi), residue_rho_direct(t, phi)
        report = {"formula": formula, "direct": direct, "discrepancy": abs(formula - direct)}
        emit.add("residue.json", _json(report))
        did = True
        if report["discrepancy"] > (cfg.tol or 1e-6):
            raise CheckFailure({"summary": "residue paths disagree", **report})
    if not did:
        raise ConfigError("mellin: nothing requested (use --poles, --rg or --residue)")


def _cone_from_spec(spec: dict):
    from .checks import conoid_chart_cone, counterexample_cone
    from .microlocal import conormal
    from .wightman import wf_qs_cone

    spec = dict(spec)
    kind = spec.get("kind")
    if kind == "conormal":
        if "defining" not in spec or "dim" not in spec:
            raise ConfigError("conormal cones need 'defining' and 'dim'")
        return conormal(spec["defining"], int(spec["dim"]), float(spec.get("box", 1.0)))
    if kind == "counterexample":
        return counterexample_cone()
    if kind == "conoid":
        return conoid_chart_cone()
    if kind == "wf_qs":
        return wf_qs_cone(int(spec.get("n", 3)))
    raise ConfigError(f"cone: unknown kind {kind!r}")


def cmd_microlocal(cfg: RunConfig, emit: Emitter) -> None:
    from .microlocal import soft_landing_check

    s = cfg.settings
    seed = cfg.require_seed()
    if "cone" not in s:
        raise ConfigError("microlocal: a [cone] table is required")
    cone = _cone_from_spec(s["cone"])
    check = s.get("check", "soft_landing")
    if check != "soft_landing":
        raise ConfigError(f"microlocal: unknown check {check!r}")
    n = int(s.get("chart", 1))
    report = soft_landing_check(cone, n, float(s.get("eps", 1.0)), int(s.get("samples", 10_000)), seed)
    out = {"cone": cone.tag, **report.to_dict()}
    emit.add("soft_landing.json", _json(out))
    expect = s["cone"].get("expect")
    if expect is not None and bool(expect) != report.holds:
        raise CheckFailure({"summary": "soft landing verdict differs from expectation", **out})


def cmd_wightman(cfg: RunConfig, emit: Emitter) -> None:
    from scipy import special

    from .wightman import (
        klein_gordon_residual,
        massive_delta_plus,
        poisson_closed,
        poisson_integral,
        subordination_check,
    )

    s = cfg.settings
    failures = []
    tol = cfg.tol
    rows = []
    for y, x, n in s.get("poisson", []):
        closed, integral = poisson_closed(y, x, n), poisson_integral(y, x, n)
        rows.append({"y": y, "x": json.dumps(x), "n": n, "closed": closed, "integral": integral, "error": abs(closed - integral)})
        if rows[-1]["error"] > (tol or 1e-6):
            failures.append(rows[-1])
    if rows:
        emit.add("poisson.csv", _csv(rows))
    rows = []
    for A, y in s.get("subordination", []):
        dev = subordination_check(A, y)
        rows.append({"A": A, "y": y, "deviation": dev})
        if dev > (tol or 1e-9):
            failures.append(rows[-1])
    if rows:
        emit.add("subordination.csv", _csv(rows))
    rows = []
    for t, x, m in s.get("delta_plus", []):
        value = massive_delta_plus(t, x, m, 1)
        row = {"t": t, "x": x, "m": m, "re": value.real, "im": value.imag}
        if abs(x) > abs(t):
            oracle = special.k0(m * math.sqrt(x * x - t * t)) / (2 * math.pi)
            row["bessel"] = float(oracle)
            row["error"] = abs(value - oracle)
            if row["error"] > (tol or 1e-5):
                failures.append(row)
        rows.append(row)
    if rows:
        emit.add("delta_plus.csv", _csv(rows))
    rows = []
    for t, x, m in s.get("klein_gordon", []):
        res = klein_gordon_residual(t, x, m)
        rows.append({"t": t, "x": x, "m": m, "residual": res})
        if res > (tol or 1e-4):
            failures.append(rows[-1])
    if rows:
        emit.add("klein_gordon.csv", _csv(rows))
    if not any(k in s for k in ("poisson", "subordination", "delta_plus", "klein_gordon")):
        raise ConfigError("wightman: nothing requested")
    if failures:
        raise CheckFailure({"summary": f"{len(failures)} identity checks failed", "failures": failures})


def cmd_criterion(cfg: RunConfig, emit: Emitter) -> None:
    from .checks import CRITERIA, run_criterion

    seed = cfg.require_seed()
    numbers = cfg.settings.get("numbers") or list(CRITERIA)
    failed = []
    for k in numbers:
        if int(k) not in CRITERIA:
            raise ConfigError(f"no criterion {k}")
        res = run_criterion(int(k), seed)
        print(res.line(), file=sys.stderr)
        report = res.to_dict()
        report.pop("elapsed")
        emit.add(f"criterion_{int(k):02d}.json", _json(report))
        if not res.passed:
            failed.append(report)
    if failed:
        raise CheckFailure({"summary": f"{len(failed)} criteria failed", "failed": [f["criterion"] for f in failed]})


COMMANDS: dict[str, Callable[[RunConfig, Emitter], None]] = {
    "wick": cmd_wick,
    "causal": cmd_causal,
    "extend": cmd_extend,
    "mellin": cmd_mellin,
    "microlocal": cmd_microlocal,
    "wightman": cmd_wightman,
    "criterion": cmd_criterion,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renorm", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML (or .json) file with subcommand settings")
    common.add_argument("--seed", type=int, help="seed for sampled checks")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--out", help="directory for output files (default: stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wick", parents=[common], help="VEVs, graph tables and star products")
    p.add_argument("--vev", action="append", help="exponents, e.g. 2,2")
    p.add_argument("--graphs", action="append", help="list graph matrices for exponents")
    p.add_argument("--star", action="append", help="factors as exponent lists joined by ';'")
    p.add_argument("--symmetric", action="store_true", help="identify D(i,j) with D(j,i)")

    p = sub.add_parser("causal", parents=[common], help="Hasse diagrams, cover statistics, partition checks")
    p.add_argument("--hasse", help="config file with 'points'")
    p.add_argument("--cover", action="store_true")
    p.add_argument("--chi", action="store_true")
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--c", type=float)

    p = sub.add_parser("extend", parents=[common], help="extension and counterterm reports")
    p.add_argument("--eps-route", dest="eps_route", action="store_true")
    p.add_argument("--ambiguity", action="store_true")

    p = sub.add_parser("mellin", parents=[common], help="pole tables, residues and RG fits")
    p.add_argument("--poles", nargs="?", const=True, help="optional symbol config file")
    p.add_argument("--rg", action="store_true")
    p.add_argument("--residue", action="store_true")
    p.add_argument("--lowest", type=float)

    p = sub.add_parser("microlocal", parents=[common], help="cone checks with witnesses")
    p.add_argument("--samples", type=int)
    p.add_argument("--chart", type=int, help="number of x-coordinates in the (x, h) chart")
    p.add_argument("--eps", type=float)

    sub.add_parser("wightman", parents=[common], help="two-point function tables and identity checks")

    p = sub.add_parser("criterion", parents=[common], help="run acceptance criteria")
    p.add_argument("numbers", nargs="*", type=int)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        thread_cap()
        cfg = build_config(args)
        if cfg.subcommand in SAMPLED and cfg.subcommand != "causal":
            cfg.require_seed()
        emit = Emitter(cfg.out)
        COMMANDS[cfg.subcommand](cfg, emit)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        emit.flush()
        sys.stdout.write(_json(exc.report))
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        # bad values that slipped past the schema surface here
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    emit.flush()
    return 0


def main() -> None:
    sys.exit(run())
