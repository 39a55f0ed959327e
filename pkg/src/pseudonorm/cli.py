"""Command-line interface.

Commands
--------
norm, asym   single spectral point, numeric or asymptotic
sweep        table over a parameter grid (numeric, asymptotic or both)
levels       level curve and critical boundary over a grid
airy         model-operator constants (cached)
inverse      potential from a prescribed growth rate
verify       built-in check scenarios; exit code = number of failures
check        assumption report for a potential

Tables are CSV with ``#`` metadata lines and a header row, or JSON with the
same columns. Floats are written with 17 significant digits; an empty CSV
field and a JSON ``null`` both mean "no value".
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import asymptotics as asy
from .airy_ref import CACHE_ENV, AiryQuery, airy_norm, airy_norm_asym
from .errors import ConfigError, NotConverged, PseudonormError, ScenarioUnknown
from .inverse import check_rate_conditions, loglog_slope, parse_rate, potential_from_rate, verify_rate
from .operator_lab import resolvent_norm_numeric
from .potential import check_assumptions, parse_potential

SWEEP_COLUMNS = ["param", "lam_re", "lam_im", "numeric", "asymptotic", "ratio",
                 "remainder_scale", "converged", "est_rel_error", "error"]
LEVEL_COLUMNS = ["param", "level_leading", "level_lambert", "critical_boundary",
                 "critical_clamped", "error"]
MODES = ("norm", "asym", "both")
EXIT_CAP = 125


# -- config ------------------------------------------------------------------------


@dataclass
class SweepConfig:
    potential: str = "monomial:n=2"
    mode: str = "both"
    axis: str = asy.IMAG
    curve: str = "0"
    grid: str = "10:1000:5:log"
    tol: float = 1e-6
    format: str = "csv"
    out: str = "-"
    jobs: int = 1
    force: bool = False
    eps: float = 0.1
    eps_prime: float = 0.1

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"field 'mode': expected one of {MODES}, got {self.mode!r}")
        if self.axis not in (asy.IMAG, asy.REAL):
            raise ConfigError(f"field 'axis': expected imag or real, got {self.axis!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"field 'format': expected csv or json, got {self.format!r}")
        if not (isinstance(self.jobs, int) and self.jobs >= 1):
            raise ConfigError(f"field 'jobs': expected a positive integer, got {self.jobs!r}")
        if not (isinstance(self.tol, (int, float)) and 0 < self.tol < 1):
            raise ConfigError(f"field 'tol': expected a number in (0, 1), got {self.tol!r}")
        parse_grid(self.grid)
        try:
            parse_potential(self.potential)
        except (ValueError, KeyError, OSError) as exc:
            raise ConfigError(f"field 'potential': {exc}") from None
        try:
            asy.CurveSpec.parse(self.axis, self.curve)
        except ValueError as exc:
            raise ConfigError(f"field 'curve': {exc}") from None
        return self


@dataclass
class VerifyConfig:
    scenario: str = "airy-constants"
    out_dir: str = "figure_data"
    extra: dict = field(default_factory=dict)


def parse_grid(text) -> np.ndarray:
    """``start:stop:count:log|lin``; a single point when count is 1."""
    parts = str(text).split(":")
    if len(parts) != 4:
        raise ConfigError(f"field 'grid': expected start:stop:count:log|lin, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"field 'grid': cannot read numbers in {text!r}") from None
    spacing = parts[3]
    if count < 1:
        raise ConfigError("field 'grid': count must be at least 1")
    if spacing not in ("log", "lin"):
        raise ConfigError(f"field 'grid': spacing must be log or lin, got {spacing!r}")
    if count == 1:
        return np.array([start])
    if not start < stop:
        raise ConfigError("field 'grid': start must be below stop")
    if spacing == "log":
        if start <= 0:
            raise ConfigError("field 'grid': log spacing needs start > 0")
        return np.geomspace(start, stop, count)
    return np.linspace(start, stop, count)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def build_config(cls, args, config_path=None):
    """Defaults, then the JSON config, then any command-line flag that was given."""
    names = {f.name for f in cls.__dataclass_fields__.values()}
    values = {}
    if config_path:
        raw = load_config(config_path)
        unknown = sorted(set(raw) - names)
        if unknown:
            raise ConfigError(f"{config_path}: unknown field(s) {', '.join(unknown)}")
        values.update(raw)
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = cls(**values)
    return cfg.validate() if hasattr(cfg, "validate") else cfg


# -- table output ------------------------------------------------------------------


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, float, np.floating, np.integer)):
        v = float(v)
        return "" if math.isnan(v) else "%.17g" % v
    return str(v).replace(",", ";").replace("\n", " ")


def _json_value(v):
    if isinstance(v, bool):
        return 1 if v else 0
    if isinstance(v, (int, float, np.floating, np.integer)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return None if v == "" else v


def write_table(fh, columns, rows, meta, fmt="csv"):
    """Write rows (dicts) as CSV or JSON with the same columns and values."""
    if fmt == "json":
        doc = {"version": __version__, "meta": meta, "columns": list(columns),
               "rows": [[_json_value(r.get(c, "")) for c in columns] for r in rows]}
        fh.write(json.dumps(doc, indent=1, sort_keys=False) + "\n")
        return
    fh.write(f"# pseudonorm {__version__}\n")
    fh.write("# config " + json.dumps(meta, sort_keys=True) + "\n")
    fh.write(",".join(columns) + "\n")
    for r in rows:
        fh.write(",".join(_fmt(r.get(c, "")) for c in columns) + "\n")


def read_table(text):
    """Inverse of :func:`write_table` for either format; returns (columns, rows)."""
    s = text.lstrip()
    if s.startswith("{"):
        doc = json.loads(s)
        rows = []
        for raw in doc["rows"]:
            vals = []
            for c, v in zip(doc["columns"], raw):
                if v is None:
                    v = "" if c == "error" else math.nan
                elif v in ("inf", "-inf"):
                    v = float(v)
                vals.append(v)
            rows.append(vals)
        return doc["columns"], rows
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    columns = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        vals = []
        for c, cell in zip(columns, ln.split(",")):
            if cell == "":
                vals.append("" if c == "error" else math.nan)
            elif c == "error":
                vals.append(cell)
            else:
                vals.append(float(cell))
        rows.append(vals)
    return columns, rows


def _emit(cfg_out, columns, rows, meta, fmt):
    if cfg_out in (None, "-"):
        write_table(sys.stdout, columns, rows, meta, fmt)
    else:
        with open(cfg_out, "w") as fh:
            write_table(fh, columns, rows, meta, fmt)


# -- row evaluation ----------------------------------------------------------------


def spectral_point(axis, curve, param) -> complex:
    off = curve.offset(param)
    return complex(off, param) if axis == asy.IMAG else complex(param, off)


def _asym(V, curve, param, force, tol):
    return asy.resnorm_curve(V, curve, param, force=force)


def sweep_row(potential, mode, axis, curve_expr, param, tol, force):
    """One sweep row; errors land in the ``error`` column."""
    V = parse_potential(potential)
    curve = asy.CurveSpec.parse(axis, curve_expr)
    lam = spectral_point(axis, curve, param)
    row = {"param": param, "lam_re": lam.real, "lam_im": lam.imag, "numeric": math.nan,
           "asymptotic": math.nan, "ratio": math.nan, "remainder_scale": math.nan,
           "converged": math.nan, "est_rel_error": math.nan, "error": ""}
    errors = []
    if mode in ("norm", "both"):
        try:
            res = resolvent_norm_numeric(V, lam, tol=tol)
        except NotConverged as exc:
            res = exc.result
            errors.append("NotConverged")
        except (PseudonormError, ValueError, ArithmeticError) as exc:
            res = None
            errors.append(f"numeric {type(exc).__name__}: {exc}")
        if res is not None:
            row.update(numeric=res.value, converged=res.converged,
                       est_rel_error=res.est_rel_error)
    if mode in ("asym", "both"):
        try:
            est = _asym(V, curve, param, force, tol)
            row.update(asymptotic=est.value, remainder_scale=est.remainder_scale)
        except (PseudonormError, ValueError, ArithmeticError) as exc:
            errors.append(f"asym {type(exc).__name__}: {exc}")
    if math.isfinite(row["numeric"]) and math.isfinite(row["asymptotic"]):
        row["ratio"] = row["numeric"] / row["asymptotic"]
    row["error"] = "; ".join(errors)
    return row


def _sweep_task(args):
    return sweep_row(*args)


def run_sweep(cfg: SweepConfig) -> list:
    grid = parse_grid(cfg.grid)
    tasks = [(cfg.potential, cfg.mode, cfg.axis, cfg.curve, float(t), cfg.tol, cfg.force)
             for t in grid]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]


def level_row(V, axis, eps, eps_prime, param):
    row = {"param": param, "level_leading": math.nan, "level_lambert": math.nan,
           "critical_boundary": math.nan, "critical_clamped": math.nan, "error": ""}
    errors = []
    try:
        cb = asy.critical_boundary(V, axis, eps, eps_prime, param)
        row.update(critical_boundary=cb.value, critical_clamped=cb.clamped)
    except (PseudonormError, ValueError) as exc:
        errors.append(f"boundary {type(exc).__name__}: {exc}")
    for method in ("leading", "lambert"):
        try:
            row["level_" + method] = asy.level_curve(V, axis, eps, param, method)
        except (PseudonormError, ValueError) as exc:
            errors.append(f"{method} {type(exc).__name__}: {exc}")
    row["error"] = "; ".join(errors)
    return row


def run_levels(cfg: SweepConfig) -> list:
    V = parse_potential(cfg.potential)
    return [level_row(V, cfg.axis, cfg.eps, cfg.eps_prime, float(t)) for t in parse_grid(cfg.grid)]


# -- commands ----------------------------------------------------------------------


def _complex(text):
    return complex(str(text).replace(" ", "").replace("i", "j"))


def _point(args):
    if args.lam is not None:
        return _complex(args.lam)
    if args.param is None:
        raise ConfigError("give --lam or --param")
    curve = asy.CurveSpec.parse(args.axis or asy.IMAG, args.curve or "0")
    return spectral_point(args.axis or asy.IMAG, curve, args.param)


def _print_json(obj):
    print(json.dumps(obj, indent=1, default=float))


def cmd_norm(args):
    V = parse_potential(args.potential or "monomial:n=2")
    lam = _point(args)
    try:
        res = resolvent_norm_numeric(V, lam, tol=args.tol or 1e-6)
    except NotConverged as exc:
        res = exc.result
    out = res.to_dict()
    out.update(lam_re=lam.real, lam_im=lam.imag)
    _print_json(out)
    return 0


def cmd_asym(args):
    V = parse_potential(args.potential or "monomial:n=2")
    axis = args.axis or asy.IMAG
    if args.param is None:
        raise ConfigError("asym needs --param")
    curve = asy.CurveSpec.parse(axis, args.curve or "0")
    est = asy.resnorm_curve(V, curve, args.param, force=bool(args.force))
    out = est.to_dict()
    lam = spectral_point(axis, curve, args.param)
    out.update(lam_re=lam.real, lam_im=lam.imag)
    _print_json(out)
    return 0


def _meta(cfg):
    # the destination does not affect content
    meta = asdict(cfg)
    meta.pop("out")
    return meta


def cmd_sweep(args):
    cfg = build_config(SweepConfig, args, args.config)
    rows = run_sweep(cfg)
    _emit(cfg.out, SWEEP_COLUMNS, rows, _meta(cfg), cfg.format)
    return 0


def cmd_levels(args):
    cfg = build_config(SweepConfig, args, args.config)
    rows = run_levels(cfg)
    _emit(cfg.out, LEVEL_COLUMNS, rows, _meta(cfg), cfg.format)
    return 0


def cmd_airy(args):
    if args.kind == "rotated":
        q = AiryQuery.rotated(r=args.r, theta=args.theta, mu=args.mu, tol=args.tol or 1e-8)
    else:
        if args.beta is None:
            raise ConfigError("generalized needs --beta")
        q = AiryQuery.generalized(args.beta, mu=args.mu, tol=args.tol or 1e-8)
    res = airy_norm(q)
    out = {"kind": q.kind, **q.params(), "mu": q.mu, "value": res.value,
           "converged": res.converged, "est_rel_error": res.est_rel_error}
    try:
        out["asymptotic"] = airy_norm_asym(q)
    except PseudonormError:
        out["asymptotic"] = None
    _print_json(out)
    return 0


def cmd_inverse(args):
    rate = parse_rate(args.rate)
    inv = potential_from_rate(rate, x_max=args.x_max)
    if args.out and args.out != "-":
        inv.to_csv(args.out)
    b_hi = float(inv.v2[-1])
    bs = [b for b in (1.0, 10.0, 100.0, 1e3, 1e4) if inv.v2[0] <= b <= b_hi]
    summary = {"rate": rate.label, "airy_constant": inv.airy_constant,
               "x_range": [float(inv.x[0]), float(inv.x[-1])],
               "v2_range": [float(inv.v2[0]), b_hi],
               "verify": verify_rate(inv, rate, bs),
               "conditions": inv.condition_report}
    if inv.x[-1] >= 1e6:
        summary["loglog_slope_1e2_1e6"] = loglog_slope(inv, 1e2, 1e6)
    _print_json(summary)
    return 0


def cmd_check(args):
    if args.rate:
        _print_json(check_rate_conditions(parse_rate(args.rate)).as_dict())
        return 0
    V = parse_potential(args.potential or "monomial:n=2")
    rep = check_assumptions(V, mode=args.mode)
    _print_json(rep.as_dict())
    return 0 if rep.passed else 1


def cmd_verify(args):
    from .scenarios import SCENARIOS, run_scenario

    names = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    for n in names:
        if n not in SCENARIOS:
            raise ScenarioUnknown(n)
    failures = 0
    for n in names:
        kw = {"out_dir": args.out_dir} if n == "figure-data" else {}
        print(f"== {n}")
        for check in run_scenario(n, **kw):
            print(check.line())
            failures += not check.passed
    print(f"{failures} failure(s)")
    return min(failures, EXIT_CAP)


# -- parser ------------------------------------------------------------------------


def _add_point_flags(p):
    p.add_argument("--potential")
    p.add_argument("--axis", choices=(asy.IMAG, asy.REAL))
    p.add_argument("--curve", help="offset expression c*param^q*(log(param))^s")
    p.add_argument("--param", type=float, help="curve parameter b (imag) or a (real)")
    p.add_argument("--tol", type=float)
    p.add_argument("--force", action="store_true", default=None,
                   help="skip the assumption gate")


def _add_table_flags(p):
    p.add_argument("--potential")
    p.add_argument("--axis", choices=(asy.IMAG, asy.REAL))
    p.add_argument("--curve")
    p.add_argument("--grid", help="start:stop:count:log|lin")
    p.add_argument("--tol", type=float)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help="output path, '-' for stdout")
    p.add_argument("--jobs", type=int)
    p.add_argument("--config", help="JSON config; flags override its fields")
    p.add_argument("--force", action="store_true", default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="pseudonorm",
                                 description="Resolvent norms of complex Schrodinger operators.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--cache", help=f"Airy constant cache file (also ${CACHE_ENV})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="numeric resolvent norm at one point")
    _add_point_flags(p)
    p.add_argument("--lam", help="spectral parameter, e.g. 3+100j")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("asym", help="asymptotic resolvent norm at one point")
    _add_point_flags(p)
    p.set_defaults(func=cmd_asym)

    p = sub.add_parser("sweep", help="numeric and/or asymptotic values over a grid")
    _add_table_flags(p)
    p.add_argument("--mode", choices=MODES)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("levels", help="level curve and critical boundary over a grid")
    _add_table_flags(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-prime", dest="eps_prime", type=float)
    p.set_defaults(func=cmd_levels)

    p = sub.add_parser("airy", help="model operator inverse norm")
    p.add_argument("--kind", choices=("rotated", "generalized"), default="rotated")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=math.pi / 2)
    p.add_argument("--beta", type=float)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_airy)

    p = sub.add_parser("inverse", help="potential with a prescribed growth rate")
    p.add_argument("--rate", required=True, help="const:c=, japanese:alpha=, exp:alpha=, log, decay")
    p.add_argument("--x-max", dest="x_max", type=float, default=1e7)
    p.add_argument("--out", help="CSV table path (x, v2, dv2)")
    p.set_defaults(func=cmd_inverse)

    p = sub.add_parser("verify", help="run built-in check scenarios")
    p.add_argument("--scenario", default="all")
    p.add_argument("--out-dir", dest="out_dir", default="figure_data",
                   help="where figure-data writes its CSVs")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check", help="assumption report")
    p.add_argument("--potential")
    p.add_argument("--mode", choices=("iR", "R"), default="iR")
    p.add_argument("--rate", help="check a growth rate instead of a potential")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cache:
        os.environ[CACHE_ENV] = args.cache
    try:
        return args.func(args)
    except ScenarioUnknown as exc:
        print(f"error: unknown scenario {exc.args[0]!r}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PseudonormError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
