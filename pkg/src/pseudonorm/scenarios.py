"""Built-in verification scenarios and figure-data emitters.

Each scenario returns a list of :class:`Check` records; the CLI prints them
and exits with the number of failures.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import asymptotics as asy
from .airy_ref import AiryQuery, airy_norm, airy_norm_asym, lambert_w0, point_spectrum_empty
from .errors import PseudonormError, ScenarioUnknown
from .inverse import loglog_slope, parse_rate, potential_from_rate, verify_rate
from .operator_lab import resolvent_norm_numeric
from .potential import FULL_LINE, PotentialModel, parse_potential

REF_ROTATED = 1.33377
REF_BETA_2_3 = 1.12648


@dataclass
class Check:
    name: str
    measured: float
    band: str
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: measured {self.measured:.10g} (band {self.band})"


def _within(name, value, target, rel):
    err = abs(value / target - 1.0)
    return Check(name, value, f"{target:g} +- {rel:g} rel", err <= rel)


def airy_constants():
    rot = airy_norm(AiryQuery.rotated()).value
    gen = airy_norm(AiryQuery.generalized(2.0 / 3.0)).value
    return [_within("rotated(1, pi/2, 0)", rot, REF_ROTATED, 5e-3),
            _within("generalized(2/3, 0)", gen, REF_BETA_2_3, 5e-3)]


def fourier_duality():
    a = airy_norm(AiryQuery.generalized(2.0)).value
    b = airy_norm(AiryQuery.rotated()).value
    rel = abs(a - b) / b
    return [Check("generalized(2) vs rotated(1, pi/2)", rel, "<= 1e-3", rel <= 1e-3)]


def scaling_law():
    base = airy_norm(AiryQuery.rotated()).value
    out = []
    for r in (0.5, 2.0, 5.0):
        direct = airy_norm(AiryQuery.rotated(r=r), reduce_scale=False).value
        rel = abs(direct - r ** (-2.0 / 3.0) * base) / direct
        out.append(Check(f"r={r:g}", rel, "<= 1e-3", rel <= 1e-3))
    return out


def _free():
    return PotentialModel(v2=lambda x: np.zeros_like(x), domain_kind=FULL_LINE, label="free")


def _oscillator():
    return PotentialModel(v2=lambda x: np.zeros_like(x), v1=lambda x: x * x,
                          domain_kind=FULL_LINE, label="oscillator")


def self_adjoint_oracles():
    out = []
    for V, lam in ((_free(), -1.0), (_oscillator(), 0.0)):
        val = resolvent_norm_numeric(V, lam, tol=1e-3).value
        out.append(Check(f"{V.label}, lambda={lam:g}", val, "1 +- 2e-3", abs(val - 1.0) <= 2e-3))
    return out


def _ratio(V, lam, est, tol):
    return resolvent_norm_numeric(V, lam, tol=tol).value / est


def davies_imag_trend():
    D = parse_potential("monomial:n=2")
    r1 = _ratio(D, 100j, asy.resnorm_iR(D, 100.0).value, 1e-8)
    r2 = _ratio(D, 1000j, asy.resnorm_iR(D, 1000.0).value, 1e-8)
    return [Check("b=100 ratio", r1, "within 15%", abs(r1 - 1) <= 0.15),
            Check("b=1000 ratio", r2, "within 8%", abs(r2 - 1) <= 0.08),
            Check("b=1000 closer than b=100", abs(r2 - 1), f"< {abs(r1 - 1):.3g}",
                  abs(r2 - 1) < abs(r1 - 1))]


def davies_real_trend():
    D = parse_potential("monomial:n=2")
    r1 = _ratio(D, 1e4, asy.resnorm_R(D, 1e4).value, 1e-8)
    r2 = _ratio(D, 1e5, asy.resnorm_R(D, 1e5).value, 1e-8)
    return [Check("a=1e4 ratio", r1, "within 15%", abs(r1 - 1) <= 0.15),
            Check("a=1e5 closer than a=1e4", abs(r2 - 1), f"< {abs(r1 - 1):.3g}",
                  abs(r2 - 1) < abs(r1 - 1))]


def airy_asymptotics():
    errs = []
    for mu in (2.0, 3.0, 4.0):
        q = AiryQuery.rotated(mu=mu)
        errs.append(abs(airy_norm(q).value / airy_norm_asym(q) - 1.0))
    ok = errs[0] > errs[1] > errs[2]
    return [Check("|ratio-1| decreasing over mu=2,3,4", errs[-1],
                  "strictly decreasing " + ", ".join(f"{e:.3g}" for e in errs), ok)]


def lambert():
    xs = np.geomspace(1e-3, 1e12, 2000)
    worst = max(abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / x for x in xs)
    bad = 0
    for x in np.geomspace(math.e, 1e6, 2000):
        w, l1 = lambert_w0(x), math.log(x)
        l2 = math.log(l1)
        lo = l1 - l2 + 0.5 * l2 / l1
        hi = l1 - l2 + math.e / (math.e - 1.0) * l2 / l1
        bad += not (lo <= w <= hi)
    return [Check("relative residual on [1e-3, 1e12]", worst, "<= 1e-13", worst <= 1e-13),
            Check("two-sided bounds on [e, 1e6] (violations)", bad, "== 0", bad == 0)]


def level_roundtrip(method="lambert"):
    D = parse_potential("monomial:n=2")
    eps = 0.1
    vals = []
    for b in (1e4, 1e5, 1e6):
        a_b = asy.level_curve(D, asy.IMAG, eps, b, method=method)
        curve = asy.CurveSpec(asy.IMAG, lambda t, a=a_b: a, f"{a_b!r}")
        vals.append(asy.resnorm_curve(D, curve, b).value * eps)
    d = [abs(v - 1.0) for v in vals]
    ok = d[0] > d[1] > d[2]
    return [Check(f"eps*Psi along {method} level curve", vals[-1],
                  "monotone to 1: " + ", ".join(f"{v:.6g}" for v in vals), ok)]


def inverse_alpha1():
    r = parse_rate("japanese:alpha=1")
    inv = potential_from_rate(r, x_max=1e7)
    slope = loglog_slope(inv, 1e2, 1e6)
    rows = verify_rate(inv, r, [10.0, 100.0, 1000.0])
    worst = max(abs(row["ratio"] - 1.0) for row in rows)
    return [_within("log-log slope on [1e2, 1e6]", slope, 0.4, 0.05),
            Check("verify ratios at b=10,100,1000", worst, "|ratio-1| <= 0.02", worst <= 0.02)]


def reductions():
    out = []
    for spec in ("monomial:n=2", "power:p=3", "power:p=2/3", "expsq"):
        V = parse_potential(spec)
        for b in (10.0, 1e3, 1e5):
            whole = asy.resnorm_wholeline(V, b).value
            half = asy.resnorm_iR(V, b).value
            rad = asy.resnorm_radial(V, 3, b).value
            out.append(Check(f"{spec} b={b:g} whole-line == half-line", whole - half, "== 0",
                             whole == half))
            out.append(Check(f"{spec} b={b:g} radial == half-line", rad - half, "== 0",
                             rad == half))
    return out


def point_spectrum():
    fails = 0
    for beta in (0.5, 1.0, 2.0):
        for re in (0.0, 1.0, 10.0):
            for im in (-1.0, 0.0, 1.0):
                cert = point_spectrum_empty(lambda x, b=beta: abs(x) ** b, complex(re, im))
                fails += not cert.empty
    return [Check("empty for |x|^beta, 27 cases (failures)", fails, "== 0", fails == 0)]


# -- figure data -------------------------------------------------------------------

# (potential, eps for level curves, imag-axis grid, real-axis grid or None)
FIGURE_SET = {
    "davies": ("monomial:n=2", 0.1, (1e2, 1e6), (1e2, 1e6)),
    "cubic": ("monomial:n=3", 0.1, (1e2, 1e6), None),
    "japanese_2_3": ("power:p=2/3", 1e-3, (1e1, 1e4), (1e2, 1e6)),
    "expsq": ("expsq", 0.1, (1e2, 1e12), None),
}
FIG_EPS_PRIME = 0.1
FIG_POINTS = 25


def figure_rows(spec, axis, eps, grid, eps_prime=FIG_EPS_PRIME, count=FIG_POINTS):
    from .cli import level_row

    V = parse_potential(spec)
    return [level_row(V, axis, eps, eps_prime, float(t))
            for t in np.geomspace(grid[0], grid[1], count)]


def write_figure_data(out_dir):
    """Level-curve and critical-boundary CSVs for the four figure potentials."""
    from .cli import LEVEL_COLUMNS, write_table

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, (spec, eps, igrid, rgrid) in FIGURE_SET.items():
        for axis, grid in ((asy.IMAG, igrid), (asy.REAL, rgrid)):
            if grid is None:
                continue
            rows = figure_rows(spec, axis, eps, grid)
            path = os.path.join(out_dir, f"{name}_{axis}.csv")
            meta = {"potential": spec, "axis": axis, "eps": eps, "eps_prime": FIG_EPS_PRIME}
            with open(path, "w") as fh:
                write_table(fh, LEVEL_COLUMNS, rows, meta, "csv")
            written.append((path, rows))
    return written


def figure_data(out_dir="figure_data"):
    out = []
    for path, rows in write_figure_data(out_dir):
        good = sum(1 for r in rows if math.isfinite(r["critical_boundary"]))
        out.append(Check(os.path.basename(path), good, f"all {len(rows)} boundary rows finite",
                         good == len(rows)))
    return out


SCENARIOS = {
    "airy-constants": airy_constants,
    "fourier-duality": fourier_duality,
    "scaling-law": scaling_law,
    "self-adjoint-oracles": self_adjoint_oracles,
    "davies-imag-trend": davies_imag_trend,
    "davies-real-trend": davies_real_trend,
    "airy-asymptotics": airy_asymptotics,
    "lambert": lambert,
    "level-roundtrip": level_roundtrip,
    "inverse-alpha1": inverse_alpha1,
    "reductions": reductions,
    "point-spectrum": point_spectrum,
    "figure-data": figure_data,
}


def run_scenario(name, **kw):
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise ScenarioUnknown(name) from None
    try:
        return fn(**kw)
    except PseudonormError as exc:
        return [Check(f"{name} raised {type(exc).__name__}", math.nan, str(exc), False)]
