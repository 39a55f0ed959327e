"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE`` line (shown even under output capture)
and then asserts the verdict.
"""

import math
import time

import numpy as np
import pytest

from pseudonorm import asymptotics as asy
from pseudonorm.airy_ref import (
    AiryNormTable, AiryQuery, airy_norm, airy_norm_asym, lambert_w0, point_spectrum_empty,
)
from pseudonorm.inverse import loglog_slope, parse_rate, potential_from_rate, verify_rate
from pseudonorm.operator_lab import resolvent_norm_numeric
from pseudonorm.potential import FULL_LINE, PotentialModel, parse_potential
from pseudonorm.scenarios import FIGURE_SET, write_figure_data

DAVIES = parse_potential("monomial:n=2")


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {title}: {'PASS' if passed else 'FAIL'} | {detail}")
        assert passed, detail
    return emit


def test_01_airy_reference_constants(report):
    fresh = AiryNormTable()
    t0 = time.perf_counter()
    rot = airy_norm(AiryQuery.rotated(), table=fresh).value
    t_rot = time.perf_counter() - t0
    t0 = time.perf_counter()
    gen = airy_norm(AiryQuery.generalized(2 / 3), table=fresh).value
    t_gen = time.perf_counter() - t0
    ok = (abs(rot / 1.33377 - 1) <= 0.005 and abs(gen / 1.12648 - 1) <= 0.005
          and t_rot < 60 and t_gen < 60)
    report(1, "Airy reference constants", ok,
           f"rotated {rot:.8f} ({t_rot:.2f}s), beta=2/3 {gen:.8f} ({t_gen:.2f}s); "
           "band 1.33377/1.12648 +-0.5%, <60s each")


def test_02_fourier_duality(report):
    a = airy_norm(AiryQuery.generalized(2.0)).value
    b = airy_norm(AiryQuery.rotated()).value
    rel = abs(a - b) / b
    report(2, "Fourier duality", rel <= 1e-3, f"relative difference {rel:.3e}; band <= 1e-3")


def test_03_scaling_law(report):
    base = airy_norm(AiryQuery.rotated()).value
    rels = []
    for r in (0.5, 2.0, 5.0):
        direct = airy_norm(AiryQuery.rotated(r=r), reduce_scale=False).value
        rels.append(abs(direct - r ** (-2 / 3) * base) / direct)
    report(3, "Scaling law", max(rels) <= 1e-3,
           "relative errors " + ", ".join(f"{e:.2e}" for e in rels) + "; band <= 1e-3")


def test_04_self_adjoint_oracles(report):
    free = PotentialModel(v2=lambda x: np.zeros_like(x), domain_kind=FULL_LINE)
    osc = PotentialModel(v2=lambda x: np.zeros_like(x), v1=lambda x: x * x, domain_kind=FULL_LINE)
    v_free = resolvent_norm_numeric(free, -1.0, tol=1e-4).value
    v_osc = resolvent_norm_numeric(osc, 0.0, tol=1e-4).value
    ok = abs(v_free - 1) <= 2e-3 and abs(v_osc - 1) <= 2e-3
    report(4, "Self-adjoint oracles", ok,
           f"free(-1) {v_free:.6f}, oscillator(0) {v_osc:.6f}; band 1 +- 2e-3")


def test_05_imaginary_axis_trend(report):
    t0 = time.perf_counter()
    ratios = []
    for b in (100.0, 1000.0):
        num = resolvent_norm_numeric(DAVIES, 1j * b, tol=1e-8).value
        ratios.append(num / asy.resnorm_iR(DAVIES, b).value)
    dt = time.perf_counter() - t0
    r1, r2 = ratios
    ok = abs(r1 - 1) <= 0.15 and abs(r2 - 1) <= 0.08 and abs(r2 - 1) < abs(r1 - 1) and dt <= 300
    report(5, "Imaginary-axis asymptotics (Davies)", ok,
           f"ratio b=100 {r1:.8f}, b=1000 {r2:.8f}, {dt:.1f}s; "
           "band 15% / 8%, improving, <=300s")


def test_06_real_axis_trend(report):
    t0 = time.perf_counter()
    ratios = []
    for a in (1e4, 1e5):
        num = resolvent_norm_numeric(DAVIES, a, tol=1e-8).value
        ratios.append(num / asy.resnorm_R(DAVIES, a).value)
    dt = time.perf_counter() - t0
    r1, r2 = ratios
    ok = abs(r1 - 1) <= 0.15 and abs(r2 - 1) < abs(r1 - 1) and dt <= 600
    report(6, "Real-axis asymptotics (Davies)", ok,
           f"ratio a=1e4 {r1:.10f}, a=1e5 {r2:.10f}, {dt:.1f}s; "
           "band 15%, improving, <=600s")


def test_07_airy_asymptotic_formula(report):
    errs = []
    for mu in (2.0, 3.0, 4.0):
        q = AiryQuery.rotated(mu=mu)
        errs.append(abs(airy_norm(q).value / airy_norm_asym(q) - 1))
    ok = errs[0] > errs[1] > errs[2]
    report(7, "Airy asymptotic formula", ok,
           "|ratio-1| at mu=2,3,4: " + ", ".join(f"{e:.4e}" for e in errs)
           + "; strictly decreasing")


def test_08_lambert_w(report):
    xs = np.geomspace(1e-3, 1e12, 3000)
    worst = max(abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / x for x in xs)
    violations = 0
    for x in np.geomspace(math.e, 1e6, 3000):
        w, l1 = lambert_w0(x), math.log(x)
        l2 = math.log(l1)
        lo = l1 - l2 + 0.5 * l2 / l1
        hi = l1 - l2 + math.e / (math.e - 1) * l2 / l1
        violations += not (lo <= w <= hi)
    ok = worst <= 1e-13 and violations == 0
    report(8, "Lambert W", ok,
           f"max relative residual {worst:.2e} (<=1e-13), bound violations {violations}")


def test_09_level_curve_round_trip(report):
    eps, vals = 0.1, []
    for b in (1e4, 1e5, 1e6):
        a_b = asy.level_curve(DAVIES, asy.IMAG, eps, b, method="lambert")
        curve = asy.CurveSpec(asy.IMAG, lambda t, a=a_b: a)
        vals.append(eps * asy.resnorm_curve(DAVIES, curve, b).value)
    d = [abs(v - 1) for v in vals]
    ok = d[0] > d[1] > d[2]
    report(9, "Level-curve round trip", ok,
           "eps*Psi at b=1e4,1e5,1e6: " + ", ".join(f"{v:.6f}" for v in vals)
           + "; monotone approach to 1")


def test_10_inverse_problem(report):
    rate = parse_rate("japanese:alpha=1")
    inv = potential_from_rate(rate, x_max=1e7)
    slope = loglog_slope(inv, 1e2, 1e6)
    rows = verify_rate(inv, rate, [10.0, 100.0, 1000.0])
    worst = max(abs(r["ratio"] - 1) for r in rows)
    ok = abs(slope / 0.4 - 1) <= 0.05 and worst <= 0.02
    report(10, "Inverse problem", ok,
           f"slope {slope:.5f} (0.4 +- 5%), worst verify |ratio-1| {worst:.2e} (<=2%)")


def test_11_whole_line_and_radial(report):
    mismatches = 0
    count = 0
    for spec in ("monomial:n=2", "power:p=2", "power:p=2/3", "expsq"):
        V = parse_potential(spec)
        for b in (10.0, 1e3, 1e5):
            half = asy.resnorm_iR(V, b).value
            mismatches += asy.resnorm_wholeline(V, b).value != half
            for d in (2, 3, 5):
                mismatches += asy.resnorm_radial(V, d, b).value != half
            count += 4
    report(11, "Whole-line / radial reductions", mismatches == 0,
           f"{mismatches} inexact of {count} comparisons; band exact equality")


def test_12_empty_point_spectrum(report):
    fails = []
    for beta in (0.5, 1.0, 2.0):
        for re in (0.0, 1.0, 10.0):
            for im in (-1.0, 0.0, 1.0):
                lam = complex(re, im)
                if not point_spectrum_empty(lambda x, b=beta: abs(x) ** b, lam).empty:
                    fails.append((beta, lam))
    report(12, "Empty point spectrum", not fails, f"{27 - len(fails)}/27 certified empty")


def test_13_figure_data(report, tmp_path):
    written = write_figure_data(str(tmp_path))
    potentials = {spec for spec, *_ in FIGURE_SET.values()}
    bad = [p for p, rows in written
           if not all(math.isfinite(r["critical_boundary"]) for r in rows)]
    ok = not bad and len(potentials) == 4 and len(written) >= 4
    report(13, "Figure data files", ok,
           f"{len(written)} CSVs for {len(potentials)} potentials; rows without boundary: {bad}")
