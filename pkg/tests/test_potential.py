import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudonorm.errors import LimitUnavailable, NoBracket, NotMonotone
from pseudonorm.potential import (
    FULL_LINE, HALF_LINE, PotentialModel, check_assumptions, estimate_l, fourier_scale, iota,
    kappa, load_table, parse_potential, solve_level, turning_point, upsilon,
)


def test_turning_point_square():
    assert turning_point(parse_potential("monomial:n=2"), 4.0) == pytest.approx(2.0, rel=1e-14)


def test_level_on_minus_side_is_signed():
    V = parse_potential("monomial:n=3")
    assert solve_level(V, -8.0, side="minus") == pytest.approx(-2.0, rel=1e-12)
    assert turning_point(parse_potential("monomial:n=2"), 9.0, side="minus") == pytest.approx(-3.0)


def test_turning_point_below_start_raises():
    V = parse_potential("power:p=2")  # <x>^2 starts at 1
    with pytest.raises(NoBracket):
        turning_point(V, 0.5)


def test_bounded_potential_has_no_bracket():
    V = PotentialModel(v2=lambda x: np.arctan(x), domain_kind=HALF_LINE)
    with pytest.raises(NoBracket):
        solve_level(V, 2.0)


def test_decreasing_potential_detected():
    V = PotentialModel(v2=lambda x: 1.0 / (1.0 + x), domain_kind=HALF_LINE)
    with pytest.raises((NotMonotone, NoBracket)):
        solve_level(V, 2.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-2, 1e10))
def test_fourier_scale_closed_form(a):
    # t V2(t) = 2 sqrt(a) with V2 = t^2
    t = fourier_scale(parse_potential("monomial:n=2"), a)
    assert t == pytest.approx((2 * math.sqrt(a)) ** (1 / 3), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.5, 1e7))
def test_level_solution_hits_target(b):
    V = parse_potential("power:p=2/3")
    x = solve_level(V, b)
    assert V.V2(x) == pytest.approx(b, rel=1e-11)


def test_upsilon_closed_form():
    V = parse_potential("monomial:n=2")
    for x in (0.5, 2.0, 40.0):
        assert upsilon(V, x) == pytest.approx((2 * x) ** (-1 / 3) / x, rel=1e-10)


def test_expsq_turning_point():
    V = parse_potential("expsq")
    assert turning_point(V, math.exp(9.0)) == pytest.approx(3.0, rel=1e-12)


def test_kappa_vanishes_for_pure_imaginary():
    res = kappa(parse_potential("monomial:n=2"), 100.0)
    assert res.kappa_b == pytest.approx(0.0, abs=1e-12)
    assert res.theta == pytest.approx(math.pi / 2)


def test_kappa_with_real_part_limit():
    V = PotentialModel(v2=lambda x: x ** 2, v1=lambda x: x ** 2, domain_kind=FULL_LINE)
    res = kappa(V, 100.0)
    assert res.l == pytest.approx(1.0, rel=1e-3)
    assert res.theta == pytest.approx(math.pi / 4, rel=1e-3)
    assert res.r == pytest.approx(math.sqrt(2.0), rel=1e-3)


def test_estimate_l_oscillating_ratio_fails():
    V = PotentialModel(v2=lambda x: x ** 2, v1=lambda x: x ** 2 * (2 + np.sin(np.log(1 + x))),
                       domain_kind=FULL_LINE)
    with pytest.raises(LimitUnavailable):
        estimate_l(V)


def test_iota_vanishes_for_exact_power():
    assert iota(parse_potential("monomial:n=2"), 50.0) < 1e-12


def test_iota_decreases_for_regularly_varying():
    V = parse_potential("power:p=2/3")
    vals = [iota(V, t) for t in (10.0, 100.0, 1000.0)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("spec", ["power:p=2", "power:p=2/3", "log", "expsq",
                                  "monomial:n=2", "monomial:n=3"])
def test_iR_assumptions_pass(spec):
    rep = check_assumptions(parse_potential(spec), "iR")
    assert rep.passed, rep.failed_items()


@pytest.mark.parametrize("spec,item", [("log", "R_iii_regular_variation"),
                                       ("monomial:n=3", "R_i_even")])
def test_R_assumptions_fail(spec, item):
    rep = check_assumptions(parse_potential(spec), "R")
    assert not rep.passed
    assert item in rep.failed_items()


def test_R_reports_high_orders_untested():
    rep = check_assumptions(parse_potential("monomial:n=2"), "R")
    assert rep.passed
    assert any(it.passed is None for it in rep.items.values())


def test_unknown_potential():
    with pytest.raises((KeyError, ValueError)):
        parse_potential("nonsense:q=1")


def test_table_roundtrip(tmp_path):
    xs = np.linspace(0.0, 10.0, 101)
    path = tmp_path / "v.csv"
    with open(path, "w") as fh:
        fh.write("# test table\nx,v2,dv2\n")
        for x in xs:
            fh.write(f"{float(x)!r},{float(x)**2!r},{2*float(x)!r}\n")
    V = load_table(str(path))
    assert V.domain_kind == HALF_LINE
    assert V.V2(3.3) == pytest.approx(3.3 ** 2, rel=1e-12)
    assert turning_point(V, 25.0) == pytest.approx(5.0, rel=1e-10)
