import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudonorm.errors import HorizonTooSmall, OutOfTable
from pseudonorm.inverse import (
    check_rate_conditions, loglog_slope, parse_rate, potential_from_rate, verify_rate,
)
from pseudonorm.potential import check_assumptions, load_table, turning_point

C = 1.3337654113


def test_constant_rate_gives_linear_potential():
    inv = potential_from_rate(parse_rate("const:c=2"), x_max=1e4, airy_constant=C)
    slope = (C / 2) ** 1.5
    assert np.allclose(inv.v2, slope * inv.x, rtol=1e-12)


def test_exponential_rate_closed_form():
    # F(y) = C^-1.5 (2/3)(exp(1.5 y) - 1)
    inv = potential_from_rate(parse_rate("exp:alpha=1"), x_max=1e6, airy_constant=C)
    x = np.array([1.0, 1e3, 1e6])
    ref = (2 / 3) * np.log(1.5 * C ** 1.5 * x + 1)
    assert np.allclose(inv.V2(x), ref, rtol=1e-9)


def test_japanese_slope_near_two_fifths():
    inv = potential_from_rate(parse_rate("japanese:alpha=1"))
    assert loglog_slope(inv, 1e2, 1e6) == pytest.approx(0.4, rel=0.05)


@settings(max_examples=6, deadline=None)
@given(st.floats(0.3, 3.0))
def test_verify_ratio_property(alpha):
    rate = parse_rate(f"japanese:alpha={alpha!r}")
    inv = potential_from_rate(rate, x_max=1e5, check=False)
    b = float(inv.v2[len(inv.v2) // 2])
    assert np.all(np.diff(inv.v2) > 0)
    assert verify_rate(inv, rate, [b])[0]["ratio"] == pytest.approx(1.0, abs=1e-5)


def test_grid_density_independence():
    rate = parse_rate("japanese:alpha=1")
    a = potential_from_rate(rate, x_max=1e5, points_per_decade=100, check=False)
    b = potential_from_rate(rate, x_max=1e5, points_per_decade=200, check=False)
    xs = np.geomspace(10, 1e5, 7)
    assert np.allclose(a.V2(xs), b.V2(xs), rtol=1e-7)


def test_verify_outside_table():
    rate = parse_rate("japanese:alpha=1")
    inv = potential_from_rate(rate, x_max=1e3, check=False)
    with pytest.raises(OutOfTable):
        verify_rate(inv, rate, [1e9])


@pytest.mark.parametrize("spec", ["japanese:alpha=1", "exp:alpha=0.5", "log"])
def test_admissible_rates(spec):
    assert check_rate_conditions(parse_rate(spec)).passed


def test_decaying_rate_rejected():
    rep = check_rate_conditions(parse_rate("decay"))
    assert not rep.passed
    assert not rep.items["unbounded"].passed


def test_constant_rate_not_unbounded():
    rep = check_rate_conditions(parse_rate("const:c=1"))
    assert not rep.items["unbounded"].passed


def test_fast_rate_horizon():
    with pytest.raises(HorizonTooSmall):
        check_rate_conditions(parse_rate("exp:alpha=3"))


def test_unknown_rate():
    with pytest.raises(ValueError):
        parse_rate("weird")


def test_csv_export_loads_as_potential(tmp_path):
    rate = parse_rate("japanese:alpha=1")
    inv = potential_from_rate(rate, x_max=1e5, check=False)
    path = str(tmp_path / "v.csv")
    inv.to_csv(path)
    V = load_table(path)
    xs = np.geomspace(inv.x[0], inv.x[-1], 9)
    assert np.array_equal(V.V2(xs), inv.V2(xs))
    b = 20.0
    x_b = turning_point(V, b)
    assert inv.V2(x_b) == pytest.approx(b, rel=1e-12)


def test_reconstructed_potential_satisfies_imag_assumptions():
    inv = potential_from_rate(parse_rate("japanese:alpha=1"), x_max=1e8, check=False)
    rep = check_assumptions(inv.to_potential(), "iR", horizon=1e8)
    assert rep.passed, rep.failed_items()
