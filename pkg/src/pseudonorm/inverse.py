"""Potentials with a prescribed resolvent growth along the imaginary axis.

Given a rate r(b), the imaginary part V2 solves

    C^(-3/2) * integral_0^{V2(x)} r(u)^(3/2) du = x,    C = ||A_{1,pi/2}^-1||,

so that C * V2'(x_b)^(-2/3) = r(b) at the turning point V2(x_b) = b.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import integrate, interpolate, optimize

from .airy_ref import AiryQuery, airy_norm
from .errors import HorizonTooSmall, OutOfTable, QuadratureFailure
from .potential import HALF_LINE, PotentialModel

# guards against overflow of r^(5/2) in the condition ratios
_LOG_CAP = 690.0


@dataclass(frozen=True)
class RateFunction:
    """Positive rate r(y), y >= 0, with optional closed-form derivative."""

    r: Callable[[float], float]
    dr: Optional[Callable[[float], float]] = None
    label: str = ""

    def __call__(self, y):
        return self.r(y)

    def deriv(self, y):
        if self.dr is not None:
            return self.dr(y)
        h = max(1e-6, 1e-6 * abs(y))
        lo = max(0.0, y - h)
        return (self.r(y + h) - self.r(lo)) / (y + h - lo)


def _num(text):
    return float(Fraction(text)) if "/" in text else float(text)


def parse_rate(spec: str) -> RateFunction:
    """Built-in rates.

    ``const:c=<c>``, ``japanese:alpha=<a>`` (<y>^a), ``exp:alpha=<a>``
    (exp(y^a)), ``log`` (log(e + y)) and ``decay`` (1/(1 + y)).
    """
    name, _, body = spec.strip().partition(":")
    opts = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        k, _, v = part.partition("=")
        opts[k.strip()] = _num(v.strip())
    if name == "const":
        c = opts.get("c", 1.0)
        return RateFunction(lambda y: c, lambda y: 0.0, f"const:c={c:g}")
    if name == "japanese":
        a = opts.get("alpha", 1.0)
        return RateFunction(lambda y: (1.0 + y * y) ** (a / 2.0),
                            lambda y: a * y * (1.0 + y * y) ** (a / 2.0 - 1.0),
                            f"japanese:alpha={a:g}")
    if name == "exp":
        a = opts.get("alpha", 1.0)
        return RateFunction(lambda y: math.exp(y ** a),
                            lambda y: a * y ** (a - 1.0) * math.exp(y ** a) if y > 0 else (
                                1.0 if a == 1 else 0.0),
                            f"exp:alpha={a:g}")
    if name == "log":
        return RateFunction(lambda y: math.log(math.e + y), lambda y: 1.0 / (math.e + y), "log")
    if name == "decay":
        return RateFunction(lambda y: 1.0 / (1.0 + y), lambda y: -1.0 / (1.0 + y) ** 2, "decay")
    raise ValueError(f"unknown rate {spec!r}")


def _safe(rate, y):
    try:
        return rate(y)
    except OverflowError:
        return math.inf


def _r32(rate, y):
    v = _safe(rate, y)
    if not (v > 0 and math.isfinite(v)):
        raise QuadratureFailure(f"rate not positive and finite at y={y:g}: {v!r}")
    return v ** 1.5


def _panel(rate, a, b):
    val, err = integrate.quad(lambda u: _r32(rate, u), a, b, epsrel=1e-10, epsabs=0.0,
                              limit=200)
    if not math.isfinite(val) or err > 1e-8 * abs(val) + 1e-300:
        raise QuadratureFailure(f"quadrature of r^(3/2) failed on [{a:g}, {b:g}]")
    return val


def _cumulative(rate, ys):
    out = np.empty_like(ys)
    acc, prev = 0.0, 0.0
    for i, y in enumerate(ys):
        acc += _panel(rate, prev, y)
        out[i] = acc
        prev = y
    return out


# -- admissibility -----------------------------------------------------------------


@dataclass
class ConditionItem:
    passed: bool
    last: float
    peak: float
    note: str = ""


@dataclass
class RateReport:
    items: dict
    y_range: tuple

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items.values())

    def as_dict(self):
        return {"passed": self.passed, "y_range": list(self.y_range),
                "items": {k: vars(v) for k, v in self.items.items()}}


def _decade(ys, vals, k):
    """Values over the k-th decade counted back from the end (k = 0 is last)."""
    hi, lo = ys[-1] / 10.0 ** k, ys[-1] / 10.0 ** (k + 1)
    return vals[(ys <= hi * (1 + 1e-12)) & (ys >= lo * (1 - 1e-12))]


def check_rate_conditions(rate: RateFunction, horizon: float = 1e6,
                          n: int = 241) -> RateReport:
    """Sampled test of the three integral conditions plus unboundedness.

    With G(y) = int_0^y r^(3/2), the items are ``mass_ratio``
    G / (y r^(3/2)), ``derivative_ratio`` |r'| G / r^(5/2) and ``tail_decay``
    sqrt(r) / G. The first two ratios pass when their maximum over the last decade does
    not exceed 1.1 times that over the decade before. The third passes when
    it drops by at least a factor 2 across the last decade.
    """
    ys = np.geomspace(1.0, horizon, n)
    # keep r^(5/2) representable
    logs = np.array([math.log(max(_safe(rate, y), 1e-300)) for y in ys])
    ys = ys[np.cumprod(2.5 * np.abs(logs) < _LOG_CAP).astype(bool)]
    if ys.size < 40 or ys[-1] < 100.0:
        raise HorizonTooSmall("rate overflows before two decades can be sampled")
    G = _cumulative(rate, ys)
    r = np.array([rate(y) for y in ys])
    dr = np.array([rate.deriv(y) for y in ys])
    c1 = G / (ys * r ** 1.5)
    c2 = np.abs(dr) * G / r ** 2.5
    c3 = np.sqrt(r) / G
    items = {}
    for name, c in (("mass_ratio", c1), ("derivative_ratio", c2)):
        last, prev = _decade(ys, c, 0), _decade(ys, c, 1)
        ok = float(last.max()) <= 1.1 * float(prev.max()) + 1e-12
        items[name] = ConditionItem(ok, float(c[-1]), float(c.max()))
    drop = float(c3[-1] / _decade(ys, c3, 0)[0])
    items["tail_decay"] = ConditionItem(drop <= 0.5, float(c3[-1]), float(c3.max()),
                                 note=f"last-decade ratio {drop:.3g}")
    grow = float(r[-1] / _decade(ys, r, 0)[0])
    items["unbounded"] = ConditionItem(grow > 1.0 + 1e-3, float(r[-1]), float(r.max()),
                                       note=f"last-decade growth {grow:.3g}")
    return RateReport(items, (float(ys[0]), float(ys[-1])))


# -- construction ------------------------------------------------------------------


@dataclass(frozen=True)
class InverseResult:
    """Tabulated V2 with a cubic Hermite interpolant through (x, v2, dv2)."""

    x: np.ndarray
    v2: np.ndarray
    dv2: np.ndarray
    airy_constant: float
    rate_label: str = ""
    condition_report: Optional[dict] = None
    _spline: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (np.all(np.diff(self.x) > 0) and np.all(np.diff(self.v2) > 0)):
            raise ValueError("table must be strictly increasing in x and V2")
        object.__setattr__(self, "_spline",
                           interpolate.CubicHermiteSpline(self.x, self.v2, self.dv2,
                                                          extrapolate=False))

    @property
    def interpolant(self):
        return self._spline

    def V2(self, x):
        return self._spline(x)

    def dV2(self, x):
        return self._spline.derivative()(x)

    def to_potential(self) -> PotentialModel:
        s = self._spline
        return PotentialModel(v2=s, d_v2=s.derivative(), dd_v2=s.derivative(2),
                              domain_kind=HALF_LINE, x0=float(self.x[0]), nu=-1.0,
                              label=f"inverse:{self.rate_label}")

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# rate={self.rate_label} airy_constant={self.airy_constant!r}\n")
            w = csv.writer(fh)
            w.writerow(["x", "v2", "dv2"])
            for row in zip(self.x, self.v2, self.dv2):
                w.writerow(["%.17g" % v for v in row])


def _inverse_nodes(rate, scale, x_max, y_cap=1e15):
    """Nodes (y_k, F(y_k)) with F growing by at most 10% per panel."""
    ys, Fs = [0.0], [0.0]
    step = 1e-3
    y, F = 0.0, 0.0
    while F < x_max:
        piece = scale * _panel(rate, y, y + step)
        if F > 0 and piece > 0.1 * F and step > 1e-12:
            step *= 0.5
            continue
        y, F = y + step, F + piece
        ys.append(y)
        Fs.append(F)
        if y > y_cap or len(ys) > 200000:
            raise HorizonTooSmall(f"F(y) = {F:g} has not reached x_max = {x_max:g}")
        step *= 1.5 if piece < 0.025 * F else 1.0
    return np.array(ys), np.array(Fs)


def potential_from_rate(rate: RateFunction, x_max: float = 1e7,
                        points_per_decade: int = 200,
                        airy_constant: Optional[float] = None,
                        check: bool = True) -> InverseResult:
    """Tabulate V2 on a log grid up to ``x_max``.

    Parameters
    ----------
    rate : RateFunction
    x_max : float
    points_per_decade : int
        Density of the output x-grid.
    airy_constant : float, optional
        Overrides ||A_{1,pi/2}^-1|| (taken from the cached reference).
    check : bool
        Attach :func:`check_rate_conditions` to the result.
    """
    C = airy_constant if airy_constant is not None else airy_norm(AiryQuery.rotated()).value
    scale = C ** -1.5
    ys, Fs = _inverse_nodes(rate, scale, x_max)
    # inverse of F with exact slopes dy/dF = C^(3/2) r(y)^(-3/2)
    slopes = np.array([1.0 / (scale * _r32(rate, y)) for y in ys])
    inv = interpolate.CubicHermiteSpline(Fs, ys, slopes)
    x_lo = Fs[1]
    decades = math.log10(x_max / x_lo)
    x = np.geomspace(x_lo, x_max, max(16, int(math.ceil(decades * points_per_decade)) + 1))
    v2 = inv(x)
    dv2 = np.array([1.0 / (scale * _r32(rate, y)) for y in v2])
    report = None
    if check:
        try:
            report = check_rate_conditions(rate).as_dict()
        except HorizonTooSmall as exc:
            report = {"passed": False, "note": str(exc)}
    return InverseResult(x, v2, dv2, C, rate.label, report)


def verify_rate(inv: InverseResult, rate: RateFunction, b_grid) -> list:
    """Ratio C V2'(x_b)^(-2/3) / r(b) at each b, using the table interpolant."""
    rows = []
    d = inv.interpolant.derivative()
    for b in b_grid:
        b = float(b)
        if not inv.v2[0] <= b <= inv.v2[-1]:
            raise OutOfTable(f"b={b:g} outside table range [{inv.v2[0]:g}, {inv.v2[-1]:g}]")
        k = int(np.searchsorted(inv.v2, b))
        lo, hi = inv.x[max(k - 1, 0)], inv.x[min(k, inv.x.size - 1)]
        if lo == hi:
            x_b = lo
        else:
            x_b = optimize.brentq(lambda s: float(inv.V2(s)) - b, lo, hi, xtol=1e-14 * hi)
        ratio = inv.airy_constant * float(d(x_b)) ** (-2.0 / 3.0) / rate(b)
        rows.append({"b": b, "x_b": float(x_b), "ratio": float(ratio)})
    return rows


def loglog_slope(inv: InverseResult, x_lo: float, x_hi: float) -> float:
    """Least-squares slope of log V2 against log x over [x_lo, x_hi]."""
    m = (inv.x >= x_lo) & (inv.x <= x_hi)
    if m.sum() < 2:
        raise OutOfTable("slope window holds fewer than two table points")
    return float(np.polyfit(np.log(inv.x[m]), np.log(inv.v2[m]), 1)[0])
