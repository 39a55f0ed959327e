"""Complex potentials V = V1 + i V2 and the scalar quantities derived from them.

Everything here is a pure function of an immutable :class:`PotentialModel`.
Positions on the negative half-axis are handled by passing negative ``x``;
the model stores separate growth metadata (``x0``, ``nu``) for each side.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from scipy import interpolate, optimize

from .errors import (
    BetaMissing,
    DerivativeNonpositive,
    LimitUnavailable,
    NoBracket,
    NotMonotone,
)

ArrayFunc = Callable[[np.ndarray], np.ndarray]

HALF_LINE = "half_line"
FULL_LINE = "full_line"

# sampling used by the assumption checks and the limit estimate
CHECK_POINTS = 400
CHECK_HORIZON = 1e8
# magnitude beyond which samples are discarded as overflow-prone
FINITE_CAP = 1e300


def _fd1(f: ArrayFunc, x):
    h = np.maximum(1e-6, 1e-6 * np.abs(x))
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _fd2(f: ArrayFunc, x):
    # a larger step than for the first derivative keeps cancellation at bay
    h = np.maximum(1e-4, 1e-4 * np.abs(x))
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


@dataclass(frozen=True)
class PotentialModel:
    """A complex potential V = v1 + i v2 with growth metadata.

    Parameters
    ----------
    v2 : callable
        Imaginary part, vectorised over numpy arrays.
    v1 : callable or None
        Real part; ``None`` means identically zero (handled exactly).
    d_v1, d_v2, dd_v1, dd_v2 : callable or None
        Closed-form derivatives. Missing ones fall back to central
        differences.
    domain_kind : {"half_line", "full_line"}
    x0, nu : float
        Monotonicity threshold and derivative-control exponent on the
        positive side. ``x0_minus``/``nu_minus`` override them for x < 0.
    beta : float, optional
        Regular-variation index of v2.
    l : float, optional
        Known value of lim v1'/v2'. Estimated by sampling when absent.
    """

    v2: ArrayFunc
    v1: Optional[ArrayFunc] = None
    d_v1: Optional[ArrayFunc] = None
    d_v2: Optional[ArrayFunc] = None
    dd_v1: Optional[ArrayFunc] = None
    dd_v2: Optional[ArrayFunc] = None
    domain_kind: str = HALF_LINE
    x0: float = 0.0
    nu: float = -1.0
    x0_minus: Optional[float] = None
    nu_minus: Optional[float] = None
    beta: Optional[float] = None
    l: Optional[float] = None
    label: str = ""
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.domain_kind not in (HALF_LINE, FULL_LINE):
            raise ValueError(f"unknown domain_kind {self.domain_kind!r}")
        if self.nu < -1 or (self.nu_minus is not None and self.nu_minus < -1):
            raise ValueError("nu must lie in [-1, inf)")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.x0 < 0:
            raise ValueError("x0 must be nonnegative")

    # -- pointwise evaluation ------------------------------------------------

    @property
    def v1_is_zero(self) -> bool:
        return self.v1 is None

    def V1(self, x):
        x = np.asarray(x, dtype=float)
        if self.v1 is None:
            return np.zeros_like(x)
        return self.v1(x)

    def V2(self, x):
        return self.v2(np.asarray(x, dtype=float))

    def V(self, x):
        """Complex value v1(x) + i v2(x)."""
        return self.V1(x) + 1j * self.V2(x)

    def dV1(self, x):
        x = np.asarray(x, dtype=float)
        if self.v1 is None:
            return np.zeros_like(x)
        return self.d_v1(x) if self.d_v1 is not None else _fd1(self.v1, x)

    def dV2(self, x):
        x = np.asarray(x, dtype=float)
        return self.d_v2(x) if self.d_v2 is not None else _fd1(self.v2, x)

    def ddV1(self, x):
        x = np.asarray(x, dtype=float)
        if self.v1 is None:
            return np.zeros_like(x)
        return self.dd_v1(x) if self.dd_v1 is not None else _fd2(self.v1, x)

    def ddV2(self, x):
        x = np.asarray(x, dtype=float)
        return self.dd_v2(x) if self.dd_v2 is not None else _fd2(self.v2, x)

    # -- side metadata ---------------------------------------------------------

    def side_x0(self, side: str = "plus") -> float:
        if side == "minus" and self.x0_minus is not None:
            return self.x0_minus
        return self.x0

    def side_nu(self, side: str = "plus") -> float:
        if side == "minus" and self.nu_minus is not None:
            return self.nu_minus
        return self.nu

    def is_unbounded(self) -> bool:
        """Sampled test for |V| growing without bound on the domain."""
        far, near = np.array([1e8]), np.array([1e2])
        with np.errstate(over="ignore", invalid="ignore"):
            vals = [abs(self.V(far)[0]), abs(self.V(near)[0])]
            if self.domain_kind == FULL_LINE:
                vals.append(abs(self.V(-far)[0]))
                vals.append(abs(self.V(-near)[0]))
        big = vals[0] if not math.isnan(vals[0]) else math.inf
        if self.domain_kind == FULL_LINE:
            big_m = vals[2] if not math.isnan(vals[2]) else math.inf
            return big > vals[1] + 5.0 and big_m > vals[3] + 5.0
        return big > vals[1] + 5.0


# -- root finding -----------------------------------------------------------------


def _monotone_root(f, df, target, lo, horizon=1e12, rtol=1e-12):
    """Solve f(y) = target for y > lo where f is eventually monotone.

    Geometric bracket expansion from ``lo``, a bracketed Brent solve and a
    short Newton polish. ``f`` may increase or decrease; the direction is
    read off the starting value.
    """
    f_lo = float(f(lo))
    if not math.isfinite(f_lo):
        raise NoBracket(f"function not finite at the start point {lo}")
    if f_lo == target:
        return lo
    direction = 1.0 if target > f_lo else -1.0

    def g(y):
        val = direction * (float(f(y)) - target)
        if math.isnan(val):
            return math.inf
        return min(val, 1e308)

    a, ga = lo, g(lo)
    step = max(1.0, abs(lo))
    b = lo + step
    while True:
        gb = g(b)
        if gb >= 0:
            break
        if gb < ga:
            raise NotMonotone(
                f"values move away from the target between {a:g} and {b:g}"
            )
        if b >= horizon:
            raise NoBracket(
                f"target {target:g} not reached within horizon {horizon:g}"
            )
        a, ga = b, gb
        step *= 2.0
        b = min(a + step, horizon)
    root = optimize.brentq(g, a, b, xtol=1e-15 * max(1.0, abs(b)), rtol=1e-15,
                           maxiter=500)
    # Newton polish; keep an update only if it shrinks the residual
    res = abs(float(f(root)) - target)
    for _ in range(4):
        if res <= rtol * abs(target) * 1e-3 or df is None:
            break
        d = float(df(root))
        if d == 0 or not math.isfinite(d):
            break
        cand = root - (float(f(root)) - target) / d
        cres = abs(float(f(cand)) - target)
        if not cres < res:
            break
        root, res = cand, cres
    return root


def _side_sign(side: str) -> float:
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    return 1.0 if side == "plus" else -1.0


def solve_level(V: PotentialModel, target: float, side: str = "plus",
                horizon: float = 1e12) -> float:
    """Position x on ``side`` beyond x0 with V2(x) = target (signed result)."""
    s = _side_sign(side)
    x0 = V.side_x0(side)
    y = _monotone_root(
        lambda u: V.V2(np.array([s * u]))[0],
        lambda u: s * V.dV2(np.array([s * u]))[0],
        target, x0, horizon=horizon,
    )
    return s * y


def turning_point(V: PotentialModel, b: float, side: str = "plus",
                  horizon: float = 1e12) -> float:
    """Turning point x_b solving V2(x_b) = b beyond x0.

    On the minus side the (negative) position x_{b,-} is returned.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    s = _side_sign(side)
    x0 = V.side_x0(side)
    start = float(V.V2(np.array([s * x0]))[0])
    if start >= b:
        raise NoBracket(f"b={b:g} does not exceed V2 at x0 ({start:g})")
    return solve_level(V, b, side, horizon)


def fourier_scale(V: PotentialModel, a: float, horizon: float = 1e12) -> float:
    """Positive t_a with t_a * V2(t_a) = 2 sqrt(a)."""
    if not a > 0:
        raise ValueError("a must be positive")
    target = 2.0 * math.sqrt(a)
    start = V.x0 * float(V.V2(np.array([V.x0]))[0])
    if start >= target:
        raise NoBracket(f"a={a:g} too small: t V2(t) already exceeds 2 sqrt(a) at x0")

    def tv(t):
        return t * V.V2(np.array([t]))[0]

    def dtv(t):
        tt = np.array([t])
        return V.V2(tt)[0] + t * V.dV2(tt)[0]

    return _monotone_root(tv, dtv, target, V.x0, horizon=horizon)


def upsilon(V: PotentialModel, x: float) -> float:
    """x^nu (V2'(x))^(-1/3), using |x| and |V2'| on the negative side."""
    side = "plus" if x > 0 else "minus"
    d = float(V.dV2(np.array([x]))[0])
    if side == "plus" and not d > 0:
        raise DerivativeNonpositive(f"V2'({x:g}) = {d:g} is not positive")
    if side == "minus" and d == 0:
        raise DerivativeNonpositive(f"V2'({x:g}) vanishes")
    return abs(x) ** V.side_nu(side) * abs(d) ** (-1.0 / 3.0)


# -- kappa and the real-part limit --------------------------------------------


@dataclass(frozen=True)
class KappaResult:
    kappa_b: float
    r: float
    theta: float
    r_b: float
    theta_b: float
    l: float
    x_b: float


def _check_grid(V: PotentialModel, horizon=CHECK_HORIZON, n=CHECK_POINTS, side="plus"):
    start = V.side_x0(side) + 1.0
    xs = np.geomspace(start, max(horizon, 10 * start), n)
    return xs if side == "plus" else -xs


def estimate_l(V: PotentialModel, horizon=CHECK_HORIZON, n=CHECK_POINTS) -> float:
    """Limit of V1'/V2' from the largest samples, with a stabilisation check."""
    if V.l is not None:
        return float(V.l)
    if V.v1_is_zero:
        return 0.0
    xs = _check_grid(V, horizon, n)
    with np.errstate(all="ignore"):
        ratio = V.dV1(xs) / V.dV2(xs)
    ok = np.isfinite(ratio)
    xs, ratio = xs[ok], ratio[ok]
    if xs.size < 2:
        raise LimitUnavailable("derivative ratio not finite on the sample grid")
    tail = ratio[xs >= xs[-1] / 10.0]
    spread = float(np.ptp(tail))
    if spread > 1e-3 * max(1.0, abs(float(tail[-1]))):
        raise LimitUnavailable(
            f"V1'/V2' still varies by {spread:.3g} over the last sampled decade"
        )
    est = float(tail[-1])
    if est < -1e-3:
        raise LimitUnavailable(f"estimated limit {est:g} is negative")
    return max(est, 0.0)


def kappa(V: PotentialModel, b: float) -> KappaResult:
    x_b = turning_point(V, b)
    l = estimate_l(V)
    if V.v1_is_zero:
        ratio = 0.0
    else:
        xx = np.array([x_b])
        ratio = float(V.dV1(xx)[0] / V.dV2(xx)[0])
    r, theta = math.hypot(l, 1.0), math.atan2(1.0, l)
    r_b, theta_b = math.hypot(ratio, 1.0), math.atan2(1.0, ratio)
    k = abs(r * complex(math.cos(theta), math.sin(theta))
            - r_b * complex(math.cos(theta_b), math.sin(theta_b)))
    if ratio == l:
        k = 0.0
    return KappaResult(k, r, theta, r_b, theta_b, l, x_b)


# -- regular variation ------------------------------------------------------------


def iota(V: PotentialModel, t: float, x_min: float = 1e-4, x_max: float = 1e4,
         n: int = 2001) -> float:
    """Sup-distance between (1 + W_t)^-1 and (1 + |x|^beta)^-1.

    The sup is taken on a log grid over [x_min, x_max] (plus x = 0, and
    negative x on the full line). Beyond x_max the difference is bounded by
    the sampled deviation |W_t/omega - 1| times 1/(1 + x_max^(beta/2) / 2).
    """
    if V.beta is None:
        raise BetaMissing(f"potential {V.label!r} has no regular-variation index")
    beta = V.beta
    vt = float(V.V2(np.array([t]))[0])
    if not vt > 0:
        raise ValueError("V2(t) must be positive")
    xs = np.concatenate([[0.0], np.geomspace(x_min, x_max, n)])
    if V.domain_kind == FULL_LINE:
        xs = np.concatenate([-xs[1:], xs])
    w = V.V2(t * xs) / vt
    om = np.abs(xs) ** beta
    # W_t = -1 (possible only for non-even V2) makes the distance infinite
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.abs(1.0 / (1.0 + w) - 1.0 / (1.0 + om))
    grid_sup = float(np.max(np.where(np.isnan(gap), np.inf, gap)))

    tail_x = np.geomspace(x_max, x_max * 1e8, 200)
    if V.domain_kind == FULL_LINE:
        tail_x = np.concatenate([-tail_x, tail_x])
    with np.errstate(over="ignore", invalid="ignore"):
        dev = np.abs(V.V2(t * tail_x) / vt / np.abs(tail_x) ** beta - 1.0)
    dev = dev[np.isfinite(dev)]
    dev_max = float(dev.max()) if dev.size else math.inf
    gamma = beta / 2.0
    tail = dev_max / (1.0 + 0.5 * x_max ** (beta - gamma))
    return max(grid_sup, tail)


# -- sampled assumption checks ----------------------------------------------------


@dataclass
class AssumptionItem:
    passed: Optional[bool]  # None means untested
    worst: float = float("nan")
    witness: float = float("nan")
    constant: float = float("nan")
    note: str = ""


@dataclass
class AssumptionReport:
    mode: str
    items: dict
    grid: str

    @property
    def passed(self) -> bool:
        return all(it.passed is not False for it in self.items.values())

    def failed_items(self):
        return [k for k, it in self.items.items() if it.passed is False]

    def as_dict(self):
        return {
            "mode": self.mode,
            "passed": self.passed,
            "grid": self.grid,
            "items": {
                k: {"passed": it.passed, "worst": it.worst, "witness": it.witness,
                    "constant": it.constant, "note": it.note}
                for k, it in self.items.items()
            },
        }


def _finite_mask(*arrays):
    mask = np.ones_like(np.asarray(arrays[0], dtype=float), dtype=bool)
    for a in arrays:
        a = np.abs(np.asarray(a))
        mask &= np.isfinite(a) & (a < FINITE_CAP)
    return mask


def _no_growth(xs, vals, slack=2.0):
    """Bounded-ratio test: last-decade max within ``slack`` of the earlier max."""
    ax = np.abs(xs)
    last = vals[ax >= ax[-1] / 10.0]
    earlier = vals[ax < ax[-1] / 10.0]
    if earlier.size == 0:
        earlier = vals[: max(1, vals.size // 2)]
    ok = float(last.max()) <= slack * float(earlier.max()) + 1e-12
    return ok, float(vals.max()), float(xs[int(np.argmax(vals))])


def _vanishes(xs, vals):
    """o(1) test: last-decade max below half the first-decade max."""
    ax = np.abs(xs)
    first = vals[ax <= ax[0] * 10.0]
    last = vals[ax >= ax[-1] / 10.0]
    ok = float(last.max()) < 0.5 * float(first.max())
    return ok, float(last.max()), float(xs[ax >= ax[-1] / 10.0][int(np.argmax(last))])


def _check_iR_side(V, side, xs, items, suffix=""):
    s = 1.0 if side == "plus" else -1.0
    nu = V.side_nu(side)
    with np.errstate(all="ignore"):
        v2 = V.V2(xs)
        d2 = V.dV2(xs)
        dd = V.ddV1(xs) + 1j * V.ddV2(xs)
    mask = _finite_mask(v2, d2, dd)
    xs, v2, d2, dd = xs[mask], v2[mask], d2[mask], dd[mask]
    if xs.size < 20:
        items["i_increasing" + suffix] = AssumptionItem(False, note="too few finite samples")
        return
    ax = np.abs(xs)
    # orient so that "increasing" means moving away from the origin; on the
    # left an odd-type V2 (tending to -inf) is flipped to its mirror
    sd2 = s * d2
    if side == "minus" and np.median(sd2) < 0:
        v2, sd2 = -v2, -sd2
    grow = np.diff(v2)
    i_ok = bool(np.all(sd2 > 0) and np.all(grow > 0))
    # unboundedness trend: the increment over the last decade must not
    # collapse relative to the preceding decade
    e = ax[-1]
    inc_last = float(np.interp(e, ax, v2) - np.interp(e / 10, ax, v2))
    inc_prev = float(np.interp(e / 10, ax, v2) - np.interp(e / 100, ax, v2))
    trend_ok = inc_prev > 0 and inc_last >= 0.5 * inc_prev
    k = int(np.argmin(sd2))
    items["i_increasing" + suffix] = AssumptionItem(
        i_ok and trend_ok, worst=float(sd2[k]), witness=float(xs[k]),
        note="" if trend_ok else "growth increments collapse (bounded trend)")
    if not i_ok:
        return
    q1 = sd2 / (v2 * ax ** nu)
    q2 = np.abs(dd) / (sd2 * ax ** nu)
    ok1, c1, w1 = _no_growth(xs, q1)
    ok2, c2, w2 = _no_growth(xs, q2)
    items["ii_derivative_control" + suffix] = AssumptionItem(
        ok1 and ok2, worst=max(c1, c2), witness=w1 if c1 >= c2 else w2,
        constant=max(c1, c2),
        note=f"V2'/(V2 x^nu) <= {c1:.3g}, |V''|/(V2' x^nu) <= {c2:.3g}")
    ups = ax ** nu * sd2 ** (-1.0 / 3.0)
    ok3, worst3, w3 = _vanishes(xs, ups)
    items["iii_upsilon_o1" + suffix] = AssumptionItem(ok3, worst=worst3, witness=w3)


def check_assumptions(V: PotentialModel, mode: str = "iR",
                      horizon: float = CHECK_HORIZON,
                      n: int = CHECK_POINTS) -> AssumptionReport:
    """Sampled test of the growth assumptions for the imaginary-axis ("iR")
    or real-axis ("R") resolvent asymptotics. Failures are report entries."""
    if mode not in ("iR", "R"):
        raise ValueError("mode must be 'iR' or 'R'")
    items = {}
    xs = _check_grid(V, horizon, n)
    grid = f"{n} log-spaced points on [{xs[0]:g}, {xs[-1]:g}]"

    with np.errstate(all="ignore"):
        v1 = V.V1(xs)
    v1ok = np.isfinite(v1)
    neg = v1[v1ok] < 0
    items["v1_nonnegative"] = AssumptionItem(
        not bool(np.any(neg)),
        worst=float(v1[v1ok].min()) if np.any(v1ok) else float("nan"))

    if mode == "iR":
        _check_iR_side(V, "plus", xs, items)
        if V.domain_kind == FULL_LINE:
            xm = _check_grid(V, horizon, n, side="minus")
            _check_iR_side(V, "minus", xm, items, suffix="_minus")
        try:
            l = estimate_l(V, horizon, n)
            items["iv_real_part_limit"] = AssumptionItem(True, constant=l)
        except LimitUnavailable as exc:
            items["iv_real_part_limit"] = AssumptionItem(False, note=str(exc))
        return AssumptionReport(mode, items, grid)

    # mode R
    items["R_purely_imaginary"] = AssumptionItem(
        V.v1_is_zero or bool(np.all(np.abs(v1[v1ok]) == 0)))
    if V.domain_kind == FULL_LINE:
        with np.errstate(all="ignore"):
            vp, vm = V.V2(xs), V.V2(-xs)
        m = _finite_mask(vp, vm)
        asym = np.abs(vp[m] - vm[m]) / (1.0 + np.abs(vp[m]))
        k = int(np.argmax(asym)) if asym.size else 0
        items["R_i_even"] = AssumptionItem(
            bool(asym.size and asym.max() <= 1e-12),
            worst=float(asym.max()) if asym.size else float("nan"),
            witness=float(xs[m][k]) if asym.size else float("nan"))
    else:
        items["R_i_even"] = AssumptionItem(True, note="half line: even extension")

    with np.errstate(all="ignore"):
        v2, d1, d2 = V.V2(xs), V.dV2(xs), V.ddV2(xs)
    m = _finite_mask(v2, d1, d2)
    xf, v2, d1, d2 = xs[m], v2[m], d1[m], d2[m]
    if xf.size < 20:
        items["R_ii_increasing"] = AssumptionItem(False, note="too few finite samples")
        return AssumptionReport(mode, items, grid)
    k = int(np.argmin(d1))
    items["R_ii_increasing"] = AssumptionItem(bool(np.all(d1 > 0)),
                                              worst=float(d1[k]), witness=float(xf[k]))

    if V.beta is None:
        items["R_iii_regular_variation"] = AssumptionItem(False, note="beta not set")
    else:
        ts = xf[xf * 4.0 < xf[-1]]
        probes = np.array([0.5, 2.0, 4.0])
        with np.errstate(all="ignore"):
            dev = np.array([
                np.max(np.abs(V.V2(t * probes) / V.V2(np.array([t]))[0]
                              - probes ** V.beta))
                for t in ts
            ])
        fm = np.isfinite(dev)
        ts, dev = ts[fm], dev[fm]
        if ts.size < 10:
            items["R_iii_regular_variation"] = AssumptionItem(False, note="too few samples")
        elif dev.max() < 1e-10:
            items["R_iii_regular_variation"] = AssumptionItem(True, worst=float(dev.max()))
        else:
            ok, worst, wit = _vanishes(ts, dev)
            items["R_iii_regular_variation"] = AssumptionItem(ok, worst=worst, witness=wit)

    jb = np.sqrt(1.0 + xf * xf)
    for order, deriv in ((1, d1), (2, d2)):
        q = np.abs(deriv) / ((1.0 + v2) * jb ** (-order))
        ok, c, w = _no_growth(xf, q)
        items[f"R_iv_derivative_control_n{order}"] = AssumptionItem(
            ok, worst=c, witness=w, constant=c)
    items["R_iv_derivative_control_n>=3"] = AssumptionItem(
        None, note="untested: beyond numerical reach")
    return AssumptionReport(mode, items, grid)


# -- registry ---------------------------------------------------------------------


def _parse_number(text: str) -> float:
    return float(Fraction(text.strip())) if "/" in text else float(text)


def _parse_options(body: str) -> dict:
    opts = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        opts[k.strip()] = v.strip()
    return opts


def power_potential(p: float, domain_kind: str = FULL_LINE) -> PotentialModel:
    """V = i <x>^p with <x> = sqrt(1 + x^2)."""
    return PotentialModel(
        v2=lambda x: (1.0 + x * x) ** (p / 2.0),
        d_v2=lambda x: p * x * (1.0 + x * x) ** (p / 2.0 - 1.0),
        dd_v2=lambda x: p * (1.0 + x * x) ** (p / 2.0 - 2.0) * (1.0 + (p - 1.0) * x * x),
        domain_kind=domain_kind, x0=0.0, nu=-1.0, beta=p, label=f"power:p={p:g}",
        params={"p": p},
    )


def monomial_potential(n: int, domain_kind: str = FULL_LINE) -> PotentialModel:
    """V = i x^n (signed for odd n)."""
    if n < 1:
        raise ValueError("monomial degree must be >= 1")
    dd = (lambda x: n * (n - 1) * x ** (n - 2)) if n >= 2 else (lambda x: np.zeros_like(x))
    return PotentialModel(
        v2=lambda x: x ** n,
        d_v2=lambda x: n * x ** (n - 1),
        dd_v2=dd,
        domain_kind=domain_kind, x0=0.0, nu=-1.0, beta=float(n),
        label=f"monomial:n={n}", params={"n": n},
    )


def log_potential(domain_kind: str = FULL_LINE) -> PotentialModel:
    """V = i log<x>."""
    return PotentialModel(
        v2=lambda x: 0.5 * np.log1p(x * x),
        d_v2=lambda x: x / (1.0 + x * x),
        dd_v2=lambda x: (1.0 - x * x) / (1.0 + x * x) ** 2,
        domain_kind=domain_kind, x0=0.0, nu=-1.0, label="log",
    )


def expsq_potential(domain_kind: str = FULL_LINE) -> PotentialModel:
    """V = i exp(x^2)."""
    def v2(x):
        with np.errstate(over="ignore"):
            return np.exp(x * x)

    def d1(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return 2.0 * x * np.exp(x * x)

    def d2(x):
        with np.errstate(over="ignore", invalid="ignore"):
            return (2.0 + 4.0 * x * x) * np.exp(x * x)

    return PotentialModel(v2=v2, d_v2=d1, dd_v2=d2, domain_kind=domain_kind,
                          x0=0.0, nu=1.0, label="expsq")


def load_table(path: str) -> PotentialModel:
    """Tabulated potential from a CSV with a header row.

    Columns ``x`` and ``v2`` are required; ``v1`` is optional, and a ``dv2``
    column (as written by the inverse-problem exporter) is used for a Hermite
    interpolant. Otherwise derivatives come from shape-preserving splines.
    Outside the table the potential evaluates to NaN.
    """
    with open(path, newline="") as fh:
        rows = [r for r in fh if r.strip() and not r.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    cols = {name.strip().lower(): [] for name in reader.fieldnames}
    for rec in reader:
        for k, v in rec.items():
            cols[k.strip().lower()].append(float(v))
    if "x" not in cols or "v2" not in cols:
        raise ValueError(f"{path}: table needs 'x' and 'v2' columns")
    x = np.asarray(cols["x"])
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{path}: x column must be strictly increasing")
    v2 = np.asarray(cols["v2"])
    if "dv2" in cols:
        s2 = interpolate.CubicHermiteSpline(x, v2, np.asarray(cols["dv2"]), extrapolate=False)
    else:
        s2 = interpolate.PchipInterpolator(x, v2, extrapolate=False)
    ds2, dds2 = s2.derivative(), s2.derivative(2)
    kw = {}
    if "v1" in cols and np.any(np.asarray(cols["v1"]) != 0):
        s1 = interpolate.PchipInterpolator(x, np.asarray(cols["v1"]), extrapolate=False)
        kw = dict(v1=s1, d_v1=s1.derivative(), dd_v1=s1.derivative(2))
    return PotentialModel(v2=s2, d_v2=ds2, dd_v2=dds2, domain_kind=HALF_LINE,
                          x0=float(max(x[0], 0.0)), nu=-1.0, label=f"table:{path}",
                          params={"x_range": (float(x[0]), float(x[-1]))}, **kw)


def parse_potential(spec: str) -> PotentialModel:
    """Build a potential from a registry string.

    ``power:p=<real>``, ``monomial:n=<int>``, ``log``, ``expsq`` and
    ``table:<path>``. Builtins accept an extra ``domain=half|full`` option.
    """
    spec = spec.strip()
    if spec.startswith("table:"):
        return load_table(spec[len("table:"):])
    name, _, body = spec.partition(":")
    opts = _parse_options(body)
    domain = {"half": HALF_LINE, "full": FULL_LINE}.get(opts.pop("domain", "full"))
    if domain is None:
        raise ValueError("domain must be 'half' or 'full'")
    try:
        if name == "power":
            model = power_potential(_parse_number(opts.pop("p")), domain)
        elif name == "monomial":
            n = _parse_number(opts.pop("n"))
            if n != int(n):
                raise ValueError("monomial degree must be an integer")
            model = monomial_potential(int(n), domain)
        elif name == "log":
            model = log_potential(domain)
        elif name == "expsq":
            model = expsq_potential(domain)
        else:
            raise ValueError(f"unknown potential {name!r}")
    except KeyError as exc:
        raise ValueError(f"potential {name!r} is missing parameter {exc}") from None
    if opts:
        raise ValueError(f"unused options for {name!r}: {sorted(opts)}")
    return model
