"""Closed-form large-parameter estimates of the resolvent norm.

Every estimate is a product of a model-operator constant (from
:mod:`pseudonorm.airy_ref`) and a scale read off the potential at its
turning point x_b (imaginary axis) or at the Fourier scale t_a (real
axis). Remainders are reported as scales, never as bounds.
"""

from __future__ import annotations

import functools
import math
import re
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .airy_ref import DEFAULT_TOL, AiryQuery, airy_norm, airy_norm_asym, lambert_w0
from .errors import AssumptionsFailed, BetaMissing, LogDomain, NoBracket
from .potential import (
    FULL_LINE,
    PotentialModel,
    check_assumptions,
    fourier_scale,
    iota,
    kappa,
    solve_level,
    turning_point,
    upsilon,
)

IMAG = "imag"
REAL = "real"
PHI_GATE = 0.5
NUMERIC_REACH = 1e10


@dataclass
class AsymEstimate:
    """value == leading_constant * scale_factor, computed once."""

    leading_constant: float
    scale_factor: float
    remainder_scale: float
    validity: dict = field(default_factory=dict)
    value: float = field(init=False)
    method: str = "asymptotic"

    def __post_init__(self):
        self.value = self.leading_constant * self.scale_factor

    def to_dict(self) -> dict:
        return asdict(self)


# -- curves ------------------------------------------------------------------------

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?(?:/\d+)?"


def _num(text):
    if "/" in text:
        p, q = text.split("/")
        return float(p) / float(q)
    return float(text)


@dataclass(frozen=True)
class CurveSpec:
    """Spectral curve lambda = a(b) + ib (imag) or lambda = a + ib(a) (real).

    ``offset`` maps the curve parameter to the nonnegative offset from the
    axis. :meth:`parse` reads the monomial-log family
    ``c*param^q*(log(param))^s`` (factors optional, in any order).
    """

    axis: str
    offset: Callable[[float], float]
    label: str = "0"
    param_range: tuple = (0.0, math.inf)

    def __post_init__(self):
        if self.axis not in (IMAG, REAL):
            raise ValueError("axis must be 'imag' or 'real'")

    @classmethod
    def zero(cls, axis: str) -> "CurveSpec":
        return cls(axis, lambda t: 0.0, "0")

    @classmethod
    def parse(cls, axis: str, expr: str) -> "CurveSpec":
        text = expr.replace(" ", "")
        if text in ("", "0"):
            return cls.zero(axis)
        c, q, s = 1.0, 0.0, 0.0
        for factor in _split_factors(text):
            m_log = re.fullmatch(r"\(?log\(param\)\)?(?:\^\(?(" + _NUM + r")\)?)?", factor)
            m_pow = re.fullmatch(r"param(?:\^\(?(" + _NUM + r")\)?)?", factor)
            if m_log:
                s += _num(m_log.group(1)) if m_log.group(1) else 1.0
            elif m_pow:
                q += _num(m_pow.group(1)) if m_pow.group(1) else 1.0
            elif re.fullmatch(_NUM, factor):
                c *= _num(factor)
            else:
                raise ValueError(f"cannot parse curve factor {factor!r} in {expr!r}")
        if c < 0:
            raise ValueError("curve offset must be nonnegative")

        def offset(t, c=c, q=q, s=s):
            val = c * t ** q
            if s:
                val *= math.log(t) ** s
            return val

        lo = 1.0 if s else 0.0
        return cls(axis, offset, expr, (lo, math.inf))


def _split_factors(text):
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "*" and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return [f for f in out if f]


# -- helpers -----------------------------------------------------------------------


@functools.lru_cache(maxsize=64)
def _assumptions(V: PotentialModel, mode: str):
    return check_assumptions(V, mode)


def _require(V, mode, force):
    if force:
        return None
    report = _assumptions(V, mode)
    if not report.passed:
        raise AssumptionsFailed(
            f"{V.label or 'potential'}: {mode} assumptions fail: {report.failed_items()}"
            " (pass force=True to override)")
    return report.passed


def _airy_rot(mu=0.0, r=1.0, theta=math.pi / 2, tol=DEFAULT_TOL):
    return airy_norm(AiryQuery.rotated(r, theta, mu, tol)).value


def _airy_gen(beta, mu=0.0, tol=DEFAULT_TOL):
    return airy_norm(AiryQuery.generalized(beta, mu, tol)).value


def _shifted_norm(q):
    """Shifted model norm, or its asymptotic form beyond double-precision reach.

    Past NUMERIC_REACH the smallest singular value sits below the rounding
    floor of the discretised operator, so the leading asymptotic is used
    (relative error O(mu^-3/2), well under 1% there).
    """
    if q.mu > 0 and airy_norm_asym(q) > NUMERIC_REACH:
        return airy_norm_asym(q), "asymptotic"
    return airy_norm(q).value, "numeric"


def default_eps(beta: float) -> float:
    """Admissible slack in the real-axis remainder exponent."""
    return min(beta, 1.0) / 10.0


def remainder_exponent(beta: float, eps: Optional[float] = None) -> float:
    eps = default_eps(beta) if eps is None else eps
    return 1.0 - eps if beta > 0.5 else 0.5 + beta - eps


def _japanese(x):
    return math.sqrt(1.0 + x * x)


# -- axis estimates ----------------------------------------------------------------


def resnorm_iR(V: PotentialModel, b: float, force: bool = False,
               tol: float = DEFAULT_TOL) -> AsymEstimate:
    """Estimate of ||(H - ib)^-1|| for large b > 0.

    ||A_{r,theta}^-1|| V2'(x_b)^(-2/3), where r e^{i theta} = l + i and l is
    the limit of V1'/V2'. The remainder scale is kappa_b + Upsilon(x_b).
    """
    ok = _require(V, "iR", force)
    k = kappa(V, b)
    d = float(V.dV2(np.array([k.x_b]))[0])
    const = _airy_rot(0.0, k.r, k.theta, tol)
    return AsymEstimate(const, d ** (-2.0 / 3.0), k.kappa_b + upsilon(V, k.x_b),
                        {"assumptions_pass": ok, "x_b": k.x_b, "r": k.r,
                         "theta": k.theta})


def resnorm_R(V: PotentialModel, a: float, eps: Optional[float] = None,
              force: bool = False, tol: float = DEFAULT_TOL) -> AsymEstimate:
    """Estimate of ||(H - a)^-1|| for large a > 0 and V = i V2.

    ||A_beta^-1|| / V2(t_a), remainder scale iota(t_a) + (sqrt(a) t_a)^(-l).
    """
    if V.beta is None:
        raise BetaMissing(f"{V.label or 'potential'} has no regular-variation index")
    ok = _require(V, "R", force)
    t = fourier_scale(V, a)
    v = float(V.V2(np.array([t]))[0])
    l = remainder_exponent(V.beta, eps)
    rem = iota(V, t) + (math.sqrt(a) * t) ** (-l)
    return AsymEstimate(_airy_gen(V.beta, 0.0, tol), 1.0 / v, rem,
                        {"assumptions_pass": ok, "t_a": t, "exponent": l})


def resnorm_curve(V: PotentialModel, curve: CurveSpec, param: float,
                  eps: Optional[float] = None, force: bool = False,
                  tol: float = DEFAULT_TOL) -> AsymEstimate:
    """Estimate along a curve adjacent to an axis.

    Imaginary axis (v1 = 0): ||(A_{1,pi/2} - mu_b)^-1|| V2'(x_b)^(-2/3) with
    mu_b = V2'(x_b)^(-2/3) a(b). Real axis: ||(A_beta - mu_a)^-1|| / V2(t_a)
    with mu_a = b(a) / V2(t_a). The smallness parameter Phi is returned as
    remainder scale; ``validity["valid"]`` is false when Phi > 0.5.
    """
    off = float(curve.offset(param))
    if off < 0:
        raise ValueError("curve offset must be nonnegative")
    if curve.axis == IMAG:
        if off == 0.0:
            est = resnorm_iR(V, param, force=force, tol=tol)
            est.validity.update(phi=0.0, mu=0.0, valid=True)
            return est
        if not V.v1_is_zero:
            raise ValueError("curves off the imaginary axis need a purely imaginary V")
        ok = _require(V, "iR", force)
        x_b = turning_point(V, param)
        rho2 = float(V.dV2(np.array([x_b]))[0]) ** (-2.0 / 3.0)
        mu = rho2 * off
        shifted, source = _shifted_norm(AiryQuery.rotated(mu=mu, tol=tol))
        phi = _japanese(mu) ** 2 * shifted * upsilon(V, x_b)
        return AsymEstimate(shifted, rho2, phi,
                            {"assumptions_pass": ok, "phi": phi, "mu": mu,
                             "valid": phi <= PHI_GATE, "x_b": x_b, "model_norm": source})
    if off == 0.0:
        est = resnorm_R(V, param, eps=eps, force=force, tol=tol)
        est.validity.update(phi=0.0, mu=0.0, valid=True)
        return est
    if V.beta is None:
        raise BetaMissing(f"{V.label or 'potential'} has no regular-variation index")
    ok = _require(V, "R", force)
    t = fourier_scale(V, param)
    v = float(V.V2(np.array([t]))[0])
    mu = off / v
    shifted, source = _shifted_norm(AiryQuery.generalized(V.beta, mu, tol))
    l = remainder_exponent(V.beta, eps)
    phi = _japanese(mu) ** 2 * shifted * (iota(V, t) + (math.sqrt(param) * t) ** (-l))
    sublinear = off / param < 1.0
    return AsymEstimate(shifted, 1.0 / v, phi,
                        {"assumptions_pass": ok, "phi": phi, "mu": mu, "t_a": t,
                         "valid": phi <= PHI_GATE and sublinear,
                         "offset_sublinear": sublinear, "model_norm": source})


def _side_trend(V: PotentialModel, side: str) -> int:
    """+1 / -1 if V2 grows to +inf / -inf away from the origin, 0 if bounded."""
    s = 1.0 if side == "plus" else -1.0
    x0 = V.side_x0(side)
    ys = x0 + np.array([0.0, 1.0, 1e1, 1e2, 1e3, 1e4])
    with np.errstate(all="ignore"):
        v = V.V2(s * ys)
    for sign in (1, -1):
        w = sign * np.where(np.isnan(v), sign * np.inf, v)
        # overflow to +inf counts as growth
        steps = (w[1:] > w[:-1]) | ((w[1:] == np.inf) & (w[:-1] == np.inf))
        if np.all(steps) and (w[-1] == np.inf or w[-1] - w[1] > 1.0):
            return sign
    return 0


def resnorm_wholeline(V: PotentialModel, b: float, sign: int = 1,
                      tol: float = DEFAULT_TOL) -> AsymEstimate:
    """Estimate of ||(H - i sign b)^-1|| for V = i V2 on the whole line.

    Each side whose V2 tends to sign * inf has a turning point with
    V2 = sign * b; the estimate is ||A_{1,pi/2}^-1|| times the largest
    |V2'|^(-2/3) among them. A side on which V2 stays bounded raises
    NoBracket (use the half-line estimate instead).
    """
    if V.domain_kind != FULL_LINE:
        raise ValueError("whole-line estimate needs a full_line potential")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not b > 0:
        raise ValueError("b must be positive")
    scales, ups, points = [], [], {}
    for side in ("plus", "minus"):
        trend = _side_trend(V, side)
        if trend == 0:
            raise NoBracket(f"V2 stays bounded on the {side} side; use the half-line estimate")
        if trend != sign:
            continue
        x = solve_level(V, sign * b, side)
        d = abs(float(V.dV2(np.array([x]))[0]))
        scales.append(d ** (-2.0 / 3.0))
        ups.append(upsilon(V, x))
        points[side] = x
    if not scales:
        raise NoBracket(f"V2 does not reach {sign * b:g} on either side")
    return AsymEstimate(_airy_rot(tol=tol), max(scales), max(ups),
                        {"turning_points": points})


def resnorm_radial(v: PotentialModel, d: int, b: float, force: bool = False,
                   tol: float = DEFAULT_TOL) -> AsymEstimate:
    """Estimate for -Laplacian + i v(|x|) in dimension d >= 2.

    The leading term does not depend on d and coincides with the half-line
    estimate for v.
    """
    if int(d) != d or d < 2:
        raise ValueError("dimension must be an integer >= 2")
    if not v.v1_is_zero:
        raise ValueError("radial estimate needs a purely imaginary potential")
    est = resnorm_iR(v, b, force=force, tol=tol)
    est.validity["dimension"] = int(d)
    return est


# -- level curves and critical regions ------------------------------------------


def _axis_scale(V, axis, param):
    """rho^2 = V2'(x_b)^(-2/3) on the imaginary axis, 1/V2(t_a) on the real one."""
    if axis == IMAG:
        x_b = turning_point(V, param)
        return float(V.dV2(np.array([x_b]))[0]) ** (-2.0 / 3.0)
    if axis == REAL:
        t = fourier_scale(V, param)
        return 1.0 / float(V.V2(np.array([t]))[0])
    raise ValueError("axis must be 'imag' or 'real'")


def _lambert_mu(target, axis, beta=None, mu0=1.0):
    """mu with leading-term model norm equal to ``target``, via the Lambert
    fixed point y e^y = C zeta(mu)."""
    if axis == IMAG:
        c, p, k = 4.0 / 3.0, 1.5, 4.0 / 3.0 * math.sqrt(2.0 / math.pi)
        zeta_pow = 7.0 / 4.0
    else:
        c = 2.0 * beta / (beta + 1.0)
        p = (beta + 1.0) / beta
        k = c * math.sqrt(beta / math.pi)
        zeta_pow = (3.0 * beta + 1.0) / (2.0 * beta)
    mu = mu0
    for _ in range(200):
        new = (lambert_w0(k * mu ** zeta_pow * target) / c) ** (1.0 / p)
        if abs(new - mu) <= 1e-14 * max(1.0, mu):
            return new
        mu = new
    # slow contraction (mu of order one): solve the same equation directly
    if axis == IMAG:
        q = lambda m: AiryQuery.rotated(mu=m)  # noqa: E731
    else:
        q = lambda m: AiryQuery.generalized(beta, m)  # noqa: E731
    return optimize.brentq(lambda m: math.log(airy_norm_asym(q(m))) - math.log(target),
                           1e-6, max(2 * mu, 10.0), xtol=1e-15, rtol=1e-14)


def level_curve(V: PotentialModel, axis: str, eps: float, param: float,
                method: str = "leading") -> float:
    """Offset a_b (imag) or b_a (real) of the level curve ||(H - lambda)^-1|| = 1/eps.

    ``method="leading"`` evaluates the closed leading-order formula
    (log-power form). ``method="lambert"`` instead solves
    leading-term-model-norm(mu) = scale^-1 / eps exactly through the
    Lambert W fixed point, which keeps the square-root prefactor the
    leading form drops.

    Raises
    ------
    LogDomain
        When scale^-1 / eps <= e, where the formula has no meaning.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if method not in ("leading", "lambert"):
        raise ValueError("method must be 'leading' or 'lambert'")
    if axis == REAL and V.beta is None:
        raise BetaMissing(f"{V.label or 'potential'} has no regular-variation index")
    scale = _axis_scale(V, axis, param)
    arg = 1.0 / (scale * eps)
    if not arg > math.e:
        raise LogDomain(f"log argument {arg:.4g} <= e at parameter {param:g}")
    if axis == IMAG:
        power, const = 2.0 / 3.0, (3.0 / 4.0) ** (2.0 / 3.0)
    else:
        power = V.beta / (V.beta + 1.0)
        const = ((V.beta + 1.0) / (2.0 * V.beta)) ** power
    mu_lead = const * math.log(arg) ** power
    if method == "leading":
        return mu_lead / scale
    return _lambert_mu(arg, axis, V.beta, mu0=mu_lead) / scale


@dataclass(frozen=True)
class Boundary:
    """Critical-region boundary offset; ``clamped`` marks a negative formula value."""

    value: float
    clamped: bool
    raw: float

    def __float__(self):
        return self.value


def critical_boundary(V: PotentialModel, axis: str, eps: float, eps_prime: float,
                      param: float, tol: float = DEFAULT_TOL) -> Boundary:
    """Offset inside which ||(H - lambda)^-1|| <= 1/eps is guaranteed.

    Imaginary axis: ||A_{1,pi/2}^-1||^-1 V2'(x_b)^(2/3) (1 - eps') - eps.
    Real axis: ||A_beta^-1||^-1 V2(t_a) (1 - eps') - eps.
    """
    scale = _axis_scale(V, axis, param)
    if axis == IMAG:
        const = _airy_rot(tol=tol)
    else:
        if V.beta is None:
            raise BetaMissing(f"{V.label or 'potential'} has no regular-variation index")
        const = _airy_gen(V.beta, tol=tol)
    raw = (1.0 - eps_prime) / (const * scale) - eps
    return Boundary(max(raw, 0.0), raw < 0, raw)


__all__ = [
    "AsymEstimate", "Boundary", "CurveSpec", "IMAG", "REAL", "critical_boundary",
    "default_eps", "level_curve", "remainder_exponent", "resnorm_R", "resnorm_curve",
    "resnorm_iR", "resnorm_radial", "resnorm_wholeline",
]
