"""Reference constants from the Airy-type model operators.

The rotated operator -d^2/dx^2 + r e^{i theta} x and the first-order
operator -d/dx + |x|^beta on the line, shifted by a real mu >= 0. Their
inverse norms are computed numerically (and cached), or from their
large-mu asymptotics. Also home to the principal Lambert W branch and a
point-spectrum certificate for first-order operators.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import Inconclusive, MuNonpositive, OutOfDomain
from .operator_lab import (
    LADDER_DENSE_LIMIT,
    Discretization,
    FirstOrderSpec,
    NormResult,
    assemble,
    refine,
    smallest_singular_value,
)
from .potential import FULL_LINE, PotentialModel

ROTATED = "rotated_second_order"
GENERALIZED = "generalized_first_order"
CACHE_VERSION = 1
CACHE_ENV = "PSEUDONORM_CACHE"
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class AiryQuery:
    """One model-operator norm request.

    Use :meth:`rotated` or :meth:`generalized` rather than the raw
    constructor.
    """

    kind: str
    mu: float = 0.0
    r: float = 1.0
    theta: float = math.pi / 2
    beta: Optional[float] = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kind not in (ROTATED, GENERALIZED):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not self.mu >= 0:
            raise ValueError("mu must be nonnegative")
        if self.kind == ROTATED:
            if not self.r > 0:
                raise ValueError("r must be positive")
            if not -math.pi < self.theta < math.pi:
                raise ValueError("theta must lie in (-pi, pi)")
        elif self.beta is None or not self.beta > 0:
            raise ValueError("beta must be positive")

    @classmethod
    def rotated(cls, r=1.0, theta=math.pi / 2, mu=0.0, tol=DEFAULT_TOL):
        return cls(ROTATED, mu=float(mu), r=float(r), theta=float(theta), tol=tol)

    @classmethod
    def generalized(cls, beta, mu=0.0, tol=DEFAULT_TOL):
        return cls(GENERALIZED, mu=float(mu), beta=float(beta), tol=tol)

    def params(self) -> dict:
        if self.kind == ROTATED:
            return {"r": self.r, "theta": self.theta}
        return {"beta": self.beta}


# -- persistent cache ---------------------------------------------------------------


def _q(x: float) -> float:
    return round(float(x), 9)


def _tol_bucket(tol: float) -> int:
    return int(math.floor(math.log10(tol) + 1e-9))


def _key(kind, params, mu):
    return json.dumps([kind, {k: _q(v) for k, v in sorted(params.items())}, _q(mu)])


class AiryNormTable:
    """JSON-backed map from quantised queries to norm results.

    An entry answers a query when kind, parameters and mu agree after
    rounding to 1e-9 and its tolerance bucket is at least as tight as the
    one requested. Writes hold a lock file and replace the file
    atomically; readers never see a partial file.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self._mem = {}
        self._lock = threading.Lock()
        if path and os.path.exists(path):
            self._mem = self._read()

    def _read(self) -> dict:
        try:
            with open(self.path) as fh:
                blob = json.load(fh)
        except (OSError, ValueError):
            return {}
        if not isinstance(blob, dict) or blob.get("version") != CACHE_VERSION:
            return {}
        out = {}
        for e in blob.get("entries", []):
            out[_key(e["kind"], e["params"], e["mu"])] = e
        return out

    def lookup(self, q: AiryQuery) -> Optional[NormResult]:
        e = self._mem.get(_key(q.kind, q.params(), q.mu))
        if e is None or _tol_bucket(e["tol"]) > _tol_bucket(q.tol):
            return None
        return NormResult.from_dict(e["grid_meta"])

    def store(self, q: AiryQuery, res: NormResult) -> None:
        entry = {"kind": q.kind, "params": q.params(), "mu": q.mu, "tol": q.tol,
                 "value": res.value, "grid_meta": res.to_dict()}
        with self._lock:
            key = _key(q.kind, q.params(), q.mu)
            old = self._mem.get(key)
            if old is not None and _tol_bucket(old["tol"]) < _tol_bucket(q.tol):
                return
            self._mem[key] = entry
            if self.path:
                self._flush(key, entry)

    def _flush(self, key, entry):
        import fcntl

        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        with open(self.path + ".lock", "w") as lockfh:
            fcntl.flock(lockfh, fcntl.LOCK_EX)
            # merge with whatever other writers added meanwhile
            merged = self._read() if os.path.exists(self.path) else {}
            merged[key] = entry
            self._mem.update({k: v for k, v in merged.items() if k not in self._mem})
            fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                json.dump({"version": CACHE_VERSION, "entries": list(merged.values())},
                          fh, indent=1)
            os.replace(tmp, self.path)

    def __len__(self):
        return len(self._mem)


_default_table: Optional[AiryNormTable] = None


def default_table() -> AiryNormTable:
    """Process-wide table, persisted when PSEUDONORM_CACHE is set."""
    global _default_table
    path = os.environ.get(CACHE_ENV) or None
    if _default_table is None or _default_table.path != path:
        _default_table = AiryNormTable(path)
    return _default_table


# -- numeric norms ------------------------------------------------------------------


def _linear_potential(r, theta):
    a, b = r * math.cos(theta), r * math.sin(theta)
    return PotentialModel(v1=lambda x: a * x, v2=lambda x: b * x,
                          domain_kind=FULL_LINE, label=f"airy(r={r:g},theta={theta:g})")


def _rotated_numeric(r, theta, mu, tol):
    V = _linear_potential(r, theta)
    # turning region plus Airy decay lengths, scaled to the slope r
    L = max(30.0, 10.0 * (1.0 + mu) ** 1.5) * r ** (-1.0 / 3.0)
    h0 = min(1.0, (r * L + mu) ** -0.5) / 4.0
    N = max(256, int(math.ceil(2 * L / h0)))
    disc = Discretization(L=L, N=N, stencil="fd4")
    return refine(lambda d: smallest_singular_value(assemble(V, mu, d), LADDER_DENSE_LIMIT),
                  disc, tol)


def _generalized_numeric(beta, mu, tol):
    spec = FirstOrderSpec(beta)
    L = max(30.0, 10.0 * (1.0 + mu) ** (1.0 / beta + 1.0))
    # exponential rates up to ~mu inside the well
    h0 = 0.05 / (1.0 + mu)
    N = max(256, int(math.ceil(2 * L / h0)))
    disc = Discretization(L=L, N=N, stencil="fd4")
    return refine(lambda d: smallest_singular_value(assemble(None, mu, d, spec),
                                                    LADDER_DENSE_LIMIT),
                  disc, tol)


def airy_norm(q: AiryQuery, table: Optional[AiryNormTable] = None,
              reduce_scale: bool = True) -> NormResult:
    """Numerical inverse norm of the shifted model operator.

    Parameters
    ----------
    q : AiryQuery
    table : AiryNormTable, optional
        Cache to consult and update; defaults to :func:`default_table`.
    reduce_scale : bool
        For the rotated kind, compute at r = 1 and rescale with
        ||(A_{r,theta} - mu)^-1|| = r^(-2/3) ||(A_{1,theta} - r^(-2/3) mu)^-1||.
        Switch off to discretise the operator with slope r directly.

    Raises
    ------
    NotConverged
        From the refinement ladder.
    """
    if q.kind == ROTATED and reduce_scale and q.r != 1.0:
        s = q.r ** (-2.0 / 3.0)
        base = airy_norm(AiryQuery.rotated(1.0, q.theta, s * q.mu, q.tol), table)
        return NormResult(value=s * base.value, converged=base.converged,
                          grid_history=base.grid_history,
                          est_rel_error=base.est_rel_error)
    cacheable = reduce_scale or q.kind != ROTATED or q.r == 1.0
    table = table if table is not None else default_table()
    if cacheable:
        hit = table.lookup(q)
        if hit is not None:
            return hit
    if q.kind == ROTATED:
        res = _rotated_numeric(q.r, q.theta, q.mu, q.tol)
    else:
        res = _generalized_numeric(q.beta, q.mu, q.tol)
    if cacheable:
        table.store(q, res)
    return res


def airy_norm_asym(q: AiryQuery) -> float:
    """Leading large-mu term of the model-operator inverse norm.

    Rotated kind (theta = +-pi/2):
    r^(-2/3) sqrt(pi/2) m^(-1/4) exp(4/3 m^(3/2)) with m = r^(-2/3) mu.
    Generalized kind:
    sqrt(pi/beta) mu^((1-beta)/(2 beta)) exp(2 beta/(beta+1) mu^((beta+1)/beta)).
    Additive lower-order corrections are not included.
    """
    if not q.mu > 0:
        raise MuNonpositive("asymptotic formula needs mu > 0")
    if q.kind == ROTATED:
        if not math.isclose(abs(q.theta), math.pi / 2, rel_tol=0, abs_tol=1e-12):
            raise ValueError("asymptotic formula is available for theta = +-pi/2 only")
        s = q.r ** (-2.0 / 3.0)
        m = s * q.mu
        return s * math.sqrt(math.pi / 2.0) * m ** -0.25 * math.exp(4.0 / 3.0 * m ** 1.5)
    b = q.beta
    return (math.sqrt(math.pi / b) * q.mu ** ((1.0 - b) / (2.0 * b))
            * math.exp(2.0 * b / (b + 1.0) * q.mu ** ((b + 1.0) / b)))


# -- Lambert W ----------------------------------------------------------------------


def lambert_w0(x: float) -> float:
    """Principal branch of the inverse of y -> y e^y, for x >= -1/e.

    Halley iteration from log x - log log x (x >= e), a branch-point
    series near -1/e, or log1p(x) otherwise.
    """
    x = float(x)
    branch = -1.0 / math.e
    if x < branch:
        if x > branch - 1e-15:
            x = branch
        else:
            raise OutOfDomain(f"W0 undefined for x = {x!r} < -1/e")
    if x == 0.0:
        return 0.0
    if x == branch:
        return -1.0
    if math.isinf(x):
        return math.inf
    if x >= math.e:
        l1 = math.log(x)
        w = l1 - math.log(l1)
    elif x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    else:
        w = math.log1p(x)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


# -- point spectrum of -d/dx + W ----------------------------------------------------


@dataclass(frozen=True)
class SpectrumCertificate:
    """Outcome of :func:`point_spectrum_empty`.

    ``empty`` is the verdict: true means lambda is not an eigenvalue.
    ``diverging_tail`` names the tail on which the candidate eigenfunction
    exceeded the overflow guard; ``growth_condition`` reports whether
    Re W grows without bound at the right end of the sampled range.
    """

    empty: bool
    diverging_tail: Optional[str]
    guard_position: Optional[float]
    growth_condition: bool

    def __bool__(self):
        return self.empty


LOG_GUARD = 300.0


def _scan_tail(W_real, re_lam, sign, horizon, n_seg=4000):
    """Walk the log-modulus g(x) = int_0^x Re W - Re(lam) x outward.

    Returns ("diverge", x) once 2g passes LOG_GUARD while increasing,
    ("converge", x) once 2g drops below -LOG_GUARD while decreasing, or
    ("unknown", horizon).
    """
    edges = np.linspace(0.0, horizon, n_seg + 1)
    acc = 0.0
    prev_g = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        piece, _ = integrate.quad(lambda t: W_real(sign * t), a, b, limit=100)
        acc += sign * piece
        g = acc - re_lam * sign * b
        if 2 * g >= LOG_GUARD and g > prev_g:
            return "diverge", float(sign * b)
        if 2 * g <= -LOG_GUARD and g < prev_g:
            return "converge", float(sign * b)
        prev_g = g
    return "unknown", sign * horizon


def point_spectrum_empty(W_real: Callable[[float], float], lam: complex,
                         horizon: float = 1000.0) -> SpectrumCertificate:
    """Decide whether lam is an eigenvalue of -d/dx + W on the line.

    lam is an eigenvalue exactly when exp(int_0^x Re W - Re(lam) x) is
    square integrable. Divergence on either tail certifies that it is not;
    convergence on both tails certifies that it is.

    Raises
    ------
    Inconclusive
        If neither verdict is reached within ``horizon``.
    """
    re_lam = complex(lam).real
    right = _scan_tail(W_real, re_lam, 1.0, horizon)
    w_far = [W_real(horizon * f) for f in (0.25, 0.5, 1.0)]
    growth = w_far[0] < w_far[1] < w_far[2] and w_far[2] > max(re_lam, 0.0) + 1.0
    if right[0] == "diverge":
        return SpectrumCertificate(True, "right", right[1], growth)
    left = _scan_tail(W_real, re_lam, -1.0, horizon)
    if left[0] == "diverge":
        return SpectrumCertificate(True, "left", left[1], growth)
    if right[0] == "converge" and left[0] == "converge":
        return SpectrumCertificate(False, None, None, growth)
    raise Inconclusive(f"no verdict for lambda={lam} within horizon {horizon:g}")
