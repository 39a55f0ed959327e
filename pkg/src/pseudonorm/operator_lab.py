"""Finite-difference resolvent norms.

Truncates H - lambda (or a first-order model operator) to an interval with
Dirichlet conditions and computes 1/sigma_min of the sparse banded matrix.
A refinement ladder in the grid size and the interval length stands in for
a posteriori error bounds.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy import integrate

from .errors import NoConvergence, NotConverged
from .potential import FULL_LINE, HALF_LINE, PotentialModel

STENCILS = ("fd2", "fd4")
DENSE_LIMIT = 2000
# the ladder switches to Lanczos earlier: a dense SVD at N = 2000 costs
# seconds on one core
LADDER_DENSE_LIMIT = 400
N_CAP = 2 ** 21
L_GROWTH = 1.5
L_CAP_FACTOR = 20.0
# decay target (in e-folds) of the resolvent kernel at the truncation point
ACTION_TARGET = 30.0


@dataclass(frozen=True)
class Discretization:
    """Uniform Dirichlet grid.

    Full line: N interior points of [-L, L]. Half line: N interior points
    of [0, L].
    """

    L: float
    N: int
    stencil: str = "fd2"
    domain: str = FULL_LINE

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.N < 16:
            raise ValueError("N must be at least 16")
        if self.stencil not in STENCILS:
            raise ValueError(f"stencil must be one of {STENCILS}")
        if self.domain not in (FULL_LINE, HALF_LINE):
            raise ValueError("domain must be full_line or half_line")

    @property
    def length(self) -> float:
        return 2.0 * self.L if self.domain == FULL_LINE else self.L

    @property
    def h(self) -> float:
        return self.length / (self.N + 1)

    @property
    def left(self) -> float:
        return -self.L if self.domain == FULL_LINE else 0.0

    def nodes(self) -> np.ndarray:
        return self.left + self.h * np.arange(1, self.N + 1)


@dataclass(frozen=True)
class FirstOrderSpec:
    """The model operator -d/dx + |x|^beta on the line."""

    beta: float


@dataclass
class OperatorMatrix:
    matrix: sp.spmatrix
    x: np.ndarray
    disc: Discretization
    lam: complex
    label: str = ""

    @property
    def shape(self):
        return self.matrix.shape


@dataclass
class NormResult:
    value: float
    method: str = "numeric"
    remainder_scale: Optional[float] = None
    converged: bool = True
    grid_history: list = field(default_factory=list)
    est_rel_error: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid_history"] = [list(map(float, row)) for row in self.grid_history]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NormResult":
        d = dict(d)
        d["grid_history"] = [tuple(row) for row in d.get("grid_history", [])]
        return cls(**d)


# 5-point second-difference weights for -u''
_FD4 = np.array([1.0, -16.0, 30.0, -16.0, 1.0]) / 12.0
# 5-point first-difference weights for u' (offsets -2..2)
_FD4_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _cell_average_power(x, h, beta):
    """Mean of |s|^beta over [x - h/2, x + h/2]; removes the cusp error at 0."""
    def F(t):
        return np.sign(t) * np.abs(t) ** (beta + 1.0) / (beta + 1.0)
    return (F(x + h / 2.0) - F(x - h / 2.0)) / h


def _second_order(N, h, stencil):
    if stencil == "fd2":
        e = np.ones(N)
        return sp.diags([-e[:-1], 2.0 * e, -e[:-1]], [-1, 0, 1]) / (h * h)
    c = _FD4
    diag = np.full(N, c[2])
    # Dirichlet via odd reflection: the ghost value beyond each end is
    # minus the first interior value
    diag[0] -= c[0]
    diag[-1] -= c[4]
    e = np.ones(N)
    return sp.diags(
        [c[0] * e[:-2], c[1] * e[:-1], diag, c[3] * e[:-1], c[4] * e[:-2]],
        [-2, -1, 0, 1, 2],
    ) / (h * h)


def _first_order(N, h, stencil):
    """Matrix of -d/dx with zero values outside the grid."""
    e = np.ones(N)
    if stencil == "fd2":
        return sp.diags([0.5 * e[:-1], -0.5 * e[:-1]], [-1, 1]) / h
    c = _FD4_D1
    return -sp.diags([c[0] * e[:-2], c[1] * e[:-1], c[3] * e[:-1], c[4] * e[:-2]],
                     [-2, -1, 1, 2]) / h


def assemble(V: Optional[PotentialModel], lam: complex, disc: Discretization,
             first_order: Optional[FirstOrderSpec] = None) -> OperatorMatrix:
    """Sparse matrix of H - lam (or A_beta - lam) on the grid of ``disc``."""
    x = disc.nodes()
    h = disc.h
    if first_order is not None:
        beta = first_order.beta
        even_int = float(beta).is_integer() and int(beta) % 2 == 0
        w = np.abs(x) ** beta if even_int else _cell_average_power(x, h, beta)
        K = _first_order(disc.N, h, disc.stencil)
        label = f"A_beta(beta={beta:g})"
    else:
        w = V.V(x)
        K = _second_order(disc.N, h, disc.stencil)
        label = V.label
    M = (K.astype(complex) + sp.diags(np.asarray(w - lam, dtype=complex))).tocsc()
    return OperatorMatrix(M, x, disc, complex(lam), label)


def _as_sparse(M):
    if isinstance(M, OperatorMatrix):
        return M.matrix
    return M if sp.issparse(M) else np.asarray(M)


def smallest_singular_value(M, dense_limit: int = DENSE_LIMIT) -> float:
    """sigma_min of a square matrix.

    Small matrices use a dense SVD. Larger ones use Lanczos on
    (M^H M)^-1 applied through one sparse LU factorisation of M; its top
    eigenvalue is sigma_min^-2.
    """
    A = _as_sparse(M)
    n, m = A.shape
    if n != m:
        raise ValueError("matrix must be square")
    if n <= dense_limit:
        dense = A.toarray() if sp.issparse(A) else A
        return float(sla.svdvals(dense).min())
    A = sp.csc_matrix(A, dtype=complex)
    try:
        lu = spl.splu(A)
    except RuntimeError:
        # exactly singular factorisation
        return 0.0

    def apply(v):
        return lu.solve(lu.solve(v, trans="H"))

    op = spl.LinearOperator((n, n), matvec=apply, dtype=complex)
    try:
        vals, vecs = spl.eigsh(op, k=1, which="LM", tol=1e-13, maxiter=5000,
                               v0=np.ones(n, dtype=complex))
    except spl.ArpackNoConvergence as exc:
        raise NoConvergence(f"Lanczos did not converge for N={n}") from exc
    theta = float(vals[0])
    if not theta > 0:
        return math.inf
    v = vecs[:, 0]
    resid = np.linalg.norm(apply(v) - theta * v)
    if resid > 1e-10 * theta * np.linalg.norm(v):
        raise NoConvergence(f"eigen-residual {resid / theta:.2e} too large (N={n})")
    return 1.0 / math.sqrt(theta)


# -- automatic truncation -----------------------------------------------------------


def _side_length(V, lam, sign, start=4.0, l_max=1e6):
    """Distance from 0 on one side where the WKB action past the closest
    approach of V to lam reaches ACTION_TARGET."""
    L = start
    while L <= l_max:
        y = np.linspace(0.0, L, 4001)
        with np.errstate(all="ignore"):
            q = V.V(sign * y) - lam
        if not np.all(np.isfinite(q)):
            # overflow far out: the kernel is long dead there
            good = np.isfinite(q)
            cut = int(np.argmin(good)) if not good.all() else y.size
            y, q = y[:cut], q[:cut]
            if y.size < 10:
                return L
        k = int(np.argmin(np.abs(q)))
        decay = np.sqrt(q[k:]).real
        action = float(integrate.trapezoid(decay, y[k:]))
        if action >= ACTION_TARGET or y[-1] < L:
            if y[-1] < L:
                return float(y[-1])
            # tighten to the point where the target is first reached
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (decay[1:] + decay[:-1]) * np.diff(y[k:]))])
            j = int(np.searchsorted(cum, ACTION_TARGET))
            return float(max(y[k:][min(j, cum.size - 1)], start))
        L *= 1.5
    return l_max


def auto_discretization(V: PotentialModel, lam: complex, stencil: str = "fd4",
                        domain: Optional[str] = None) -> Discretization:
    """Initial grid for the refinement ladder.

    Unbounded V: each side extends until the decay action past the
    closest approach of V to lam reaches ACTION_TARGET e-folds (the
    full-line interval is symmetric). Bounded V: L = 50 (1 + |lam|^1/2).
    The spacing resolves the local wavelength max|V - lam|^-1/2.
    """
    domain = domain or V.domain_kind
    if V.is_unbounded():
        L = _side_length(V, lam, 1.0)
        if domain == FULL_LINE:
            L = max(L, _side_length(V, lam, -1.0))
    else:
        L = 50.0 * (1.0 + math.sqrt(abs(lam)))
    x = np.linspace(-L if domain == FULL_LINE else 0.0, L, 20001)
    with np.errstate(all="ignore"):
        q = np.abs(V.V(x) - lam)
    qmax = float(np.max(q[np.isfinite(q)]))
    h0 = min(1.0, qmax ** -0.5 if qmax > 0 else 1.0) / 4.0
    length = 2.0 * L if domain == FULL_LINE else L
    N = int(min(max(256, math.ceil(length / h0)), 2 ** 18))
    return Discretization(L=L, N=N, stencil=stencil, domain=domain)


def _with(disc: Discretization, **kw) -> Discretization:
    d = dict(L=disc.L, N=disc.N, stencil=disc.stencil, domain=disc.domain)
    d.update(kw)
    return Discretization(**d)


def refine(evaluate, disc0: Discretization, tol: float, n_cap: int = N_CAP,
           l_cap: Optional[float] = None) -> NormResult:
    """Refinement ladder around ``evaluate(disc) -> sigma_min``.

    First grows L by 1.5 at fixed spacing until the relative change is at
    most ``tol`` (truncation error barely depends on h, so this runs on the
    cheap starting grid). The last length that passed is kept and N is
    doubled at fixed L. Once successive
    changes shrink geometrically with ratio r > 2.5, the remaining
    discretisation error is estimated by the tail sum change / (r - 1).
    Raises NotConverged (carrying the best result) if a cap is reached.
    """
    l_cap = l_cap if l_cap is not None else L_CAP_FACTOR * disc0.L
    history = []

    def run(d):
        sigma = evaluate(d)
        val = 1.0 / sigma if sigma > 0 else math.inf
        history.append((d.L, d.N, val))
        return val

    def rel(new, old):
        return abs(new - old) / abs(new)

    disc = disc0
    if disc.domain == FULL_LINE and disc.N % 2 == 0:
        # keep x = 0 a node on every grid of the ladder
        disc = _with(disc, N=disc.N + 1)
    value = run(disc)
    err_l = err_n = math.inf
    converged = True
    while True:
        N_new = int(round((disc.N + 1) * L_GROWTH)) - 1
        N_new += (N_new - disc.N) % 2
        L_new = disc.L * (N_new + 1) / (disc.N + 1)
        if L_new > l_cap or N_new > n_cap:
            converged = False
            break
        grown = _with(disc, L=L_new, N=N_new)
        new = run(grown)
        err_l = rel(new, value)
        if err_l <= tol:
            break
        disc, value = grown, new
    prev_change = math.inf
    while converged:
        if 2 * disc.N + 1 > n_cap:
            converged = False
            break
        disc = _with(disc, N=2 * disc.N + 1)
        new = run(disc)
        change, value = rel(new, value), new
        ratio = prev_change / change if change > 0 else math.inf
        geometric = math.isfinite(prev_change) and ratio > 2.5
        err_n = change / (min(ratio, 16.0) - 1.0) if geometric else change
        prev_change = change
        if err_n <= tol:
            break
    finite = [c for c in (err_l, err_n) if math.isfinite(c)]
    est = max(finite) if finite else math.inf
    result = NormResult(value=value, converged=converged, grid_history=history,
                        est_rel_error=est)
    if not converged:
        raise NotConverged(
            f"refinement cap reached (error estimate {est:.2e}, tol {tol:.1e})", result)
    return result


def resolvent_norm_numeric(V: PotentialModel, lam: complex, tol: float = 1e-6,
                           disc0: Optional[Discretization] = None,
                           stencil: str = "fd4") -> NormResult:
    """||(H - lam)^-1|| for H = -d^2/dx^2 + V with Dirichlet conditions.

    Parameters
    ----------
    V : PotentialModel
    lam : complex
    tol : float
        Relative-change target for both refinement directions, in
        [1e-10, 1e-1].
    disc0 : Discretization, optional
        Starting grid; chosen automatically when omitted.
    stencil : {"fd4", "fd2"}

    Returns
    -------
    NormResult

    Raises
    ------
    NotConverged
        If the ladder hits its caps; the best result is attached.
    """
    if not 1e-10 <= tol <= 1e-1:
        raise ValueError("tol must lie in [1e-10, 1e-1]")
    disc0 = disc0 or auto_discretization(V, lam, stencil=stencil)
    return refine(lambda d: smallest_singular_value(assemble(V, lam, d), LADDER_DENSE_LIMIT),
                  disc0, tol)
