import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from pseudonorm.errors import NotConverged
from pseudonorm.operator_lab import (
    Discretization, FirstOrderSpec, NormResult, assemble, auto_discretization, refine,
    resolvent_norm_numeric, smallest_singular_value,
)
from pseudonorm.potential import FULL_LINE, PotentialModel, parse_potential

# dense fd2 + Richardson on [-14, 14], N = 1000 / 2001, computed outside the package
DAVIES_100I = 0.18110092099


def _free():
    return PotentialModel(v2=lambda x: np.zeros_like(x), domain_kind=FULL_LINE)


def test_discretization_rejects_tiny_grid():
    with pytest.raises(ValueError):
        Discretization(L=5.0, N=4)


def test_nodes_are_interior_and_uniform():
    d = Discretization(L=2.0, N=99)
    x = d.nodes()
    assert x.size == 99
    assert np.allclose(np.diff(x), d.h)
    assert x[0] == pytest.approx(-2.0 + d.h)
    assert x[49] == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("stencil", ["fd2", "fd4"])
def test_laplacian_symmetric(stencil):
    M = assemble(_free(), 0.0, Discretization(L=3.0, N=41, stencil=stencil)).matrix
    assert abs(M - M.T).max() < 1e-12


@pytest.mark.parametrize("stencil,order", [("fd2", 2), ("fd4", 4)])
def test_dirichlet_eigenvalue_convergence_order(stencil, order):
    # lowest Dirichlet eigenvalue of -u'' on [-1, 1] is pi^2 / 4
    errs = []
    for N in (31, 63, 127):
        M = assemble(_free(), 0.0, Discretization(L=1.0, N=N, stencil=stencil)).matrix
        lam = np.linalg.eigvalsh(M.toarray().real)[0]
        errs.append(abs(lam - math.pi ** 2 / 4))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) > order - 0.5


@settings(max_examples=10, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_dense_and_sparse_paths_agree(re, im):
    V = parse_potential("monomial:n=2")
    M = assemble(V, complex(re, im), Discretization(L=8.0, N=301)).matrix
    dense = smallest_singular_value(M, dense_limit=10_000)
    sparse = smallest_singular_value(M, dense_limit=0)
    assert sparse == pytest.approx(dense, rel=1e-8)


def test_first_order_model_assembles():
    d = Discretization(L=5.0, N=101)
    M = assemble(None, 0.0, d, first_order=FirstOrderSpec(2.0)).matrix
    assert sp.issparse(M)
    assert M.shape == (101, 101)


def test_auto_discretization_grows_with_lambda():
    V = parse_potential("monomial:n=2")
    small = auto_discretization(V, 10j)
    big = auto_discretization(V, 1000j)
    assert big.h < small.h


def test_free_resolvent_at_negative_real():
    # dist(-1, [0, inf)) = 1 for the self-adjoint free operator
    res = resolvent_norm_numeric(_free(), -1.0, tol=1e-3)
    assert res.value == pytest.approx(1.0, abs=2e-3)


def test_davies_matches_independent_oracle():
    res = resolvent_norm_numeric(parse_potential("monomial:n=2"), 100j, tol=1e-8)
    assert res.converged
    assert res.value == pytest.approx(DAVIES_100I, rel=1e-7)


def test_history_records_ladder():
    res = resolvent_norm_numeric(parse_potential("monomial:n=2"), 10j, tol=1e-6)
    assert len(res.grid_history) >= 3
    assert res.est_rel_error <= 1e-6


def test_tolerance_range():
    with pytest.raises(ValueError):
        resolvent_norm_numeric(_free(), -1.0, tol=1e-12)


def test_refine_cap_reports_best_result():
    V = parse_potential("monomial:n=2")
    ev = lambda d: smallest_singular_value(assemble(V, 50j, d))  # noqa: E731
    with pytest.raises(NotConverged) as info:
        refine(ev, Discretization(L=3.0, N=33, stencil="fd2"), tol=1e-10, n_cap=200)
    best = info.value.result
    assert isinstance(best, NormResult)
    assert not best.converged
    assert best.value > 0


def test_norm_result_json_roundtrip():
    res = NormResult(1.25, grid_history=[(1.0, 17, 0.5)], est_rel_error=1e-9)
    assert NormResult.from_dict(res.to_dict()) == res
