"""Fock sectors, ladder operators and sparse operator algebra."""

from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strongcoupling.cluster import build_cluster, spiral_rank
from strongcoupling.fock import DOWN, UP, elementary_op, ladder_matrix, sector_basis
from strongcoupling.operators import SparseOperator
from strongcoupling.scalar import Ring

R = Ring(["t"], ["U"])


@pytest.mark.parametrize("shape,n,dim", [("bond", 2, 6), ("plaquette", 4, 70), ("chain3", 3, 20)])
def test_sector_dimensions(shape, n, dim):
    assert len(sector_basis(build_cluster(shape), n, R)) == dim


def test_spin_sector_dimensions_add_up():
    cl = build_cluster("plaquette")
    total = sum(len(sector_basis(cl, (a, 4 - a), R)) for a in range(5))
    assert total == 70


def test_sites_follow_spiral_order():
    cl = build_cluster("plaquette")
    ranks = [spiral_rank(s) for s in cl.sites]
    assert ranks == sorted(ranks)


def _dense(op):
    return op.to_dense({})


def _anticommutator_dense(basis, i, si, j, sj):
    """``{c_i, c_j^dagger}`` on ``basis`` as a dense matrix."""
    cdag = ladder_matrix(basis, j, sj, "create")
    c_back = ladder_matrix(cdag.codomain, i, si, "annihilate")
    c = ladder_matrix(basis, i, si, "annihilate")
    cdag_back = ladder_matrix(c.codomain, j, sj, "create")
    return _dense(c_back @ cdag) + _dense(cdag_back @ c)


@pytest.mark.parametrize("i,si,j,sj", list(product(range(2), (UP, DOWN), range(2), (UP, DOWN))))
def test_canonical_anticommutation(i, si, j, sj):
    basis = sector_basis(build_cluster("bond"), (1, 1), R)
    got = _anticommutator_dense(basis, i, si, j, sj)
    expect = np.eye(len(basis)) if (i, si) == (j, sj) else np.zeros(got.shape)
    np.testing.assert_array_equal(got, expect)


def test_annihilators_anticommute():
    basis = sector_basis(build_cluster("chain3"), (2, 2), R)
    a = ladder_matrix(basis, 0, UP, "annihilate")
    b = ladder_matrix(a.codomain, 2, DOWN, "annihilate")
    c = ladder_matrix(basis, 2, DOWN, "annihilate")
    d = ladder_matrix(c.codomain, 0, UP, "annihilate")
    np.testing.assert_array_equal(_dense(b @ a), -_dense(d @ c))


def test_number_operator_counts_particles():
    basis = sector_basis(build_cluster("chain3"), 3, R)
    total = None
    for x in range(3):
        for s in (UP, DOWN):
            n = elementary_op(basis, "number", x, s)
            total = n if total is None else total + n
    assert total == SparseOperator.identity(R, basis).scale(3)


def test_spin_algebra_on_one_site():
    basis = sector_basis(build_cluster("bond"), 2, R)
    sp, sm, sz = (elementary_op(basis, w, 0) for w in ("Splus", "Sminus", "Sz"))
    assert sp.commutator(sm) == sz.scale(2)
    assert sz.commutator(sp) == sp


def test_hopping_is_hermitian_pair():
    basis = sector_basis(build_cluster("bond"), 2, R)
    h = elementary_op(basis, "hop", 0, 1, UP)
    assert h.adjoint() == elementary_op(basis, "hop", 1, 0, UP)


@st.composite
def sparse_ops(draw, basis):
    n = len(basis)
    rows = {}
    for _ in range(draw(st.integers(0, 6))):
        r, c = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        v = draw(st.integers(-3, 3))
        if v:
            rows.setdefault(r, {})[c] = R.const(v) * R.symbol("t")
    return SparseOperator(R, basis, basis, rows)


_B = sector_basis(build_cluster("bond"), 2, R)


@given(sparse_ops(_B), sparse_ops(_B), sparse_ops(_B))
@settings(max_examples=40, deadline=None)
def test_commutator_jacobi_and_antisymmetry(a, b, c):
    assert a.commutator(b) == -b.commutator(a)
    jac = a.commutator(b.commutator(c)) + b.commutator(c.commutator(a)) + c.commutator(a.commutator(b))
    assert jac.is_zero()


@given(sparse_ops(_B), sparse_ops(_B))
@settings(max_examples=40, deadline=None)
def test_adjoint_reverses_products(a, b):
    assert (a @ b).adjoint() == b.adjoint() @ a.adjoint()
