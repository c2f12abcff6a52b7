"""Conjugation engine: block structure, generators and per-support terms."""

from fractions import Fraction

import numpy as np
import pytest

from strongcoupling.cluster import build_cluster
from strongcoupling.conjugation import (
    GradingViolation,
    ZeroDenominatorError,
    ad_inverse,
    block_split,
    conjugate,
    effective_band_operator,
    first_order,
    lie_schwinger,
    residual_grading_check,
    second_order,
)
from strongcoupling.ed import numeric_operator, numeric_spectrum
from strongcoupling.models import make_model
from strongcoupling.operators import SparseOperator


@pytest.mark.parametrize("name,shape", [("one-band-symmetric", "plaquette"), ("falicov-kimball", "chain3"),
                                        ("three-band", "cuo2_bond")])
def test_projectors_partition_unity(name, shape):
    m = make_model(name, shape)
    n = len(m.basis)
    for bond in m.bonds:
        p = m.projectors(bond)
        p.check_partition(n)
        assert p.p0 >= m.band()


@pytest.mark.parametrize("name,shape", [("one-band-general", "chain3"), ("three-band", "cuo2_two_bonds")])
def test_block_split_reassembles(name, shape):
    m = make_model(name, shape)
    for bond in m.bonds:
        q = m.bond_operator(bond)
        sp = block_split(q, m.projectors(bond))
        assert sp.q00 + sp.q01 + sp.qr == q
        p0 = set(m.projectors(bond).p0)
        assert sp.q01.sandwich(p0, p0).is_zero()


@pytest.mark.parametrize("name,shape", [("one-band-symmetric", "chain3"), ("three-band", "cuo2_bond")])
def test_generator_solves_commutator_equation(name, shape):
    """``[H0, S1] = Q01`` and ``S1`` is anti-Hermitian."""
    m = make_model(name, shape)
    h0 = m.h0()
    for bond in m.bonds:
        sp = block_split(m.bond_operator(bond), m.projectors(bond))
        s = ad_inverse(m.energies(), sp.q01)
        assert h0.commutator(s) == sp.q01
        assert s.adjoint() == -s


def test_second_order_generator_antihermitian():
    res = conjugate(make_model("one-band-general", "chain3"), 2)
    assert res.s2.adjoint() == -res.s2
    assert res.s1.adjoint() == -res.s1


def test_ad_inverse_rejects_degenerate_entries():
    """One electron on a bond hops between states of equal energy."""
    m = make_model("one-band-symmetric", "bond", constraint=1)
    q = m.bond_operator(m.bonds[0])
    with pytest.raises(ZeroDenominatorError):
        ad_inverse(m.energies(), q)


def test_lie_schwinger_zero_generator():
    m = make_model("one-band-symmetric", "bond")
    h = m.hamiltonian()
    assert lie_schwinger(SparseOperator(m.ring, m.basis), h, 4) == h.truncate(4)


def test_first_order_two_bond_terms_vanish():
    et = first_order("one-band-symmetric", ("chain3",))
    assert et.vanishing and all(et.vanishing.values())


@pytest.mark.parametrize("shape", ["bond", "chain3"])
@pytest.mark.parametrize("order", [1, 2])
def test_residual_grading(shape, order):
    cert = residual_grading_check(make_model("one-band-symmetric", shape), order)
    assert cert.ok and (cert.min_offdiag_degree is None or cert.min_offdiag_degree >= order + 1)


def test_grading_bound_is_sharp_on_three_sites():
    assert residual_grading_check(make_model("one-band-symmetric", "chain3"), 1).min_offdiag_degree == 2
    # a single bond has no QR part, so the order-1 residual starts one degree later
    assert residual_grading_check(make_model("one-band-symmetric", "bond"), 1).min_offdiag_degree == 3


def test_grading_violation_is_detected(monkeypatch):
    """Without conjugation the hopping itself violates the grading."""
    import strongcoupling.conjugation as cj

    real = cj.conjugate

    def unconjugated(model, order, max_degree=None):
        res = real(model, 1, max_degree)
        res.h1 = res.h
        res.order = 1
        return res

    monkeypatch.setattr(cj, "conjugate", unconjugated)
    with pytest.raises(GradingViolation):
        cj.residual_grading_check(make_model("one-band-symmetric", "bond"), 1)


def test_band_spectrum_independent_of_site_order():
    """Reordering the fermionic sites changes signs but not the band spectrum."""
    cl = build_cluster("plaquette")
    rev = cl.reordered(list(reversed(cl.sites)))
    vals = {"t": Fraction(1, 5), "U": 3, "h": 0, "k": 0}
    ev = []
    for c in (cl, rev):
        eff = effective_band_operator(make_model("one-band-symmetric", c), 2)
        ev.append(numeric_spectrum(numeric_operator(eff, vals)))
    np.testing.assert_allclose(ev[0], ev[1], atol=1e-13)


def test_band_trace_exact_independent_of_site_order():
    cl = build_cluster("chain3")
    rev = cl.reordered([cl.sites[1], cl.sites[2], cl.sites[0]])
    tr = []
    for c in (cl, rev):
        eff = effective_band_operator(make_model("one-band-general", c), 2)
        sq = eff @ eff
        tr.append(sum((sq.get(i, i) for i in range(len(sq.domain))), eff.ring.zero))
    assert tr[0] == tr[1]


def test_second_order_terms_are_degree_four():
    et = second_order("one-band-symmetric", ("chain3",))
    term = et.terms["chain3"]
    assert term.min_degree() == 4 and term.max_degree() == 4


def test_three_band_wide_zone_agrees():
    a = second_order("three-band", ("cuo2_two_bonds",))
    b = second_order("three-band", ("cuo2_two_bonds_wide",))
    from strongcoupling.extract import SpinBand, express_in_spin_basis, named_basis

    ca = express_in_spin_basis(a.terms["cuo2_two_bonds"], SpinBand(a.models["cuo2_two_bonds"]),
                               named_basis("cuo2_two_bonds", "su2"))
    cb = express_in_spin_basis(b.terms["cuo2_two_bonds_wide"], SpinBand(b.models["cuo2_two_bonds_wide"]),
                               named_basis("cuo2_two_bonds", "su2"))
    assert ca.equals(cb)
