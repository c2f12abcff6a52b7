"""Spin-basis extraction, reference tables and regrouping."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from strongcoupling.conjugation import cluster_formula_terms, first_order, second_order
from strongcoupling.extract import (
    RepresentationError,
    SpinBand,
    express_in_spin_basis,
    extract_jeff,
    general_order2_terms,
    jeff_formula,
    named_basis,
    pia11_reference,
    reference_table,
    regroup_ising,
    three_band_shifts,
)
from strongcoupling.fock import elementary_op
from strongcoupling.models import make_model, ring_for

PLAQ = make_model("one-band-general", "plaquette")
PLAQ_BAND = SpinBand(PLAQ)
U1_PLAQ = named_basis("plaquette", "u1")


@given(st.lists(st.fractions(min_value=-9, max_value=9, max_denominator=5),
                min_size=len(U1_PLAQ), max_size=len(U1_PLAQ)))
@settings(max_examples=25, deadline=None)
def test_gram_round_trip(values):
    ring = PLAQ.ring
    coeffs = {lab: ring.const(v) for lab, v in zip(U1_PLAQ, values)}
    op = PLAQ_BAND.combine(coeffs)
    back = express_in_spin_basis(op, PLAQ_BAND, U1_PLAQ)
    assert all(back.coeffs[k] == coeffs[k] for k in U1_PLAQ)


def test_unrepresentable_operator_is_rejected():
    """A single ``S+`` raises the magnetization and lies outside the u1 basis."""
    band = SpinBand(make_model("one-band-general", "bond"))
    op = band.sp("x") @ band.sz("y")
    with pytest.raises(RepresentationError):
        express_in_spin_basis(op, band, named_basis("bond", "u1"))


def test_symmetric_order1_bond():
    et = first_order("one-band-symmetric", ("bond",))
    co = express_in_spin_basis(et.terms["bond"], SpinBand(et.models["bond"]), named_basis("bond", "su2"))
    t, U = et.models["bond"].ring.symbols("t", "U")
    assert co.coeffs["SdotS(x,y)"] == 4 * t**2 / U
    assert co.coeffs["One"] == -t**2 / U


def test_general_order1_bond_matches_reference():
    et = first_order("one-band-general", ("bond",))
    ref = reference_table("one-band-general", 1, ring_for("one-band-general"))["bond"]
    band = SpinBand(et.models["bond"])
    assert (et.terms["bond"] - band.combine(ref)).is_zero()


def test_general_coefficients_symmetric_under_spin_flip():
    """Global spin flip exchanges ``t+`` and ``t-`` and leaves the u1 basis invariant."""
    et = second_order("one-band-general", ("chain3",))
    co = express_in_spin_basis(et.terms["chain3"], SpinBand(et.models["chain3"]), named_basis("chain3", "u1"))
    ring = et.models["chain3"].ring
    tp, tm = ring.symbols("tp", "tm")
    swapped = co.subs({"tp": tm, "tm": tp})
    assert swapped.equals(co)


def test_symmetric_plaquette_has_lattice_symmetry():
    et = second_order("one-band-symmetric", ("plaquette",))
    co = express_in_spin_basis(et.terms["plaquette"], SpinBand(et.models["plaquette"]),
                               named_basis("plaquette", "su2")).coeffs
    nn = [co[f"SdotS({a},{b})"] for a, b in (("x", "y"), ("y", "z"), ("z", "w"), ("x", "w"))]
    assert all(v == nn[0] for v in nn)
    assert co["SdotS(x,z)"] == co["SdotS(y,w)"]
    assert co["SdotSSdotS(x,y;z,w)"] == co["SdotSSdotS(x,w;y,z)"]


@pytest.mark.parametrize("shape", ["chain3", "plaquette"])
def test_cluster_formula_pieces_match_displayed_tables(shape):
    ring = ring_for("one-band-general")
    parts = cluster_formula_terms("one-band-general", shape)
    split = general_order2_terms(ring, split=True)[shape]
    band = SpinBand(make_model("one-band-general", shape))
    for (key, op), ref in zip(parts.items(), split):
        assert (op - band.combine(ref)).is_zero(), key


def test_jeff_exact_and_numeric():
    et = second_order("three-band")
    ring = ring_for("three-band")
    j = extract_jeff(et)
    assert j == jeff_formula(ring)
    vals = {"tpd": 1.3, "Ud": 10.5, "Up": 4.0, "Upd": 1.2, "Delta": 3.6}
    assert j.evaluate(vals) == pytest.approx(0.135768642526455, rel=1e-13)
    tpd, Upd, Delta = ring.symbols("tpd", "Upd", "Delta")
    shifts = three_band_shifts(et)
    assert shifts["bond_order2"] == -tpd**2 / (Upd + Delta)
    assert shifts["bond_order4"] == tpd**4 / (Upd + Delta) ** 3
    assert shifts["two_bond"] == 2 * tpd**4 / (Upd + Delta) ** 3


def test_falicov_kimball_regrouping():
    et = second_order("falicov-kimball")
    ring = ring_for("falicov-kimball")
    tabs, coords = {}, {}
    for shape, op in et.terms.items():
        tabs[shape] = express_in_spin_basis(op, SpinBand(et.models[shape]), named_basis(shape, "ising")).coeffs
        coords[shape] = et.models[shape].cluster.sites
    rg = regroup_ising(tabs, coords, ring)
    ref = pia11_reference(ring)
    for key in ("nn", "dist2", "diag", "four_spin"):
        assert rg[key] == ref[key], key
    t, U = ring.symbols("t", "U")
    assert rg["constant"] == (-t**2 * U**2 + Fraction(3, 2) * t**4) / U**3


def test_regrouping_rejects_non_ising_labels():
    ring = ring_for("falicov-kimball")
    with pytest.raises(ValueError):
        regroup_ising({"bond": {"Sperp(x,y)": ring.one}}, {"bond": [(0, 0), (1, 0)]}, ring)
