"""Phase scanner: energy lines, exact envelopes and stability diagnostics."""

import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from strongcoupling.extract import pia11_reference
from strongcoupling.models import ring_for
from strongcoupling.phase import (
    EnergyLine,
    PeriodicConfig,
    PreconditionError,
    caption_crossings,
    check_caption_crossings,
    classical_energy_density,
    enumerate_lines,
    ground_state_envelope,
    lattice_coefficients,
    lower_envelope,
    stability_diagnostics,
)

P = {"t": Fraction(1, 10), "U": Fraction(7)}


def test_all_up_order2():
    ln = classical_energy_density(PeriodicConfig(1, 1, (1,)), 2, P)
    assert ln.intercept == 0 and ln.magnetization == Fraction(1, 2)


def test_neel_order2():
    ln = classical_energy_density(PeriodicConfig(2, 2, (1, -1, -1, 1)), 2, P)
    assert ln.intercept == -2 * P["t"] ** 2 / P["U"]
    assert ln.magnetization == 0


def test_order0_single_occupancy():
    ln = classical_energy_density(PeriodicConfig(1, 1, ("u",)), 0, {"U": 7, "k": Fraction(1, 3)})
    assert ln.intercept == -Fraction(1, 6) and ln.magnetization == Fraction(1, 2)


def test_canonical_form_and_labels():
    c = PeriodicConfig(4, 2, (1, -1, 1, -1, -1, 1, -1, 1))
    assert c.label() == "checkerboard"
    assert PeriodicConfig(2, 1, (1, 1)).canonical() == PeriodicConfig(1, 1, (1,))
    shifted = PeriodicConfig(3, 1, (-1, 1, 1)).canonical()
    assert shifted == PeriodicConfig(3, 1, (1, 1, -1)).canonical()


def test_lattice_coefficients_equal_derived_regrouping():
    ring = ring_for("falicov-kimball")
    ref = pia11_reference(ring)
    co = lattice_coefficients(4, P["t"], P["U"])
    for key in ("nn", "dist2", "diag", "four_spin"):
        assert co[key] == ref[key].evaluate(P)


@pytest.mark.parametrize("t,U", [(Fraction(1, 10), Fraction(7)), (Fraction(1, 3), Fraction(5, 2)),
                                 (Fraction(2, 7), Fraction(11))])
def test_order2_crossings(t, U):
    pd = ground_state_envelope(2, {"t": t, "U": U}, (4, 4))
    assert pd.crossings == [-4 * t * t / U, 4 * t * t / U]
    assert [w.config.label() for w in pd.winners] == ["all-minus", "checkerboard", "all-plus"]


def test_order2_unchanged_from_4x2_to_4x4():
    a = ground_state_envelope(2, P, (4, 2))
    b = ground_state_envelope(2, P, (4, 4))
    assert a.crossings == b.crossings
    assert [w.intercept for w in a.winners] == [w.intercept for w in b.winners]


def test_zero_hopping_single_crossing():
    pd = ground_state_envelope(2, {"t": 0, "U": 7}, (2, 2))
    assert pd.crossings == [0]


def test_order0_has_crossing_at_zero():
    pd = ground_state_envelope(0, {"U": 7, "k": 0}, (2, 2))
    assert Fraction(0) in pd.crossings


@pytest.mark.parametrize("order", [2, 4])
def test_crossings_antisymmetric(order):
    pd = ground_state_envelope(order, P, (4, 4))
    assert sorted(-c for c in pd.crossings) == pd.crossings


def test_envelope_winner_is_true_minimum():
    """The declared winner attains the minimum over all lines at 1000 random fields."""
    lines = enumerate_lines(4, P, 4, 4)
    pd = ground_state_envelope(4, P, (4, 4))
    rng = random.Random(7)
    lo, hi = pd.window
    for _ in range(1000):
        h = lo + (hi - lo) * Fraction(rng.randrange(10**6), 10**6)
        best = min(ln.at(h) for ln in lines)
        assert pd.winner_at(h).at(h) == best


@given(st.lists(st.tuples(st.fractions(-3, 3, max_denominator=9), st.fractions(-1, 1, max_denominator=4)),
                min_size=1, max_size=12))
@settings(max_examples=80, deadline=None)
def test_lower_envelope_is_exact(pairs):
    lines = [EnergyLine(a, m, PeriodicConfig(1, 1, (1,))) for a, m in pairs]
    cr, win = lower_envelope(lines, -5, 5)
    assert len(win) == len(cr) + 1
    assert cr == sorted(set(cr))
    edges = [Fraction(-5)] + cr + [Fraction(5)]
    for (lo, hi), w in zip(zip(edges, edges[1:]), win):
        mid = (lo + hi) / 2
        assert w.at(mid) == min(l.at(mid) for l in lines)
    for a, b in zip(win, win[1:]):
        assert a.magnetization != b.magnetization


def test_cell_growth_never_raises_envelope():
    small = ground_state_envelope(4, P, (2, 2))
    big = ground_state_envelope(4, P, (4, 4))
    for h in np.linspace(-0.02, 0.02, 41):
        h = Fraction(h).limit_denominator(10**6)
        assert big.winner_at(h).at(h) <= small.winner_at(h).at(h)


def test_caption_check_reports_missing_value(caplog):
    chk = check_caption_crossings(P["t"], P["U"], (4, 4))
    h2 = -4 * P["t"] ** 2 / P["U"] + 16 * P["t"] ** 4 / P["U"] ** 3
    assert chk.missing == [h2, -h2]
    assert str(h2) in chk.report()
    assert "discrepancy" in caplog.text


def test_caption_values():
    vals = caption_crossings(P["t"], P["U"])
    assert len(vals) == 8 and Fraction(-4901, 857500) in vals


def test_cell_bound_enforced():
    with pytest.raises(PreconditionError):
        enumerate_lines(2, P, 5, 4)
    with pytest.raises(PreconditionError):
        enumerate_lines(0, {"U": 1}, 3, 2)
    with pytest.raises(PreconditionError):
        enumerate_lines(2, P, 2, 2, extra_cells=[(6, 5)])


def test_extra_cells_enlarge_family():
    a = enumerate_lines(2, P, 2, 2)
    b = enumerate_lines(2, P, 2, 2, extra_cells=[(3, 1)])
    assert len(b) > len(a)


def test_window_validation():
    with pytest.raises(PreconditionError):
        ground_state_envelope(2, P, (2, 2), window=(1, -1))


# -- diagnostics -------------------------------------------------------------

BASE = {"t": Fraction(1, 10), "tp": Fraction(1, 20), "U": 7, "h": 0, "delta": Fraction(1, 2), "beta": 10}


def test_kappa_estimate_at_zero_field():
    d = stability_diagnostics(BASE, 1)
    assert d.kappa_estimate[0] == pytest.approx(4 * 0.01 / 7)
    assert d.kappa == pytest.approx(4 * 0.01 / 7)
    assert d.status == "ok"


def test_D_at_half_gap():
    d = stability_diagnostics(dict(BASE, mu0=Fraction(7, 2)), 1)
    assert d.D == pytest.approx(3.5)


def test_zero_ionic_hopping():
    d = stability_diagnostics(dict(BASE, tp=0), 1)
    assert d.eps_ll == 0


def test_eta_is_max_of_ratios_and_epsilon():
    d = stability_diagnostics(BASE, 2)
    assert d.epsilon == pytest.approx(max(np.exp(-10 * d.kappa), d.eta))


def test_inside_excluded_band():
    d = stability_diagnostics(dict(BASE, h=Fraction(4, 700)), 1)
    assert d.status == "inside excluded band"
    assert d.eta == float("inf")


@pytest.mark.parametrize("bad", [{"delta": 0}, {"beta": -1}, {"mu0": 7}, {"mu0": 0}])
def test_diagnostics_preconditions(bad):
    with pytest.raises(PreconditionError):
        stability_diagnostics(dict(BASE, **bad), 1)
