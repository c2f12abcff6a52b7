"""Acceptance suite: the ten end-to-end criteria at their stated tolerances.

Each test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the run.  Run on its own with
``pytest tests/test_acceptance.py -v``.
"""

import time
from fractions import Fraction

import pytest

from strongcoupling.cli import derive_report
from strongcoupling.conjugation import cluster_formula_terms, first_order, residual_grading_check, second_order
from strongcoupling.ed import bond_ground_energy_study, unitarity_witness
from strongcoupling.extract import (
    SpinBand,
    compare_terms,
    express_in_spin_basis,
    extract_jeff,
    general_order2_terms,
    jeff_formula,
    named_basis,
    pia11_reference,
    reference_table,
    regroup_ising,
)
from strongcoupling.identities import IDENTITIES, run_identity_suite
from strongcoupling.models import make_model, ring_for
from strongcoupling.phase import (
    PeriodicConfig,
    caption_crossings,
    check_caption_crossings,
    classical_energy_density,
    enumerate_lines,
    ground_state_envelope,
    lower_envelope,
)


def _mismatches(comparisons):
    return {s: {k: str(v) for k, v in c.difference.items()} for s, c in comparisons.items() if not c.match}


# ---------------------------------------------------------------------------
# 1. symmetric one-band coefficients
# ---------------------------------------------------------------------------

@pytest.mark.criterion(1, "symmetric one-band order-2 coefficients, exact, < 30 s")
def test_criterion_1_symmetric_coefficients():
    t0 = time.perf_counter()
    rep = derive_report("one-band-symmetric", 2)
    elapsed = time.perf_counter() - t0
    ring = ring_for("one-band-symmetric")
    t, U = ring.symbols("t", "U")
    assert rep["verdict"] == "match", {s: e.get("difference") for s, e in rep["shapes"].items()}
    et = second_order("one-band-symmetric")
    co = {s: express_in_spin_basis(op, SpinBand(et.models[s]), named_basis(s, "su2")).coeffs
          for s, op in et.terms.items()}
    assert co["bond"]["SdotS(x,y)"] == 4 * t**2 / U - 16 * t**4 / U**3
    assert co["chain3"]["SdotS(x,z)"] == 4 * t**4 / U**3
    assert co["plaquette"]["SdotS(x,y)"] == -4 * t**4 / U**3
    assert co["plaquette"]["SdotSSdotS(x,y;z,w)"] == 80 * t**4 / U**3
    assert elapsed < 30


# ---------------------------------------------------------------------------
# 2. Falicov-Kimball coefficients
# ---------------------------------------------------------------------------

@pytest.mark.criterion(2, "Falicov-Kimball per-term table and projector-free regrouping, exact, < 30 s")
def test_criterion_2_projector_free_regrouping():
    t0 = time.perf_counter()
    et = second_order("falicov-kimball")
    ring = ring_for("falicov-kimball")
    tabs = {s: express_in_spin_basis(op, SpinBand(et.models[s]), named_basis(s, "ising")).coeffs
            for s, op in et.terms.items()}
    rg = regroup_ising(tabs, {s: et.models[s].cluster.sites for s in tabs}, ring)
    ref = pia11_reference(ring)
    assert {k: rg[k] for k in ref} == ref
    assert time.perf_counter() - t0 < 30


@pytest.mark.criterion(2, "Falicov-Kimball per-term table and projector-free regrouping, exact, < 30 s")
def test_criterion_2_per_term_table():
    """Every coefficient, constants included.

    Fails on the plaquette constant: the derived term carries
    ``+1/2 t^4/U^3`` (required for the term to vanish on the fully
    polarized state), which the reference table does not list.
    """
    et = second_order("falicov-kimball")
    res = compare_terms(et, reference_table("falicov-kimball", 2, ring_for("falicov-kimball")))
    bad = _mismatches(res)
    assert not bad, f"per-term mismatch: {bad}"


# ---------------------------------------------------------------------------
# 3. general (t+, t-) terms
# ---------------------------------------------------------------------------

@pytest.mark.criterion(3, "general (t+, t-) order-1 bond and order-2 terms, term by term, exact")
def test_criterion_3_general_terms():
    ring = ring_for("one-band-general")
    et1 = first_order("one-band-general", ("bond",))
    assert not _mismatches(compare_terms(et1, {"bond": reference_table("one-band-general", 1, ring)["bond"]}))

    et2 = second_order("one-band-general")
    split = general_order2_terms(ring, split=True)
    for shape in ("bond", "chain3", "corner3", "plaquette"):
        parts = cluster_formula_terms("one-band-general", shape)
        band = SpinBand(et2.models[shape])
        assert len(parts) == len(split[shape])
        for (key, op), table in zip(parts.items(), split[shape]):
            assert (op - band.combine(table)).is_zero(), f"{shape}:{key}"
        total = None
        for op in parts.values():
            total = op if total is None else total + op
        assert (total - et2.terms[shape].degree_part(4)).is_zero(), shape
    ref = reference_table("one-band-general", 2, ring)
    assert not _mismatches(compare_terms(et2, ref))


# ---------------------------------------------------------------------------
# 4. three-band J_eff
# ---------------------------------------------------------------------------

@pytest.mark.criterion(4, "three-band J_eff exact and numeric to 1e-12, < 2 min")
def test_criterion_4_jeff():
    t0 = time.perf_counter()
    et = second_order("three-band")
    ring = ring_for("three-band")
    j = extract_jeff(et)
    assert j == jeff_formula(ring)
    point = {"Delta": 3.6, "Ud": 10.5, "Up": 4.0, "Upd": 1.2, "tpd": 1.3}
    direct = 4 * 1.3**4 / (1.2 + 3.6) ** 2 * (1 / 10.5 + 2 / (2 * 3.6 + 4.0))
    assert abs(j.evaluate(point) - direct) <= 1e-12 * abs(direct)
    assert time.perf_counter() - t0 < 120


# ---------------------------------------------------------------------------
# 5. residual grading
# ---------------------------------------------------------------------------

@pytest.mark.criterion(5, "P0-P1 residual has hopping degree >= n+1 (n = 1, 2)")
@pytest.mark.parametrize("shape", ["bond", "chain3", "plaquette"])
@pytest.mark.parametrize("order", [1, 2])
def test_criterion_5_residual_grading(shape, order):
    cert = residual_grading_check(make_model("one-band-symmetric", shape), order)
    assert cert.ok
    assert cert.min_offdiag_degree is None or cert.min_offdiag_degree >= order + 1


# ---------------------------------------------------------------------------
# 6. ED scaling on the bond
# ---------------------------------------------------------------------------

@pytest.mark.criterion(6, "bond band-energy error slope >= 5.7 at order 2, < 10 s")
def test_criterion_6_ed_scaling():
    t0 = time.perf_counter()
    ts = [Fraction(2, 5), Fraction(1, 5), Fraction(1, 10), Fraction(1, 20), Fraction(1, 40)]
    rep = bond_ground_energy_study(2, ts, U=8)
    assert rep.band_slope >= 5.7, rep.summary()
    assert time.perf_counter() - t0 < 10


# ---------------------------------------------------------------------------
# 7. order-2 phase boundaries
# ---------------------------------------------------------------------------

@pytest.mark.criterion(7, "order-2 crossings at +-4t^2/U, unchanged from 4x2 to 4x4")
@pytest.mark.parametrize("t,U", [("1/10", "7"), ("1/3", "5/2"), ("2/7", "11")])
def test_criterion_7_order2_boundaries(t, U):
    p = {"t": Fraction(t), "U": Fraction(U)}
    h = 4 * p["t"] ** 2 / p["U"]
    small = ground_state_envelope(2, p, (4, 2))
    big = ground_state_envelope(2, p, (4, 4))
    assert big.crossings == [-h, h]
    assert small.crossings == big.crossings
    assert [w.intercept for w in small.winners] == [w.intercept for w in big.winners]


# ---------------------------------------------------------------------------
# 8. order-4 phase boundaries
# ---------------------------------------------------------------------------

@pytest.mark.criterion(8, "order-4 caption crossings at t=1/10, U=7 on cells up to 4x4 (discrepancy reported)")
def test_criterion_8_order4_boundaries(caplog):
    t, U = Fraction(1, 10), Fraction(7)
    expected = caption_crossings(t, U)
    chk = check_caption_crossings(t, U, (4, 4))
    found = set(chk.found)
    for h in expected:
        if h in found:
            continue
        # a caption value absent at 4x4 must be named in the explicit report
        assert h in chk.missing and str(h) in chk.report()
    assert not chk.missing or "discrepancy" in caplog.text
    realized = [h for h in expected if h in found]
    assert len(realized) >= 6, chk.report()
    print(f"order-4 at 4x4: {chk.report()}")


@pytest.mark.criterion(8, "order-4 caption crossings at t=1/10, U=7 on cells up to 4x4 (discrepancy reported)")
def test_criterion_8_period_five_completes_caption():
    """Adding the period-5 state absent from 4x4 cells realizes all four values exactly."""
    t, U = Fraction(1, 10), Fraction(7)
    p = {"t": t, "U": U}
    rows = ["----+", "-+---", "---+-", "+----", "--+--"]
    spins = tuple(1 if c == "+" else -1 for r in rows for c in r)
    lines = enumerate_lines(4, p, 4, 4)
    for s in (spins, tuple(-x for x in spins)):
        lines.append(classical_energy_density(PeriodicConfig(5, 5, s), 4, p))
    window = ground_state_envelope(4, p, (2, 2)).window
    crossings, _ = lower_envelope(lines, *window)
    assert crossings == caption_crossings(t, U)


# ---------------------------------------------------------------------------
# 9. identity suite
# ---------------------------------------------------------------------------

@pytest.mark.criterion(9, "projector identities hold exactly on bond and chain3")
def test_criterion_9_identities():
    results = run_identity_suite(("bond", "chain3"))
    assert len(results) == 2 * len(IDENTITIES)
    failed = [f"{r.name}@{r.cluster}: {r.detail}" for r in results if not r.ok]
    assert not failed
    assert any(r.name == "xxn" and r.checks > 0 for r in results)


# ---------------------------------------------------------------------------
# 10. unitarity witness
# ---------------------------------------------------------------------------

CLUSTERS_USED = [(m, s) for m in ("one-band-symmetric", "one-band-general", "falicov-kimball")
                 for s in ("bond", "chain3", "corner3", "plaquette")] + \
                [("three-band", "cuo2_bond"), ("three-band", "cuo2_two_bonds")]


@pytest.mark.criterion(10, "spectrum preserved under exp(S) conjugation to 1e-10 on all clusters")
@pytest.mark.parametrize("model,shape", CLUSTERS_USED)
def test_criterion_10_unitarity(model, shape):
    w1 = unitarity_witness(make_model(model, shape), order=1, tol=1e-10)
    w2 = unitarity_witness(make_model(model, shape), order=2, tol=1e-10)
    assert w1.ok and w2.ok, (w1.relative_error, w2.relative_error)


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v"]))
