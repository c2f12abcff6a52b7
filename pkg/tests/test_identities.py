"""Projector-calculus identities on small clusters."""

import pytest

from strongcoupling.identities import IDENTITIES, _Ctx, run_identity_suite


@pytest.mark.parametrize("shape", ["bond", "chain3"])
def test_identity_suite(shape):
    results = run_identity_suite((shape,))
    assert {r.name for r in results} == set(IDENTITIES)
    failed = [(r.name, r.detail) for r in results if not r.ok]
    assert not failed
    assert all(r.checks > 0 for r in results if r.name != "xxn" or shape != "bond")


def test_suite_reports_failures(monkeypatch):
    def broken(ctx):
        raise AssertionError("deliberately broken")

    monkeypatch.setitem(IDENTITIES, "pipj", broken)
    (res,) = run_identity_suite(("bond",), ["pipj"])
    assert not res.ok and "deliberately" in res.detail


def test_projector_complement_on_plaquette_sector():
    ctx = _Ctx("plaquette")
    b = ctx.bases[4]
    p0 = ctx.proj(b, (0, 1, 2, 3), 0)
    p1 = ctx.proj(b, (0, 1, 2, 3), 1)
    assert p0 + p1 == ctx.one(b)
    assert len(p0.diagonal_values()) == 16
