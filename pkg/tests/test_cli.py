"""Command-line front end: outputs, determinism and exit codes."""

import json
from fractions import Fraction

import pytest

from strongcoupling.cli import ConfigError, exact_json, load_config, parse_rational, run


def test_scan_phase_order2(tmp_path, capsys):
    code = run(["scan-phase", "--order", "2", "--t", "1/10", "--U", "7", "--cells", "4x4", "--out", str(tmp_path)])
    assert code == 0
    data = json.loads((tmp_path / "phase.json").read_text())
    assert [c["exact"] for c in data["crossings"]] == ["-1/175", "1/175"]
    csv = (tmp_path / "phase.csv").read_text().splitlines()
    assert csv[0] == "h_lo,h_hi,winner,cell,magnetization" and len(csv) == 4
    assert (tmp_path / "phase.png").stat().st_size > 0
    cols = (tmp_path / "phase_lines.dat").read_text().splitlines()
    assert cols[0].startswith("# h envelope")


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["scan-phase", "--order", "4", "--t", "1/10", "--U", "7", "--cells", "3x3",
                    "--out", str(d), "--no-plots"]) == 0
    for name in ("phase.json", "phase.csv", "phase_lines.dat"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert not (a / "phase.png").exists()


def test_derive_symmetric(tmp_path, capsys):
    assert run(["derive", "--model", "one-band-symmetric", "--order", "2", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "coefficients.json").read_text())
    assert rep["verdict"] == "match"
    assert rep["shapes"]["plaquette"]["coefficients"]["SdotSSdotS(x,y;z,w)"]["exact"] == "80*t^4/U^3"
    assert "verdict: match" in (tmp_path / "coefficients.txt").read_text()


def test_derive_zero_amplitudes(tmp_path):
    assert run(["derive", "--model", "one-band-symmetric", "--set", "t=0", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "coefficients.json").read_text())
    assert rep["verdict"] == "match"
    assert all(not e["coefficients"] for e in rep["shapes"].values())


def test_derive_three_band_checks(tmp_path):
    assert run(["derive", "--model", "three-band", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "coefficients.json").read_text())
    assert rep["checks"]["jeff:numeric"]["derived"] == pytest.approx(0.135768642526455, rel=1e-12)


def test_validate_ed_closed_form(tmp_path):
    assert run(["validate-ed", "--closed-form", "--order", "2", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "scaling.json").read_text())
    assert summary["band_slope"] >= 5.7 and summary["unitarity"]["ok"]
    assert (tmp_path / "scaling.csv").read_text().startswith("t,residual,band_error")


def test_diagnostics_json(tmp_path):
    assert run(["diagnostics", "--order", "1", "--t", "1/10", "--tp", "0", "--U", "7", "--out", str(tmp_path)]) == 0
    d = json.loads((tmp_path / "diagnostics.json").read_text())
    assert d["eps_ll"] == 0 and d["status"] == "ok"


def test_identities_command(capsys):
    assert run(["identities", "--shapes", "bond", "--names", "pipj,hoy.2"]) == 0
    out = capsys.readouterr().out
    assert "PASS pipj on bond" in out and "PASS hoy.2 on bond" in out


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["scan-phase", "--order", "2", "--t", "abc", "--U", "7"],
    ["scan-phase", "--order", "2", "--U", "7"],
    ["derive", "--model", "no-such-model"],
    ["derive", "--set", "t"],
    ["identities", "--names", "nope"],
])
def test_parse_errors_exit_2(argv):
    assert run(argv) == 2


@pytest.mark.parametrize("argv", [
    ["diagnostics", "--order", "1", "--t", "1/10", "--U", "7", "--delta", "0"],
    ["scan-phase", "--order", "2", "--t", "1/10", "--U", "7", "--cells", "5x4"],
    ["scan-phase", "--order", "2", "--t", "1/10", "--U", "-7"],
    ["scan-phase", "--order", "2", "--t", "1/10", "--U", "7", "--check-caption"],
    ["validate-ed", "--t-list", "1/10,1/11,1/12,1/13"],
])
def test_precondition_errors_exit_3(argv):
    assert run(argv) == 3


def test_failed_check_exits_1():
    assert run(["scan-phase", "--order", "4", "--t", "1/10", "--U", "7", "--check-caption"]) == 1


def test_config_file(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('order = 2\ncells = "4x2"\n[params]\nt = "1/10"\nU = "7"\n')
    out = tmp_path / "o"
    assert run(["scan-phase", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    data = json.loads((out / "phase.json").read_text())
    assert data["cells"] == "4x2" and data["params"] == {"U": "7", "t": "1/10"}


def test_config_unknown_key_and_float(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 3\n")
    assert run(["scan-phase", "--config", str(bad)]) == 2
    flt = tmp_path / "flt.toml"
    flt.write_text("[params]\nt = 0.1\n")
    with pytest.raises(ConfigError):
        load_config(flt)


def test_rational_parsing_is_exact():
    assert parse_rational("1/10") == Fraction(1, 10)
    assert parse_rational("0.1") == Fraction(1, 10)
    assert exact_json(Fraction(1, 3)) == {"exact": "1/3", "float": 1 / 3}
