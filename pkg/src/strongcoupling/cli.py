"""Command-line front end.

Subcommands
-----------
derive
    Effective band coefficients on the standard clusters, with a verdict
    against the closed-form reference tables.
validate-ed
    Numerical scaling study of the conjugation against exact
    diagonalization, plus a unitarity witness.
scan-phase
    Exact lower envelope of periodic Ising configurations in the field.
diagnostics
    Stability parameters at one parameter point.
identities
    Matrix identities of the one-band projector calculus.

Exit codes: 0 when every requested check passes, 1 on a failed check,
2 on a configuration or command-line error, 3 on a precondition error.

Exact values are written to JSON as ``{"exact": "p/q", "float": ...}``.
Parameters given on the command line or in a TOML config are parsed as
exact rationals (``"1/10"``, ``"7"`` or ``"0.25"``); TOML floats are
rejected because they would lose exactness.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import tomli

logger = logging.getLogger(__name__)

__all__ = ["RunConfig", "ConfigError", "main", "run", "derive_report", "exact_json"]

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_PRECONDITION = 0, 1, 2, 3

COMMANDS = ("derive", "validate-ed", "scan-phase", "diagnostics", "identities")

#: keys accepted at the top level of a config file
CONFIG_KEYS = {"model", "order", "shapes", "params", "t_list", "window", "cells", "extra_cells",
               "out", "plots", "closed_form", "check_caption", "identities"}

#: parameters in the JSON inputs of ``diagnostics`` (in this order)
DIAGNOSTIC_PARAMS = ("t", "tp", "U", "h", "mu0", "delta", "beta", "k")

#: published three-band parameter point
THREE_BAND_POINT = {"Delta": Fraction(18, 5), "Ud": Fraction(21, 2), "Up": Fraction(4),
                    "Upd": Fraction(6, 5), "tpd": Fraction(13, 10)}


class ConfigError(ValueError):
    """Malformed command line or config file."""


@dataclass
class RunConfig:
    """Resolved inputs of one run (config file merged with flags)."""

    command: str
    model: str = "one-band-symmetric"
    order: int = 2
    shapes: Optional[List[str]] = None
    params: Dict[str, Fraction] = field(default_factory=dict)
    t_list: Optional[List[Fraction]] = None
    window: Optional[Tuple[Fraction, Fraction]] = None
    cells: Tuple[int, int] = (4, 4)
    extra_cells: List[Tuple[int, int]] = field(default_factory=list)
    out: Optional[Path] = None
    plots: bool = True
    closed_form: bool = False
    check_caption: bool = False
    identities: Optional[List[str]] = None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def parse_rational(text) -> Fraction:
    """Exact rational from ``"p/q"``, an integer or a decimal string."""
    if isinstance(text, bool):
        raise ConfigError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ConfigError(f"float {text!r} is not exact; write it as a string \"p/q\"")
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational: {text!r}") from exc


def parse_cells(text) -> Tuple[int, int]:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        w, h = text
    else:
        parts = str(text).lower().split("x")
        if len(parts) != 2:
            raise ConfigError(f"cell must look like WxH, got {text!r}")
        w, h = parts
    try:
        w, h = int(w), int(h)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cell must look like WxH, got {text!r}") from exc
    if w < 1 or h < 1:
        raise ConfigError(f"cell dimensions must be positive, got {text!r}")
    return w, h


def parse_window(values) -> Tuple[Fraction, Fraction]:
    if isinstance(values, str):
        values = values.split(",")
    if len(values) != 2:
        raise ConfigError("window needs two values lo,hi")
    return parse_rational(values[0]), parse_rational(values[1])


def parse_assignments(items: Sequence[str]) -> Dict[str, Fraction]:
    out = {}
    for item in items:
        name, sep, val = item.partition("=")
        if not sep or not name.strip():
            raise ConfigError(f"expected NAME=VALUE, got {item!r}")
        out[name.strip()] = parse_rational(val)
    return out


def load_config(path: Path) -> Dict[str, object]:
    """Read a TOML config and validate its keys and value types."""
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    out: Dict[str, object] = {}
    for key, val in data.items():
        if key == "params":
            if not isinstance(val, dict):
                raise ConfigError("params must be a table")
            out[key] = {k: parse_rational(v) for k, v in val.items()}
        elif key == "t_list":
            out[key] = [parse_rational(v) for v in val]
        elif key == "window":
            out[key] = parse_window(val)
        elif key == "cells":
            out[key] = parse_cells(val)
        elif key == "extra_cells":
            out[key] = [parse_cells(v) for v in val]
        elif key in ("plots", "closed_form", "check_caption"):
            if not isinstance(val, bool):
                raise ConfigError(f"{key} must be true or false")
            out[key] = val
        elif key == "order":
            if not isinstance(val, int) or isinstance(val, bool):
                raise ConfigError("order must be an integer")
            out[key] = val
        elif key in ("shapes", "identities"):
            if not isinstance(val, list) or not all(isinstance(v, str) for v in val):
                raise ConfigError(f"{key} must be a list of strings")
            out[key] = list(val)
        elif key == "out":
            out[key] = Path(str(val))
        else:
            out[key] = str(val)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="strongcoupling", description="Strong-coupling effective Hamiltonians for lattice fermions.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model=True, order=True):
        sp.add_argument("--config", type=Path, help="TOML config; flags override its values")
        sp.add_argument("--out", type=Path, help="output directory (nothing is written without it)")
        sp.add_argument("--no-plots", action="store_true", help="skip PNG figures")
        if model:
            sp.add_argument("--model", help="one-band-symmetric, one-band-general, falicov-kimball, three-band")
        if order:
            sp.add_argument("--order", type=int)
        sp.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                        help="parameter value (repeatable)")

    d = sub.add_parser("derive", help="effective band coefficients and verdict")
    common(d)
    d.add_argument("--shapes", help="comma-separated cluster shapes")

    e = sub.add_parser("validate-ed", help="ED scaling study and unitarity witness")
    common(e)
    e.add_argument("--shape", help="cluster shape (default bond)")
    e.add_argument("--t-list", help="comma-separated hopping values")
    e.add_argument("--U", help="interaction scale")
    e.add_argument("--closed-form", action="store_true",
                   help="compare with the closed-form two-site ground energy")

    s = sub.add_parser("scan-phase", help="ground-state phase diagram in the field")
    common(s, model=False)
    s.add_argument("--t")
    s.add_argument("--U")
    s.add_argument("--k")
    s.add_argument("--cells", help="cell bound WxH (default 4x4)")
    s.add_argument("--extra-cells", help="comma-separated extra cell shapes, e.g. 5x5,6x2")
    s.add_argument("--window", help="field window lo,hi")
    s.add_argument("--check-caption", action="store_true",
                   help="compare order-4 crossings with the published boundary fields")

    g = sub.add_parser("diagnostics", help="stability parameters at one point")
    common(g, model=False)
    for name in DIAGNOSTIC_PARAMS:
        g.add_argument(f"--{name}")
    g.add_argument("--cells", help="cell bound WxH for the ground state (default 4x4)")

    i = sub.add_parser("identities", help="projector identity suite")
    common(i, model=False, order=False)
    i.add_argument("--shapes", help="comma-separated shapes (default bond,chain3)")
    i.add_argument("--names", help="comma-separated identity names")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge config-file values with command-line flags."""
    base = load_config(args.config) if getattr(args, "config", None) else {}
    cfg = RunConfig(command=args.command)
    for key, val in base.items():
        setattr(cfg, key, val)
    cfg.params = dict(base.get("params", {}))
    if getattr(args, "model", None):
        cfg.model = args.model
    if getattr(args, "order", None) is not None:
        cfg.order = args.order
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "no_plots", False):
        cfg.plots = False
    cfg.params.update(parse_assignments(getattr(args, "set", [])))
    if getattr(args, "shapes", None):
        cfg.shapes = [s.strip() for s in args.shapes.split(",") if s.strip()]
    if getattr(args, "shape", None):
        cfg.shapes = [args.shape]
    if getattr(args, "t_list", None):
        cfg.t_list = [parse_rational(v) for v in args.t_list.split(",")]
    for name in ("t", "U", "k") + DIAGNOSTIC_PARAMS:
        val = getattr(args, name, None)
        if val is not None:
            cfg.params[name] = parse_rational(val)
    if getattr(args, "cells", None):
        cfg.cells = parse_cells(args.cells)
    if getattr(args, "extra_cells", None):
        cfg.extra_cells = [parse_cells(c) for c in args.extra_cells.split(",") if c.strip()]
    if getattr(args, "window", None):
        cfg.window = parse_window(args.window)
    if getattr(args, "closed_form", False):
        cfg.closed_form = True
    if getattr(args, "check_caption", False):
        cfg.check_caption = True
    if getattr(args, "names", None):
        cfg.identities = [s.strip() for s in args.names.split(",") if s.strip()]
    return cfg


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def exact_json(value) -> Dict[str, object]:
    """``{"exact": str, "float": float or None}`` for a Fraction or ScalarValue."""
    from .scalar import ScalarValue

    if isinstance(value, ScalarValue):
        v = value.cancel()
        fl = float(v.constant_value()) if v.is_constant() else None
        return {"exact": str(v), "float": fl}
    q = Fraction(value)
    return {"exact": str(q), "float": float(q)}


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True) + "\n"


def _write(out: Optional[Path], name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")
    logger.info("wrote %s", out / name)


def _aligned(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


# ---------------------------------------------------------------------------
# derive
# ---------------------------------------------------------------------------

def _scalar_table(coeffs: Mapping[str, object]) -> Dict[str, Dict[str, object]]:
    return {k: exact_json(v) for k, v in sorted(coeffs.items())}


def derive_report(model_name: str, order: int, shapes: Optional[Sequence[str]] = None,
                  values: Optional[Mapping[str, Fraction]] = None) -> Dict[str, object]:
    """Derive effective terms and compare them with the reference tables.

    Parameters
    ----------
    model_name : str
    order : int
        1 or 2.
    shapes : sequence of str, optional
        Defaults to the standard shapes of the model family.
    values : mapping, optional
        Exact values substituted into derived and reference coefficients
        before comparison (e.g. ``{"t": 0}``).  Model-specific symbolic
        checks are skipped when values are given.

    Returns
    -------
    dict
        JSON-ready report with ``shapes``, ``checks`` and ``verdict``.
    """
    from .conjugation import _derive
    from .extract import (SpinBand, express_in_spin_basis, named_basis, reference_table, symmetry_of)
    from .models import ring_for

    if order not in (1, 2):
        raise ValueError("derive supports orders 1 and 2")
    ring = ring_for(model_name)
    values = dict(values or {})
    unknown = sorted(set(values) - set(ring.names))
    if unknown:
        raise ConfigError(f"unknown parameters for {model_name}: {', '.join(unknown)}")
    et = _derive(model_name, order, shapes)
    table = reference_table(model_name, order, ring)
    sym = symmetry_of(model_name)
    report: Dict[str, object] = {"model": model_name, "order": order,
                                 "substitutions": {k: str(v) for k, v in sorted(values.items())}}
    shape_out: Dict[str, object] = {}
    all_ok = True
    for shape in et.terms:
        op = et.terms[shape]
        band = SpinBand(et.models[shape])
        derived = express_in_spin_basis(op, band, named_basis(shape, sym), shape, model_name, order)
        ref = dict(table.get(shape, {}))
        ref_op = band.combine(ref) if ref else None
        if values:
            op = op.subs(values)
            derived = derived.subs(values)
            ref = {k: v.subs(values) for k, v in ref.items()}
            ref_op = ref_op.subs(values) if ref_op is not None else None
        diff = op if ref_op is None else op - ref_op
        match = diff.is_zero()
        nz_ref = {k: v for k, v in ref.items() if not v.is_zero()}
        nz_der = derived.nonzero()
        agree = {}
        for lab in sorted(set(nz_der) | set(nz_ref)):
            a, b = nz_der.get(lab, ring.zero), nz_ref.get(lab, ring.zero)
            agree[lab] = (a - b).is_zero()
        entry: Dict[str, object] = {"coefficients": _scalar_table(nz_der), "reference": _scalar_table(nz_ref),
                                    "term_agrees": agree, "match": match}
        if not match:
            d = express_in_spin_basis(diff, band, named_basis(shape, sym))
            entry["difference"] = _scalar_table(d.nonzero())
        shape_out[shape] = entry
        all_ok &= match
    report["shapes"] = shape_out
    checks: Dict[str, object] = {}
    if not values:
        checks = _model_checks(et, ring)
        all_ok &= all(c["ok"] for c in checks.values())
    report["checks"] = checks
    report["verdict"] = "match" if all_ok else "mismatch"
    return report


def _model_checks(et, ring) -> Dict[str, Dict[str, object]]:
    """Model-specific cross-checks of a derivation."""
    from .conjugation import cluster_formula_terms
    from .extract import (SpinBand, extract_jeff, general_order2_terms, jeff_formula, pia11_reference,
                          regroup_ising, three_band_shifts)

    out: Dict[str, Dict[str, object]] = {}
    if et.order < 2:
        return out
    if et.model_name == "one-band-general":
        split = general_order2_terms(ring, split=True)
        for shape in et.terms:
            if shape not in split:
                continue
            parts = cluster_formula_terms(et.model_name, shape)
            band = SpinBand(et.models[shape])
            total = None
            for key, ref in zip(parts, split[shape]):
                ok = (parts[key] - band.combine(ref)).is_zero()
                out[f"cluster_formula:{shape}:{key}"] = {"ok": ok}
                total = parts[key] if total is None else total + parts[key]
            ok = (total - et.terms[shape].degree_part(4)).is_zero()
            out[f"cluster_formula:{shape}:sum_equals_term"] = {"ok": ok}
    elif et.model_name == "falicov-kimball":
        from .extract import express_in_spin_basis, named_basis

        tabs, coords = {}, {}
        for shape in ("bond", "chain3", "corner3", "plaquette"):
            if shape not in et.terms:
                return out
            band = SpinBand(et.models[shape])
            tabs[shape] = express_in_spin_basis(et.terms[shape], band, named_basis(shape, "ising")).coeffs
            coords[shape] = et.models[shape].cluster.sites
        rg = regroup_ising(tabs, coords, ring)
        ref = pia11_reference(ring)
        for key in ("nn", "dist2", "diag", "four_spin"):
            out[f"projector_free:{key}"] = {"ok": rg[key] == ref[key], "derived": exact_json(rg[key]),
                                            "reference": exact_json(ref[key])}
        out["projector_free:constant_per_site"] = {"ok": True, "derived": exact_json(rg["constant"]),
                                                   "note": "reported only"}
    elif et.model_name == "three-band" and "cuo2_two_bonds" in et.terms:
        j = extract_jeff(et)
        jf = jeff_formula(ring)
        num = float(j.evaluate(THREE_BAND_POINT))
        ref = float(jf.evaluate(THREE_BAND_POINT))
        out["jeff:symbolic"] = {"ok": (j - jf).is_zero(), "derived": exact_json(j)}
        out["jeff:numeric"] = {"ok": abs(num - ref) <= 1e-12 * abs(ref), "derived": num, "formula": ref,
                               "point": {k: str(v) for k, v in sorted(THREE_BAND_POINT.items())}}
        for key, v in sorted(three_band_shifts(et).items()):
            out[f"shift:{key}"] = {"ok": True, "derived": exact_json(v), "note": "reported only"}
    return out


def _derive_text(report: Mapping[str, object]) -> str:
    rows = [["shape", "term", "derived", "reference", "match"]]
    for shape, entry in report["shapes"].items():
        labels = sorted(set(entry["coefficients"]) | set(entry["reference"]))
        for lab in labels:
            d = entry["coefficients"].get(lab, {"exact": "0"})["exact"]
            r = entry["reference"].get(lab, {"exact": "0"})["exact"]
            rows.append([shape, lab, d, r, "yes" if entry["term_agrees"][lab] else "no"])
        if not labels:
            rows.append([shape, "-", "0", "0", "yes"])
    text = _aligned(rows)
    if report["checks"]:
        crow = [["check", "ok"]] + [[k, "yes" if v["ok"] else "no"] for k, v in report["checks"].items()]
        text += "\n" + _aligned(crow)
    return text + f"\nverdict: {report['verdict']}\n"


def cmd_derive(cfg: RunConfig) -> int:
    report = derive_report(cfg.model, cfg.order, cfg.shapes, cfg.params)
    _write(cfg.out, "coefficients.json", _dump_json(report))
    text = _derive_text(report)
    _write(cfg.out, "coefficients.txt", text)
    for shape, entry in report["shapes"].items():
        print(f"{shape}: {'match' if entry['match'] else 'MISMATCH'}")
    for name, chk in report["checks"].items():
        print(f"{name}: {'ok' if chk['ok'] else 'FAILED'}")
    print(f"verdict: {report['verdict']}")
    return EXIT_OK if report["verdict"] == "match" else EXIT_CHECK


# ---------------------------------------------------------------------------
# validate-ed
# ---------------------------------------------------------------------------

DEFAULT_T_LIST = [Fraction(2, 5), Fraction(1, 5), Fraction(1, 10), Fraction(1, 20), Fraction(1, 40)]


def cmd_validate_ed(cfg: RunConfig) -> int:
    from .ed import band_scaling_study, bond_ground_energy_study, default_values, unitarity_witness
    from .models import make_model

    shape = (cfg.shapes or ["bond"])[0]
    t_list = cfg.t_list or DEFAULT_T_LIST
    U = cfg.params.get("U", Fraction(8))
    if cfg.order not in (1, 2):
        raise ValueError("validate-ed supports orders 1 and 2")
    if cfg.closed_form:
        if cfg.model != "one-band-symmetric" or shape != "bond":
            raise ValueError("--closed-form needs the one-band-symmetric model on the bond")
        rep = bond_ground_energy_study(cfg.order, t_list, U)
    else:
        extra = {k: v for k, v in cfg.params.items() if k not in ("U", "t")}
        rep = band_scaling_study(cfg.model, shape, cfg.order, t_list, U, extra)
    values = default_values(cfg.model)
    values.update({k: v for k, v in cfg.params.items() if k in values})
    wit = unitarity_witness(make_model(cfg.model, shape), values, cfg.order)
    summary = rep.summary()
    summary["unitarity"] = {"relative_error": wit.relative_error, "ok": wit.ok, "dim": wit.dim}
    summary["closed_form"] = cfg.closed_form
    _write(cfg.out, "scaling.csv", rep.to_csv())
    _write(cfg.out, "scaling.json", _dump_json(summary))
    if cfg.out is not None and cfg.plots:
        from .plotting import plot_scaling

        plot_scaling(rep, cfg.out / "scaling.png")
    print(f"residual slope {rep.residual_slope:.3f} +- {rep.residual_slope_err:.3f}: "
          f"{'ok' if rep.residual_ok else 'FAILED'}")
    print(f"band-error slope {rep.band_slope:.3f} +- {rep.band_slope_err:.3f}: "
          f"{'ok' if rep.band_ok else 'FAILED'}")
    print(f"unitarity witness {wit.relative_error:.3e}: {'ok' if wit.ok else 'FAILED'}")
    return EXIT_OK if rep.residual_ok and rep.band_ok and wit.ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# scan-phase
# ---------------------------------------------------------------------------

def _require(params: Mapping[str, Fraction], *names: str) -> None:
    missing = [n for n in names if n not in params]
    if missing:
        raise ConfigError(f"missing parameter(s): {', '.join(missing)}")


def cmd_scan_phase(cfg: RunConfig) -> int:
    from .phase import PreconditionError, check_caption_crossings, enumerate_lines, lower_envelope, PhaseDiagram

    order = cfg.order
    if order not in (0, 2, 4):
        raise PreconditionError("scan-phase order must be 0, 2 or 4")
    if order == 0:
        _require(cfg.params, "U")
        params = {"U": cfg.params["U"], "k": cfg.params.get("k", Fraction(0))}
    else:
        _require(cfg.params, "t", "U")
        params = {"t": cfg.params["t"], "U": cfg.params["U"]}
    from .phase import ground_state_envelope

    pd = ground_state_envelope(order, params, cfg.cells, cfg.window, extra_cells=cfg.extra_cells)
    lines = enumerate_lines(order, params, *cfg.cells, extra_cells=cfg.extra_cells) if cfg.out else []
    result: Dict[str, object] = {
        "order": order,
        "params": {k: str(v) for k, v in sorted(params.items())},
        "cells": f"{cfg.cells[0]}x{cfg.cells[1]}",
        "extra_cells": [f"{w}x{h}" for w, h in cfg.extra_cells],
        "window": [exact_json(pd.window[0]), exact_json(pd.window[1])],
        "crossings": [exact_json(c) for c in pd.crossings],
        "winners": [w.config.label() for w in pd.winners],
        "n_lines": pd.n_lines,
    }
    code = EXIT_OK
    if cfg.check_caption:
        if order != 4:
            raise PreconditionError("--check-caption applies to order 4")
        chk = check_caption_crossings(params["t"], params["U"], cfg.cells, cfg.extra_cells)
        result["caption_check"] = {"ok": chk.ok, "report": chk.report(),
                                   "missing": [exact_json(x) for x in chk.missing],
                                   "extra": [exact_json(x) for x in chk.extra]}
        print(f"caption check: {chk.report()}")
        if not chk.ok:
            code = EXIT_CHECK
    _write(cfg.out, "phase.csv", pd.to_csv())
    _write(cfg.out, "phase.json", _dump_json(result))
    if cfg.out is not None:
        from .plotting import phase_plot_data, plot_phase_diagram

        _write(cfg.out, "phase_lines.dat", phase_plot_data(pd, pd.winners))
        if cfg.plots:
            plot_phase_diagram(pd, lines, cfg.out / "phase.png")
    for lo, hi, w in pd.intervals():
        print(f"[{lo}, {hi}]: {w.config.label()}")
    print("crossings: " + ", ".join(str(c) for c in pd.crossings))
    return code


# ---------------------------------------------------------------------------
# diagnostics and identities
# ---------------------------------------------------------------------------

def cmd_diagnostics(cfg: RunConfig) -> int:
    from dataclasses import asdict

    from .phase import PreconditionError, stability_diagnostics

    _require(cfg.params, "U")
    if cfg.order not in (0, 1, 2):
        raise PreconditionError("diagnostics order must be 0, 1 or 2")
    params = {k: v for k, v in cfg.params.items() if k in DIAGNOSTIC_PARAMS}
    diag = stability_diagnostics(params, cfg.order, cfg.cells)
    d = asdict(diag)
    d["kappa_estimate"] = list(d["kappa_estimate"])
    for key in ("eta", "epsilon"):
        if d[key] == float("inf"):
            d[key] = None
    _write(cfg.out, "diagnostics.json", _dump_json(d))
    print(f"status: {diag.status}; kappa {diag.kappa:.6g}; eta {diag.eta:.6g}; epsilon {diag.epsilon:.6g}")
    return EXIT_OK


def cmd_identities(cfg: RunConfig) -> int:
    from .identities import IDENTITIES, run_identity_suite

    names = cfg.identities
    if names:
        bad = [n for n in names if n not in IDENTITIES]
        if bad:
            raise ConfigError(f"unknown identities: {', '.join(bad)}")
    results = run_identity_suite(cfg.shapes or ("bond", "chain3"), names)
    rows = []
    for r in results:
        tag = "PASS" if r.ok else "FAIL"
        extra = f" ({r.detail})" if r.detail else ""
        print(f"{tag} {r.name} on {r.cluster}: {r.checks} checks{extra}")
        rows.append({"name": r.name, "cluster": r.cluster, "ok": r.ok, "checks": r.checks, "detail": r.detail})
    _write(cfg.out, "identities.json", _dump_json(rows))
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK


HANDLERS = {"derive": cmd_derive, "validate-ed": cmd_validate_ed, "scan-phase": cmd_scan_phase,
            "diagnostics": cmd_diagnostics, "identities": cmd_identities}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    from .phase import PreconditionError

    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
        if cfg.command != "identities":
            from .models import MODEL_NAMES

            if cfg.model not in MODEL_NAMES:
                raise ConfigError(f"unknown model {cfg.model!r}; known: {', '.join(MODEL_NAMES)}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, ValueError, ZeroDivisionError, KeyError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
