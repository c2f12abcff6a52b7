"""Spin-operator form of band operators and the published coefficient tables.

On the low band every site (every copper site in the three-band model)
carries one spin-1/2.  Single-site spin operators are built from fermionic
bilinears and restricted to the band, so every sign is inherited from the
fermionic convention.  A band operator is written as a linear combination of
named spin operators by solving the Gram system of the trace inner product;
the residual must vanish exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import sympy
from gmpy2 import mpq

from .conjugation import EffectiveTerms
from .fock import SectorBasis, elementary_op
from .models import CU, Model
from .operators import SparseOperator
from .scalar import Ring, ScalarValue, sum_scalars

logger = logging.getLogger(__name__)

__all__ = [
    "SpinBand",
    "EffectiveCoefficients",
    "RepresentationError",
    "express_in_spin_basis",
    "named_basis",
    "reference_table",
    "reference_operator",
    "extract_jeff",
    "three_band_shifts",
    "jeff_formula",
    "general_order2_terms",
    "symmetry_of",
    "regroup_ising",
    "pia11_reference",
    "compare_terms",
    "SITE_NAMES",
]

SITE_NAMES = "xyzwabcd"


class RepresentationError(ValueError):
    """The band operator is not in the span of the chosen spin basis."""


class SpinBand:
    """Spin operators on the low band of a model's cluster.

    Parameters
    ----------
    model : Model
        Any model instance on the cluster; only its total-N basis and band
        definition are used.
    """

    def __init__(self, model: Model):
        self.model = model
        self.ring = model.ring
        self.full = model.basis
        self.idx = sorted(model.band())
        self.basis = model.basis.subbasis(self.idx, "band")
        if model.three_band:
            self.spin_sites = [i for i, lab in enumerate(model.cluster.sublattice) if lab == CU]
        else:
            self.spin_sites = list(range(model.cluster.n_sites))
        self.names = {s: SITE_NAMES[2 * k] if model.three_band else SITE_NAMES[k]
                      for k, s in enumerate(self.spin_sites)}
        self._single: Dict[Tuple[str, int], SparseOperator] = {}
        self._cache: Dict[str, SparseOperator] = {}

    @property
    def dim(self) -> int:
        return len(self.basis)

    def site(self, name) -> int:
        if isinstance(name, int):
            return name
        for s, n in self.names.items():
            if n == name:
                return s
        raise KeyError(f"no spin site named {name!r}")

    def restrict(self, op: SparseOperator) -> SparseOperator:
        """Band block of an operator on the model's full sector basis."""
        return op.restrict(self.idx, self.idx, self.basis, self.basis)

    def single(self, kind: str, site: int) -> SparseOperator:
        """``Sz``, ``Splus`` or ``Sminus`` at one site, on the band."""
        key = (kind, site)
        op = self._single.get(key)
        if op is None:
            op = self.restrict(elementary_op(self.full, kind, site))
            self._single[key] = op
        return op

    def identity(self) -> SparseOperator:
        return SparseOperator.identity(self.ring, self.basis)

    # -- named operators ---------------------------------------------------------
    def sz(self, a) -> SparseOperator:
        return self.single("Sz", self.site(a))

    def sp(self, a) -> SparseOperator:
        return self.single("Splus", self.site(a))

    def sm(self, a) -> SparseOperator:
        return self.single("Sminus", self.site(a))

    def szsz(self, a, b) -> SparseOperator:
        return self.sz(a) @ self.sz(b)

    def sperp(self, a, b) -> SparseOperator:
        return (self.sp(a) @ self.sm(b) + self.sm(a) @ self.sp(b)).scale(Fraction(1, 2))

    def sdots(self, a, b) -> SparseOperator:
        return self.szsz(a, b) + self.sperp(a, b)

    def element(self, label: str) -> SparseOperator:
        """Operator for a label such as ``SzSz(x,y)`` or ``SdotSSdotS(x,y;z,w)``."""
        op = self._cache.get(label)
        if op is not None:
            return op
        name, _, rest = label.partition("(")
        args = [a for a in rest.rstrip(")").replace(";", ",").split(",") if a]
        if name == "One":
            op = self.identity()
        elif name == "Sz":
            op = self.sz(*args)
        elif name == "SzSz":
            op = self.szsz(*args)
        elif name == "Sperp":
            op = self.sperp(*args)
        elif name == "SdotS":
            op = self.sdots(*args)
        elif name == "SzSzSzSz":
            a, b, c, d = args
            op = self.szsz(a, b) @ self.szsz(c, d)
        elif name == "SzSzSz":
            a, b, c = args
            op = self.szsz(a, b) @ self.sz(c)
        elif name == "SperpSzSz":
            a, b, c, d = args
            op = self.sperp(a, b) @ self.szsz(c, d)
        elif name == "SdotSSdotS":
            a, b, c, d = args
            op = self.sdots(a, b) @ self.sdots(c, d)
        elif name in ("SpSmSpSm", "SpSpSmSm", "SpSmSmSp"):
            pat = name[1::2]  # e.g. "pmpm"
            ops = {"p": self.sp, "m": self.sm}
            flip = {"p": "m", "m": "p"}
            t1 = self.identity()
            t2 = self.identity()
            for ch, a in zip(pat, args):
                t1 = t1 @ ops[ch](a)
                t2 = t2 @ ops[flip[ch]](a)
            op = t1 + t2
        else:
            raise KeyError(f"unknown spin basis label {label!r}")
        self._cache[label] = op
        return op

    def inner(self, a: SparseOperator, b: SparseOperator) -> ScalarValue:
        """Trace inner product ``tr(a^T b)`` (all band operators are real)."""
        terms = []
        for r, row in a.rows.items():
            brow = b.rows.get(r)
            if not brow:
                continue
            for c, v in row.items():
                w = brow.get(c)
                if w is not None:
                    terms.append(v * w)
        return sum_scalars(self.ring, terms)

    def combine(self, coeffs: Dict[str, ScalarValue]) -> SparseOperator:
        out = SparseOperator(self.ring, self.basis)
        for label, c in coeffs.items():
            if not isinstance(c, ScalarValue):
                c = self.ring.const(c)
            if c.is_zero():
                continue
            out = out + self.element(label).scale(c)
        return out

    def spin_config(self, band_index: int) -> Tuple[Fraction, ...]:
        """``Sz`` eigenvalues of a band state, one per spin site."""
        s = self.basis.states[band_index]
        out = []
        for i in self.spin_sites:
            up, dn = self.basis.site_occ(s, i)
            out.append(Fraction(up - dn, 2))
        return tuple(out)


@dataclass
class EffectiveCoefficients:
    """Coefficients of a band operator in a named spin basis."""

    coeffs: Dict[str, ScalarValue]
    shape: str
    model: str
    order: int

    def nonzero(self) -> Dict[str, ScalarValue]:
        return {k: v for k, v in self.coeffs.items() if not v.is_zero()}

    def subs(self, values) -> "EffectiveCoefficients":
        return EffectiveCoefficients({k: v.subs(values) for k, v in self.coeffs.items()},
                                     self.shape, self.model, self.order)

    def equals(self, other: "EffectiveCoefficients") -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        z = None
        for k in keys:
            a = self.coeffs.get(k)
            b = other.coeffs.get(k)
            if a is None:
                a = b.ring.zero
            if b is None:
                b = a.ring.zero
            if a != b:
                return False
        return True


def _rational_matrix_inverse(g: List[List[Fraction]], labels: Sequence[str]) -> List[List[Fraction]]:
    m = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in g])
    if m.det() == 0:
        null = m.nullspace()
        dep = []
        for vec in null:
            dep.append([labels[i] for i, x in enumerate(vec) if x != 0])
        raise RepresentationError(f"Gram matrix singular; dependent elements: {dep}")
    inv = m.inv()
    return [[Fraction(int(inv[i, j].p), int(inv[i, j].q)) for j in range(m.cols)] for i in range(m.rows)]


def express_in_spin_basis(op: SparseOperator, band: SpinBand, labels: Sequence[str],
                          shape: str = "", model: str = "", order: int = 0) -> EffectiveCoefficients:
    """Solve ``op = sum_i c_i B_i`` exactly on the band.

    Raises
    ------
    RepresentationError
        If the residual is nonzero (entries listed) or the Gram matrix is
        singular (dependent labels listed).
    """
    if op.domain != band.basis:
        raise ValueError("operator must act on the band basis")
    elems = [band.element(l) for l in labels]
    gram = []
    for a in elems:
        row = []
        for b in elems:
            v = band.inner(a, b)
            row.append(Fraction(v.evaluate({})) if not v.is_zero() else Fraction(0))
        gram.append(row)
    ginv = _rational_matrix_inverse(gram, labels)
    rhs = [band.inner(e, op) for e in elems]
    coeffs = {}
    for i, l in enumerate(labels):
        terms = [rhs[j].mul(ginv[i][j]) for j in range(len(labels)) if ginv[i][j] and not rhs[j].is_zero()]
        coeffs[l] = sum_scalars(band.ring, terms).cancel()
    resid = op - band.combine(coeffs)
    if not resid.is_zero():
        b = band.basis
        lines = [f"  {b.describe(b.states[r])} <- {b.describe(b.states[c])}: {v}"
                 for r, c, v in list(resid.entries())[:12]]
        raise RepresentationError("operator not representable in basis; residual entries:\n" + "\n".join(lines))
    return EffectiveCoefficients(coeffs, shape, model, order)


# ---------------------------------------------------------------------------
# named bases per shape
# ---------------------------------------------------------------------------

def _pairs(names: str) -> List[Tuple[str, str]]:
    return list(combinations(names, 2))


def named_basis(shape: str, symmetry: str) -> List[str]:
    """Spin basis labels for a cluster shape.

    ``symmetry`` is ``su2`` (symmetric hopping), ``u1`` (independent
    amplitudes) or ``ising`` (Falicov-Kimball limit).
    """
    names = {"bond": "xy", "chain3": "xyz", "corner3": "xyz", "plaquette": "xyzw",
             "cuo2_bond": "xz", "cuo2_two_bonds": "xz", "cuo2_two_bonds_wide": "xz"}.get(shape)
    if names is None:
        raise KeyError(f"no spin basis registered for shape {shape!r}")
    pairs = _pairs(names)
    labels = ["One"]
    if symmetry == "su2":
        labels += [f"SdotS({a},{b})" for a, b in pairs]
        if len(names) == 4:
            labels += ["SdotSSdotS(x,y;z,w)", "SdotSSdotS(x,w;y,z)", "SdotSSdotS(x,z;y,w)"]
    elif symmetry == "ising":
        labels += [f"SzSz({a},{b})" for a, b in pairs]
        if len(names) == 4:
            labels += ["SzSzSzSz(x,y,z,w)"]
    elif symmetry == "u1":
        labels += [f"SzSz({a},{b})" for a, b in pairs]
        labels += [f"Sperp({a},{b})" for a, b in pairs]
        if len(names) == 4:
            labels += ["SzSzSzSz(x,y,z,w)"]
            for a, b in pairs:
                c, d = [n for n in names if n not in (a, b)]
                labels.append(f"SperpSzSz({a},{b};{c},{d})")
            labels += ["SpSmSpSm(x,y,z,w)", "SpSpSmSm(x,y,z,w)", "SpSmSmSp(x,y,z,w)"]
    else:
        raise ValueError(f"unknown symmetry {symmetry!r}")
    return labels


def symmetry_of(model_name: str) -> str:
    return {"one-band-symmetric": "su2", "one-band-general": "u1",
            "falicov-kimball": "ising", "three-band": "su2"}[model_name]


# ---------------------------------------------------------------------------
# published coefficient tables (golden references)
# ---------------------------------------------------------------------------

def _sym(ring: Ring, *names):
    return ring.symbols(*names)


def reference_table(model_name: str, order: int, ring: Ring) -> Dict[str, Dict[str, ScalarValue]]:
    """Closed-form per-support coefficient tables from the literature.

    Returns
    -------
    dict
        Shape -> {label: coefficient}.  The tables are used only as golden
        references for :func:`compare_terms`.
    """
    q = Fraction
    if model_name == "one-band-symmetric":
        t, U = _sym(ring, "t", "U")
        j = 4 * t**2 / U - (16 * t**4 / U**3 if order >= 2 else 0)
        tab = {"bond": {"SdotS(x,y)": j, "One": -j / 4}}
        if order >= 2:
            c = 4 * t**4 / U**3
            tab["chain3"] = {"SdotS(x,z)": c, "One": -c / 4}
            tab["corner3"] = dict(tab["chain3"])
            d = 80 * t**4 / U**3
            pl = {f"SdotS({a},{b})": -c for a, b in _pairs("xyzw")}
            pl["One"] = c / 4
            pl["SdotSSdotS(x,y;z,w)"] = d
            pl["SdotSSdotS(x,w;y,z)"] = d
            pl["SdotSSdotS(x,z;y,w)"] = -d
            tab["plaquette"] = pl
        return tab
    if model_name == "falicov-kimball":
        t, U = _sym(ring, "t", "U")
        j = 2 * t**2 / U - (2 * t**4 / U**3 if order >= 2 else 0)
        tab = {"bond": {"SzSz(x,y)": j, "One": -j / 4}}
        if order >= 2:
            c = 2 * t**4 / U**3
            tab["chain3"] = {"SzSz(x,y)": -c, "SzSz(y,z)": -c, "SzSz(x,z)": 2 * c}
            tab["corner3"] = dict(tab["chain3"])
            pl = {f"SzSz({a},{b})": -c for a, b in _pairs("xyzw")}
            pl["SzSzSzSz(x,y,z,w)"] = 40 * t**4 / U**3
            tab["plaquette"] = pl
        return tab
    if model_name == "one-band-general":
        tp, tm, U = _sym(ring, "tp", "tm", "U")
        a = 2 * (tp**2 + tm**2) / U
        tab = {"bond": {"SzSz(x,y)": a, "One": -a / 4, "Sperp(x,y)": 4 * tp * tm / U}}
        if order >= 2:
            f1 = general_order2_terms(ring)
            for shape, coeffs in f1.items():
                acc = dict(tab.get(shape, {}))
                for k, v in coeffs.items():
                    acc[k] = acc.get(k, ring.zero) + v
                tab[shape] = acc
        return tab
    if model_name == "three-band":
        tpd, Upd, Delta = _sym(ring, "tpd", "Upd", "Delta")
        e = Upd + Delta
        one_bond = -tpd**2 / e + (tpd**4 / e**3 if order >= 2 else 0)
        tab = {"cuo2_bond": {"One": one_bond}}
        if order >= 2:
            j = jeff_formula(ring)
            tab["cuo2_two_bonds"] = {"SdotS(x,z)": j, "One": 2 * tpd**4 / e**3 - j / 4}
        else:
            tab["cuo2_two_bonds"] = {}
        return tab
    raise ValueError(f"no reference table for model {model_name!r}")


def jeff_formula(ring: Ring) -> ScalarValue:
    """``4 tpd^4 / (Upd + Delta)^2 * (1/Ud + 2/(2 Delta + Up))``."""
    tpd, Ud, Up, Upd, Delta = ring.symbols("tpd", "Ud", "Up", "Upd", "Delta")
    return 4 * tpd**4 / (Upd + Delta) ** 2 * (1 / Ud + 2 / (2 * Delta + Up))


def general_order2_terms(ring: Ring, split: bool = False):
    """Fourth-order terms for independent ``t+``, ``t-`` (direction independent).

    With ``split=True`` the two-bond and plaquette contributions are
    returned as separate ``(tilde, bar)`` tables as they are displayed in
    the literature; otherwise their sums.
    """
    tp, tm, U = ring.symbols("tp", "tm", "U")
    U3 = U**3
    s4 = (tp**4 + tm**4) / U3
    s31 = (tp**3 * tm + tm**3 * tp) / U3
    s22 = tp**2 * tm**2 / U3
    half = Fraction(1, 2)
    quarter = Fraction(1, 4)

    def add(d, k, v):
        d[k] = d.get(k, ring.zero) + v

    # single bond
    f1: Dict[str, ScalarValue] = {}
    a = -2 * (s4 + 6 * s22)
    add(f1, "SzSz(x,y)", a)
    add(f1, "One", -a * quarter)
    add(f1, "Sperp(x,y)", -8 * s31)

    # two bonds sharing y
    f2: Dict[str, ScalarValue] = {}
    c = -(2 * s4 + 4 * s22)
    for k, sgn in (("SzSz(x,y)", 1), ("SzSz(y,z)", 1), ("SzSz(x,z)", -1)):
        add(f2, k, c * sgn)
    add(f2, "One", -c * quarter)
    add(f2, "Sperp(x,y)", -4 * s31)
    add(f2, "Sperp(y,z)", -4 * s31)
    add(f2, "Sperp(x,z)", 8 * s22)

    f3: Dict[str, ScalarValue] = {}
    add(f3, "SzSz(x,z)", 2 * s4)
    add(f3, "One", -2 * s4 * quarter)
    for k, sgn in (("SzSz(x,y)", 1), ("SzSz(y,z)", 1), ("SzSz(x,z)", -1)):
        add(f3, k, 8 * s22 * sgn)
    add(f3, "One", -8 * s22 * quarter)
    add(f3, "Sperp(x,z)", -4 * s22)
    add(f3, "Sperp(x,y)", 4 * s31)
    add(f3, "Sperp(y,z)", 4 * s31)

    # plaquette x-y-z-w-x
    ring_pairs = [("x", "y"), ("y", "z"), ("z", "w"), ("w", "x")]
    f5: Dict[str, ScalarValue] = {}
    add(f5, "SzSzSzSz(x,y,z,w)", 8 * s4)
    for p in ring_pairs:
        add(f5, _szsz(*p), -2 * s4)
    add(f5, "SzSz(x,z)", 2 * s4)
    add(f5, "SzSz(y,w)", 2 * s4)
    add(f5, "One", 2 * s4 * quarter)
    for (a_, b_), (c_, d_) in ((("y", "z"), ("x", "w")), (("x", "w"), ("y", "z")),
                               (("x", "y"), ("z", "w")), (("z", "w"), ("x", "y"))):
        add(f5, _sperpszsz(a_, b_, c_, d_), 8 * s31)
    for p in ring_pairs:
        add(f5, _sperp(*p), -2 * s31)
    add(f5, "SpSmSpSm(x,y,z,w)", 8 * s22)
    add(f5, _sperpszsz("x", "z", "y", "w"), -16 * s22)
    add(f5, _sperpszsz("y", "w", "x", "z"), -16 * s22)
    add(f5, "Sperp(x,z)", 4 * s22)
    add(f5, "Sperp(y,w)", 4 * s22)

    f6: Dict[str, ScalarValue] = {}
    add(f6, "SzSzSzSz(x,y,z,w)", 32 * s4)
    add(f6, "SzSz(x,z)", -4 * s4)
    add(f6, "SzSz(y,w)", -4 * s4)
    for (a_, b_), (c_, d_) in ((("z", "w"), ("x", "y")), (("x", "y"), ("z", "w")),
                               (("y", "z"), ("x", "w")), (("x", "w"), ("y", "z"))):
        add(f6, _sperpszsz(a_, b_, c_, d_), 32 * s31)
    add(f6, "SpSmSpSm(x,y,z,w)", 32 * s22)
    add(f6, _sperpszsz("x", "z", "y", "w"), -64 * s22)
    add(f6, _sperpszsz("y", "w", "x", "z"), -64 * s22)
    add(f6, "Sperp(x,z)", -8 * s22)
    add(f6, "Sperp(y,w)", -8 * s22)

    if split:
        return {"bond": (f1,), "chain3": (f2, f3), "corner3": (f2, f3), "plaquette": (f5, f6)}

    def merge(*ds):
        out: Dict[str, ScalarValue] = {}
        for d in ds:
            for k, v in d.items():
                add(out, k, v)
        return out

    return {"bond": f1, "chain3": merge(f2, f3), "corner3": merge(f2, f3), "plaquette": merge(f5, f6)}


def _canon_pair(a: str, b: str) -> Tuple[str, str]:
    order = SITE_NAMES
    return (a, b) if order.index(a) < order.index(b) else (b, a)


def _szsz(a, b) -> str:
    a, b = _canon_pair(a, b)
    return f"SzSz({a},{b})"


def _sperp(a, b) -> str:
    a, b = _canon_pair(a, b)
    return f"Sperp({a},{b})"


def _sperpszsz(a, b, c, d) -> str:
    a, b = _canon_pair(a, b)
    c, d = _canon_pair(c, d)
    return f"SperpSzSz({a},{b};{c},{d})"


def reference_operator(band: SpinBand, coeffs: Dict[str, ScalarValue]) -> SparseOperator:
    """Band operator of a coefficient table."""
    return band.combine(coeffs)


@dataclass
class TermComparison:
    """Outcome of comparing one derived term against a reference table."""

    shape: str
    match: bool
    derived: EffectiveCoefficients
    reference: Dict[str, ScalarValue]
    difference: Dict[str, ScalarValue] = field(default_factory=dict)


def compare_terms(et: EffectiveTerms, reference: Dict[str, Dict[str, ScalarValue]],
                  symmetry: Optional[str] = None, degree: Optional[int] = None,
                  ) -> Dict[str, TermComparison]:
    """Compare derived per-shape terms with reference tables as band operators.

    Parameters
    ----------
    et : EffectiveTerms
    reference : dict
        Shape -> {label: coefficient}.
    symmetry : str, optional
        Basis family used to express derived terms (default: from model).
    degree : int, optional
        Compare only the homogeneous hopping-degree part of the derived term.
    """
    symmetry = symmetry or symmetry_of(et.model_name)
    out = {}
    for shape, ref in reference.items():
        op = et.terms[shape]
        if degree is not None:
            op = op.degree_part(degree)
        band = SpinBand(et.models[shape])
        derived = express_in_spin_basis(op, band, named_basis(shape, symmetry), shape, et.model_name, et.order)
        ref_op = band.combine(ref)
        diff_op = op - ref_op
        match = diff_op.is_zero()
        diff = {}
        if not match:
            try:
                d = express_in_spin_basis(diff_op, band, named_basis(shape, symmetry))
                diff = d.nonzero()
            except RepresentationError as exc:  # pragma: no cover - diagnostic path
                diff = {"<unrepresentable>": band.ring.zero}
                logger.warning("difference not representable: %s", exc)
        out[shape] = TermComparison(shape, match, derived, ref, diff)
    return out


def extract_jeff(et: EffectiveTerms) -> ScalarValue:
    """Coefficient of ``S_x . S_z`` in the three-band two-bond term."""
    if et.model_name != "three-band" or "cuo2_two_bonds" not in et.terms:
        raise ValueError("extract_jeff needs a three-band derivation including cuo2_two_bonds")
    band = SpinBand(et.models["cuo2_two_bonds"])
    co = express_in_spin_basis(et.terms["cuo2_two_bonds"], band, named_basis("cuo2_two_bonds", "su2"))
    return co.coeffs["SdotS(x,z)"]


def three_band_shifts(et: EffectiveTerms) -> Dict[str, ScalarValue]:
    """Constant energy shifts of the three-band terms, split by degree.

    Keys: ``bond_order2`` (per bond, degree 2), ``bond_order4`` (per bond,
    degree 4) and ``two_bond`` (the constant accompanying
    ``J_eff (S_x . S_z - 1/4)``).
    """
    out = {}
    bond = et.terms["cuo2_bond"]
    band = SpinBand(et.models["cuo2_bond"])
    for d in (2, 4):
        co = express_in_spin_basis(bond.degree_part(d), band, named_basis("cuo2_bond", "su2"))
        out[f"bond_order{d}"] = co.coeffs["One"]
    if "cuo2_two_bonds" in et.terms:
        band2 = SpinBand(et.models["cuo2_two_bonds"])
        co = express_in_spin_basis(et.terms["cuo2_two_bonds"], band2, named_basis("cuo2_two_bonds", "su2"))
        j = co.coeffs["SdotS(x,z)"]
        out["two_bond"] = (co.coeffs["One"] + j / 4).cancel()
    return out


# ---------------------------------------------------------------------------
# regrouping of Ising terms on the square lattice
# ---------------------------------------------------------------------------

_DIHEDRAL = [lambda x, y: (x, y), lambda x, y: (-y, x), lambda x, y: (-x, -y), lambda x, y: (y, -x),
             lambda x, y: (x, -y), lambda x, y: (-x, y), lambda x, y: (y, x), lambda x, y: (-y, -x)]

_PAIR_CLASS = {(1, 0): "nn", (2, 0): "dist2", (1, 1): "diag"}

#: number of lattice pairs of each class per site of the square lattice
_PAIRS_PER_SITE = {"nn": 2, "dist2": 2, "diag": 2}


def _embeddings(coords: Sequence[Tuple[int, int]]) -> List[Tuple[Tuple[int, int], ...]]:
    """Distinct images of a site tuple under the square symmetries, modulo translation."""
    seen = {}
    for g in _DIHEDRAL:
        img = [g(*c) for c in coords]
        mx = min(p[0] for p in img)
        my = min(p[1] for p in img)
        img = tuple((p[0] - mx, p[1] - my) for p in img)
        seen.setdefault(frozenset(img), img)
    return list(seen.values())


def regroup_ising(tables: Dict[str, Dict[str, ScalarValue]], coords: Dict[str, Sequence[Tuple[int, int]]],
                  ring: Ring) -> Dict[str, ScalarValue]:
    """Sum per-shape Ising tables over all placements on the square lattice.

    Parameters
    ----------
    tables : dict
        Shape -> {label: coefficient} using ``One``, ``SzSz(a,b)`` and
        ``SzSzSzSz(x,y,z,w)`` labels (site names in cluster order).
    coords : dict
        Shape -> cluster site coordinates in cluster order.

    Returns
    -------
    dict
        ``nn``, ``dist2``, ``diag`` (coefficients of the lattice sums
        ``sum_{pairs of the class} Sz Sz``), ``four_spin`` (per plaquette)
        and ``constant`` (per site).
    """
    acc = {k: [] for k in ("nn", "dist2", "diag", "four_spin", "constant")}
    for shape, table in tables.items():
        base = list(coords[shape])
        for img in _embeddings(base):
            pos = {SITE_NAMES[i]: p for i, p in enumerate(img)}
            for label, c in table.items():
                if c.is_zero():
                    continue
                name, _, rest = label.partition("(")
                args = rest.rstrip(")").replace(";", ",").split(",") if rest else []
                if name == "One":
                    acc["constant"].append(c)
                elif name == "SzSz":
                    (ax, ay), (bx, by) = pos[args[0]], pos[args[1]]
                    d = tuple(sorted((abs(ax - bx), abs(ay - by)), reverse=True))
                    cls = _PAIR_CLASS.get(d)
                    if cls is None:
                        raise ValueError(f"pair displacement {d} outside the regrouping classes")
                    acc[cls].append(c.mul(Fraction(1, _PAIRS_PER_SITE[cls])))
                elif name == "SzSzSzSz":
                    acc["four_spin"].append(c)
                else:
                    raise ValueError(f"label {label!r} is not an Ising term")
    return {k: sum_scalars(ring, v).cancel() for k, v in acc.items()}


def pia11_reference(ring: Ring) -> Dict[str, ScalarValue]:
    """Projector-free Falicov-Kimball coefficients through fourth order."""
    t, U = ring.symbols("t", "U")
    return {"nn": 2 * t**2 / U - 18 * t**4 / U**3, "dist2": 4 * t**4 / U**3,
            "diag": 6 * t**4 / U**3, "four_spin": 40 * t**4 / U**3}
