"""Block diagonalization by successive unitary conjugations (Method 1).

The pipeline on a finite cluster is

1. split each bond operator ``Q_X`` against the partition of unity of its
   protection zone into ``Q00 + Q01 + QR``;
2. ``S1 = sum_X ad^{-1} H0 (Q01_X)``;
3. ``H1 = exp(S1) H exp(-S1)`` via the truncated Lie-Schwinger series;
4. ``V2 = sum_{X1, X2} [S1_X1, Q00_X2 + QR_X2 + Q01_X2 / 2]``, split against
   the partition of unity of ``B_{X1 u X2}``, and
   ``S2 = ad^{-1} H0 (V2^{01})``;
5. ``H2 = exp(S2) H1 exp(-S2)``.

All arithmetic is exact.  Series are truncated at a fixed total hopping
degree; because every generator has minimal degree at least one, the
truncated series are finite.

Effective interaction terms are attached to sets of bonds by inclusion
exclusion: with ``E(T)`` the band block of the conjugated Hamiltonian when
only the bonds in ``T`` are active, the term carried by exactly the bond set
``B`` is ``sum_{T <= B} (-1)^{|B - T|} E(T)``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .cluster import Cluster, build_cluster
from .fock import SectorBasis, sector_basis
from .models import Bond, Model, ProjectorTriple, make_model
from .operators import SparseOperator
from .scalar import ScalarValue

logger = logging.getLogger(__name__)

__all__ = [
    "BlockSplit",
    "ConjugationResult",
    "EffectiveTerms",
    "GradingViolation",
    "ZeroDenominatorError",
    "block_split",
    "ad_inverse",
    "lie_schwinger",
    "conjugate",
    "band_block",
    "effective_band_operator",
    "support_terms",
    "first_order",
    "second_order",
    "residual_grading_check",
    "cluster_formula_terms",
    "DEFAULT_SHAPES",
]


class ZeroDenominatorError(ArithmeticError):
    """``ad^{-1}`` met a nonzero entry between states of equal energy."""


class GradingViolation(AssertionError):
    """An off-diagonal entry of the conjugated Hamiltonian has too low a degree."""


@dataclass
class BlockSplit:
    """``Q = Q00 + Q01 + QR`` with respect to one projector triple."""

    q00: SparseOperator
    q01: SparseOperator
    qr: SparseOperator


def block_split(q: SparseOperator, proj: ProjectorTriple) -> BlockSplit:
    """Split a bond operator against a partition of unity.

    Raises
    ------
    ValueError
        If the projectors do not form a partition of unity, or if ``Q`` has
        matrix elements between ``P2`` and ``P0 + P1`` (which would mean the
        protection zone is too small).
    """
    proj.check_partition(len(q.domain))
    p0, p1, p2 = set(proj.p0), set(proj.p1), set(proj.p2)
    q00 = q.sandwich(p0, p0)
    q01 = q.sandwich(p0, p1) + q.sandwich(p1, p0)
    qr = q.sandwich(p1, p1) + q.sandwich(p2, p2)
    if q00 + q01 + qr != q:
        raise ValueError("bond operator connects P2 with P0 + P1; protection zone too small")
    return BlockSplit(q00, q01, qr)


def ad_inverse(energies: Mapping[int, ScalarValue], q: SparseOperator,
               unit: Optional[ScalarValue] = None) -> SparseOperator:
    """Entrywise ``S(w, w') = Q(w, w') / (E(w) - E(w'))``.

    Parameters
    ----------
    energies : mapping
        Classical energy of every basis state.
    q : SparseOperator
        Operator whose entries all connect states of different energy.
    unit : ScalarValue, optional
        If given, every energy difference met must be a nonzero integer
        multiple of ``unit`` (asserted).

    Raises
    ------
    ZeroDenominatorError
        Naming the offending configuration pair.
    """
    basis = q.domain
    rows = {}
    cache: Dict[Tuple[int, int], ScalarValue] = {}
    for r, row in q.rows.items():
        out = {}
        for c, v in row.items():
            d = energies[r] - energies[c]
            if d.is_zero():
                raise ZeroDenominatorError(
                    f"equal energies for {basis.describe(basis.states[r])} and "
                    f"{basis.describe(basis.states[c])} with entry {v}")
            if unit is not None:
                m = (d / unit).cancel()
                if not m.is_constant() or m.constant_value().denominator != 1:
                    raise AssertionError(f"energy denominator {d} is not an integer multiple of {unit}")
            out[c] = v / d
        rows[r] = out
    return SparseOperator(q.ring, q.domain, q.codomain, rows)


def lie_schwinger(s: SparseOperator, b: SparseOperator, max_degree: int) -> SparseOperator:
    """``exp(S) B exp(-S) = sum_n ad^n S (B) / n!`` truncated at ``max_degree``."""
    if s.is_zero():
        return b.truncate(max_degree)
    md = s.min_degree()
    if md is None or md < 1:
        raise ValueError("generator must have minimal hopping degree >= 1")
    total = b.truncate(max_degree)
    term = total
    n = 0
    while True:
        n += 1
        term = s.commutator(term, max_degree).scale(Fraction(1, n))
        if term.is_zero():
            break
        total = total + term
        if n > max_degree + 1:
            raise AssertionError("Lie-Schwinger series failed to terminate")
    return total


@dataclass
class ConjugationResult:
    """Intermediate and final operators of one conjugation run."""

    model: Model
    order: int
    max_degree: int
    splits: Dict[Bond, BlockSplit]
    s1_parts: Dict[Bond, SparseOperator]
    s1: SparseOperator
    h: SparseOperator
    h1: SparseOperator
    v2_parts: Dict[Tuple[Bond, Bond], SparseOperator] = field(default_factory=dict)
    s2_parts: Dict[Tuple[Bond, Bond], SparseOperator] = field(default_factory=dict)
    s2: Optional[SparseOperator] = None
    h2: Optional[SparseOperator] = None

    @property
    def final(self) -> SparseOperator:
        return self.h2 if self.order >= 2 else self.h1


def _unit(model: Model) -> Optional[ScalarValue]:
    return None if model.three_band else model.ring.symbol("U")


def conjugate(model: Model, order: int, max_degree: Optional[int] = None) -> ConjugationResult:
    """Run Method 1 up to ``order`` (1 or 2) on the model's basis.

    Parameters
    ----------
    model : Model
    order : int
        1 builds ``S1`` only; 2 adds ``S2``.
    max_degree : int, optional
        Truncation degree; defaults to ``2 * order``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    max_degree = 2 * order if max_degree is None else max_degree
    ring = model.ring
    E = model.energies()
    unit = _unit(model)
    zero = SparseOperator(ring, model.basis)
    splits, s1_parts = {}, {}
    s1 = zero
    for bond in model.bonds:
        sp = block_split(model.bond_operator(bond), model.projectors(bond))
        splits[bond] = sp
        s = ad_inverse(E, sp.q01, unit)
        s1_parts[bond] = s
        s1 = s1 + s
    h = model.hamiltonian()
    h1 = lie_schwinger(s1, h, max_degree)
    res = ConjugationResult(model, order, max_degree, splits, s1_parts, s1, h, h1)
    if order == 1:
        return res
    s2 = zero
    half = Fraction(1, 2)
    for x1 in model.bonds:
        for x2 in model.bonds:
            sp = splits[x2]
            inner = sp.q00 + sp.qr + sp.q01.scale(half)
            v2 = s1_parts[x1].commutator(inner, max_degree)
            if v2.is_zero():
                continue
            proj = model.projectors(set(x1) | set(x2))
            p0, p1 = set(proj.p0), set(proj.p1)
            v01 = v2.sandwich(p0, p1) + v2.sandwich(p1, p0)
            res.v2_parts[(x1, x2)] = v01
            if v01.is_zero():
                continue
            s = ad_inverse(E, v01, unit)
            res.s2_parts[(x1, x2)] = s
            s2 = s2 + s
    res.s2 = s2
    res.h2 = lie_schwinger(s2, h1, max_degree)
    return res


def band_block(op: SparseOperator, model: Model) -> Tuple[SparseOperator, SectorBasis]:
    """Restriction of ``P0_Lambda op P0_Lambda`` onto the band sub-basis."""
    idx = sorted(model.band())
    bb = model.basis.subbasis(idx, "band")
    return op.restrict(idx, idx, bb, bb), bb


def spin_sectors(model: Model) -> List[Tuple[int, int]]:
    """Per-spin sectors contained in a total-N model, for block-wise work."""
    n = model.basis.constraint
    if isinstance(n, tuple):
        return [n]
    ns = model.cluster.n_sites
    return [(a, n - a) for a in range(0, n + 1) if a <= ns and n - a <= ns]


def effective_band_operator(model: Model, order: int, max_degree: Optional[int] = None,
                            ) -> SparseOperator:
    """Band block of the order-``order`` conjugated Hamiltonian.

    The work is done separately in every ``(N_up, N_down)`` sector (hopping
    conserves both numbers) and reassembled on the total-N band basis.
    """
    full_band = model.band_basis()
    rows: Dict[int, Dict[int, ScalarValue]] = {}
    for sec in spin_sectors(model):
        sub = model.with_basis(sector_basis(model.cluster, sec, model.ring))
        band = sorted(sub.band())
        if not band:
            continue
        res = conjugate(sub, order, max_degree)
        blk = res.final
        bset = set(band)
        for r in band:
            row = blk.rows.get(r)
            if not row:
                continue
            R = full_band.index[sub.basis.states[r]]
            for c, v in row.items():
                if c in bset:
                    rows.setdefault(R, {})[full_band.index[sub.basis.states[c]]] = v.truncate(
                        2 * order if max_degree is None else max_degree)
    return SparseOperator(model.ring, full_band, full_band, rows)


def support_terms(model: Model, order: int, max_degree: Optional[int] = None,
                  ) -> Dict[FrozenSet[Bond], SparseOperator]:
    """Inclusion-exclusion terms for every nonempty subset of the active bonds.

    Returns
    -------
    dict
        ``frozenset(bonds) -> band operator`` (on the model's band basis).
    """
    bonds = [tuple(b) for b in model.bonds]
    cache: Dict[FrozenSet[Bond], SparseOperator] = {}
    for r in range(len(bonds) + 1):
        for sub in combinations(bonds, r):
            t0 = time.perf_counter()
            cache[frozenset(sub)] = effective_band_operator(model.with_bonds(sub), order, max_degree)
            logger.debug("band operator for %d bonds in %.2fs", r, time.perf_counter() - t0)
    out = {}
    for r in range(1, len(bonds) + 1):
        for sub in combinations(bonds, r):
            key = frozenset(sub)
            acc = SparseOperator(model.ring, cache[key].domain)
            for k in range(len(sub) + 1):
                sign = -1 if (len(sub) - k) % 2 else 1
                for t in combinations(sub, k):
                    term = cache[frozenset(t)]
                    acc = acc + (term if sign > 0 else -term)
            out[key] = acc
    return out


@dataclass
class EffectiveTerms:
    """Per-support band terms produced by one derivation.

    Attributes
    ----------
    model_name : str
    order : int
    terms : dict
        Shape name -> band operator of the term carried by all core bonds
        of that shape (inclusion-exclusion over the shape's bonds).
    classical : dict
        Shape name -> band block of ``H0`` (degree-0 part).
    models : dict
        Shape name -> Model used for the shape.
    vanishing : dict
        Human-readable certificates for supports whose term vanishes.
    """

    model_name: str
    order: int
    terms: Dict[str, SparseOperator]
    classical: Dict[str, SparseOperator]
    models: Dict[str, Model]
    vanishing: Dict[str, bool] = field(default_factory=dict)
    all_supports: Dict[str, Dict[FrozenSet[Bond], SparseOperator]] = field(default_factory=dict)


DEFAULT_SHAPES = {
    "one-band": ("bond", "chain3", "corner3", "plaquette"),
    "three-band": ("cuo2_bond", "cuo2_two_bonds"),
}


def _derive(model_name: str, order: int, shapes: Optional[Sequence[str]] = None,
            max_degree: Optional[int] = None) -> EffectiveTerms:
    fam = "three-band" if model_name == "three-band" else "one-band"
    shapes = DEFAULT_SHAPES[fam] if shapes is None else shapes
    terms, classical, models, vanish, supports = {}, {}, {}, {}, {}
    for shape in shapes:
        t0 = time.perf_counter()
        cl = build_cluster(shape) if isinstance(shape, str) else shape
        name = shape if isinstance(shape, str) else cl.name
        model = make_model(model_name, cl)
        sup = support_terms(model, order, max_degree)
        full = frozenset(tuple(b) for b in model.bonds)
        terms[name] = sup[full]
        h0, _ = band_block(model.h0(), model)
        classical[name] = h0
        models[name] = model
        supports[name] = sup
        logger.info("derived %s order %d on %s in %.2fs", model_name, order, name, time.perf_counter() - t0)
    et = EffectiveTerms(model_name, order, terms, classical, models, vanish, supports)
    _certify_vanishing(et)
    return et


def _certify_vanishing(et: EffectiveTerms) -> None:
    """Record which multi-bond supports carry no band term."""
    for name, sup in et.all_supports.items():
        model = et.models[name]
        for key, op in sup.items():
            if len(key) < 2:
                continue
            label = f"{name}:" + "+".join(f"{a}-{b}" for a, b in sorted(key))
            et.vanishing[label] = op.is_zero()


def first_order(model_name: str, shapes: Optional[Sequence[str]] = None) -> EffectiveTerms:
    """Order-1 effective terms (hopping degree <= 2) on the standard shapes.

    Two-bond supports at this order are certified to vanish.
    """
    et = _derive(model_name, 1, shapes)
    for label, zero in et.vanishing.items():
        if not zero:
            raise AssertionError(f"first-order term on multi-bond support {label} does not vanish")
    return et


def second_order(model_name: str, shapes: Optional[Sequence[str]] = None) -> EffectiveTerms:
    """Order-2 effective terms (hopping degree <= 4) on the standard shapes."""
    return _derive(model_name, 2, shapes)


@dataclass
class GradingCertificate:
    """Outcome of :func:`residual_grading_check`."""

    cluster: str
    order: int
    max_degree: int
    min_offdiag_degree: Optional[int]
    n_entries: int
    ok: bool


def residual_grading_check(model: Model, order: int, max_degree: Optional[int] = None) -> GradingCertificate:
    """Verify that ``P0 H(n) P1 + P1 H(n) P0`` starts at hopping degree ``n + 1``.

    The conjugated Hamiltonian is assembled to degree ``2n + 2`` by default.

    Raises
    ------
    GradingViolation
        With the configurations, degree and coefficient of a violating entry.
    """
    max_degree = 2 * order + 2 if max_degree is None else max_degree
    worst: Optional[int] = None
    count = 0
    for sec in spin_sectors(model):
        sub = model.with_basis(sector_basis(model.cluster, sec, model.ring))
        band = set(sub.band())
        if not band:
            continue
        rest = set(range(len(sub.basis))) - band
        res = conjugate(sub, order, max_degree)
        off = res.final.sandwich(band, rest) + res.final.sandwich(rest, band)
        for r, c, v in off.entries():
            d = v.min_degree
            count += 1
            if worst is None or d < worst:
                worst = d
            if d < order + 1:
                b = sub.basis
                raise GradingViolation(
                    f"entry {b.describe(b.states[r])} <- {b.describe(b.states[c])} has degree {d}: {v}")
    return GradingCertificate(model.cluster.name, order, max_degree, worst, count, True)


# ---------------------------------------------------------------------------
# explicit cluster formulas (independent route to the order-2 one-band terms)
# ---------------------------------------------------------------------------

def _nested_ad(gens: Sequence[SparseOperator], q: SparseOperator) -> SparseOperator:
    """``ad g_last ( ... ad g_first (q))``."""
    out = q
    for g in gens:
        out = g.commutator(out)
    return out


def _cycle_order(bonds: Sequence[Bond]) -> List[Bond]:
    """Order four bonds of a square so that consecutive bonds share a site."""
    rest = list(bonds[1:])
    seq = [bonds[0]]
    while rest:
        nxt = next(b for b in rest if set(b) & set(seq[-1]))
        seq.append(nxt)
        rest.remove(nxt)
    return seq


def _formula_parts(sub: Model, bonds: Sequence[Bond]) -> Dict[str, SparseOperator]:
    res = conjugate(sub, 2)
    q01 = {b: sp.q01 for b, sp in res.splits.items()}
    s1, v2, s2 = res.s1_parts, res.v2_parts, res.s2_parts
    zero = SparseOperator(sub.ring, sub.basis)

    def pair(d, a, b):
        # second-step piece attached to the unordered pair {a, b}
        acc = zero
        for key in {(a, b), (b, a)}:
            if key in d:
                acc = acc + d[key]
        return acc

    def bar_sum(seqs, ordered):
        acc = zero
        for x1, x2, x3, x4 in seqs:
            if ordered:
                sv, vv = s2.get((x4, x3), zero), v2.get((x1, x2), zero)
            else:
                sv, vv = pair(s2, x4, x3), pair(v2, x1, x2)
            acc = acc + sv.commutator(vv)
        return acc.scale(Fraction(1, 2))

    def tilde_sum(seqs):
        acc = zero
        for x1, x2, x3, x4 in seqs:
            acc = acc + _nested_ad([s1[x2], s1[x3], s1[x4]], q01[x1])
        return acc.scale(Fraction(1, 8))

    if len(bonds) == 1:
        x = bonds[0]
        return {"bond": tilde_sum([(x, x, x, x)])}
    if len(bonds) == 2:
        x, y = bonds
        seqs = [(x, x, y, y), (x, y, x, y), (x, y, y, x)]
        seqs += [tuple(y if b == x else x for b in s) for s in seqs]
        c4 = [(x, y, x, y), (x, y, y, x), (y, x, y, x), (y, x, x, y)]
        return {"tilde": tilde_sum(seqs), "bar": bar_sum(c4, ordered=True)}
    if len(bonds) == 4:
        cyc = _cycle_order(bonds)
        shifts = [tuple(cyc[(k + j) % 4] for j in range(4)) for k in range(4)]
        return {"tilde": tilde_sum(permutations(cyc)), "bar": bar_sum(shifts, ordered=False)}
    raise ValueError(f"no cluster formula for {len(bonds)} bonds")


def cluster_formula_terms(model_name: str, shape: str) -> Dict[str, SparseOperator]:
    """Order-2 one-band band terms from the explicit nested-commutator sums.

    For a bond ``X``: ``1/8 P0 ad^3 S1_X (Q01_X) P0`` (key ``bond``).
    For two adjacent bonds: the sum over the six orderings using each bond
    twice (key ``tilde``) and ``1/2`` of the commutators of ordered
    second-step pieces whose pairs cover both bonds (key ``bar``).  For the
    plaquette with bonds ``B1..B4`` in cyclic order: the sum over the 24
    orderings (``tilde``) and ``1/2 [S2{B4, B3}, V2{B1, B2}]`` over the four
    cyclic shifts (``bar``), where ``S2{a, b}`` and ``V2{a, b}`` collect
    both ordered pieces of the unordered pair.

    Computed per spin sector and reassembled on the band basis of the
    total-N model.  This is independent of the inclusion-exclusion route
    used by :func:`second_order` and serves as a cross-check of it.
    """
    if model_name == "three-band":
        raise ValueError("cluster formulas are implemented for one-band models only")
    model = make_model(model_name, shape)
    bonds = [tuple(b) for b in model.bonds]
    full_band = model.band_basis()
    out_rows: Dict[str, Dict[int, Dict[int, ScalarValue]]] = {}
    for sec in spin_sectors(model):
        sub = model.with_basis(sector_basis(model.cluster, sec, model.ring))
        band = sorted(sub.band())
        if not band:
            continue
        bset = set(band)
        for key, op in _formula_parts(sub, bonds).items():
            rows = out_rows.setdefault(key, {})
            for r in band:
                row = op.rows.get(r)
                if not row:
                    continue
                R = full_band.index[sub.basis.states[r]]
                for c, v in row.items():
                    if c in bset:
                        rows.setdefault(R, {})[full_band.index[sub.basis.states[c]]] = v
    return {k: SparseOperator(model.ring, full_band, full_band, rows) for k, rows in out_rows.items()}
