"""One-band Hubbard and three-band CuO2 Hubbard models on finite clusters.

A :class:`Model` bundles a cluster, a particle-number sector, the classical
(diagonal) energy of every basis state, the hopping operator of every active
bond, and the local projector families that define the band structure.

Sign convention: the Hamiltonian is ``H = H0 + sum_X Q_X`` with
``Q_X = -sum_sigma t_sigma (c†_x c_y + c†_y c_x)``.  Every effective
coefficient below fourth order is even in the amplitudes, so the overall
sign of ``Q_X`` never shows up in the results.

Local ground states
-------------------
One-band: a site is in its local ground state when it is singly occupied;
protection zones are trivial (``B_Y = Y``) and ``P2 = 0``.

Three-band: a copper site is in its local ground state when it holds exactly
one hole and an oxygen site when it is empty.  Classical energies are
measured from the configuration with one hole per copper site:
``E = Ud*(doubly occupied Cu) + Up*(doubly occupied O)
+ Upd*(occupied nearest-neighbour Cu-O pairs) + Delta*(holes on O)``.
With ``N_h`` equal to the number of copper sites, the site energies
``eps_d N_d + eps_p N_p`` reduce to ``eps_d N_h + Delta N_p``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .cluster import CU, Cluster, build_cluster, cuo2_zone
from .fock import DOWN, UP, SectorBasis, elementary_op, sector_basis
from .operators import SparseOperator
from .scalar import Ring, ScalarValue

logger = logging.getLogger(__name__)

Bond = Tuple[int, int]

__all__ = [
    "Model",
    "ProjectorTriple",
    "one_band_model",
    "three_band_model",
    "make_model",
    "ONE_BAND_VARIANTS",
    "MODEL_NAMES",
    "ring_for",
]

ONE_BAND_VARIANTS = ("one-band-symmetric", "one-band-general", "falicov-kimball")
MODEL_NAMES = ONE_BAND_VARIANTS + ("three-band",)

_RINGS: Dict[str, Ring] = {}


def ring_for(model_name: str) -> Ring:
    """Shared scalar ring for a model family."""
    if model_name not in MODEL_NAMES:
        raise ValueError(f"unknown model {model_name!r}; known: {', '.join(MODEL_NAMES)}")
    r = _RINGS.get(model_name)
    if r is None:
        if model_name == "one-band-general":
            r = Ring(["tp", "tm"], ["U", "h", "k"])
        elif model_name == "three-band":
            r = Ring(["tpd"], ["Ud", "Up", "Upd", "Delta"])
        else:
            r = Ring(["t"], ["U", "h", "k"])
        _RINGS[model_name] = r
    return r


@dataclass(frozen=True)
class ProjectorTriple:
    """Index sets of the diagonal projectors ``P0, P1, P2`` on a basis."""

    p0: FrozenSet[int]
    p1: FrozenSet[int]
    p2: FrozenSet[int]

    def check_partition(self, dim: int) -> None:
        """Raise if the three sets do not partition ``range(dim)``."""
        if self.p0 & self.p1 or self.p0 & self.p2 or self.p1 & self.p2:
            raise ValueError("projectors are not mutually orthogonal")
        if len(self.p0) + len(self.p1) + len(self.p2) != dim:
            raise ValueError("projectors do not sum to the identity")

    def as_operators(self, ring: Ring, basis) -> Tuple[SparseOperator, SparseOperator, SparseOperator]:
        return tuple(SparseOperator.projector(ring, basis, s) for s in (self.p0, self.p1, self.p2))


@dataclass
class Model:
    """A lattice model instantiated on a cluster and particle-number sector.

    Attributes
    ----------
    name : str
        One of :data:`MODEL_NAMES`.
    ring : Ring
    cluster : Cluster
    basis : SectorBasis
    bonds : list of (int, int)
        Active hopping bonds (cluster order indices).
    amplitudes : dict
        Spin -> ScalarValue hopping amplitude.
    """

    name: str
    ring: Ring
    cluster: Cluster
    basis: SectorBasis
    bonds: List[Bond]
    amplitudes: Dict[int, ScalarValue]
    _energy_cache: Dict[int, ScalarValue] = field(default_factory=dict, repr=False)
    _q_cache: Dict[Bond, SparseOperator] = field(default_factory=dict, repr=False)
    _proj_cache: Dict[FrozenSet[int], ProjectorTriple] = field(default_factory=dict, repr=False)

    # -- classical part --------------------------------------------------
    @property
    def three_band(self) -> bool:
        return self.name == "three-band"

    def site_energy_terms(self, state: int) -> List[Tuple[Tuple[int, ...], ScalarValue]]:
        """Local classical terms ``(support, value)`` for one configuration."""
        R = self.ring
        b = self.basis
        out = []
        if not self.three_band:
            U, h, k = R.symbols("U", "h", "k")
            for i in range(self.cluster.n_sites):
                up, dn = b.site_occ(state, i)
                out.append(((i,), U * (up * dn) - h * Fraction(up - dn, 2) - k * Fraction(up + dn, 2)))
            return out
        Ud, Up, Upd, Delta = R.symbols("Ud", "Up", "Upd", "Delta")
        for i, lab in enumerate(self.cluster.sublattice):
            up, dn = b.site_occ(state, i)
            if lab == CU:
                out.append(((i,), Ud * (up * dn)))
            else:
                out.append(((i,), Up * (up * dn) + Delta * (up + dn)))
        for i, j, _ in self.cluster.adjacency:
            ni = sum(b.site_occ(state, i))
            nj = sum(b.site_occ(state, j))
            if ni and nj:
                out.append(((i, j), Upd * (ni * nj)))
        return out

    def energy(self, index: int) -> ScalarValue:
        """Classical energy ``E(omega)`` of basis state ``index``."""
        e = self._energy_cache.get(index)
        if e is None:
            e = self.ring.zero
            for _, v in self.site_energy_terms(self.basis.states[index]):
                e = e + v
            self._energy_cache[index] = e
        return e

    def energies(self) -> Dict[int, ScalarValue]:
        return {i: self.energy(i) for i in range(len(self.basis))}

    def h0(self) -> SparseOperator:
        return SparseOperator.diagonal(self.ring, self.basis, self.energies())

    # -- quantum part ------------------------------------------------------------
    def bond_operator(self, bond: Bond) -> SparseOperator:
        """Hopping term ``Q_X`` of one bond (self-adjoint)."""
        bond = tuple(bond)
        q = self._q_cache.get(bond)
        if q is None:
            x, y = bond
            q = SparseOperator(self.ring, self.basis)
            for s, amp in self.amplitudes.items():
                if amp.is_zero():
                    continue
                hop = elementary_op(self.basis, "hop", x, y, s) + elementary_op(self.basis, "hop", y, x, s)
                q = q + hop.scale(-amp)
            self._q_cache[bond] = q
        return q

    def hamiltonian(self, bonds: Optional[Iterable[Bond]] = None) -> SparseOperator:
        bonds = self.bonds if bonds is None else bonds
        h = self.h0()
        for b in bonds:
            h = h + self.bond_operator(b)
        return h

    # -- local ground states and projectors ---------------------------------------
    def site_in_ground(self, state: int, i: int) -> bool:
        up, dn = self.basis.site_occ(state, i)
        if self.three_band and self.cluster.sublattice[i] != CU:
            return up + dn == 0
        return up + dn == 1

    def zone(self, sites: Iterable[int]) -> FrozenSet[int]:
        """Protection zone ``B_Y`` of a union of active bonds given by its sites."""
        sites = frozenset(sites)
        if not self.three_band:
            return sites
        zone = set()
        covered = set()
        for x, y in self.bonds:
            if x in sites and y in sites:
                covered.update((x, y))
                cu, o = (x, y) if self.cluster.sublattice[x] == CU else (y, x)
                for s in cuo2_zone(self.cluster.sites[cu], self.cluster.sites[o]):
                    if s not in self.cluster:
                        raise ValueError(f"cluster {self.cluster.name} does not contain the zone of bond {(x, y)}")
                    zone.add(self.cluster.index(s))
        if covered != sites:
            # isolated sites: their own zone
            zone.update(sites - covered)
        return frozenset(zone)

    def ground_set(self, sites: Iterable[int]) -> FrozenSet[int]:
        """Indices of basis states whose restriction to ``sites`` is a local ground state."""
        sites = tuple(sites)
        return frozenset(i for i, s in enumerate(self.basis.states)
                         if all(self.site_in_ground(s, j) for j in sites))

    def projectors(self, sites: Iterable[int]) -> ProjectorTriple:
        """``(P0_{B_Y}, P1_{B_Y}, P2_{B_Y})`` for ``Y`` the given site set."""
        key = frozenset(sites)
        p = self._proj_cache.get(key)
        if p is None:
            zone = self.zone(key)
            all_idx = frozenset(range(len(self.basis)))
            p0 = self.ground_set(zone)
            if not self.three_band:
                p = ProjectorTriple(p0, all_idx - p0, frozenset())
            else:
                outer = self.ground_set(zone - key)
                p = ProjectorTriple(p0, outer - p0, all_idx - outer)
            p.check_partition(len(self.basis))
            self._proj_cache[key] = p
        return p

    def band(self) -> FrozenSet[int]:
        """Indices of the global low band ``P0_Lambda``."""
        return self.ground_set(range(self.cluster.n_sites))

    def band_basis(self) -> SectorBasis:
        idx = sorted(self.band())
        return self.basis.subbasis(idx, "band")

    def with_bonds(self, bonds: Iterable[Bond]) -> "Model":
        """Same model with a different set of active bonds (shares caches)."""
        m = Model(self.name, self.ring, self.cluster, self.basis, [tuple(b) for b in bonds], self.amplitudes)
        m._energy_cache = self._energy_cache
        m._q_cache = self._q_cache
        return m

    def with_basis(self, basis: SectorBasis) -> "Model":
        """Same model on another sector basis of the same cluster."""
        return Model(self.name, self.ring, self.cluster, basis, list(self.bonds), self.amplitudes)


def _amplitudes(name: str, ring: Ring) -> Dict[int, ScalarValue]:
    if name == "one-band-general":
        return {UP: ring.symbol("tp"), DOWN: ring.symbol("tm")}
    if name == "one-band-symmetric":
        t = ring.symbol("t")
        return {UP: t, DOWN: t}
    if name == "falicov-kimball":
        return {UP: ring.zero, DOWN: ring.symbol("t")}
    if name == "three-band":
        t = ring.symbol("tpd")
        return {UP: t, DOWN: t}
    raise ValueError(f"unknown model {name!r}")


def one_band_model(cluster: Cluster, variant: str = "one-band-symmetric",
                   constraint=None, bonds: Optional[Sequence[Bond]] = None) -> Model:
    """One-band Hubbard model on ``cluster``.

    Parameters
    ----------
    cluster : Cluster
    variant : str
        ``one-band-symmetric`` (``t+ = t- = t``), ``one-band-general``
        (independent ``tp``, ``tm``) or ``falicov-kimball`` (``t+ = 0``).
    constraint : int or (int, int), optional
        Sector; defaults to half filling ``N = n_sites``.
    bonds : sequence of (int, int), optional
        Active bonds; defaults to all nearest-neighbour pairs.
    """
    if variant not in ONE_BAND_VARIANTS:
        raise ValueError(f"unknown one-band variant {variant!r}")
    if cluster.is_cuo2():
        raise ValueError("one-band models need a square-lattice cluster")
    ring = ring_for(variant)
    constraint = cluster.n_sites if constraint is None else constraint
    basis = sector_basis(cluster, constraint, ring)
    bonds = list(cluster.core_bonds) if bonds is None else [tuple(sorted(b)) for b in bonds]
    return Model(variant, ring, cluster, basis, bonds, _amplitudes(variant, ring))


def three_band_model(cluster: Cluster, constraint=None, bonds: Optional[Sequence[Bond]] = None) -> Model:
    """Three-band CuO2 model on a ``cuo2_*`` cluster with ``N_h = #Cu`` holes."""
    if not cluster.is_cuo2():
        raise ValueError("the three-band model needs a cuo2 cluster")
    ring = ring_for("three-band")
    constraint = len(cluster.copper()) if constraint is None else constraint
    basis = sector_basis(cluster, constraint, ring)
    bonds = list(cluster.core_bonds) if bonds is None else [tuple(sorted(b)) for b in bonds]
    return Model("three-band", ring, cluster, basis, bonds, _amplitudes("three-band", ring))


def make_model(name: str, cluster, constraint=None, bonds=None) -> Model:
    """Dispatch on model name; ``cluster`` may be a shape name."""
    if isinstance(cluster, str):
        cluster = build_cluster(cluster)
    if name == "three-band":
        return three_band_model(cluster, constraint, bonds)
    return one_band_model(cluster, name, constraint, bonds)


def check_parameters(name: str, params: Mapping[str, Fraction]) -> List[str]:
    """Diagnostic warnings for numeric parameters outside the intended regime."""
    warn = []
    if name == "three-band":
        if "Delta" in params and params["Delta"] <= 0:
            warn.append("Delta <= 0: charge-transfer gap is not positive")
        if all(k in params for k in ("Ud", "Up", "Upd")):
            if not params["Ud"] > params["Up"] > params["Upd"] > 0:
                warn.append("expected Ud > Up > Upd > 0")
    else:
        if "U" in params and params["U"] <= 0:
            warn.append("U must be positive")
    for w in warn:
        logger.warning(w)
    return warn
