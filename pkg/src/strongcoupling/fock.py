"""Fermionic occupation bases at fixed particle number and ladder operators.

Spin orbitals are ordered site-major along the cluster order: orbital
``2*i`` is ``(site i, up)`` and ``2*i + 1`` is ``(site i, down)``.  A basis
state is an integer bitmask over these orbitals.  The sign of ``c†`` or ``c``
acting on orbital ``o`` is ``(-1)**(number of occupied orbitals before o)``.

With the site-major ordering, on-site bilinears such as ``S+_x`` carry no
sign and single-occupancy states map to spin product states without extra
phases.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .cluster import Cluster
from .operators import SparseOperator
from .scalar import Ring

logger = logging.getLogger(__name__)

Constraint = Union[int, Tuple[int, int]]
UP, DOWN = 1, -1

__all__ = [
    "SectorBasis",
    "sector_basis",
    "ladder_matrix",
    "elementary_op",
    "UP",
    "DOWN",
    "spin_of",
]


def spin_of(spin) -> int:
    """Normalise a spin label (``+1``, ``-1``, ``'+'``, ``'-'``, ``'up'``, ``'down'``)."""
    if spin in (1, "+", "up", "u"):
        return UP
    if spin in (-1, "-", "down", "d"):
        return DOWN
    raise ValueError(f"bad spin label {spin!r}")


def _popcount(x: int) -> int:
    return bin(x).count("1")


class SectorBasis:
    """Occupation-number basis of a cluster at fixed particle number(s).

    Parameters
    ----------
    cluster : Cluster
    constraint : int or (int, int)
        Total particle number ``N`` or per-spin numbers ``(N_up, N_down)``.
    ring : Ring
        Scalar ring used for operators built on this basis.
    states : sequence of int, optional
        Explicit subset of admissible states (used for band sub-bases).
    label : str, optional
        Tag distinguishing sub-bases of the same sector.
    """

    def __init__(self, cluster: Cluster, constraint: Constraint, ring: Ring,
                 states: Optional[Sequence[int]] = None, label: str = "sector"):
        self.cluster = cluster
        self.constraint = constraint
        self.ring = ring
        self.label = label
        n_orb = 2 * cluster.n_sites
        self.n_orbitals = n_orb
        if states is None:
            states = _enumerate(n_orb, constraint)
        else:
            states = sorted(states)
            for s in states:
                if not _admissible(s, n_orb, constraint):
                    raise ValueError(f"state {s:b} violates constraint {constraint}")
        self.states: Tuple[int, ...] = tuple(states)
        self.index: Dict[int, int] = {s: i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise ValueError("duplicate states")

    def __len__(self) -> int:
        return len(self.states)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (isinstance(other, SectorBasis) and self.cluster.sites == other.cluster.sites
                and self.constraint == other.constraint and self.ring == other.ring
                and self.states == other.states)

    def __hash__(self) -> int:
        return hash((self.cluster.sites, self.constraint, len(self.states), self.label, self.ring))

    def __repr__(self) -> str:
        return f"SectorBasis({self.cluster.name}, {self.constraint}, dim={len(self)}, {self.label})"

    # -- occupation helpers ------------------------------------------------
    def site_index(self, site) -> int:
        if isinstance(site, int):
            if not 0 <= site < self.cluster.n_sites:
                raise KeyError(f"site index {site} outside cluster")
            return site
        return self.cluster.index(site)

    @staticmethod
    def orbital(i: int, spin: int) -> int:
        return 2 * i + (0 if spin == UP else 1)

    def occ(self, state: int, i: int, spin: int) -> int:
        return (state >> self.orbital(i, spin)) & 1

    def site_occ(self, state: int, i: int) -> Tuple[int, int]:
        return (state >> (2 * i)) & 1, (state >> (2 * i + 1)) & 1

    def describe(self, state: int) -> str:
        """Human readable configuration, one symbol per site in cluster order."""
        sym = {(0, 0): "0", (1, 0): "u", (0, 1): "d", (1, 1): "2"}
        return "".join(sym[self.site_occ(state, i)] for i in range(self.cluster.n_sites))

    def subbasis(self, indices: Iterable[int], label: str) -> "SectorBasis":
        return SectorBasis(self.cluster, self.constraint, self.ring,
                           [self.states[i] for i in indices], label)

    def shifted(self, spin: int, delta: int) -> Constraint:
        """Constraint after adding ``delta`` particles of the given spin."""
        if isinstance(self.constraint, tuple):
            up, dn = self.constraint
            return (up + delta, dn) if spin == UP else (up, dn + delta)
        return self.constraint + delta


def _admissible(s: int, n_orb: int, constraint: Constraint) -> bool:
    if s < 0 or s >> n_orb:
        return False
    if isinstance(constraint, tuple):
        up = sum((s >> (2 * i)) & 1 for i in range(n_orb // 2))
        dn = sum((s >> (2 * i + 1)) & 1 for i in range(n_orb // 2))
        return (up, dn) == tuple(constraint)
    return _popcount(s) == constraint


def _feasible(n_sites: int, constraint: Constraint) -> bool:
    if isinstance(constraint, tuple):
        return all(0 <= c <= n_sites for c in constraint)
    return 0 <= constraint <= 2 * n_sites


def _enumerate(n_orb: int, constraint: Constraint) -> List[int]:
    n_sites = n_orb // 2
    if isinstance(constraint, tuple):
        up, dn = constraint
        if not (0 <= up <= n_sites and 0 <= dn <= n_sites):
            raise ValueError(f"infeasible constraint {constraint} on {n_sites} sites")
        ups = [sum(1 << (2 * i) for i in c) for c in combinations(range(n_sites), up)]
        dns = [sum(1 << (2 * i + 1) for i in c) for c in combinations(range(n_sites), dn)]
        return sorted(a | b for a in ups for b in dns)
    if not 0 <= constraint <= n_orb:
        raise ValueError(f"infeasible constraint N={constraint} on {n_sites} sites")
    return sorted(sum(1 << o for o in c) for c in combinations(range(n_orb), constraint))


_BASIS_CACHE: Dict[tuple, SectorBasis] = {}


def sector_basis(cluster: Cluster, constraint: Constraint, ring: Ring) -> SectorBasis:
    """Full sector basis, cached per (cluster, constraint, ring).

    Examples
    --------
    >>> from strongcoupling.cluster import build_cluster
    >>> from strongcoupling.scalar import Ring
    >>> len(sector_basis(build_cluster("plaquette"), 4, Ring(["t"], ["U"])))
    70
    """
    if isinstance(constraint, list):
        constraint = tuple(constraint)
    key = (cluster, constraint, ring)
    b = _BASIS_CACHE.get(key)
    if b is None:
        b = SectorBasis(cluster, constraint, ring)
        _BASIS_CACHE[key] = b
    return b


def ladder_matrix(basis_from: SectorBasis, site, spin, kind: str) -> SparseOperator:
    """Matrix of ``c†`` (``kind='create'``) or ``c`` (``'annihilate'``).

    Returns an operator from ``basis_from`` to the sector with one more (or
    one fewer) particle of the given spin.
    """
    spin = spin_of(spin)
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be create or annihilate, not {kind!r}")
    i = basis_from.site_index(site)
    delta = 1 if kind == "create" else -1
    target_c = basis_from.shifted(spin, delta)
    target = sector_basis(basis_from.cluster, target_c, basis_from.ring)
    o = SectorBasis.orbital(i, spin)
    bit = 1 << o
    below = bit - 1
    ring = basis_from.ring
    one, mone = ring.one, -ring.one
    rows: Dict[int, dict] = {}
    for col, s in enumerate(basis_from.states):
        occupied = bool(s & bit)
        if occupied == (kind == "create"):
            continue
        new = s ^ bit
        sign = mone if _popcount(s & below) % 2 else one
        rows.setdefault(target.index[new], {})[col] = sign
    return SparseOperator(ring, basis_from, target, rows)


def _c(basis: SectorBasis, i: int, spin: int, kind: str) -> SparseOperator:
    return ladder_matrix(basis, i, spin, kind)


@lru_cache(maxsize=4096)
def _cached_op(basis: SectorBasis, which: str, args: tuple) -> SparseOperator:
    ring = basis.ring
    half = ring.const(1) / 2

    def cdag_c(x, sx, y, sy):
        # c†_{x sx} c_{y sy}: annihilate first, then create on the intermediate basis
        if not _feasible(basis.cluster.n_sites, basis.shifted(sy, -1)):
            return SparseOperator(ring, basis)
        a = _c(basis, y, sy, "annihilate")
        mid = a.codomain
        b = _c(mid, x, sx, "create")
        op = b @ a
        if op.codomain != basis:
            raise AssertionError("bilinear left the sector")
        op.codomain = basis
        return op

    if which == "hop":
        x, y, s = args
        return cdag_c(x, s, y, s)
    if which == "number":
        x, s = args
        return cdag_c(x, s, x, s)
    if which == "Sz":
        (x,) = args
        return (cdag_c(x, UP, x, UP) - cdag_c(x, DOWN, x, DOWN)).scale(half)
    if which == "Splus":
        (x,) = args
        return cdag_c(x, UP, x, DOWN)
    if which == "Sminus":
        (x,) = args
        return cdag_c(x, DOWN, x, UP)
    if which == "Sperp_pair":
        x, y = args
        sp = lambda z: cdag_c(z, UP, z, DOWN)
        sm = lambda z: cdag_c(z, DOWN, z, UP)
        return (sp(x) @ sm(y) + sm(x) @ sp(y)).scale(half)
    raise ValueError(f"unknown elementary operator {which!r}")


_SPIN_SLOTS = {
    "hop": (3, 2),
    "number": (2, 1),
    "Sz": (1, None),
    "Splus": (1, None),
    "Sminus": (1, None),
    "Sperp_pair": (2, None),
}


def elementary_op(basis: SectorBasis, which: str, *args) -> SparseOperator:
    """Within-sector operator assembled from ladder matrices.

    Parameters
    ----------
    basis : SectorBasis
    which : str
        One of ``hop(x, y, spin)`` (``c†_x c_y``), ``number(x, spin)``,
        ``Sz(x)``, ``Splus(x)``, ``Sminus(x)``, ``Sperp_pair(x, y)``.
    *args
        Sites (order index or coordinates) and spin labels.
    """
    arity = _SPIN_SLOTS.get(which)
    if arity is None:
        raise ValueError(f"unknown elementary operator {which!r}")
    n_args, spin_slot = arity
    if len(args) != n_args:
        raise ValueError(f"{which} takes {n_args} arguments, got {len(args)}")
    norm = [spin_of(a) if k == spin_slot else basis.site_index(a) for k, a in enumerate(args)]
    return _cached_op(basis, which, tuple(norm))
