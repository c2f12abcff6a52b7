"""Finite clusters of the square lattice and of the CuO2 lattice.

Sites carry integer coordinates.  For the CuO2 shapes coordinates live on the
doubled lattice: copper sites sit at even-even positions and oxygen sites at
positions with exactly one odd coordinate, so every Cu-O bond has length one.

The total order used for fermionic signs is the square spiral around the
origin: ring ``k = max(|x|, |y|)`` is entered at ``(k, 1 - k)`` and traversed
counter-clockwise.  Any fixed total order is admissible; the spiral makes it
independent of the cluster it is restricted to.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Site = Tuple[int, int]

__all__ = [
    "Site",
    "Cluster",
    "spiral_rank",
    "build_cluster",
    "SHAPES",
    "CU",
    "O",
    "UNIFORM",
]

CU = "A"
O = "B"
UNIFORM = "-"


def spiral_rank(site: Site) -> int:
    """Position of ``site`` in the square spiral starting at the origin.

    Examples
    --------
    >>> [spiral_rank(s) for s in [(0, 0), (1, 0), (1, 1), (0, 1), (-1, 1)]]
    [0, 1, 2, 3, 4]
    """
    x, y = site
    k = max(abs(x), abs(y))
    if k == 0:
        return 0
    base = (2 * k - 1) ** 2
    if x == k and y > -k:
        return base + (y + k - 1)
    if y == k:
        return base + 2 * k + (k - 1 - x)
    if x == -k:
        return base + 4 * k + (k - 1 - y)
    return base + 6 * k + (x + k - 1)


@dataclass(frozen=True)
class Cluster:
    """A finite set of lattice sites with a total order and adjacency.

    Attributes
    ----------
    name : str
        Shape name used to build the cluster.
    sites : tuple of Site
        Sites listed in the global fermionic order (position = order index).
    sublattice : tuple of str
        ``"A"`` (copper) / ``"B"`` (oxygen) for CuO2 shapes, ``"-"`` otherwise.
    adjacency : tuple of (int, int, str)
        Nearest-neighbour pairs ``(i, j, tag)`` with ``i < j`` in order index
        and tag ``"x"`` or ``"y"`` for the bond direction.
    core_bonds : tuple of (int, int)
        The bonds the shape is built around (active hopping bonds by default).
    """

    name: str
    sites: Tuple[Site, ...]
    sublattice: Tuple[str, ...]
    adjacency: Tuple[Tuple[int, int, str], ...]
    core_bonds: Tuple[Tuple[int, int], ...]
    _index: Dict[Site, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        self._index.update({s: i for i, s in enumerate(self.sites)})
        if len(self._index) != len(self.sites):
            raise ValueError("duplicate sites in cluster")
        for i, j, _ in self.adjacency:
            if not (0 <= i < len(self.sites) and 0 <= j < len(self.sites)):
                raise ValueError("adjacency refers to a site outside the cluster")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def index(self, site: Site) -> int:
        """Order index of a site given by coordinates."""
        try:
            return self._index[tuple(site)]
        except KeyError:
            raise KeyError(f"site {site} not in cluster {self.name}") from None

    def __contains__(self, site) -> bool:
        return tuple(site) in self._index

    def neighbours(self, i: int) -> List[int]:
        out = []
        for a, b, _ in self.adjacency:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def copper(self) -> List[int]:
        return [i for i, s in enumerate(self.sublattice) if s == CU]

    def oxygen(self) -> List[int]:
        return [i for i, s in enumerate(self.sublattice) if s == O]

    def is_cuo2(self) -> bool:
        return CU in self.sublattice

    def reordered(self, order: Sequence[Site]) -> "Cluster":
        """Same cluster with a different total order (for order-independence checks)."""
        order = [tuple(s) for s in order]
        if sorted(order) != sorted(self.sites):
            raise ValueError("reordering must be a permutation of the cluster sites")
        return _assemble(self.name, order, {s: self.sublattice[self.index(s)] for s in order},
                         [(self.sites[i], self.sites[j]) for i, j in self.core_bonds])


def _assemble(name: str, ordered: Sequence[Site], labels: Dict[Site, str],
              core: Iterable[Tuple[Site, Site]]) -> Cluster:
    idx = {s: i for i, s in enumerate(ordered)}
    adj = []
    for i, s in enumerate(ordered):
        for d, tag in (((1, 0), "x"), ((0, 1), "y")):
            nb = (s[0] + d[0], s[1] + d[1])
            if nb not in idx:
                continue
            if labels[s] != UNIFORM and labels[s] == labels[nb]:
                continue
            j = idx[nb]
            adj.append((min(i, j), max(i, j), tag))
    adj.sort()
    core_idx = []
    for a, b in core:
        i, j = idx[a], idx[b]
        core_idx.append((min(i, j), max(i, j)))
    return Cluster(name, tuple(ordered), tuple(labels[s] for s in ordered), tuple(adj), tuple(core_idx))


def _one_band(name: str, sites: Sequence[Site]) -> Cluster:
    ordered = sorted(sites, key=spiral_rank)
    labels = {s: UNIFORM for s in ordered}
    pairs = []
    sset = set(sites)
    for s in ordered:
        for d in ((1, 0), (0, 1)):
            nb = (s[0] + d[0], s[1] + d[1])
            if nb in sset:
                pairs.append((s, nb))
    return _assemble(name, ordered, labels, pairs)


def cuo2_zone(cu: Site, o: Site) -> List[Site]:
    """Protection zone of the Cu-O bond ``(cu, o)``.

    Both copper neighbours of the oxygen site plus the four oxygen sites
    around the copper end of the bond.
    """
    dx, dy = o[0] - cu[0], o[1] - cu[1]
    if abs(dx) + abs(dy) != 1 or cu[0] % 2 or cu[1] % 2:
        raise ValueError(f"({cu}, {o}) is not a Cu-O bond")
    other = (cu[0] + 2 * dx, cu[1] + 2 * dy)
    zone = [cu, other]
    zone += [(cu[0] + 1, cu[1]), (cu[0] - 1, cu[1]), (cu[0], cu[1] + 1), (cu[0], cu[1] - 1)]
    return zone


def _cuo2(name: str, bonds: Sequence[Tuple[Site, Site]], extra: Sequence[Site] = ()) -> Cluster:
    sites = set(extra)
    for cu, o in bonds:
        sites.update(cuo2_zone(cu, o))
    ordered = sorted(sites, key=spiral_rank)
    labels = {s: (CU if s[0] % 2 == 0 and s[1] % 2 == 0 else O) for s in ordered}
    for s in ordered:
        if s[0] % 2 and s[1] % 2:
            raise ValueError(f"{s} is not a CuO2 lattice site")
    return _assemble(name, ordered, labels, bonds)


_X, _Y, _Z = (0, 0), (1, 0), (2, 0)

SHAPES = ("bond", "chain3", "corner3", "plaquette", "chainN", "cuo2_bond", "cuo2_two_bonds", "cuo2_two_bonds_wide")


def build_cluster(spec: str, n: Optional[int] = None) -> Cluster:
    """Build one of the registered cluster shapes.

    Parameters
    ----------
    spec : str
        ``bond``, ``chain3`` (straight), ``corner3`` (bent three-site
        path), ``plaquette``, ``chainN`` (with ``n``) or
        ``chain<n>``, ``cuo2_bond``, ``cuo2_two_bonds``, and
        ``cuo2_two_bonds_wide`` (the two-bond zone plus the next ring of
        oxygen sites, used to check zone-size insensitivity).
    n : int, optional
        Length for ``chainN``.

    Returns
    -------
    Cluster

    Raises
    ------
    ValueError
        For an unknown shape name.
    """
    m = re.fullmatch(r"chain(\d+)", spec)
    if spec == "chainN" or (m and spec != "chain3"):
        length = n if spec == "chainN" else int(m.group(1))
        if length is None or length < 1:
            raise ValueError("chainN needs a positive length")
        return _one_band(f"chain{length}", [(i, 0) for i in range(length)])
    if spec == "bond":
        return _one_band("bond", [(0, 0), (1, 0)])
    if spec == "chain3":
        return _one_band("chain3", [(0, 0), (1, 0), (2, 0)])
    if spec == "corner3":
        return _one_band("corner3", [(0, 0), (1, 0), (1, 1)])
    if spec == "plaquette":
        return _one_band("plaquette", [(0, 0), (1, 0), (1, 1), (0, 1)])
    if spec == "cuo2_bond":
        return _cuo2("cuo2_bond", [(_X, _Y)])
    if spec == "cuo2_two_bonds":
        return _cuo2("cuo2_two_bonds", [(_X, _Y), (_Z, _Y)])
    if spec == "cuo2_two_bonds_wide":
        extra = [(-3, 0), (-2, 1), (-2, -1), (5, 0), (4, 1), (4, -1),
                 (-1, 2), (1, 2), (3, 2), (-1, -2), (1, -2), (3, -2)]
        return _cuo2("cuo2_two_bonds_wide", [(_X, _Y), (_Z, _Y)], extra)
    raise ValueError(f"unknown cluster shape {spec!r}; known: {', '.join(SHAPES)}")
