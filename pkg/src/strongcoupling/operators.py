"""Sparse matrices with exact :class:`~strongcoupling.scalar.ScalarValue` entries."""

from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, Iterator, Mapping, Optional, Set, Tuple

import numpy as np

from .scalar import Ring, ScalarValue, sum_scalars

logger = logging.getLogger(__name__)

Rows = Dict[int, Dict[int, ScalarValue]]

__all__ = ["SparseOperator"]


class SparseOperator:
    """Sparse matrix ``codomain <- domain`` over exact scalars.

    Entries are stored row-wise with no explicit zeros.  Bases only need to
    support ``len`` and equality; in practice they are
    :class:`~strongcoupling.fock.SectorBasis` instances.

    Parameters
    ----------
    ring : Ring
        Scalar ring of all entries.
    domain, codomain : SectorBasis
        Column and row bases.
    rows : dict, optional
        ``{row: {col: ScalarValue}}``; zero entries are dropped.
    """

    __slots__ = ("ring", "domain", "codomain", "rows")

    def __init__(self, ring: Ring, domain, codomain=None, rows: Optional[Rows] = None):
        self.ring = ring
        self.domain = domain
        self.codomain = domain if codomain is None else codomain
        clean: Rows = {}
        if rows:
            for r, row in rows.items():
                nz = {c: v for c, v in row.items() if v.num}
                if nz:
                    clean[r] = nz
        self.rows = clean

    # -- constructors -------------------------------------------------------
    @classmethod
    def identity(cls, ring: Ring, basis) -> "SparseOperator":
        one = ring.one
        return cls(ring, basis, basis, {i: {i: one} for i in range(len(basis))})

    @classmethod
    def diagonal(cls, ring: Ring, basis, values: Mapping[int, ScalarValue]) -> "SparseOperator":
        return cls(ring, basis, basis, {i: {i: v} for i, v in values.items() if v.num})

    @classmethod
    def projector(cls, ring: Ring, basis, support: Iterable[int]) -> "SparseOperator":
        one = ring.one
        return cls(ring, basis, basis, {i: {i: one} for i in support})

    # -- inspection ------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.codomain), len(self.domain))

    def entries(self) -> Iterator[Tuple[int, int, ScalarValue]]:
        for r in sorted(self.rows):
            row = self.rows[r]
            for c in sorted(row):
                yield r, c, row[c]

    def get(self, r: int, c: int) -> ScalarValue:
        return self.rows.get(r, {}).get(c, self.ring.zero)

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def is_zero(self) -> bool:
        return not self.rows

    def is_diagonal(self) -> bool:
        return all(set(row) <= {r} for r, row in self.rows.items())

    def diagonal_values(self) -> Dict[int, ScalarValue]:
        return {r: row[r] for r, row in self.rows.items() if r in row}

    def max_degree(self) -> int:
        """Largest hopping degree of any entry (-1 for the zero operator)."""
        return max((v.hopping_degree for _, _, v in self.entries()), default=-1)

    def min_degree(self) -> Optional[int]:
        """Smallest hopping degree of any entry (None for the zero operator)."""
        degs = [v.min_degree for _, _, v in self.entries()]
        return min(degs) if degs else None

    # -- algebra ------------------------------------------------------------------
    def _check_same(self, other: "SparseOperator") -> None:
        if len(self.domain) != len(other.domain) or len(self.codomain) != len(other.codomain):
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        if self.domain != other.domain or self.codomain != other.codomain:
            raise ValueError("operators act between different bases")

    def _new(self, rows: Rows, domain=None, codomain=None) -> "SparseOperator":
        op = SparseOperator.__new__(SparseOperator)
        op.ring = self.ring
        op.domain = self.domain if domain is None else domain
        op.codomain = self.codomain if codomain is None else codomain
        op.rows = rows
        return op

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_same(other)
        rows = {r: dict(row) for r, row in self.rows.items()}
        for r, row in other.rows.items():
            acc = rows.setdefault(r, {})
            for c, v in row.items():
                w = acc.get(c)
                w = v if w is None else w + v
                if w.num:
                    acc[c] = w
                else:
                    acc.pop(c, None)
            if not acc:
                del rows[r]
        return self._new(rows)

    def __neg__(self) -> "SparseOperator":
        return self._new({r: {c: -v for c, v in row.items()} for r, row in self.rows.items()})

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return self + (-other)

    def scale(self, s) -> "SparseOperator":
        """Multiply every entry by a scalar or exact number."""
        if not isinstance(s, ScalarValue):
            s = self.ring.const(s)
        if not s.num:
            return self._new({})
        rows = {}
        for r, row in self.rows.items():
            nz = {c: v * s for c, v in row.items()}
            nz = {c: v for c, v in nz.items() if v.num}
            if nz:
                rows[r] = nz
        return self._new(rows)

    __rmul__ = scale

    def matmul(self, other: "SparseOperator", max_degree: Optional[int] = None) -> "SparseOperator":
        """Matrix product ``self @ other``, optionally truncated in hopping degree."""
        if self.domain != other.codomain:
            raise ValueError("inner bases of a product do not match")
        orows = other.rows
        out: Rows = {}
        for r, row in self.rows.items():
            acc: Dict[int, list] = {}
            for k, a in row.items():
                brow = orows.get(k)
                if not brow:
                    continue
                for c, b in brow.items():
                    p = a.mul(b, max_degree)
                    if p.num:
                        acc.setdefault(c, []).append(p)
            res = {}
            for c, terms in acc.items():
                v = terms[0] if len(terms) == 1 else sum_scalars(self.ring, terms)
                if v.num:
                    res[c] = v
            if res:
                out[r] = res
        return self._new(out, domain=other.domain, codomain=self.codomain)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        return self.matmul(other)

    def commutator(self, other: "SparseOperator", max_degree: Optional[int] = None) -> "SparseOperator":
        """``[self, other]`` with optional degree truncation."""
        return self.matmul(other, max_degree) - other.matmul(self, max_degree)

    def anticommutator(self, other: "SparseOperator") -> "SparseOperator":
        return self.matmul(other) + other.matmul(self)

    def adjoint(self) -> "SparseOperator":
        """Transpose (all scalars are real)."""
        rows: Rows = {}
        for r, row in self.rows.items():
            for c, v in row.items():
                rows.setdefault(c, {})[r] = v
        return self._new(rows, domain=self.codomain, codomain=self.domain)

    def truncate(self, max_degree: int) -> "SparseOperator":
        rows = {}
        for r, row in self.rows.items():
            nz = {c: v.truncate(max_degree) for c, v in row.items()}
            nz = {c: v for c, v in nz.items() if v.num}
            if nz:
                rows[r] = nz
        return self._new(rows)

    def degree_part(self, degree: int) -> "SparseOperator":
        rows = {}
        for r, row in self.rows.items():
            nz = {c: v.degree_part(degree) for c, v in row.items()}
            nz = {c: v for c, v in nz.items() if v.num}
            if nz:
                rows[r] = nz
        return self._new(rows)

    def map_entries(self, fn: Callable[[ScalarValue], ScalarValue]) -> "SparseOperator":
        rows = {}
        for r, row in self.rows.items():
            nz = {c: fn(v) for c, v in row.items()}
            nz = {c: v for c, v in nz.items() if v.num}
            if nz:
                rows[r] = nz
        return self._new(rows)

    def sandwich(self, left: Optional[Set[int]], right: Optional[Set[int]]) -> "SparseOperator":
        """``P_left @ self @ P_right`` for diagonal 0/1 projectors given by index sets.

        ``None`` stands for the identity.
        """
        rows = {}
        for r, row in self.rows.items():
            if left is not None and r not in left:
                continue
            nz = row if right is None else {c: v for c, v in row.items() if c in right}
            if nz:
                rows[r] = dict(nz)
        return self._new(rows)

    def restrict(self, row_states, col_states, domain, codomain) -> "SparseOperator":
        """Submatrix on listed row/column indices, re-indexed onto new bases."""
        rmap = {s: i for i, s in enumerate(row_states)}
        cmap = {s: i for i, s in enumerate(col_states)}
        rows = {}
        for r, row in self.rows.items():
            if r not in rmap:
                continue
            nz = {cmap[c]: v for c, v in row.items() if c in cmap}
            if nz:
                rows[rmap[r]] = nz
        return self._new(rows, domain=domain, codomain=codomain)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        if self.shape != other.shape:
            return False
        return (self - other).is_zero()

    def __ne__(self, other) -> bool:
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    __hash__ = None

    def subs(self, mapping: Mapping[str, object]) -> "SparseOperator":
        return self.map_entries(lambda v: v.subs(mapping))

    # -- numerics ------------------------------------------------------------------
    def to_dense(self, values: Mapping[str, object], dtype=float) -> np.ndarray:
        """Evaluate every entry numerically and return a dense array."""
        fvals = {k: float(v) for k, v in values.items()}
        out = np.zeros(self.shape, dtype=dtype)
        for r, row in self.rows.items():
            for c, v in row.items():
                out[r, c] = v.evaluate(fvals)
        return out

    def __repr__(self) -> str:
        return f"SparseOperator(shape={self.shape}, nnz={self.nnz})"

    def pretty(self, limit: int = 40) -> str:
        lines = [repr(self)]
        for k, (r, c, v) in enumerate(self.entries()):
            if k >= limit:
                lines.append("  ...")
                break
            lines.append(f"  [{r},{c}] {v}")
        return "\n".join(lines)
