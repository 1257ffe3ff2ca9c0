"""The global grid: n x n equal cells tiling the domain.

Provides point-to-cell location, candidate-cell computation for a circular
query, and the deterministic cell-to-worker assignment. Immutable after
construction, so it can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import OutOfDomainError
from .geometry import Circle, Coverage, Point, Rect, UNIT_SQUARE, classify


class CellId(NamedTuple):
    row: int
    col: int


@dataclass
class CandidateCells:
    """Cells a query circle touches, split by coverage class."""

    full: set[CellId] = field(default_factory=set)
    partial: set[CellId] = field(default_factory=set)

    def all_cells(self) -> set[CellId]:
        return self.full | self.partial

    def coverage_of(self, cell: CellId) -> Coverage:
        if cell in self.full:
            return Coverage.FULL
        if cell in self.partial:
            return Coverage.PARTIAL
        return Coverage.DISJOINT


class GridIndex:
    """Cell boundaries are precomputed once; the same arrays drive location,
    cell bounds, and candidate search, so the three can never disagree on a
    boundary float."""

    def __init__(self, n: int = 100, domain: Rect = UNIT_SQUARE):
        if n < 1:
            raise ValueError("grid dimension must be >= 1")
        self.n = n
        self.domain = domain
        w = domain.width / n
        h = domain.height / n
        self._xs = [domain.x_lo + j * w for j in range(n)] + [domain.x_hi]
        self._ys = [domain.y_lo + i * h for i in range(n)] + [domain.y_hi]
        self._bounds: dict[CellId, Rect] = {}

    def cell_bounds(self, cell: CellId) -> Rect:
        rect = self._bounds.get(cell)
        if rect is None:
            rect = Rect(self._xs[cell.col], self._ys[cell.row],
                        self._xs[cell.col + 1], self._ys[cell.row + 1])
            self._bounds[cell] = rect
        return rect

    def _axis_index(self, edges: list[float], v: float) -> int:
        n = self.n
        lo = edges[0]
        j = int((v - lo) / (edges[-1] - lo) * n)
        if j < 0:
            j = 0
        elif j > n - 1:
            j = n - 1
        # float division can land one off; the edge arrays are the truth
        while j < n - 1 and edges[j + 1] <= v:
            j += 1
        while j > 0 and edges[j] > v:
            j -= 1
        return j

    def locate(self, p: Point) -> CellId:
        """Cell owning p; the domain's maximum edges belong to the last
        row/column."""
        if not (self.domain.x_lo <= p.x <= self.domain.x_hi and self.domain.y_lo <= p.y <= self.domain.y_hi):
            raise OutOfDomainError(f"point {p} outside domain {self.domain}")
        return CellId(self._axis_index(self._ys, p.y), self._axis_index(self._xs, p.x))

    def candidate_cells(self, c: Circle) -> CandidateCells:
        """Classify every cell whose closed bounds overlap the circle's
        bounding box.  Cells outside the box are disjoint by construction
        (their axis gap already exceeds the radius)."""
        if not (self.domain.x_lo <= c.center.x <= self.domain.x_hi
                and self.domain.y_lo <= c.center.y <= self.domain.y_hi):
            raise OutOfDomainError(f"query center {c.center} outside domain")
        cx, cy = c.center
        r = c.radius
        out = CandidateCells()
        col_lo = max(0, self._axis_index(self._xs, max(cx - r, self.domain.x_lo)) - 1)
        col_hi = min(self.n - 1, self._axis_index(self._xs, min(cx + r, self.domain.x_hi)) + 1)
        row_lo = max(0, self._axis_index(self._ys, max(cy - r, self.domain.y_lo)) - 1)
        row_hi = min(self.n - 1, self._axis_index(self._ys, min(cy + r, self.domain.y_hi)) + 1)
        for row in range(row_lo, row_hi + 1):
            if self._ys[row] > cy + r or self._ys[row + 1] < cy - r:
                continue
            for col in range(col_lo, col_hi + 1):
                if self._xs[col] > cx + r or self._xs[col + 1] < cx - r:
                    continue
                cov = classify(c, self.cell_bounds(CellId(row, col)))
                if cov is Coverage.FULL:
                    out.full.add(CellId(row, col))
                elif cov is Coverage.PARTIAL:
                    out.partial.add(CellId(row, col))
        return out

    def assign_cells(self, workers: Sequence[int]) -> dict[CellId, int]:
        """Row-major split into contiguous blocks, one block per worker;
        block sizes differ by at most one."""
        if not workers:
            raise ValueError("empty worker list")
        total = self.n * self.n
        base, extra = divmod(total, len(workers))
        out: dict[CellId, int] = {}
        idx = 0
        for k, w in enumerate(workers):
            take = base + (1 if k < extra else 0)
            for _ in range(take):
                out[CellId(idx // self.n, idx % self.n)] = w
                idx += 1
        return out

    def cells(self) -> Iterable[CellId]:
        for row in range(self.n):
            for col in range(self.n):
                yield CellId(row, col)
