"""Comparison engines: a naive full scan and a grid-only index.

``ns_search`` doubles as the correctness oracle for every other search
path in the package; its membership arithmetic is kept identical to
:func:`rangemon.geometry.contains` (squared distances, boundary inside).
"""

from __future__ import annotations

from typing import Mapping

from .geometry import Circle, Point
from .grid import CellId, GridIndex
from .mtree import SearchStats


def ns_search(positions: Mapping[int, Point], c: Circle, stats: SearchStats | None = None) -> set[int]:
    """Brute-force filter over every object."""
    if stats is not None:
        stats.objects_examined += len(positions)
    cx, cy = c.center
    rr = c.radius * c.radius
    return {o for o, (x, y) in positions.items() if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= rr}


class GridStore:
    """Per-cell object maps without trees: full-cover cells contribute
    wholesale, partially covered cells are scanned object by object."""

    def __init__(self, grid: GridIndex):
        self.grid = grid
        self.cells: dict[CellId, dict[int, Point]] = {}
        self.locations: dict[int, CellId] = {}

    def insert(self, obj_id: int, p: Point) -> None:
        cell_id = self.grid.locate(p)
        self.cells.setdefault(cell_id, {})[obj_id] = p
        self.locations[obj_id] = cell_id

    def remove(self, obj_id: int) -> None:
        cell_id = self.locations.pop(obj_id)
        del self.cells[cell_id][obj_id]

    def move(self, obj_id: int, p_new: Point) -> None:
        new_cell = self.grid.locate(p_new)
        old_cell = self.locations[obj_id]
        if new_cell == old_cell:
            self.cells[old_cell][obj_id] = p_new
        else:
            del self.cells[old_cell][obj_id]
            self.cells.setdefault(new_cell, {})[obj_id] = p_new
            self.locations[obj_id] = new_cell


def gi_search(store: GridStore, c: Circle, stats: SearchStats | None = None) -> set[int]:
    gr = store.grid.candidate_cells(c)
    out: set[int] = set()
    cx, cy = c.center
    rr = c.radius * c.radius
    for cell_id in gr.full:
        cell = store.cells.get(cell_id)
        if cell:
            out |= cell.keys()
    for cell_id in gr.partial:
        cell = store.cells.get(cell_id)
        if not cell:
            continue
        if stats is not None:
            stats.objects_examined += len(cell)
        out |= {o for o, (x, y) in cell.items()
                if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= rr}
    return out
