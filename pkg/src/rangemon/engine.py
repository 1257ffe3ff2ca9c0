"""Query lifecycle orchestration over the grid of cells.

Each active query keeps its result partitioned by contributing cell; the
partition is what makes a moved query's removals exact (a cell dropped
from the candidate set removes precisely the ids that cell contributed)
and makes cross-cell object moves order-independent within a tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cells import Cell, Change, DeltaEntry
from .geometry import Circle, Coverage, Point
from .grid import CandidateCells, CellId, GridIndex
from .mtree import SearchStats, SplitConfig


@dataclass
class QueryState:
    q_id: int
    circle: Circle
    t_start: int
    t_end: float
    gr: CandidateCells
    by_cell: dict[CellId, set[int]] = field(default_factory=dict)
    # distributed collection bookkeeping: keys still awaited, the key set
    # promised at registration, the keys already received, and the
    # registration generation partials must match
    pending: set = field(default_factory=set)
    expected: frozenset = frozenset()
    received: set = field(default_factory=set)
    epoch: int = 0

    @property
    def result(self) -> set[int]:
        out: set[int] = set()
        for ids in self.by_cell.values():
            out |= ids
        return out

    def ready(self) -> bool:
        return not self.pending

    def set_cell(self, cell_id: CellId, ids: set[int]) -> None:
        # takes ownership of `ids`; callers always pass a fresh set
        if ids:
            self.by_cell[cell_id] = ids if isinstance(ids, set) else set(ids)
        else:
            self.by_cell.pop(cell_id, None)

    def drop_cell(self, cell_id: CellId) -> set[int]:
        return self.by_cell.pop(cell_id, set())

    def apply(self, cell_id: CellId, obj_id: int, change: Change) -> None:
        if change is Change.ENTER:
            self.by_cell.setdefault(cell_id, set()).add(obj_id)
        else:
            ids = self.by_cell.get(cell_id)
            if ids is not None:
                ids.discard(obj_id)
                if not ids:
                    del self.by_cell[cell_id]


@dataclass
class QueryMoveDelta:
    """Net result change of one query move: ids that left and ids that
    entered the result."""

    removals: set[int] = field(default_factory=set)
    additions: set[int] = field(default_factory=set)


class Engine:
    """Single-owner engine: cells are created on demand, queries are
    registered into cell lists and trees, and updates are translated into
    result deltas incrementally."""

    def __init__(self, grid: GridIndex, cfg: SplitConfig):
        self.grid = grid
        self.cfg = cfg
        self.cells: dict[CellId, Cell] = {}
        self.queries: dict[int, QueryState] = {}

    def cell(self, cell_id: CellId) -> Cell:
        cell = self.cells.get(cell_id)
        if cell is None:
            cell = Cell(cell_id, self.grid.cell_bounds(cell_id), self.cfg)
            self.cells[cell_id] = cell
        return cell

    # -- lifecycle -----------------------------------------------------------

    def submit_query(
        self,
        q_id: int,
        circle: Circle,
        t_start: int = 0,
        t_end: float = math.inf,
        stats: SearchStats | None = None,
    ) -> set[int]:
        if q_id in self.queries:
            raise ValueError(f"query {q_id} already registered")
        gr = self.grid.candidate_cells(circle)
        state = QueryState(q_id, circle, t_start, t_end, gr)
        out: set[int] = set()
        for cell_id in sorted(gr.full):
            cell = self.cell(cell_id)
            cell.register_query(q_id, Coverage.FULL, circle)
            ids = cell.object_ids()
            state.set_cell(cell_id, ids)
            out |= ids
        for cell_id in sorted(gr.partial):
            ids = self.cell(cell_id).register_partial_and_search(q_id, circle, stats)
            state.set_cell(cell_id, ids)
            out |= ids
        self.queries[q_id] = state
        return out

    def remove_query(self, q_id: int) -> None:
        state = self.queries.pop(q_id)
        for cell_id in state.gr.all_cells():
            self.cell(cell_id).unregister_query(q_id)

    def expire_queries(self, now: int) -> list[int]:
        expired = sorted(q for q, s in self.queries.items() if s.t_end <= now)
        for q_id in expired:
            self.remove_query(q_id)
        return expired

    def result(self, q_id: int) -> set[int]:
        return self.queries[q_id].result

    def results(self) -> dict[int, set[int]]:
        return {q: s.result for q, s in self.queries.items()}

    # -- object updates --------------------------------------------------------

    def on_objects_moved(
        self, updates: list[tuple[int, Point | None, Point | None]]
    ) -> list[tuple[int, Exception]]:
        """Apply a batch of (object id, old, new) reports.  Per-item
        inconsistencies are collected and returned, not raised, so one bad
        report cannot poison the batch."""
        errors: list[tuple[int, Exception]] = []
        for obj_id, old, new in updates:
            try:
                self._apply_one_move(obj_id, old, new)
            except Exception as exc:  # noqa: BLE001 - per-item isolation is the contract
                errors.append((obj_id, exc))
        return errors

    def _apply_one_move(self, obj_id: int, old: Point | None, new: Point | None) -> None:
        old_cell = self.grid.locate(old) if old is not None else None
        new_cell = self.grid.locate(new) if new is not None else None
        if old_cell is not None and old_cell == new_cell:
            self._route_delta(old_cell, self.cell(old_cell).apply_object_update(obj_id, old, new))
            return
        if old_cell is not None:
            self._route_delta(old_cell, self.cell(old_cell).apply_object_update(obj_id, old, None))
        if new_cell is not None:
            self._route_delta(new_cell, self.cell(new_cell).apply_object_update(obj_id, None, new))

    def _route_delta(self, cell_id: CellId, delta: list[DeltaEntry]) -> None:
        for q_id, obj_id, change in delta:
            self.queries[q_id].apply(cell_id, obj_id, change)

    # -- query movement ----------------------------------------------------------

    def on_query_moved(
        self, q_id: int, new_circle: Circle, stats: SearchStats | None = None
    ) -> QueryMoveDelta:
        state = self.queries[q_id]
        gr_new = self.grid.candidate_cells(new_circle)
        delta = QueryMoveDelta()
        for cell_id in sorted(state.gr.all_cells() | gr_new.all_cells()):
            old_cov = state.gr.coverage_of(cell_id)
            new_cov = gr_new.coverage_of(cell_id)
            cell = self.cell(cell_id)
            if new_cov is Coverage.DISJOINT:
                delta.removals |= state.drop_cell(cell_id)
                cell.apply_query_transition(q_id, old_cov, new_cov, new_circle)
            elif old_cov is Coverage.DISJOINT:
                cell.apply_query_transition(q_id, old_cov, new_cov, new_circle)
                ids = cell.object_ids() if new_cov is Coverage.FULL else cell.search(q_id, new_circle, stats)
                delta.additions |= ids
                state.set_cell(cell_id, ids)
            elif old_cov is Coverage.FULL and new_cov is Coverage.FULL:
                cell.apply_query_transition(q_id, old_cov, new_cov, new_circle)
            elif old_cov is Coverage.PARTIAL and new_cov is Coverage.FULL:
                had = state.by_cell.get(cell_id, set())
                all_ids = cell.object_ids()
                delta.additions |= all_ids - had
                state.set_cell(cell_id, all_ids)
                cell.apply_query_transition(q_id, old_cov, new_cov, new_circle)
            else:
                # full->partial and partial->partial: re-search under the new
                # circle and diff against this cell's previous contribution
                cell.apply_query_transition(q_id, old_cov, new_cov, new_circle)
                now_in = cell.search(q_id, new_circle, stats)
                had = state.by_cell.get(cell_id, set())
                delta.removals |= had - now_in
                delta.additions |= now_in - had
                state.set_cell(cell_id, now_in)
        state.circle = new_circle
        state.gr = gr_new
        return delta
