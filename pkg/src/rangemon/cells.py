"""Per-cell state: the object registry, the standing-query lists, and the
lazily built spatial tree.

A cell answers partial-cover queries by scanning its object map until the
object count first reaches the split threshold; from then on a tree (plus
its shared subtree cache) takes over.  Every object mutation is translated
into an :data:`ObjectDelta`: (query id, object id, ENTER|LEAVE) triples,
which is the only currency the result-holding side ever sees.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

from .errors import InconsistentUpdateError, StateMismatchError
from .geometry import Circle, Coverage, Point, Rect, contains
from .grid import CellId
from .mtree import MTree, SearchStats, SplitConfig, SubtreeCache


class Change(enum.Enum):
    ENTER = "enter"
    LEAVE = "leave"


class DeltaEntry(NamedTuple):
    q_id: int
    obj_id: int
    change: Change


ObjectDelta = list[DeltaEntry]


class Cell:
    def __init__(self, cell_id: CellId, bounds: Rect, cfg: SplitConfig):
        self.id = cell_id
        self.bounds = bounds
        self.cfg = cfg
        self.objects: dict[int, Point] = {}
        self.full_queries: set[int] = set()     # circle fully covers the cell
        self.partial_queries: set[int] = set()  # circle partially overlaps it
        self.circles: dict[int, Circle] = {}
        self.tree: MTree | None = None
        self.cache: SubtreeCache | None = None

    # -- objects -----------------------------------------------------------

    def _ensure_tree(self) -> None:
        if self.tree is not None or len(self.objects) < self.cfg.alpha:
            return
        self.tree = MTree(self.bounds, self.cfg)
        self.cache = SubtreeCache()
        for obj_id, p in self.objects.items():
            self.tree.insert(obj_id, p)
        for q_id in self.partial_queries:
            self.tree.insert_query(q_id, self.circles[q_id])

    def _insert_object(self, obj_id: int, p: Point) -> None:
        self.objects[obj_id] = p
        if self.tree is not None:
            self.tree.insert(obj_id, p)
        else:
            self._ensure_tree()

    def _remove_object(self, obj_id: int) -> None:
        del self.objects[obj_id]
        if self.tree is not None:
            self.tree.remove(obj_id)

    def object_ids(self) -> set[int]:
        return set(self.objects)

    # -- search ------------------------------------------------------------

    def search(self, q_id: int, circle: Circle, stats: SearchStats | None = None) -> set[int]:
        """Objects of this cell inside the circle, with subtree-cache reuse
        attributed to q_id when a tree exists."""
        if self.tree is not None:
            assert self.cache is not None
            return self.tree.search_shared(q_id, circle, self.cache, stats)
        return self._scan(circle, stats)

    def register_partial_and_search(self, q_id: int, circle: Circle,
                                    stats: SearchStats | None = None) -> set[int]:
        """First registration of a partially covering query, fused with its
        initial search: one traversal both places the query and answers it."""
        if q_id in self.full_queries or q_id in self.partial_queries:
            raise StateMismatchError(f"query {q_id} already registered in cell {self.id}")
        self.circles[q_id] = circle
        self.partial_queries.add(q_id)
        if self.tree is not None:
            assert self.cache is not None
            return self.tree.search_shared(q_id, circle, self.cache, stats, register=True)
        return self._scan(circle, stats)

    def search_oneshot(self, circle: Circle, stats: SearchStats | None = None) -> set[int]:
        """Search without touching query-to-node cache bindings (used for
        transient lookups such as a moved query's previous circle)."""
        if self.tree is not None:
            return self.tree.search(circle, stats)
        return self._scan(circle, stats)

    def _scan(self, circle: Circle, stats: SearchStats | None) -> set[int]:
        if stats is not None:
            stats.objects_examined += len(self.objects)
        return {o for o, p in self.objects.items() if contains(circle, p)}

    # -- object updates -------------------------------------------------------

    def apply_object_update(self, obj_id: int, old: Point | None, new: Point | None) -> ObjectDelta:
        """Insert (old None), remove (new None), or move within the cell.

        Queries fully covering the cell see membership change only on
        entry/exit; partially covering ones are re-tested against their
        circle.  For within-cell moves under a tree, the candidate queries
        are narrowed to those recorded along the two root-to-leaf paths.
        """
        if old is None and new is None:
            raise InconsistentUpdateError("update with neither old nor new position")
        delta: ObjectDelta = []
        if old is None:
            assert new is not None
            if obj_id in self.objects:
                raise InconsistentUpdateError(f"object {obj_id} already in cell {self.id}")
            self._insert_object(obj_id, new)
            for q_id in self.full_queries:
                delta.append(DeltaEntry(q_id, obj_id, Change.ENTER))
            for q_id in self.partial_queries:
                if contains(self.circles[q_id], new):
                    delta.append(DeltaEntry(q_id, obj_id, Change.ENTER))
        elif new is None:
            if obj_id not in self.objects:
                raise InconsistentUpdateError(f"object {obj_id} not in cell {self.id}")
            old_pos = self.objects[obj_id]
            self._remove_object(obj_id)
            for q_id in self.full_queries:
                delta.append(DeltaEntry(q_id, obj_id, Change.LEAVE))
            for q_id in self.partial_queries:
                if contains(self.circles[q_id], old_pos):
                    delta.append(DeltaEntry(q_id, obj_id, Change.LEAVE))
        else:
            if obj_id not in self.objects:
                raise InconsistentUpdateError(f"object {obj_id} not in cell {self.id}")
            old_pos = self.objects[obj_id]
            if self.tree is not None:
                candidates = self.tree.queries_on_path(old_pos) | self.tree.queries_on_path(new)
                self.tree.move(obj_id, new)
            else:
                candidates = self.partial_queries
            self.objects[obj_id] = new
            for q_id in candidates:
                circle = self.circles[q_id]
                was_in = contains(circle, old_pos)
                is_in = contains(circle, new)
                if was_in and not is_in:
                    delta.append(DeltaEntry(q_id, obj_id, Change.LEAVE))
                elif is_in and not was_in:
                    delta.append(DeltaEntry(q_id, obj_id, Change.ENTER))
        return delta

    # -- query bookkeeping ---------------------------------------------------

    def register_query(self, q_id: int, cov: Coverage, circle: Circle) -> None:
        self.apply_query_transition(q_id, Coverage.DISJOINT, cov, circle)

    def unregister_query(self, q_id: int) -> None:
        if q_id in self.full_queries:
            self.apply_query_transition(q_id, Coverage.FULL, Coverage.DISJOINT, self.circles[q_id])
        elif q_id in self.partial_queries:
            self.apply_query_transition(q_id, Coverage.PARTIAL, Coverage.DISJOINT, self.circles[q_id])

    def apply_query_transition(self, q_id: int, old_cov: Coverage, new_cov: Coverage, circle: Circle) -> None:
        """Move q_id between the full/partial lists according to its old and
        new coverage of this cell, and rebuild its tree registration whenever
        the new class is partial."""
        in_full = q_id in self.full_queries
        in_partial = q_id in self.partial_queries
        expected = (old_cov is Coverage.FULL, old_cov is Coverage.PARTIAL)
        if (in_full, in_partial) != expected:
            raise StateMismatchError(
                f"query {q_id} in cell {self.id}: recorded (full={in_full}, partial={in_partial}) "
                f"but transition claims {old_cov.name}"
            )
        self.full_queries.discard(q_id)
        self.partial_queries.discard(q_id)
        if self.tree is not None and old_cov is Coverage.PARTIAL:
            self.tree.remove_query(q_id)
        if new_cov is Coverage.DISJOINT:
            self.circles.pop(q_id, None)
            if self.cache is not None:
                self.cache.forget_query(q_id)
            return
        self.circles[q_id] = circle
        if new_cov is Coverage.FULL:
            self.full_queries.add(q_id)
        else:
            self.partial_queries.add(q_id)
            if self.tree is not None:
                self.tree.insert_query(q_id, circle)
