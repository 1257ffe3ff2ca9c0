"""Adaptive m-ary spatial tree with standing-query lists and a shared
subtree cache.

A leaf that reaches ``alpha`` objects splits into exactly ``m`` children
(tiled as rows x columns); when every child of a node is a leaf and the
group's object total drops below ``alpha / m``, the parent absorbs the
group and becomes a leaf again.  Standing queries are recorded on the
highest fully-covered node (descent stops there) and on every partially
intersected leaf, so both searches and per-object membership updates only
ever touch the region a circle actually overlaps.

Subtree materializations for fully-covered nodes are memoized in a
:class:`SubtreeCache` keyed by (node id, node version); any object
mutation bumps versions along its root-to-leaf path, which invalidates
exactly the cached sets that could have changed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    DuplicateObjectError,
    NoIntersectionError,
    ObjectNotFoundError,
    OutOfDomainError,
)
from .geometry import Circle, Coverage, Point, Rect, classify

# Co-located objects can exceed alpha in a single leaf; without a depth cap
# they would split forever.  At the cap a leaf is allowed to grow past alpha.
MAX_DEPTH = 12


@dataclass
class SplitConfig:
    """Split threshold ``alpha`` and bifurcation count ``m``.  The merge
    threshold is alpha/m; comparisons are done as ``total * m < alpha`` so
    no fractional threshold is ever materialized."""

    alpha: int = 20
    m: int = 6

    def __post_init__(self) -> None:
        if self.alpha < 2:
            raise ValueError("alpha must be >= 2")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        r = 1
        for d in range(int(self.m ** 0.5), 0, -1):
            if self.m % d == 0:
                r = d
                break
        self.rows = r
        self.cols = self.m // r

    def should_merge(self, group_total: int) -> bool:
        return group_total * self.m < self.alpha


@dataclass
class SearchStats:
    """Mutable counters threaded through searches for instrumentation."""

    nodes_visited: int = 0
    leaf_descents: int = 0
    cache_hits: int = 0
    objects_examined: int = 0


class MTreeNode:
    """Either a leaf (``children == []``, objects live here) or an interior
    node with exactly m children tiling its bounds."""

    __slots__ = ("id", "bounds", "depth", "children", "objects", "queries", "version", "xs", "ys")

    def __init__(self, node_id: int, bounds: Rect, depth: int):
        self.id = node_id
        self.bounds = bounds
        self.depth = depth
        self.children: list[MTreeNode] = []
        self.objects: set[int] = set()
        self.queries: set[int] = set()
        self.version = 0
        self.xs: list[float] | None = None  # child column edges, set on split
        self.ys: list[float] | None = None

    def is_leaf(self) -> bool:
        return not self.children


class SubtreeCache:
    """Shared cache linking queries to the fully-covered nodes they rest on
    and those nodes' materialized object sets.

    ``sets`` keeps at most one entry per node id; a lookup only succeeds if
    the stored version matches the node's current version, so sets cached
    before a mutation under that node are treated as absent.
    """

    def __init__(self) -> None:
        self.queries: set[int] = set()
        self.bindings: dict[int, set[tuple[int, int]]] = {}  # query id -> {(node id, version)}
        self.sets: dict[int, tuple[int, frozenset[int]]] = {}  # node id -> (version, objects)

    def lookup(self, node: MTreeNode) -> frozenset[int] | None:
        entry = self.sets.get(node.id)
        if entry is not None and entry[0] == node.version:
            return entry[1]
        return None

    def store(self, node: MTreeNode, ids: frozenset[int]) -> None:
        self.sets[node.id] = (node.version, ids)

    def forget_query(self, q_id: int) -> None:
        self.queries.discard(q_id)
        self.bindings.pop(q_id, None)


class MTree:
    def __init__(self, bounds: Rect, cfg: SplitConfig):
        self.cfg = cfg
        self.positions: dict[int, Point] = {}
        self.query_circles: dict[int, Circle] = {}
        # exactly the nodes whose `queries` set holds each query; kept in
        # sync through splits and merges so removal never walks the tree
        self.query_nodes: dict[int, set[MTreeNode]] = {}
        self._next_id = 0
        self.root = self._new_node(bounds, 0)

    def _new_node(self, bounds: Rect, depth: int) -> MTreeNode:
        node = MTreeNode(self._next_id, bounds, depth)
        self._next_id += 1
        return node

    # -- descent ---------------------------------------------------------

    def _child_of(self, node: MTreeNode, x: float, y: float) -> MTreeNode:
        assert node.xs is not None and node.ys is not None
        cols, rows = self.cfg.cols, self.cfg.rows
        j = int((x - node.bounds.x_lo) / node.bounds.width * cols)
        j = min(max(j, 0), cols - 1)
        while j < cols - 1 and node.xs[j + 1] <= x:
            j += 1
        while j > 0 and node.xs[j] > x:
            j -= 1
        i = int((y - node.bounds.y_lo) / node.bounds.height * rows)
        i = min(max(i, 0), rows - 1)
        while i < rows - 1 and node.ys[i + 1] <= y:
            i += 1
        while i > 0 and node.ys[i] > y:
            i -= 1
        return node.children[i * cols + j]

    def _path_to_leaf(self, p: Point) -> list[MTreeNode]:
        node = self.root
        path = [node]
        while node.children:
            node = self._child_of(node, p.x, p.y)
            path.append(node)
        return path

    # -- object mutations --------------------------------------------------

    def insert(self, obj_id: int, p: Point) -> None:
        if obj_id in self.positions:
            raise DuplicateObjectError(f"object {obj_id} already present")
        b = self.root.bounds
        if not (b.x_lo <= p.x <= b.x_hi and b.y_lo <= p.y <= b.y_hi):
            raise OutOfDomainError(f"point {p} outside tree bounds {b}")
        self.positions[obj_id] = p
        path = self._path_to_leaf(p)
        for node in path:
            node.version += 1
        leaf = path[-1]
        leaf.objects.add(obj_id)
        if len(leaf.objects) >= self.cfg.alpha:
            self._split(leaf)

    def remove(self, obj_id: int) -> None:
        if obj_id not in self.positions:
            raise ObjectNotFoundError(f"object {obj_id} not present")
        p = self.positions.pop(obj_id)
        path = self._path_to_leaf(p)
        for node in path:
            node.version += 1
        path[-1].objects.remove(obj_id)
        self._merge_up(path)

    def move(self, obj_id: int, p_new: Point) -> None:
        """Relocate an object; a move within its current leaf touches no
        structure and no versions (the per-node object sets are unchanged)."""
        if obj_id not in self.positions:
            raise ObjectNotFoundError(f"object {obj_id} not present")
        old_leaf = self._path_to_leaf(self.positions[obj_id])[-1]
        b = self.root.bounds
        if not (b.x_lo <= p_new.x <= b.x_hi and b.y_lo <= p_new.y <= b.y_hi):
            raise OutOfDomainError(f"point {p_new} outside tree bounds {b}")
        if self._path_to_leaf(p_new)[-1] is old_leaf:
            self.positions[obj_id] = p_new
            return
        self.remove(obj_id)
        self.insert(obj_id, p_new)

    def _split(self, node: MTreeNode) -> None:
        if node.depth >= MAX_DEPTH:
            return
        rows, cols = self.cfg.rows, self.cfg.cols
        b = node.bounds
        node.xs = [b.x_lo + j * (b.width / cols) for j in range(cols)] + [b.x_hi]
        node.ys = [b.y_lo + i * (b.height / rows) for i in range(rows)] + [b.y_hi]
        node.children = [
            self._new_node(Rect(node.xs[j], node.ys[i], node.xs[j + 1], node.ys[i + 1]), node.depth + 1)
            for i in range(rows)
            for j in range(cols)
        ]
        for obj_id in node.objects:
            p = self.positions[obj_id]
            self._child_of(node, p.x, p.y).objects.add(obj_id)
        node.objects = set()
        # queries that only partially intersect this node may no longer sit
        # on an interior node; push them down to the children
        staying = set()
        for q_id in node.queries:
            circle = self.query_circles[q_id]
            if classify(circle, node.bounds) is Coverage.FULL:
                staying.add(q_id)
            else:
                self.query_nodes[q_id].discard(node)
                for child in node.children:
                    self._register_down(child, q_id, circle)
        node.queries = staying
        for child in node.children:
            if len(child.objects) >= self.cfg.alpha:
                self._split(child)

    def _merge_up(self, path: list[MTreeNode]) -> None:
        for i in range(len(path) - 2, -1, -1):
            parent = path[i]
            if any(not c.is_leaf() for c in parent.children):
                return
            total = sum(len(c.objects) for c in parent.children)
            if not self.cfg.should_merge(total):
                return
            for child in parent.children:
                parent.objects |= child.objects
                parent.queries |= child.queries
                for q_id in child.queries:
                    placements = self.query_nodes[q_id]
                    placements.discard(child)
                    placements.add(parent)
            parent.children = []
            parent.xs = parent.ys = None

    # -- query registration ------------------------------------------------

    def _register_down(self, start: MTreeNode, q_id: int, circle: Circle) -> None:
        placements = self.query_nodes.setdefault(q_id, set())
        stack = [start]
        while stack:
            node = stack.pop()
            cov = classify(circle, node.bounds)
            if cov is Coverage.DISJOINT:
                continue
            if cov is Coverage.FULL or node.is_leaf():
                node.queries.add(q_id)
                placements.add(node)
            else:
                stack.extend(node.children)

    def insert_query(self, q_id: int, circle: Circle) -> None:
        if classify(circle, self.root.bounds) is Coverage.DISJOINT:
            raise NoIntersectionError(f"query {q_id} does not touch tree bounds")
        self.query_circles[q_id] = circle
        self._register_down(self.root, q_id, circle)

    def remove_query(self, q_id: int) -> None:
        """Idempotent; touches exactly the nodes the query sits on."""
        self.query_circles.pop(q_id, None)
        for node in self.query_nodes.pop(q_id, ()):
            node.queries.discard(q_id)

    def queries_on_path(self, p: Point) -> set[int]:
        """Union of query lists along the root-to-leaf path of p: exactly the
        queries whose circle could contain p."""
        out: set[int] = set()
        node = self.root
        while True:
            out |= node.queries
            if node.is_leaf():
                return out
            node = self._child_of(node, p.x, p.y)

    # -- search --------------------------------------------------------------

    def _collect(self, start: MTreeNode, out: set[int], stats: SearchStats | None) -> None:
        stack = [start]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                if stats is not None:
                    stats.leaf_descents += 1
                out |= node.objects
            else:
                stack.extend(node.children)

    def collect_all(self) -> set[int]:
        return set(self.positions)

    def search(self, circle: Circle, stats: SearchStats | None = None) -> set[int]:
        """Objects within the circle.  Fully covered branches contribute
        without per-object tests; only partially intersected leaves are
        filtered point by point.

        The coverage math is inlined (identical to :func:`classify`): node
        visits dominate search cost, so the per-call overhead matters.
        """
        (cx, cy), radius = circle
        rr = radius * radius
        pos = self.positions
        out: set[int] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if stats is not None:
                stats.nodes_visited += 1
            b = node.bounds
            x_lo, y_lo, x_hi, y_hi = b.x_lo, b.y_lo, b.x_hi, b.y_hi
            dx = x_lo - cx if cx < x_lo else (cx - x_hi if cx > x_hi else 0.0)
            dy = y_lo - cy if cy < y_lo else (cy - y_hi if cy > y_hi else 0.0)
            if dx * dx + dy * dy > rr:
                continue
            fx = max(cx - x_lo, x_hi - cx)
            fy = max(cy - y_lo, y_hi - cy)
            if fx * fx + fy * fy <= rr:
                self._collect(node, out, stats)
            elif node.children:
                stack.extend(node.children)
            else:
                for obj_id in node.objects:
                    if stats is not None:
                        stats.objects_examined += 1
                    px, py = pos[obj_id]
                    ex = px - cx
                    ey = py - cy
                    if ex * ex + ey * ey <= rr:
                        out.add(obj_id)
        return out

    def search_shared(
        self,
        q_id: int,
        circle: Circle,
        cache: SubtreeCache,
        stats: SearchStats | None = None,
        register: bool = False,
    ) -> set[int]:
        """Same result as :meth:`search`, but fully-covered subtrees are
        materialized at most once per version and reused across queries.

        With ``register=True`` the pass doubles as query insertion: the
        query lands on exactly the nodes this traversal stops at (covered
        nodes and partially cut leaves), saving a second walk.
        """
        if register:
            self.query_circles[q_id] = circle
            placements = self.query_nodes.setdefault(q_id, set())
        cache.queries.add(q_id)
        binding: set[tuple[int, int]] = set()
        (cx, cy), radius = circle
        rr = radius * radius
        pos = self.positions
        sets = cache.sets
        out: set[int] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if stats is not None:
                stats.nodes_visited += 1
            b = node.bounds
            x_lo, y_lo, x_hi, y_hi = b.x_lo, b.y_lo, b.x_hi, b.y_hi
            dx = x_lo - cx if cx < x_lo else (cx - x_hi if cx > x_hi else 0.0)
            dy = y_lo - cy if cy < y_lo else (cy - y_hi if cy > y_hi else 0.0)
            if dx * dx + dy * dy > rr:
                continue
            fx = max(cx - x_lo, x_hi - cx)
            fy = max(cy - y_lo, y_hi - cy)
            if fx * fx + fy * fy <= rr:
                if register:
                    node.queries.add(q_id)
                    placements.add(node)
                entry = sets.get(node.id)
                if entry is not None and entry[0] == node.version:
                    ids = entry[1]
                    if stats is not None:
                        stats.cache_hits += 1
                else:
                    collected: set[int] = set()
                    self._collect(node, collected, stats)
                    ids = frozenset(collected)
                    sets[node.id] = (node.version, ids)
                out |= ids
                binding.add((node.id, node.version))
            elif node.children:
                stack.extend(node.children)
            else:
                if register:
                    node.queries.add(q_id)
                    placements.add(node)
                for obj_id in node.objects:
                    if stats is not None:
                        stats.objects_examined += 1
                    px, py = pos[obj_id]
                    ex = px - cx
                    ey = py - cy
                    if ex * ex + ey * ey <= rr:
                        out.add(obj_id)
        cache.bindings[q_id] = binding
        return out

    # -- introspection -------------------------------------------------------

    def nodes(self) -> list[MTreeNode]:
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(node.children)
        return out
