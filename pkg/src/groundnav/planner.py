"""Area adjacency graph and area-level path planning."""

from __future__ import annotations

from dataclasses import dataclass, field

from shapely.geometry import Polygon as ShapelyPolygon

from .mapmodel import AreaMap


class PlanError(Exception):
    pass


@dataclass(frozen=True)
class AreaGraph:
    nodes: tuple
    edges: frozenset  # frozenset of frozenset({a, b}) pairs

    def neighbors(self, area_id: str) -> list:
        out = []
        for e in self.edges:
            if area_id in e:
                (other,) = e - {area_id}
                out.append(other)
        return sorted(out)


def build_adjacency(amap: AreaMap, gap_tolerance: float | None = None) -> AreaGraph:
    """Two areas are adjacent iff they share a boundary segment longer
    than gap_tolerance.

    The shared length is estimated by dilating one polygon by the
    tolerance and dividing the overlap area by it, which also bridges
    gaps narrower than the tolerance while rejecting corner touches.
    """
    if gap_tolerance is None:
        gap_tolerance = amap.resolution
    if gap_tolerance <= 0:
        raise PlanError("gap_tolerance must be > 0")
    polys = [ShapelyPolygon(a.polygon) for a in amap.areas]
    edges = set()
    for i in range(len(polys)):
        dilated = polys[i].buffer(gap_tolerance)
        for j in range(i + 1, len(polys)):
            shared = dilated.intersection(polys[j]).area / gap_tolerance
            if shared > gap_tolerance:
                edges.add(frozenset({amap.areas[i].id, amap.areas[j].id}))
    return AreaGraph(tuple(a.id for a in amap.areas), frozenset(edges))


def dfs_plan(graph: AreaGraph, start: str, goal: str) -> list:
    """First start-to-goal path found by depth-first search.

    Neighbor order is ascending area id, so plans are deterministic; the
    path never revisits an area. BFS shortest paths are available via
    bfs_plan for callers that prefer them.
    """
    for node in (start, goal):
        if node not in graph.nodes:
            raise PlanError(f"unknown area {node!r}")
    path = [start]
    visited = {start}

    def visit(node):
        if node == goal:
            return True
        for nxt in graph.neighbors(node):
            if nxt in visited:
                continue
            visited.add(nxt)
            path.append(nxt)
            if visit(nxt):
                return True
            path.pop()
        return False

    if not visit(start):
        raise PlanError(f"no path from {start!r} to {goal!r}")
    return path


def bfs_plan(graph: AreaGraph, start: str, goal: str) -> list:
    """Shortest path by breadth-first search (flag-selected alternative)."""
    for node in (start, goal):
        if node not in graph.nodes:
            raise PlanError(f"unknown area {node!r}")
    frontier = [start]
    parent = {start: None}
    while frontier:
        nxt_frontier = []
        for node in frontier:
            if node == goal:
                path = []
                while node is not None:
                    path.append(node)
                    node = parent[node]
                return path[::-1]
            for nxt in graph.neighbors(node):
                if nxt not in parent:
                    parent[nxt] = node
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    raise PlanError(f"no path from {start!r} to {goal!r}")
