"""Segmented indoor map, area geometry, and belief grids.

The map is a set of disjoint polygonal areas inside a global boundary.
Beliefs are dense normalized grids over the rasterized map; area-level
weight vectors and cell-level grids convert back and forth through
gather/scatter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon as ShapelyPolygon

NORM_TOL = 1e-6


class MapError(Exception):
    """Raised for malformed map documents or degenerate belief operations."""


def points_in_polygon(points: np.ndarray, polygon) -> np.ndarray:
    """Even-odd (ray casting) point-in-polygon test.

    points: (M, 2) array; polygon: sequence of (x, y) vertices.
    Returns a boolean mask. Points exactly on an edge may land on either
    side; callers should avoid placing cell centers on polygon edges.
    """
    poly = np.asarray(polygon, dtype=float)
    px, py = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < np.where(crosses, xint, np.inf))
    return inside


@dataclass(frozen=True)
class Area:
    """One segmented area of interest with its descriptive attributes."""

    id: str
    category: str
    polygon: tuple
    subcategory: str | None = None
    name: str | None = None
    centroid: tuple = field(default=None, compare=False)
    size: float = field(default=None, compare=False)

    @staticmethod
    def create(id, category, polygon, subcategory=None, name=None):
        poly = ShapelyPolygon(polygon)
        if not poly.is_valid or poly.area <= 0:
            raise MapError(f"area {id!r}: polygon is self-intersecting or has zero area")
        c = poly.centroid
        return Area(
            id=str(id),
            category=category,
            polygon=tuple((float(x), float(y)) for x, y in polygon),
            subcategory=subcategory,
            name=name,
            centroid=(c.x, c.y),
            size=poly.area,
        )

    def attribute_tokens(self) -> list:
        """Lowercased word tokens of (id, category, subcategory, name)."""
        tokens = [self.id.lower()]
        tokens += self.category.lower().split()
        if self.subcategory:
            tokens += self.subcategory.lower().split()
        if self.name:
            tokens += self.name.lower().split()
        return tokens


class AreaMap:
    """Immutable segmented map: boundary polygon, areas, raster geometry.

    The raster covers the bounding box of the boundary; a cell belongs to
    an area iff its center lies inside the area polygon (even-odd rule).
    """

    # per-area token cap, also caps modifier length downstream
    MAX_AREA_TOKENS = 6

    def __init__(self, boundary, areas, resolution):
        if resolution <= 0:
            raise MapError("resolution must be > 0")
        if not areas:
            raise MapError("map has no areas")
        ids = [a.id for a in areas]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise MapError(f"duplicate area ids: {dup}")
        self.boundary = tuple((float(x), float(y)) for x, y in boundary)
        self.areas = tuple(areas)
        self.resolution = float(resolution)

        bpoly = ShapelyPolygon(self.boundary)
        if not bpoly.is_valid or bpoly.area <= 0:
            raise MapError("map boundary polygon is invalid")
        for a in self.areas:
            apoly = ShapelyPolygon(a.polygon)
            if not bpoly.buffer(1e-9).covers(apoly):
                raise MapError(f"area {a.id!r} lies outside the map boundary")
            if len(a.attribute_tokens()) > self.MAX_AREA_TOKENS:
                raise MapError(f"area {a.id!r} exceeds {self.MAX_AREA_TOKENS} attribute tokens")
        for i in range(len(self.areas)):
            pi = ShapelyPolygon(self.areas[i].polygon)
            for j in range(i + 1, len(self.areas)):
                pj = ShapelyPolygon(self.areas[j].polygon)
                if pi.intersection(pj).area > 1e-9:
                    raise MapError(
                        f"areas {self.areas[i].id!r} and {self.areas[j].id!r} overlap"
                    )

        xs = [p[0] for p in self.boundary]
        ys = [p[1] for p in self.boundary]
        self.x_min, self.x_max = min(xs), max(xs)
        self.y_min, self.y_max = min(ys), max(ys)
        self.width = max(1, int(round((self.x_max - self.x_min) / resolution)))
        self.height = max(1, int(round((self.y_max - self.y_min) / resolution)))

        ix = np.arange(self.width)
        iy = np.arange(self.height)
        cx = self.x_min + (ix + 0.5) * resolution
        cy = self.y_min + (iy + 0.5) * resolution
        gx, gy = np.meshgrid(cx, cy)  # row-major, row 0 at y_min
        self.cell_centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
        self.inside_boundary = points_in_polygon(self.cell_centers, self.boundary)

        # cell -> area index (-1 outside every area); areas are disjoint
        self.cell_area_index = np.full(self.width * self.height, -1, dtype=int)
        self._area_cells = []
        for idx, a in enumerate(self.areas):
            mask = points_in_polygon(self.cell_centers, a.polygon)
            cells = np.nonzero(mask)[0]
            self.cell_area_index[cells] = idx
            self._area_cells.append(cells)
        self._index_of = {a.id: i for i, a in enumerate(self.areas)}

    @property
    def n_areas(self):
        return len(self.areas)

    def area_index(self, area_id: str) -> int:
        try:
            return self._index_of[area_id]
        except KeyError:
            raise MapError(f"unknown area id {area_id!r}") from None

    def area_by_id(self, area_id: str) -> Area:
        return self.areas[self.area_index(area_id)]

    def area_cells(self, area_id: str) -> np.ndarray:
        """Flat cell indices whose centers fall inside the area."""
        return self._area_cells[self.area_index(area_id)]

    def normalized_point(self, point) -> np.ndarray:
        """Map coordinates scaled into [0, 1]^2 over the boundary bbox."""
        return np.array(
            [
                (point[0] - self.x_min) / (self.x_max - self.x_min),
                (point[1] - self.y_min) / (self.y_max - self.y_min),
            ]
        )

    def normalized_boundary(self) -> np.ndarray:
        return np.array([self.normalized_point(p) for p in self.boundary])

    def to_document(self) -> dict:
        return {
            "boundary": [list(p) for p in self.boundary],
            "resolution": self.resolution,
            "areas": [
                {
                    "id": a.id,
                    "category": a.category,
                    **({"subcategory": a.subcategory} if a.subcategory else {}),
                    **({"name": a.name} if a.name else {}),
                    "polygon": [list(p) for p in a.polygon],
                }
                for a in self.areas
            ],
        }


def load_map(data) -> AreaMap:
    """Parse and validate a JSON map document (bytes or str)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise MapError(f"map document is not valid JSON: {e}") from None
    for key in ("boundary", "resolution", "areas"):
        if key not in doc:
            raise MapError(f"map document missing field {key!r}")
    areas = []
    for spec in doc["areas"]:
        if "id" not in spec or "category" not in spec or "polygon" not in spec:
            raise MapError("area entry missing id/category/polygon")
        areas.append(
            Area.create(
                spec["id"],
                spec["category"],
                spec["polygon"],
                subcategory=spec.get("subcategory"),
                name=spec.get("name"),
            )
        )
    return AreaMap(doc["boundary"], areas, doc["resolution"])


class BeliefGrid:
    """Normalized nonnegative belief over the map raster (immutable)."""

    def __init__(self, width, height, cells):
        cells = np.asarray(cells, dtype=float).reshape(height, width)
        if np.any(cells < 0):
            raise MapError("belief grid has negative cells")
        total = cells.sum()
        if not math.isclose(total, 1.0, abs_tol=NORM_TOL):
            raise MapError(f"belief grid sums to {total}, expected 1")
        self.width = width
        self.height = height
        self.cells = cells
        self.cells.setflags(write=False)

    @staticmethod
    def from_unnormalized(width, height, cells):
        cells = np.asarray(cells, dtype=float)
        total = cells.sum()
        if total <= 0 or not np.isfinite(total):
            raise MapError("cannot normalize an all-zero or non-finite grid")
        return BeliefGrid(width, height, cells / total)

    @property
    def flat(self) -> np.ndarray:
        return self.cells.ravel()

    def argmax_cell(self) -> int:
        """Flat index of the highest-mass cell (ties: lowest index)."""
        return int(np.argmax(self.flat))

    def entropy(self) -> float:
        p = self.flat[self.flat > 0]
        return float(-(p * np.log(p)).sum())

    def mean_point(self, amap: AreaMap) -> np.ndarray:
        return self.flat @ amap.cell_centers

    def to_json_grid(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "cells": [float(v) for v in self.flat],
        }

    def to_pgm(self) -> bytes:
        """16-bit portable graymap, value proportional to cell mass.

        Rows are emitted top-down (max y first) per PGM convention.
        """
        peak = self.cells.max()
        scale = 65535.0 / peak if peak > 0 else 0.0
        img = np.rint(self.cells[::-1] * scale).astype(">u2")
        header = f"P5\n{self.width} {self.height}\n65535\n".encode()
        return header + img.tobytes()


def grid_from_pgm(data: bytes) -> "BeliefGrid":
    """Inverse of BeliefGrid.to_pgm up to quantization; renormalizes."""
    if not data.startswith(b"P5"):
        raise MapError("not a binary PGM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1
    width, height, maxval = fields
    dtype = ">u2" if maxval > 255 else np.uint8
    img = np.frombuffer(data[pos:], dtype=dtype, count=width * height)
    cells = img.reshape(height, width)[::-1].astype(float)
    return BeliefGrid.from_unnormalized(width, height, cells)


def uniform_over_area(amap: AreaMap, area_id: str) -> BeliefGrid:
    """Equal mass on every cell whose center lies inside the area."""
    cells = amap.area_cells(area_id)
    if len(cells) == 0:
        raise MapError(f"area {area_id!r} covers no cells at resolution {amap.resolution}")
    grid = np.zeros(amap.width * amap.height)
    grid[cells] = 1.0 / len(cells)
    return BeliefGrid(amap.width, amap.height, grid)


def dummy_prior(amap: AreaMap) -> BeliefGrid:
    """Uniform belief over all cells inside the map boundary."""
    mask = amap.inside_boundary
    if not mask.any():
        raise MapError("map boundary contains no cells")
    grid = np.where(mask, 1.0 / mask.sum(), 0.0)
    return BeliefGrid(amap.width, amap.height, grid)


def gather_area_weights(belief: BeliefGrid, amap: AreaMap):
    """Sum belief mass per area and normalize.

    Returns (weights, degenerate). If no area holds any mass the result
    falls back to uniform over areas with degenerate=True; mass outside
    every area is discarded by the normalization.
    """
    flat = belief.flat
    w = np.zeros(amap.n_areas)
    valid = amap.cell_area_index >= 0
    np.add.at(w, amap.cell_area_index[valid], flat[valid])
    total = w.sum()
    if total <= 0:
        return np.full(amap.n_areas, 1.0 / amap.n_areas), True
    return w / total, False


def scatter_area_weights(weights, amap: AreaMap) -> BeliefGrid:
    """Spread each area's weight uniformly over its cells, then normalize."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (amap.n_areas,):
        raise MapError("weight vector length does not match area count")
    if np.any(weights < 0):
        raise MapError("weights must be nonnegative")
    if weights.sum() <= 0:
        raise MapError("cannot scatter an all-zero weight vector")
    grid = np.zeros(amap.width * amap.height)
    for idx, a in enumerate(amap.areas):
        if weights[idx] <= 0:
            continue
        cells = amap.area_cells(a.id)
        if len(cells):
            grid[cells] = weights[idx] / len(cells)
    return BeliefGrid.from_unnormalized(amap.width, amap.height, grid)


def gaussian_grid(amap: AreaMap, center, variance: float) -> BeliefGrid:
    """Isotropic Gaussian belief truncated to the map boundary."""
    if variance <= 0:
        raise MapError("gaussian variance must be > 0")
    d2 = ((amap.cell_centers - np.asarray(center, dtype=float)) ** 2).sum(axis=1)
    dens = np.exp(-0.5 * d2 / variance)
    dens[~amap.inside_boundary] = 0.0
    return BeliefGrid.from_unnormalized(amap.width, amap.height, dens)
