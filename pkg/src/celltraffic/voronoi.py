"""Voronoi cell areas by half-plane intersection, and traffic-density
sparsity diagnostics built on them.

Coordinates are projected to a local plane (equirectangular about the
layout centroid); at city scale the curvature error is negligible.  Each
cell's region starts from the layout bounding box expanded 10% and is cut
by the perpendicular-bisector half-plane against every other site, so the
regions partition the box exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry

__all__ = ["SparsityReport", "project_coordinates", "voronoi_areas", "voronoi_sparsity", "gini"]

_EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class SparsityReport:
    """Per-cell traffic density over Voronoi areas at one timestamp."""

    per_cell_density: tuple[tuple[str, float, float], ...]  # (cell_id, density, area)
    gini: float
    timestamp_index: int


def project_coordinates(latitudes, longitudes) -> np.ndarray:
    """Equirectangular projection to kilometers about the centroid."""
    lat = np.asarray(latitudes, dtype=float)
    lon = np.asarray(longitudes, dtype=float)
    lat0 = float(lat.mean())
    x = np.radians(lon - lon.mean()) * math.cos(math.radians(lat0)) * _EARTH_RADIUS_KM
    y = np.radians(lat - lat0) * _EARTH_RADIUS_KM
    return np.column_stack([x, y])


def _clip_half_plane(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Keep the part of `poly` with normal . p <= offset (Sutherland-Hodgman)."""
    if poly.shape[0] == 0:
        return poly
    dist = poly @ normal - offset
    keep = dist <= 0.0
    out = []
    m = poly.shape[0]
    for i in range(m):
        j = (i + 1) % m
        if keep[i]:
            out.append(poly[i])
            if not keep[j]:
                t = dist[i] / (dist[i] - dist[j])
                out.append(poly[i] + t * (poly[j] - poly[i]))
        elif keep[j]:
            t = dist[i] / (dist[i] - dist[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.asarray(out) if out else np.empty((0, 2))


def _polygon_area(poly: np.ndarray) -> float:
    if poly.shape[0] < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def bounding_box(points: np.ndarray, margin: float = 0.05):
    """Axis-aligned box around the points, each span grown by 2*margin."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    return lo - margin * span, hi + margin * span


def voronoi_areas(points: np.ndarray, margin: float = 0.05) -> np.ndarray:
    """Area of each site's Voronoi region clipped to the expanded box.

    Raises DegenerateGeometry when sites coincide or are all collinear
    (no proper planar partition exists).
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 3:
        raise DegenerateGeometry("need at least 3 sites")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    if np.min(d2) == 0.0:
        raise DegenerateGeometry("coincident sites")
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * (1 + np.abs(pts).max())) < 2:
        raise DegenerateGeometry("all sites collinear")

    lo, hi = bounding_box(pts, margin)
    box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    areas = np.empty(n)
    for i in range(n):
        poly = box
        for j in range(n):
            if j == i:
                continue
            normal = pts[j] - pts[i]
            offset = float(normal @ (pts[i] + pts[j]) / 2.0)
            poly = _clip_half_plane(poly, normal, offset)
            if poly.shape[0] == 0:
                break
        areas[i] = _polygon_area(poly)
    return areas


def gini(values) -> float:
    """Gini coefficient of a non-negative vector (0 for uniform or all-zero)."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    total = v.sum()
    if total <= 0.0 or v.size == 0:
        return 0.0
    n = v.size
    ranks = np.arange(1, n + 1)
    return float((2.0 * np.dot(ranks, v) - (n + 1) * total) / (n * total))


def voronoi_sparsity(matrix, timestamp_index: int) -> SparsityReport:
    """Traffic density per unit Voronoi area at one interval, plus its Gini.

    A handful of high-density cells against a flat background (a high
    Gini) is the spatial-sparsity signature the sparse recovery stage
    relies on.
    """
    if not (0 <= timestamp_index < matrix.n_intervals):
        raise IndexError(f"timestamp_index {timestamp_index} out of range")
    pts = project_coordinates(
        [c.latitude for c in matrix.cells], [c.longitude for c in matrix.cells]
    )
    areas = voronoi_areas(pts)
    column = matrix.values[:, timestamp_index]
    densities = column / areas
    per_cell = tuple(
        (c.cell_id, float(densities[i]), float(areas[i]))
        for i, c in enumerate(matrix.cells)
    )
    return SparsityReport(per_cell, gini(densities), timestamp_index)
