"""Path-relative (along-track, cross-track) frame over a polyline nominal path.

Cross-track ``c`` is positive on the path's left (counter-clockwise normal).
Projection picks the globally closest point over all segments; exact ties go
to the smaller arc length.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .errors import InvalidPathError, OutOfPathExtentError
from .kernels import clip_area

if TYPE_CHECKING:
    from .occupancy import GridSpec

log = logging.getLogger(__name__)

_EXTENT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class NominalPath:
    """Arc-length parameterized polyline."""

    vertices: np.ndarray
    cumulative_arclength: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise InvalidPathError("a path needs at least two 2D vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidPathError("path vertices must be finite")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        if np.any(seg <= 0.0):
            raise InvalidPathError("consecutive path vertices must be distinct")
        v.setflags(write=False)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        s.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "cumulative_arclength", s)

    @property
    def length(self) -> float:
        return float(self.cumulative_arclength[-1])

    @property
    def segment_directions(self) -> np.ndarray:
        d = np.diff(self.vertices, axis=0)
        return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass(frozen=True)
class PathRelativePoint:
    a: float
    c: float


def _as_path(path) -> NominalPath:
    if isinstance(path, NominalPath):
        return path
    try:
        return NominalPath(np.asarray(path, dtype=np.float64))
    except (TypeError, ValueError) as exc:
        raise InvalidPathError(str(exc)) from exc


def project_points(path: NominalPath, points, origin_arclength: float = 0.0):
    """Vectorized projection of (N, 2) points; returns (a, c) arrays of shape (N,)."""
    path = _as_path(path)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v0 = path.vertices[:-1]
    d = np.diff(path.vertices, axis=0)
    seg_len2 = np.sum(d * d, axis=1)
    rel = pts[:, None, :] - v0[None, :, :]
    u = np.clip(np.sum(rel * d[None], axis=2) / seg_len2[None], 0.0, 1.0)
    closest = v0[None] + u[..., None] * d[None]
    dist2 = np.sum((pts[:, None, :] - closest) ** 2, axis=2)
    # argmin returns the first minimum, i.e. the smaller arc length on ties
    k = np.argmin(dist2, axis=1)
    rows = np.arange(pts.shape[0])
    uk = u[rows, k]
    seg_len = np.sqrt(seg_len2[k])
    s = path.cumulative_arclength[k] + uk * seg_len
    offset = pts - closest[rows, k]
    dk = d[k]
    cross = dk[:, 0] * offset[:, 1] - dk[:, 1] * offset[:, 0]
    dist = np.sqrt(dist2[rows, k])
    c = np.where(cross < 0.0, -dist, dist)
    return s - origin_arclength, c


def project_to_path(path: NominalPath, origin_arclength: float, point) -> PathRelativePoint:
    """Path-relative coordinates of a real-world point."""
    path = _as_path(path)
    if not (-_EXTENT_TOL <= origin_arclength <= path.length + _EXTENT_TOL):
        raise OutOfPathExtentError(f"origin arc length {origin_arclength} outside [0, {path.length}]")
    a, c = project_points(path, np.asarray(point, dtype=np.float64)[None], origin_arclength)
    return PathRelativePoint(float(a[0]), float(c[0]))


def unproject_points(path: NominalPath, a, c, origin_arclength: float = 0.0, clamp: bool = False):
    """Vectorized inverse transform. Returns (..., 2) world points.

    With ``clamp=True`` arc lengths past either end are clamped and a warning
    is logged; otherwise they raise :class:`OutOfPathExtentError`.
    """
    path = _as_path(path)
    a = np.asarray(a, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    a, c = np.broadcast_arrays(a, c)
    s = origin_arclength + a
    outside = (s < -_EXTENT_TOL) | (s > path.length + _EXTENT_TOL)
    if np.any(outside):
        if not clamp:
            raise OutOfPathExtentError(
                f"arc length range [{s.min():.3f}, {s.max():.3f}] exceeds path extent [0, {path.length:.3f}]"
            )
        log.warning("clamping %d arc lengths to the path extent", int(outside.sum()))
    s = np.clip(s, 0.0, path.length)
    cum = path.cumulative_arclength
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    dirs = path.segment_directions
    base = path.vertices[k] + (s - cum[k])[..., None] * dirs[k]
    normal = np.stack([-dirs[k][..., 1], dirs[k][..., 0]], axis=-1)
    return base + c[..., None] * normal


def from_path_relative(path: NominalPath, origin_arclength: float, pr: PathRelativePoint) -> np.ndarray:
    """Real-world point for path-relative coordinates."""
    return unproject_points(path, pr.a, pr.c, origin_arclength)


def heading_on_path(path: NominalPath, arclength) -> np.ndarray:
    """Tangent heading (radians) of the segment containing each arc length."""
    path = _as_path(path)
    s = np.clip(np.asarray(arclength, dtype=np.float64), 0.0, path.length)
    cum = path.cumulative_arclength
    k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(cum) - 2)
    d = path.segment_directions[k]
    return np.arctan2(d[..., 1], d[..., 0])


def polygon_area(polys: np.ndarray) -> np.ndarray:
    """Signed shoelace area of (..., K, 2) polygons."""
    x = polys[..., 0]
    y = polys[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=-1) - np.roll(x, -1, axis=-1) * y, axis=-1)


def _segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def quads_are_simple(polys: np.ndarray) -> np.ndarray:
    """True for quadrilaterals whose opposite edges do not cross."""
    p = polys
    return ~(
        _segments_intersect(p[..., 0, :], p[..., 1, :], p[..., 2, :], p[..., 3, :])
        | _segments_intersect(p[..., 1, :], p[..., 2, :], p[..., 3, :], p[..., 0, :])
    )


@dataclass(frozen=True, eq=False)
class CurvilinearMesh:
    """Grid cells mapped into real-world space.

    ``cell_centers`` is (A, C, 2) and ``cell_polygons`` is (A, C, 4, 2) with
    counter-clockwise corners in path-relative order (a0,c0), (a1,c0),
    (a1,c1), (a0,c1).  ``lattice_centers`` holds the same cells in
    path-relative coordinates.
    """

    cell_centers: np.ndarray
    cell_polygons: np.ndarray
    spec: "GridSpec"
    lattice_centers: np.ndarray
    ego_origin_arclength: float = 0.0
    overlap_flag: bool = False
    path: NominalPath | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.cell_centers.shape[:2]

    @cached_property
    def max_cell_radius(self) -> float:
        r = np.linalg.norm(self.cell_polygons - self.cell_centers[:, :, None, :], axis=-1)
        return float(r.max())


def lattice_axes(spec: "GridSpec"):
    """Path-relative cell edges along and across track."""
    a_edges = np.arange(spec.n_along + 1) * spec.dx
    c_edges = np.arange(spec.n_cross + 1) * spec.dy - spec.cross_extent / 2.0
    return a_edges, c_edges


def lattice_polygons(spec: "GridSpec") -> tuple[np.ndarray, np.ndarray]:
    """Path-relative cell centers (A, C, 2) and corner quads (A, C, 4, 2)."""
    a_edges, c_edges = lattice_axes(spec)
    a0, c0 = np.meshgrid(a_edges[:-1], c_edges[:-1], indexing="ij")
    a1, c1 = np.meshgrid(a_edges[1:], c_edges[1:], indexing="ij")
    corners = np.stack(
        [np.stack([a0, c0], -1), np.stack([a1, c0], -1), np.stack([a1, c1], -1), np.stack([a0, c1], -1)],
        axis=2,
    )
    centers = np.stack([(a0 + a1) / 2.0, (c0 + c1) / 2.0], axis=-1)
    return centers, corners


def regular_mesh(spec: "GridSpec") -> CurvilinearMesh:
    """The grid in path-relative coordinates (identity geometry)."""
    centers, corners = lattice_polygons(spec)
    return CurvilinearMesh(centers, corners, spec, centers)


def build_curvilinear_mesh(path: NominalPath, spec: "GridSpec", ego_origin_arclength: float) -> CurvilinearMesh:
    """Map the regular path-relative lattice into world space through the path."""
    path = _as_path(path)
    remaining = path.length - ego_origin_arclength
    if ego_origin_arclength < -_EXTENT_TOL or spec.along_extent > remaining + _EXTENT_TOL:
        raise OutOfPathExtentError(
            f"grid needs {spec.along_extent} m of path ahead of s={ego_origin_arclength:.3f}, "
            f"only {remaining:.3f} m available"
        )
    lat_centers, lat_corners = lattice_polygons(spec)
    centers = unproject_points(path, lat_centers[..., 0], lat_centers[..., 1], ego_origin_arclength)
    polys = unproject_points(path, lat_corners[..., 0], lat_corners[..., 1], ego_origin_arclength)
    flag = _mesh_overlaps(polys)
    if flag:
        log.warning("curvilinear mesh has overlapping or folded cells (path curvature too tight for the grid)")
    return CurvilinearMesh(centers, polys, spec, lat_centers, float(ego_origin_arclength), flag, path)


def _mesh_overlaps(polys: np.ndarray, threshold: float = 0.1) -> bool:
    area = polygon_area(polys)
    if np.any(area <= 0.0) or not np.all(quads_are_simple(polys)):
        return True
    # neighbours along track are the ones that fold over each other on tight turns
    a = polys[:-1].reshape(-1, 4, 2)
    b = polys[1:].reshape(-1, 4, 2)
    if a.shape[0] == 0:
        return False
    convex = _is_convex(b)
    if not np.all(convex):
        return True
    inter = clip_area(a, b, np.arange(a.shape[0]))
    return bool(np.any(inter > threshold * np.minimum(area[:-1].ravel(), area[1:].ravel())))


def _is_convex(polys: np.ndarray) -> np.ndarray:
    e = np.roll(polys, -1, axis=-2) - polys
    en = np.roll(e, -1, axis=-2)
    cross = e[..., 0] * en[..., 1] - e[..., 1] * en[..., 0]
    return np.all(cross >= -1e-12, axis=-1)
