"""Scenario data model and rasterization of oriented boxes into occupancy fields."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError
from .kernels import clip_area
from .path_frame import CurvilinearMesh, NominalPath, polygon_area

log = logging.getLogger(__name__)

_TIME_TOL = 1e-6


def _multiple(extent: float, step: float) -> int:
    n = round(extent / step)
    if n < 1 or not math.isclose(n * step, extent, rel_tol=1e-9, abs_tol=1e-9):
        raise ConfigurationError(f"extent {extent} is not a positive multiple of {step}")
    return int(n)


@dataclass(frozen=True)
class GridSpec:
    """Discretized spatiotemporal volume in path-relative coordinates.

    Along-track cells cover ``[0, along_extent]`` ahead of the ego origin;
    cross-track cells cover ``[-cross_extent/2, cross_extent/2]``.  Time slice
    ``k`` is ``eval_time + k * dt`` for ``k = 0 .. n_steps``.
    """

    dx: float = 0.5
    dy: float = 0.5
    dt: float = 0.3
    along_extent: float = 30.0
    cross_extent: float = 10.0
    t_max: float = 3.0

    def __post_init__(self) -> None:
        if self.dx <= 0 or self.dy <= 0 or self.dt <= 0:
            raise ConfigurationError("cell sizes and time step must be positive")
        _multiple(self.along_extent, self.dx)
        _multiple(self.cross_extent, self.dy)
        if self.n_steps < 1:
            raise ConfigurationError("t_max must span at least one time step")

    @property
    def n_along(self) -> int:
        return _multiple(self.along_extent, self.dx)

    @property
    def n_cross(self) -> int:
        return _multiple(self.cross_extent, self.dy)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def n_times(self) -> int:
        return self.n_steps + 1

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_times, self.n_along, self.n_cross)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy * self.dt


@dataclass(frozen=True, eq=False)
class OccupancyField:
    values: np.ndarray
    spec: GridSpec

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.spec.shape:
            raise ShapeError(f"field shape {v.shape} does not match grid {self.spec.shape}")
        if np.any(~np.isfinite(v)) or np.any(v < 0.0) or np.any(v > 1.0):
            raise ValueError("occupancy probabilities must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "OccupancyField":
        return cls(np.zeros(spec.shape), spec)


@dataclass(frozen=True)
class OrientedBox:
    x: float
    y: float
    heading: float
    length: float
    width: float

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("box length and width must be positive")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def corners(self) -> np.ndarray:
        return box_corners(np.array([[self.x, self.y, self.heading, self.length, self.width]]))[0]


def box_corners(poses: np.ndarray) -> np.ndarray:
    """Counter-clockwise corners (M, 4, 2) of boxes given as rows (x, y, heading, length, width)."""
    poses = np.atleast_2d(np.asarray(poses, dtype=np.float64))
    hl = poses[:, 3] / 2.0
    hw = poses[:, 4] / 2.0
    local = np.stack(
        [np.stack([hl, -hw], -1), np.stack([hl, hw], -1), np.stack([-hl, hw], -1), np.stack([-hl, -hw], -1)],
        axis=1,
    )
    cos = np.cos(poses[:, 2])[:, None]
    sin = np.sin(poses[:, 2])[:, None]
    x = poses[:, None, 0] + cos * local[..., 0] - sin * local[..., 1]
    y = poses[:, None, 1] + sin * local[..., 0] + cos * local[..., 1]
    return np.stack([x, y], axis=-1)


class ActorClass(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"
    CYCLIST = "cyclist"
    OTHER = "other"


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class ActorTrack:
    """Timestamped oriented boxes.  ``poses`` rows are (x, y, heading, length, width)."""

    actor_id: str
    times: np.ndarray
    poses: np.ndarray
    cls: ActorClass = ActorClass.OTHER
    is_aoi: bool = False
    is_unsafe: bool = False

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64).reshape(-1)
        p = np.asarray(self.poses, dtype=np.float64).reshape(-1, 5)
        if t.size == 0:
            raise ValueError(f"track {self.actor_id!r} has no states")
        if t.size != p.shape[0]:
            raise ValueError(f"track {self.actor_id!r}: {t.size} times but {p.shape[0]} poses")
        if np.any(np.diff(t) <= 0):
            raise ValueError(f"track {self.actor_id!r}: timestamps must be strictly increasing")
        if np.any(p[:, 3:] <= 0):
            raise ValueError(f"track {self.actor_id!r}: box dimensions must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "poses", p)
        object.__setattr__(self, "cls", ActorClass(self.cls))

    @classmethod
    def from_boxes(cls, actor_id: str, times: Sequence[float], boxes: Sequence[OrientedBox], **kw) -> "ActorTrack":
        poses = [[b.x, b.y, b.heading, b.length, b.width] for b in boxes]
        return cls(actor_id, np.asarray(times, dtype=np.float64), np.asarray(poses, dtype=np.float64), **kw)

    @property
    def start(self) -> float:
        return float(self.times[0])

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def interpolate(self, query, hold_last: bool = False):
        """Poses at query times (linear; heading along the shortest arc).

        Returns ``(poses, valid)``; times outside the track are invalid unless
        ``hold_last`` extends the final state forward in time.
        """
        q = np.atleast_1d(np.asarray(query, dtype=np.float64))
        t = self.times
        valid = (q >= t[0] - _TIME_TOL) & ((q <= t[-1] + _TIME_TOL) | hold_last)
        qc = np.clip(q, t[0], t[-1])
        if t.size == 1:
            return np.repeat(self.poses, q.size, axis=0), valid
        k = np.clip(np.searchsorted(t, qc, side="right") - 1, 0, t.size - 2)
        u = ((qc - t[k]) / (t[k + 1] - t[k]))[:, None]
        p0 = self.poses[k]
        p1 = self.poses[k + 1]
        out = p0 + (p1 - p0) * u
        out[:, 2] = p0[:, 2] + wrap_angle(p1[:, 2] - p0[:, 2]) * u[:, 0]
        return out, valid

    def truncated(self, last_time: float) -> "ActorTrack | None":
        keep = self.times <= last_time + _TIME_TOL
        if not np.any(keep):
            return None
        return ActorTrack(self.actor_id, self.times[keep], self.poses[keep], self.cls, self.is_aoi, self.is_unsafe)


@dataclass(frozen=True)
class PredictionMode:
    weight: float
    track: ActorTrack


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Multimodal per-actor predicted tracks, or a direct occupancy grid."""

    modes: Mapping[str, Sequence[PredictionMode]] = field(default_factory=dict)
    grid: OccupancyField | None = None

    def __post_init__(self) -> None:
        for actor_id, ms in self.modes.items():
            for m in ms:
                if not 0.0 <= m.weight <= 1.0:
                    raise ValueError(f"mode weight {m.weight} for {actor_id!r} outside [0, 1]")
            if sum(m.weight for m in ms) > 1.0 + 1e-9:
                raise ValueError(f"mode weights for {actor_id!r} sum above 1")


@dataclass(frozen=True, eq=False)
class EgoState:
    """Ego pose at ``time`` plus optional per-time states ``(t, x, y, heading, v)``.

    ``v`` may be None, in which case speeds come from finite differences of
    the states.
    """

    pose: OrientedBox
    v: float | None = None
    time: float = 0.0
    states: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    scenario_id: str
    nominal_path: NominalPath
    ego: EgoState
    ground_truth: Sequence[ActorTrack]
    predictions: PredictionSet
    eval_times: Sequence[float]

    def actor(self, actor_id: str) -> ActorTrack:
        for a in self.ground_truth:
            if a.actor_id == actor_id:
                return a
        raise KeyError(actor_id)


# --------------------------------------------------------------------------
# rasterization


def _cell_areas(mesh: CurvilinearMesh) -> np.ndarray:
    return np.abs(polygon_area(mesh.cell_polygons)).reshape(-1)


def rasterize_corners(corners: np.ndarray, mesh: CurvilinearMesh, chunk: int = 512):
    """Coverage fractions of many boxes on a mesh.

    Args:
        corners: (M, 4, 2) counter-clockwise box corners in the mesh's frame.
        mesh: target mesh.

    Returns:
        ``(box_index, cell_index, fraction)`` arrays; ``cell_index`` is flat
        over (along, cross).  Zero-overlap pairs are omitted.
    """
    corners = np.asarray(corners, dtype=np.float64).reshape(-1, 4, 2)
    n_a, n_c = mesh.shape
    centers = mesh.cell_centers.reshape(-1, 2)
    polys = mesh.cell_polygons.reshape(-1, 4, 2)
    areas = _cell_areas(mesh)
    reach = mesh.max_cell_radius
    box_c = corners.mean(axis=1)
    box_r = np.linalg.norm(corners - box_c[:, None], axis=-1).max(axis=1)
    out_b, out_c, out_f = [], [], []
    for lo in range(0, corners.shape[0], chunk):
        hi = min(lo + chunk, corners.shape[0])
        d2 = np.sum((box_c[lo:hi, None, :] - centers[None]) ** 2, axis=-1)
        lim = (box_r[lo:hi] + reach)[:, None] + 1e-9
        bi, ci = np.nonzero(d2 <= lim * lim)
        if bi.size == 0:
            continue
        bi = bi + lo
        inter = clip_area(polys[ci], corners, bi)
        frac = np.minimum(inter / areas[ci], 1.0)
        keep = frac > 1e-12
        out_b.append(bi[keep])
        out_c.append(ci[keep])
        out_f.append(frac[keep])
    if not out_b:
        empty = np.zeros(0, dtype=np.intp)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(out_b), np.concatenate(out_c), np.concatenate(out_f)


def rasterize_box(box: OrientedBox, mesh: CurvilinearMesh) -> dict[tuple[int, int], float]:
    """Map ``(along index, cross index) -> area(box ∩ cell) / area(cell)``."""
    _, cells, frac = rasterize_corners(box.corners()[None], mesh)
    n_c = mesh.shape[1]
    return {(int(c // n_c), int(c % n_c)): float(f) for c, f in zip(cells, frac)}


def _apply_mode(frac: np.ndarray, occupancy_mode: str, threshold: float) -> np.ndarray:
    if occupancy_mode == "fractional":
        return frac
    if occupancy_mode == "binary":
        return (frac >= threshold).astype(np.float64)
    raise ConfigurationError(f"unknown occupancy mode {occupancy_mode!r}")


def _track_boxes(track: ActorTrack, times: np.ndarray, hold_last: bool = False):
    poses, valid = track.interpolate(times, hold_last=hold_last)
    return poses, valid


def build_gt_field(
    scenario: Scenario,
    eval_time: float,
    mesh: CurvilinearMesh,
    spec: GridSpec,
    occupancy_mode: str = "fractional",
    threshold: float = 0.5,
) -> tuple[OccupancyField, dict[str, OccupancyField]]:
    """Ground-truth occupancy: combined field plus one field per actor."""
    times = eval_time + np.arange(spec.n_times) * spec.dt
    plane = spec.n_along * spec.n_cross
    per_actor: dict[str, OccupancyField] = {}
    all_corners, owners = [], []
    for track in scenario.ground_truth:
        poses, valid = _track_boxes(track, times)
        if not np.all(valid):
            log.info("actor %s: no ground truth for %d of %d steps at t=%.2f",
                     track.actor_id, int((~valid).sum()), valid.size, eval_time)
        steps = np.nonzero(valid)[0]
        if steps.size:
            all_corners.append(box_corners(poses[steps]))
            owners.append((track.actor_id, steps))
    combined_q = np.ones(spec.shape).reshape(-1)
    if all_corners:
        corners = np.concatenate(all_corners)
        bi, ci, frac = rasterize_corners(corners, mesh)
        frac = _apply_mode(frac, occupancy_mode, threshold)
        offset = 0
        for actor_id, steps in owners:
            sel = (bi >= offset) & (bi < offset + steps.size)
            vals = np.zeros(spec.shape).reshape(-1)
            flat = steps[bi[sel] - offset] * plane + ci[sel]
            np.add.at(vals, flat, frac[sel])
            np.clip(vals, 0.0, 1.0, out=vals)
            per_actor[actor_id] = OccupancyField(vals.reshape(spec.shape), spec)
            combined_q *= 1.0 - vals
            offset += steps.size
    for track in scenario.ground_truth:
        per_actor.setdefault(track.actor_id, OccupancyField.zeros(spec))
    combined = np.clip(1.0 - combined_q, 0.0, 1.0).reshape(spec.shape)
    return OccupancyField(combined, spec), per_actor


def build_pred_field(
    predictions: PredictionSet,
    eval_time: float,
    mesh: CurvilinearMesh,
    spec: GridSpec,
    occupancy_mode: str = "fractional",
    threshold: float = 0.5,
) -> OccupancyField:
    """Predicted occupancy, combining actors and modes by complementary product."""
    if predictions.grid is not None:
        if predictions.grid.spec.shape != spec.shape:
            raise ShapeError(f"direct grid shape {predictions.grid.spec.shape} != grid {spec.shape}")
        return OccupancyField(predictions.grid.values.copy(), spec)
    times = eval_time + np.arange(spec.n_times) * spec.dt
    plane = spec.n_along * spec.n_cross
    corners, weights, steps_all = [], [], []
    for modes in predictions.modes.values():
        for mode in modes:
            if mode.weight == 0.0:
                continue
            poses, valid = _track_boxes(mode.track, times)
            steps = np.nonzero(valid)[0]
            if steps.size:
                corners.append(box_corners(poses[steps]))
                weights.append(np.full(steps.size, mode.weight))
                steps_all.append(steps)
    q = np.ones(spec.shape).reshape(-1)
    if corners:
        bi, ci, frac = rasterize_corners(np.concatenate(corners), mesh)
        frac = _apply_mode(frac, occupancy_mode, threshold)
        w = np.concatenate(weights)
        steps = np.concatenate(steps_all)
        np.multiply.at(q, steps[bi] * plane + ci, 1.0 - w[bi] * frac)
    return OccupancyField(np.clip(1.0 - q, 0.0, 1.0).reshape(spec.shape), spec)
