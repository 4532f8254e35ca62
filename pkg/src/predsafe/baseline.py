"""Displacement-error baselines (ADE, FDE, L2 at fixed horizons).

Errors are measured between box centers only.  A predicted track that ends
before a horizon is held at its final state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .occupancy import ActorTrack, PredictionMode, box_corners
from .path_frame import CurvilinearMesh, project_points

DEFAULT_HORIZONS = (1.0, 2.0, 3.0)


@dataclass
class DisplacementEntry:
    ade: float | None = None
    fde: float | None = None
    l2_at: dict[float, float] = field(default_factory=dict)
    in_roi: bool = False
    missing_prediction: bool = False

    def to_dict(self) -> dict:
        return {
            "ade": self.ade,
            "fde": self.fde,
            "l2_at": {f"{h:g}": v for h, v in self.l2_at.items()},
            "in_roi": self.in_roi,
            "missing_prediction": self.missing_prediction,
        }


def _mode_errors(gt_xy: np.ndarray, track: ActorTrack, times: np.ndarray) -> np.ndarray:
    poses, _ = track.interpolate(times, hold_last=True)
    return np.linalg.norm(poses[:, :2] - gt_xy, axis=1)


def displacement_errors(
    gt: ActorTrack,
    modes: Sequence[PredictionMode] | None,
    horizons: Sequence[float] = DEFAULT_HORIZONS,
    eval_time: float = 0.0,
    min_over_modes: bool = False,
) -> DisplacementEntry:
    """ADE/FDE/L2 of one actor's prediction against its ground truth.

    Scores the highest-weight mode, or the mode with the smallest ADE when
    ``min_over_modes`` is set.  Horizons the ground truth does not cover are
    skipped; no modes at all yields a missing-prediction entry.
    """
    if not modes:
        return DisplacementEntry(missing_prediction=True)
    hs = np.asarray(sorted(horizons), dtype=np.float64)
    gt_poses, valid = gt.interpolate(eval_time + hs)
    hs = hs[valid]
    if hs.size == 0:
        return DisplacementEntry()
    gt_xy = gt_poses[valid, :2]
    times = eval_time + hs
    usable = [m for m in modes if m.track.start <= eval_time + 1e-6]
    if not usable:
        return DisplacementEntry(missing_prediction=True)
    if min_over_modes:
        errs = [_mode_errors(gt_xy, m.track, times) for m in usable]
        best = errs[int(np.argmin([e.mean() for e in errs]))]
    else:
        top = max(range(len(usable)), key=lambda i: usable[i].weight)
        best = _mode_errors(gt_xy, usable[top].track, times)
    return DisplacementEntry(
        ade=float(best.mean()),
        fde=float(best[-1]),
        l2_at={float(h): float(e) for h, e in zip(hs, best)},
    )


def roi_filter(actor: ActorTrack, mesh: CurvilinearMesh, eval_time: float) -> bool:
    """True if any box corner projects inside the grid at any step of the window."""
    if mesh.path is None:
        raise ValueError("mesh was built without a path; cannot project actor corners")
    spec = mesh.spec
    times = eval_time + np.arange(spec.n_times) * spec.dt
    poses, valid = actor.interpolate(times)
    if not np.any(valid):
        return False
    corners = box_corners(poses[valid]).reshape(-1, 2)
    a, c = project_points(mesh.path, corners, mesh.ego_origin_arclength)
    half = spec.cross_extent / 2.0
    inside = (a >= 0.0) & (a <= spec.along_extent) & (c >= -half) & (c <= half)
    return bool(np.any(inside))
