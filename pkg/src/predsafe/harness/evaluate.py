"""Per-frame evaluation of a scenario and worst-per-actor aggregation."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..baseline import DisplacementEntry, displacement_errors, roi_filter
from ..beelines import DistributionConfig, TrajectoryEnsemble, generate_beelines
from ..errors import ConfigurationError, PredsafeError
from ..metrics import MetricResult, evaluate_metrics
from ..occupancy import (
    GridSpec,
    OccupancyField,
    PredictionMode,
    PredictionSet,
    Scenario,
    build_gt_field,
    build_pred_field,
)
from ..path_frame import build_curvilinear_mesh, project_points, unproject_points
from .config import EvalConfig

log = logging.getLogger(__name__)


def cripple_predictions(preds: PredictionSet, keep_horizon: float, eval_start: float | None = None) -> PredictionSet:
    """Truncate predictions to ``keep_horizon`` seconds.

    Tracks keep states up to ``eval_start + keep_horizon`` (each track's own
    first timestamp when ``eval_start`` is None).  Direct grids are zeroed
    after step ``floor(keep_horizon / dt)``.
    """
    if keep_horizon < 0:
        raise ValueError("keep_horizon must be non-negative")
    if preds.grid is not None:
        spec = preds.grid.spec
        last = int(math.floor(keep_horizon / spec.dt + 1e-9))
        values = preds.grid.values.copy()
        values[last + 1:] = 0.0
        return PredictionSet(grid=OccupancyField(values, spec))
    modes = {}
    for actor_id, ms in preds.modes.items():
        kept = []
        for m in ms:
            start = m.track.start if eval_start is None else eval_start
            tr = m.track.truncated(start + keep_horizon)
            if tr is not None:
                kept.append(PredictionMode(m.weight, tr))
        if kept:
            modes[actor_id] = kept
    return PredictionSet(modes=modes)


@dataclass
class FrameRecord:
    eval_time: float
    v_i: float
    metrics: MetricResult
    displacement: dict[str, DisplacementEntry]
    in_roi: dict[str, bool]

    def to_dict(self) -> dict:
        return {
            "eval_time": self.eval_time,
            "v_i": self.v_i,
            "metrics": self.metrics.to_dict(),
            "displacement": {k: v.to_dict() for k, v in self.displacement.items()},
            "in_roi": dict(self.in_roi),
        }


@dataclass
class ActorSummary:
    actor_id: str
    cls: str
    is_aoi: bool
    is_unsafe: bool
    in_roi: bool = False
    worst_p_lambda_actor: float | None = None
    worst_l2: float | None = None
    missing_prediction_frames: int = 0

    def to_dict(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "class": self.cls,
            "is_aoi": self.is_aoi,
            "is_unsafe": self.is_unsafe,
            "in_roi": self.in_roi,
            "worst_p_lambda_actor": self.worst_p_lambda_actor,
            "worst_l2": self.worst_l2,
            "missing_prediction_frames": self.missing_prediction_frames,
        }


@dataclass
class EvaluationRun:
    scenario_id: str
    l2_horizon: float
    frames: list[FrameRecord] = field(default_factory=list)
    actors: dict[str, ActorSummary] = field(default_factory=dict)
    failed_frames: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "l2_horizon": self.l2_horizon,
            "frames": [f.to_dict() for f in self.frames],
            "actors": {k: v.to_dict() for k, v in self.actors.items()},
            "failed_frames": list(self.failed_frames),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationRun":
        run = cls(data["scenario_id"], float(data.get("l2_horizon", 3.0)))
        for actor_id, a in data["actors"].items():
            run.actors[actor_id] = ActorSummary(
                actor_id, a["class"], a["is_aoi"], a["is_unsafe"], a["in_roi"],
                a["worst_p_lambda_actor"], a["worst_l2"], a.get("missing_prediction_frames", 0),
            )
        run.failed_frames = list(data.get("failed_frames", []))
        # frames are kept as plain dicts when reloaded; ranking only needs the summaries
        run.frames = data.get("frames", [])
        return run


def ego_at(scenario: Scenario, t: float, v_override: float | None = None) -> tuple[np.ndarray, float]:
    """Ego (x, y) and speed at time ``t``."""
    ego = scenario.ego
    if ego.states is not None and len(ego.states):
        st = ego.states
        ts = st[:, 0]
        x = float(np.interp(t, ts, st[:, 1]))
        y = float(np.interp(t, ts, st[:, 2]))
        if v_override is not None:
            return np.array([x, y]), float(v_override)
        vs = st[:, 4]
        if np.all(np.isfinite(vs)):
            return np.array([x, y]), float(np.interp(t, ts, vs))
        if ts.size < 2:
            if ego.v is None:
                raise ConfigurationError("ego speed unavailable: no v and a single ego state")
            return np.array([x, y]), float(ego.v)
        k = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2))
        step = np.hypot(st[k + 1, 1] - st[k, 1], st[k + 1, 2] - st[k, 2])
        return np.array([x, y]), float(step / (ts[k + 1] - ts[k]))
    v = v_override if v_override is not None else ego.v
    if v is None:
        raise ConfigurationError("ego speed unavailable: provide ego.v or ego.states")
    xy = ego.pose.center
    if t == ego.time:
        return xy, float(v)
    # no ego track: advance along the path at constant speed
    a, c = project_points(scenario.nominal_path, xy[None])
    moved = unproject_points(scenario.nominal_path, a + v * (t - ego.time), c, clamp=True)
    return np.asarray(moved).reshape(2), float(v)


@lru_cache(maxsize=64)
def _ensemble(dist: DistributionConfig, n_theta: int, n_accel: int, v_i: float,
              dims: tuple[float, float], spec: GridSpec, offset: float) -> TrajectoryEnsemble:
    return generate_beelines(dist, n_theta, n_accel, v_i, dims, spec, offset)


def evaluate_frame(scenario: Scenario, eval_time: float, config: EvalConfig) -> FrameRecord:
    spec = config.grid
    ego_xy, v_i = ego_at(scenario, eval_time, config.v_i)
    s0, c_ego = project_points(scenario.nominal_path, ego_xy[None])
    mesh = build_curvilinear_mesh(scenario.nominal_path, spec, float(s0[0]))

    preds = scenario.predictions
    if config.keep_horizon is not None:
        preds = cripple_predictions(preds, config.keep_horizon, eval_start=eval_time)

    gt, per_actor = build_gt_field(scenario, eval_time, mesh, spec, config.occupancy_mode,
                                   config.occupancy_threshold)
    pred = build_pred_field(preds, eval_time, mesh, spec, config.occupancy_mode, config.occupancy_threshold)

    dims = (config.ego_length or scenario.ego.pose.length, config.ego_width or scenario.ego.pose.width)
    offset = float(np.clip(c_ego[0], -spec.cross_extent / 2.0, spec.cross_extent / 2.0))
    if offset != float(c_ego[0]):
        raise ConfigurationError(f"ego is {c_ego[0]:.2f} m off the path, outside the grid")
    ens = _ensemble(config.distribution, config.n_theta, config.n_accel, round(float(v_i), 9),
                    (float(dims[0]), float(dims[1])), spec, round(offset, 9))

    present = {}
    for track in scenario.ground_truth:
        _, valid = track.interpolate([eval_time])
        present[track.actor_id] = bool(valid[0])
    metrics = evaluate_metrics(ens.footprints, pred, gt, {k: v for k, v in per_actor.items() if present[k]},
                               config.metric)

    displacement, in_roi = {}, {}
    for track in scenario.ground_truth:
        if not present[track.actor_id]:
            continue
        in_roi[track.actor_id] = roi_filter(track, mesh, eval_time)
        modes = preds.modes.get(track.actor_id) if preds.grid is None else None
        displacement[track.actor_id] = displacement_errors(
            track, modes, config.horizons, eval_time, config.min_over_modes
        )
    return FrameRecord(float(eval_time), float(v_i), metrics, displacement, in_roi)


def _max_defined(current: float | None, new: float | None) -> float | None:
    if new is None:
        return current
    return new if current is None else max(current, new)


def evaluate(scenario: Scenario, config: EvalConfig | None = None) -> EvaluationRun:
    """Evaluate every frame and keep each actor's worst scores while in the region of interest."""
    config = config or EvalConfig()
    run = EvaluationRun(scenario.scenario_id, config.l2_horizon)
    for track in scenario.ground_truth:
        run.actors[track.actor_id] = ActorSummary(track.actor_id, track.cls.value, track.is_aoi, track.is_unsafe)
    for t in scenario.eval_times:
        try:
            frame = evaluate_frame(scenario, t, config)
        except (PredsafeError, ValueError) as exc:
            log.warning("scenario %s, t=%.3f: frame skipped (%s: %s)", scenario.scenario_id, t,
                        type(exc).__name__, exc)
            run.failed_frames.append({"eval_time": float(t), "error": f"{type(exc).__name__}: {exc}"})
            continue
        run.frames.append(frame)
        for actor_id, roi in frame.in_roi.items():
            if not roi:
                continue
            summary = run.actors[actor_id]
            summary.in_roi = True
            summary.worst_p_lambda_actor = _max_defined(
                summary.worst_p_lambda_actor, frame.metrics.per_actor.get(actor_id)
            )
            entry = frame.displacement.get(actor_id)
            if entry is None or entry.missing_prediction:
                summary.missing_prediction_frames += 1
            else:
                summary.worst_l2 = _max_defined(summary.worst_l2, entry.l2_at.get(config.l2_horizon))
    return run
