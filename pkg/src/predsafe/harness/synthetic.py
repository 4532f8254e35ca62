"""Deterministic synthetic scenario corpus.

Each scenario places the ego on a gently curved road with a template-specific
actor of interest plus background traffic.  Templates marked unsafe put the
AOI into the ego's lane within the 3 s horizon, so predictions truncated to a
fraction of a second leave that conflict unprotected.

Layout in path-relative coordinates: ego lane ``|c| < 1.75``, oncoming lane
``1.75 < c < 5.25``, right curb at ``c = -2.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..occupancy import (
    ActorClass,
    ActorTrack,
    EgoState,
    OrientedBox,
    PredictionMode,
    PredictionSet,
    Scenario,
)
from ..path_frame import NominalPath, heading_on_path, unproject_points

TEMPLATES = ("crossing_pedestrian", "lead_vehicle_stop", "cut_in_cyclist", "offroad_walker", "queued_traffic")
UNSAFE_TEMPLATES = frozenset({"crossing_pedestrian", "lead_vehicle_stop", "cut_in_cyclist"})

DT = 0.3
DURATION = 4.2  # last eval time + 3 s horizon
EVAL_TIMES = (0.0, 0.6, 1.2)
PATH_BEHIND = 40.0
PATH_AHEAD = 90.0

_DIMS = {
    ActorClass.VEHICLE: (4.6, 1.9),
    ActorClass.PEDESTRIAN: (0.6, 0.6),
    ActorClass.CYCLIST: (1.8, 0.7),
}


@dataclass
class _Motion:
    """Actor motion in path-relative coordinates as (a, c) samples over time."""

    actor_id: str
    cls: ActorClass
    a: np.ndarray
    c: np.ndarray
    is_aoi: bool = False
    is_unsafe: bool = False


def _times() -> np.ndarray:
    return np.round(np.arange(0.0, DURATION + 1e-9, DT), 6)


def _make_path(curvature: float) -> NominalPath:
    s = np.arange(-PATH_BEHIND, PATH_AHEAD + 1e-9, 0.5)
    if abs(curvature) < 1e-9:
        pts = np.stack([s, np.zeros_like(s)], axis=1)
    else:
        r = 1.0 / curvature
        phi = s * curvature
        pts = np.stack([r * np.sin(phi), r * (1.0 - np.cos(phi))], axis=1)
    return NominalPath(np.round(pts, 6))


def _to_track(path: NominalPath, m: _Motion, origin_s: float) -> ActorTrack:
    t = _times()
    xy = unproject_points(path, m.a, m.c, origin_s)
    da = np.gradient(m.a, t)
    dc = np.gradient(m.c, t)
    base = heading_on_path(path, origin_s + m.a)
    moving = np.hypot(da, dc) > 0.05
    rel = np.where(moving, np.arctan2(dc, da), 0.0)
    # stationary stretches keep the last moving heading
    for i in range(1, rel.size):
        if not moving[i]:
            rel[i] = rel[i - 1] if moving[: i].any() else rel[i]
    heading = base + rel
    length, width = _DIMS[m.cls]
    poses = np.column_stack([xy, heading, np.full(t.size, length), np.full(t.size, width)])
    return ActorTrack(m.actor_id, t, np.round(poses, 6), m.cls, m.is_aoi, m.is_unsafe)


def _constant(a0, c0, va, vc) -> tuple[np.ndarray, np.ndarray]:
    t = _times()
    return a0 + va * t, c0 + vc * t


def _braking(a0, c0, v0, decel, t_brake) -> tuple[np.ndarray, np.ndarray]:
    t = _times()
    tb = np.maximum(t - t_brake, 0.0)
    t_stop = v0 / decel
    tb = np.minimum(tb, t_stop)
    a = a0 + v0 * np.minimum(t, t_brake) + v0 * tb - 0.5 * decel * tb * tb
    return a, np.full_like(t, c0)


# ---------------------------------------------------------------------------
# templates: each returns the AOI motion; background traffic is added separately


def _crossing_pedestrian(rng, v_ego):
    # ego reaches the crossing point roughly when the pedestrian reaches its lane
    speed = rng.uniform(1.3, 1.8)
    t_meet = rng.uniform(1.2, 1.8)
    c0 = rng.uniform(-4.0, -3.0)
    a0 = v_ego * t_meet + rng.uniform(-1.0, 1.0)
    return _Motion("aoi", ActorClass.PEDESTRIAN, *_constant(a0, c0, 0.0, speed), True, True)


def _lead_vehicle_stop(rng, v_ego):
    a0 = rng.uniform(9.0, 14.0)
    decel = rng.uniform(5.0, 7.0)
    a, c = _braking(a0, rng.uniform(-0.3, 0.3), v_ego, decel, rng.uniform(0.3, 0.6))
    return _Motion("aoi", ActorClass.VEHICLE, a, c, True, True)


def _cut_in_cyclist(rng, v_ego):
    t = _times()
    speed = rng.uniform(3.0, 5.0)
    a0 = rng.uniform(6.0, 10.0)
    c0 = rng.uniform(2.4, 3.0)
    t_in = rng.uniform(0.9, 1.5)
    c = c0 - (c0 - rng.uniform(-0.3, 0.3)) * np.clip(t / t_in, 0.0, 1.0)
    return _Motion("aoi", ActorClass.CYCLIST, a0 + speed * t, c, True, True)


def _offroad_walker(rng, v_ego):
    # starts at the curb and walks away from the road
    a0 = rng.uniform(8.0, 16.0)
    speed = rng.uniform(1.3, 1.8)
    return _Motion("aoi", ActorClass.PEDESTRIAN, *_constant(a0, rng.uniform(-3.3, -2.9), speed * 0.3, -speed),
                   True, False)


def _queued_traffic(rng, v_ego):
    # pedestrian waiting on the far side of a stopped queue
    return _Motion("aoi", ActorClass.PEDESTRIAN,
                   *_constant(rng.uniform(14.0, 22.0), rng.uniform(4.5, 4.8), 0.0, 0.0), True, False)


_TEMPLATE_FN: dict[str, Callable] = {
    "crossing_pedestrian": _crossing_pedestrian,
    "lead_vehicle_stop": _lead_vehicle_stop,
    "cut_in_cyclist": _cut_in_cyclist,
    "offroad_walker": _offroad_walker,
    "queued_traffic": _queued_traffic,
}


def _background(rng, template: str) -> list[_Motion]:
    out = []
    # oncoming traffic: large displacement errors once predictions are cut short
    for k in range(rng.integers(1, 3)):
        speed = rng.uniform(10.0, 14.0)
        out.append(_Motion(f"oncoming_{k}", ActorClass.VEHICLE,
                           *_constant(rng.uniform(28.0, 45.0) + 14.0 * k, rng.uniform(3.3, 3.7), -speed, 0.0)))
    # pedestrians strolling along the right sidewalk
    for k in range(rng.integers(1, 3)):
        out.append(_Motion(f"sidewalk_{k}", ActorClass.PEDESTRIAN,
                           *_constant(rng.uniform(3.0, 26.0), rng.uniform(-4.8, -4.2),
                                      rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 1.6), 0.0)))
    if template == "queued_traffic":
        for k in range(3):
            out.append(_Motion(f"queued_{k}", ActorClass.VEHICLE,
                               *_constant(10.0 + 6.5 * k, 3.5, 0.0, 0.0)))
    else:
        out.append(_Motion("parked_0", ActorClass.VEHICLE,
                           *_constant(rng.uniform(18.0, 28.0), -3.4, 0.0, 0.0)))
    return out


def make_scenario(template: str, rng: np.random.Generator, scenario_id: str) -> Scenario:
    """One synthetic scenario from a named template."""
    if template not in _TEMPLATE_FN:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    curvature = float(rng.choice([0.0, rng.uniform(-1 / 150, 1 / 150)]))
    path = _make_path(curvature)
    v_ego = float(round(rng.uniform(6.0, 9.0), 3))
    origin_s = PATH_BEHIND

    motions = [_TEMPLATE_FN[template](rng, v_ego)] + _background(rng, template)
    tracks = [_to_track(path, m, origin_s) for m in motions]

    t = _times()
    ego_xy = unproject_points(path, v_ego * t, np.zeros_like(t), origin_s)
    ego_heading = heading_on_path(path, origin_s + v_ego * t)
    ego_states = np.column_stack([t, ego_xy, ego_heading, np.full(t.size, v_ego)])
    ego = EgoState(OrientedBox(float(ego_xy[0, 0]), float(ego_xy[0, 1]), float(ego_heading[0]), 4.5, 2.0),
                   v_ego, 0.0, np.round(ego_states, 6))
    preds = PredictionSet(modes={tr.actor_id: [PredictionMode(1.0, tr)] for tr in tracks})
    return Scenario(scenario_id, path, ego, tracks, preds, list(EVAL_TIMES))


def generate_synthetic_corpus(seed: int, n_scenarios: int, config=None) -> list[Scenario]:
    """``n_scenarios`` scenarios cycling through the templates, reproducible from ``seed``.

    ``config`` is accepted for interface symmetry; the scene geometry does not depend on it.
    """
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be at least 1")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_scenarios):
        template = TEMPLATES[i % len(TEMPLATES)]
        child = np.random.default_rng(rng.integers(0, 2**63 - 1))
        out.append(make_scenario(template, child, f"syn{seed}_{i:03d}_{template}"))
    return out
