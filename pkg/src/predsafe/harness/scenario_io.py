"""Scenario JSON reading and writing.

Schema (``schema_version`` "1.0")::

    {
      "schema_version": "1.0",
      "id": "optional scenario id",
      "path": [[x, y], ...],
      "ego": {"pose": {"x", "y", "heading"}, "v", "length", "width",
              "t": 0.0, "states": [{"t", "x", "y", "heading", "v"?}, ...]},
      "eval_times": [...],
      "actors": [{"id", "class", "is_aoi", "is_unsafe"?, "states": [{"t", "x", "y", "heading", "length", "width"}]}],
      "predictions": {actor_id: [{"weight", "states": [...]}]}
                   | {"grid": {"dims": [T, A, C], "values": [...]}}
    }

``ego.t``, ``ego.states`` and ``is_unsafe`` are optional extensions; a
missing ``ego.v`` is derived from the ego states.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ScenarioFormatError
from ..occupancy import (
    ActorTrack,
    EgoState,
    GridSpec,
    OccupancyField,
    OrientedBox,
    PredictionMode,
    PredictionSet,
    Scenario,
)
from ..path_frame import NominalPath

SCHEMA_VERSION = "1.0"
_STATE_KEYS = ("t", "x", "y", "heading", "length", "width")


def _track(actor_id: str, states: list, **kw) -> ActorTrack:
    try:
        times = [float(s["t"]) for s in states]
        poses = [[float(s[k]) for k in _STATE_KEYS[1:]] for s in states]
    except KeyError as exc:
        raise ScenarioFormatError(f"actor {actor_id!r}: state missing key {exc}") from exc
    try:
        return ActorTrack(actor_id, np.array(times), np.array(poses).reshape(-1, 5), **kw)
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def _states(track: ActorTrack) -> list[dict]:
    return [
        {"t": float(t), "x": float(p[0]), "y": float(p[1]), "heading": float(p[2]),
         "length": float(p[3]), "width": float(p[4])}
        for t, p in zip(track.times, track.poses)
    ]


def parse_predictions(data: dict, spec: GridSpec | None = None) -> PredictionSet:
    if "grid" in data and isinstance(data["grid"], dict) and "dims" in data["grid"]:
        dims = tuple(int(d) for d in data["grid"]["dims"])
        values = np.asarray(data["grid"]["values"], dtype=np.float64)
        if values.size != int(np.prod(dims)):
            raise ScenarioFormatError(f"grid declares dims {dims} but has {values.size} values")
        if spec is None:
            raise ScenarioFormatError("a direct prediction grid needs the evaluation grid spec")
        if dims != spec.shape:
            raise ScenarioFormatError(f"grid dims {dims} do not match the evaluation grid {spec.shape}")
        return PredictionSet(grid=OccupancyField(values.reshape(dims), spec))
    modes = {}
    for actor_id, entries in data.items():
        modes[actor_id] = [
            PredictionMode(float(m["weight"]), _track(actor_id, m["states"])) for m in entries
        ]
    return PredictionSet(modes=modes)


def scenario_from_dict(data: dict, spec: GridSpec | None = None, scenario_id: str | None = None) -> Scenario:
    version = str(data.get("schema_version", ""))
    if version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ScenarioFormatError(f"unsupported schema_version {version!r}")
    try:
        path = NominalPath(np.asarray(data["path"], dtype=np.float64))
        ego_d = data["ego"]
        pose = ego_d["pose"]
        ego_box = OrientedBox(float(pose["x"]), float(pose["y"]), float(pose.get("heading", 0.0)),
                              float(ego_d["length"]), float(ego_d["width"]))
        ego_states = None
        if ego_d.get("states"):
            ego_states = np.array(
                [[s["t"], s["x"], s["y"], s.get("heading", 0.0), s.get("v", np.nan)] for s in ego_d["states"]],
                dtype=np.float64,
            )
        ego = EgoState(ego_box, None if ego_d.get("v") is None else float(ego_d["v"]),
                       float(ego_d.get("t", 0.0)), ego_states)
        actors = [
            _track(str(a["id"]), a["states"], cls=a.get("class", "other"),
                   is_aoi=bool(a.get("is_aoi", False)), is_unsafe=bool(a.get("is_unsafe", False)))
            for a in data.get("actors", [])
        ]
        preds = parse_predictions(data.get("predictions", {}), spec)
        eval_times = [float(t) for t in data["eval_times"]]
    except KeyError as exc:
        raise ScenarioFormatError(f"scenario missing key {exc}") from exc
    return Scenario(scenario_id or str(data.get("id", "scenario")), path, ego, actors, preds, eval_times)


def predictions_to_dict(preds: PredictionSet) -> dict:
    if preds.grid is not None:
        return {"grid": {"dims": list(preds.grid.values.shape), "values": preds.grid.values.ravel().tolist()}}
    return {
        actor_id: [{"weight": float(m.weight), "states": _states(m.track)} for m in modes]
        for actor_id, modes in preds.modes.items()
    }


def scenario_to_dict(sc: Scenario) -> dict:
    ego = {
        "pose": {"x": sc.ego.pose.x, "y": sc.ego.pose.y, "heading": sc.ego.pose.heading},
        "v": sc.ego.v,
        "length": sc.ego.pose.length,
        "width": sc.ego.pose.width,
        "t": sc.ego.time,
    }
    if sc.ego.states is not None:
        ego["states"] = [
            {k: float(v) for k, v in zip(("t", "x", "y", "heading", "v"), row) if not np.isnan(v)}
            for row in sc.ego.states
        ]
    return {
        "schema_version": SCHEMA_VERSION,
        "id": sc.scenario_id,
        "path": sc.nominal_path.vertices.tolist(),
        "ego": ego,
        "eval_times": [float(t) for t in sc.eval_times],
        "actors": [
            {"id": a.actor_id, "class": a.cls.value, "is_aoi": a.is_aoi, "is_unsafe": a.is_unsafe,
             "states": _states(a)}
            for a in sc.ground_truth
        ],
        "predictions": predictions_to_dict(sc.predictions),
    }


def load_scenario(path: str | Path, spec: GridSpec | None = None) -> Scenario:
    path = Path(path)
    with open(path) as fh:
        data = json.load(fh)
    return scenario_from_dict(data, spec, scenario_id=data.get("id") or path.stem)


def dump_scenario(sc: Scenario, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=1, sort_keys=True)
        fh.write("\n")
