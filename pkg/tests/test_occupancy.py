import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from predsafe.errors import ConfigurationError, ShapeError
from predsafe.occupancy import (
    ActorClass,
    ActorTrack,
    EgoState,
    GridSpec,
    OccupancyField,
    OrientedBox,
    PredictionMode,
    PredictionSet,
    Scenario,
    build_gt_field,
    build_pred_field,
    rasterize_box,
)
from predsafe.path_frame import NominalPath, build_curvilinear_mesh

PATH = NominalPath(np.array([[0.0, 0.0], [100.0, 0.0]]))
SPEC = GridSpec()
MESH = build_curvilinear_mesh(PATH, SPEC, 0.0)


def track(actor_id, x, y, heading=0.0, length=0.5, width=0.5, t_end=3.0, **kw):
    t = np.round(np.arange(0.0, t_end + 1e-9, 0.3), 6)
    poses = np.tile([x, y, heading, length, width], (t.size, 1))
    return ActorTrack(actor_id, t, poses, **kw)


def scenario(actors, preds=None):
    ego = EgoState(OrientedBox(0.0, 0.0, 0.0, 4.5, 2.0), 5.0)
    return Scenario("s", PATH, ego, actors, preds or PredictionSet(), [0.0])


def test_grid_defaults():
    assert SPEC.shape == (11, 60, 20)
    assert SPEC.n_steps == 10
    with pytest.raises(ConfigurationError):
        GridSpec(along_extent=30.2)
    with pytest.raises(ConfigurationError):
        GridSpec(dt=0.0)


def test_box_on_single_cell():
    # cell (10, 4) spans x in [5, 5.5], y in [-3, -2.5]
    frac = rasterize_box(OrientedBox(5.25, -2.75, 0.0, 0.5, 0.5), MESH)
    assert frac == pytest.approx({(10, 4): 1.0})


def test_box_straddling_two_cells():
    frac = rasterize_box(OrientedBox(5.5, -2.75, 0.0, 1.0, 0.5), MESH)
    assert frac == pytest.approx({(10, 4): 1.0, (11, 4): 1.0})
    frac = rasterize_box(OrientedBox(5.5, -2.75, 0.0, 0.5, 0.5), MESH)
    assert frac == pytest.approx({(10, 4): 0.5, (11, 4): 0.5})
    frac = rasterize_box(OrientedBox(5.25, -2.75, 0.0, 0.25, 0.5), MESH)
    assert frac == pytest.approx({(10, 4): 0.5})


def test_box_outside_grid_is_empty():
    assert rasterize_box(OrientedBox(-20.0, 0.0, 0.0, 2.0, 2.0), MESH) == {}


def test_rotated_unit_square_monte_carlo():
    box = OrientedBox(7.1, 0.3, math.pi / 4, 1.0, 1.0)
    frac = rasterize_box(box, MESH)
    total = sum(frac.values()) * 0.25
    assert total == pytest.approx(1.0, abs=1e-6)

    # per-cell Monte Carlo oracle: 10^6 uniform samples over the box's bounding square
    rng = np.random.default_rng(0)
    half = math.sqrt(2) / 2
    pts = rng.uniform(-half, half, size=(1_000_000, 2)) + [box.x, box.y]
    rel = pts - [box.x, box.y]
    c, s = math.cos(-box.heading), math.sin(-box.heading)
    local = np.column_stack([c * rel[:, 0] - s * rel[:, 1], s * rel[:, 0] + c * rel[:, 1]])
    inside = np.all(np.abs(local) <= 0.5, axis=1)
    area_per_sample = (2 * half) ** 2 / pts.shape[0]
    i = np.floor(pts[inside, 0] / 0.5).astype(int)
    j = np.floor((pts[inside, 1] + 5.0) / 0.5).astype(int)
    counts = {}
    for key in zip(i, j):
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == set(frac)
    for key, n in counts.items():
        assert frac[key] * 0.25 == pytest.approx(n * area_per_sample, abs=3e-3)


def test_empty_scenario_fields():
    gt, per_actor = build_gt_field(scenario([]), 0.0, MESH, SPEC)
    assert not gt.values.any() and per_actor == {}
    assert not build_pred_field(PredictionSet(), 0.0, MESH, SPEC).values.any()


def test_stationary_box_full_cell_every_step():
    gt, per_actor = build_gt_field(scenario([track("a", 5.25, -2.75)]), 0.0, MESH, SPEC)
    assert np.all(gt.values[:, 10, 4] == pytest.approx(1.0))
    assert gt.values.sum() == pytest.approx(SPEC.n_times)
    np.testing.assert_array_equal(per_actor["a"].values, gt.values)


def test_two_half_actors_combine():
    a = track("a", 5.25, -2.625, width=0.25)  # upper half of cell (10, 4)
    b = track("b", 5.125, -2.75, length=0.25)  # left half
    gt, per_actor = build_gt_field(scenario([a, b]), 0.0, MESH, SPEC)
    assert per_actor["a"].values[0, 10, 4] == pytest.approx(0.5)
    assert per_actor["b"].values[0, 10, 4] == pytest.approx(0.5)
    assert gt.values[0, 10, 4] == pytest.approx(0.75)


def test_missing_horizon_omits_steps():
    gt, _ = build_gt_field(scenario([track("a", 5.25, -2.75, t_end=0.9)]), 0.0, MESH, SPEC)
    assert gt.values[:4, 10, 4] == pytest.approx(1.0)
    assert not gt.values[4:].any()


def test_pred_single_and_two_modes():
    tr = track("a", 5.25, -2.75)
    one = build_pred_field(PredictionSet(modes={"a": [PredictionMode(1.0, tr)]}), 0.0, MESH, SPEC)
    assert one.values[3, 10, 4] == pytest.approx(1.0)
    two = build_pred_field(PredictionSet(modes={"a": [PredictionMode(0.6, tr), PredictionMode(0.4, tr)]}),
                           0.0, MESH, SPEC)
    assert two.values[3, 10, 4] == pytest.approx(1 - 0.4 * 0.6)


def test_direct_grid_passthrough_and_shape_check(rng):
    values = rng.uniform(size=SPEC.shape)
    out = build_pred_field(PredictionSet(grid=OccupancyField(values, SPEC)), 0.0, MESH, SPEC)
    np.testing.assert_array_equal(out.values, values)
    small = GridSpec(along_extent=10.0)
    with pytest.raises(ShapeError):
        build_pred_field(PredictionSet(grid=OccupancyField(np.zeros(small.shape), small)), 0.0, MESH, SPEC)


def test_binary_mode_thresholds():
    tr = track("a", 5.25, -2.75, length=0.2)  # 40% of one cell
    gt, _ = build_gt_field(scenario([tr]), 0.0, MESH, SPEC, occupancy_mode="binary")
    assert not gt.values.any()
    tr = track("a", 5.25, -2.75, length=0.3)  # 60%
    gt, _ = build_gt_field(scenario([tr]), 0.0, MESH, SPEC, occupancy_mode="binary")
    assert gt.values[0, 10, 4] == 1.0


def test_field_and_track_validation():
    with pytest.raises(ValueError):
        OccupancyField(np.full(SPEC.shape, 1.5), SPEC)
    with pytest.raises(ValueError):
        ActorTrack("a", [0.0, 0.0], np.zeros((2, 5)) + 1)
    with pytest.raises(ValueError):
        PredictionSet(modes={"a": [PredictionMode(0.7, track("a", 1, 1)), PredictionMode(0.4, track("a", 1, 1))]})
    assert ActorTrack("a", [0.0], [[0, 0, 0, 1, 1]], cls="pedestrian").cls is ActorClass.PEDESTRIAN


def test_interpolation_uses_shortest_heading_arc():
    tr = ActorTrack("a", [0.0, 1.0], [[0, 0, 3.0, 1, 1], [2, 0, -3.0, 1, 1]])
    poses, valid = tr.interpolate([0.5, 2.0])
    assert valid.tolist() == [True, False]
    assert poses[0, 0] == pytest.approx(1.0)
    assert abs(poses[0, 2]) == pytest.approx(math.pi, abs=1e-9)
    poses, valid = tr.interpolate([2.0], hold_last=True)
    assert valid[0] and poses[0, 0] == pytest.approx(2.0)


boxes = st.tuples(
    st.floats(-3.0, 33.0), st.floats(-7.0, 7.0), st.floats(-math.pi, math.pi),
    st.floats(0.2, 5.0), st.floats(0.2, 3.0),
)


def _clip_area_oracle(box: OrientedBox) -> float:
    """Area of box ∩ grid rectangle by midpoint sampling of the box."""
    n = 400
    u = (np.arange(n) + 0.5) / n - 0.5
    lx, ly = np.meshgrid(u * box.length, u * box.width, indexing="ij")
    c, s = math.cos(box.heading), math.sin(box.heading)
    x = box.x + c * lx - s * ly
    y = box.y + s * lx + c * ly
    inside = (x >= 0) & (x <= 30) & (y >= -5) & (y <= 5)
    return inside.mean() * box.length * box.width


@given(boxes)
def test_coverage_sums_to_clipped_area(params):
    box = OrientedBox(*params)
    total = sum(rasterize_box(box, MESH).values()) * 0.25
    assert 0.0 <= total <= box.length * box.width + 1e-9
    if (0.5 < box.x < 29.5) and (-4.5 < box.y < 4.5) and max(box.length, box.width) < 0.9:
        assert total == pytest.approx(box.length * box.width, abs=1e-6)
    else:
        assert total == pytest.approx(_clip_area_oracle(box), abs=0.02 * box.length * box.width + 1e-3)


@given(st.lists(st.tuples(st.floats(1.0, 29.0), st.floats(-4.0, 4.0), st.floats(0.0, 1.0)), min_size=1, max_size=4),
       st.floats(0.0, 1.0))
def test_fields_in_range_and_monotone(actors, scale):
    tracks = [track(f"a{k}", x, y, length=1.3, width=0.9) for k, (x, y, _) in enumerate(actors)]
    gt, per_actor = build_gt_field(scenario(tracks), 0.0, MESH, SPEC)
    assert gt.values.min() >= 0.0 and gt.values.max() <= 1.0
    for f in per_actor.values():
        assert np.all(gt.values >= f.values - 1e-12)
    modes = {t.actor_id: [PredictionMode(w / 2, t)] for t, (_, _, w) in zip(tracks, actors)}
    scaled = {k: [PredictionMode(m.weight * scale, m.track) for m in ms] for k, ms in modes.items()}
    p = build_pred_field(PredictionSet(modes=modes), 0.0, MESH, SPEC).values
    q = build_pred_field(PredictionSet(modes=scaled), 0.0, MESH, SPEC).values
    assert np.all(q <= p + 1e-12)
    assert p.min() >= 0.0 and p.max() <= 1.0
