import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import reference
from instances import GOLDEN_SPEC, golden_scene, random_instance
from predsafe.errors import ConfigurationError, MissingActorError, ShapeError
from predsafe.footprints import Footprints
from predsafe.metrics import (
    MetricConfig,
    evaluate_metrics,
    exposure,
    footprint_occupancy,
    footprint_terms,
    grad_p_lambda,
    p_lambda,
    p_lambda_actor,
    p_zeta,
    unprotected,
)
from predsafe.occupancy import GridSpec, OccupancyField

E = MetricConfig(exposure_variant="e")
EP = MetricConfig(exposure_variant="e_prime")


def test_footprint_occupancy_examples():
    spec = GridSpec(dx=1, dy=1, dt=1, along_extent=2, cross_extent=1, t_max=1)
    field = np.zeros(spec.shape)
    assert footprint_occupancy(field, {(1, 0, 0): 1.0}) == 0.0
    field[1, 0, 0] = 1.0
    assert footprint_occupancy(field, {(1, 0, 0): 1.0}) == 1.0
    field[1] = 0.5
    assert footprint_occupancy(field, {(1, 0, 0): 1.0, (1, 1, 0): 1.0}) == pytest.approx(0.75)
    assert footprint_occupancy(OccupancyField(field, spec), {}) == 0.0


class TestGoldenScene:
    """Single trajectory through F1, F2, F3 with uniform reach 1/3."""

    def test_a_predicted(self):
        fps, a, g = golden_scene()
        assert p_lambda(fps, a, g, E) == pytest.approx(0.0, abs=1e-12)
        assert p_zeta(fps, a, g, E) == pytest.approx(0.5, abs=1e-12)

    def test_a_ground_truth(self):
        fps, a, g = golden_scene()
        both = np.maximum(a, g)
        zero = np.zeros(GOLDEN_SPEC.shape)
        assert p_lambda(fps, zero, both, E) == pytest.approx(0.5, abs=1e-12)

    def test_unprotected_f3(self):
        fps, a, _ = golden_scene()
        assert unprotected(a, fps, 2, MetricConfig(window=3)) == 0.0
        assert unprotected(np.zeros(GOLDEN_SPEC.shape), fps, 2, MetricConfig()) == 1.0

    def test_exposure_values(self):
        fps, a, g = golden_scene()
        both = np.maximum(a, g)
        assert [exposure(both, fps, h, E) for h in range(3)] == [1.0, 1.0, 0.0]
        assert all(exposure(np.zeros(GOLDEN_SPEC.shape), fps, h, E) == 1.0 for h in range(3))

    def test_actor_restricted(self):
        fps, a, g = golden_scene()
        both = np.maximum(a, g)
        zero = np.zeros(GOLDEN_SPEC.shape)
        per_actor = {"A": a, "G": g, "none": zero}
        assert p_lambda_actor(fps, zero, both, per_actor, "A", E) == pytest.approx(0.5, abs=1e-12)
        assert p_lambda_actor(fps, zero, both, per_actor, "G", E) == 0.0
        assert p_lambda_actor(fps, zero, both, per_actor, "none", E) == 0.0
        with pytest.raises(MissingActorError):
            p_lambda_actor(fps, zero, both, per_actor, "B", E)
        ref = reference.scores([[{(s + 1, s, 0): 1.0} for s in range(3)]], [[1 / 3] * 3], zero, both,
                               variant="e", actor_fields=per_actor)
        assert ref[2] == pytest.approx({"A": 0.5, "G": 0.0, "none": 0.0})


def test_unprotected_window_product():
    spec = GridSpec(dx=1, dy=1, dt=1, along_extent=1, cross_extent=1, t_max=3)
    fps = Footprints.from_cell_lists([[{(0, 0): 1.0}] * 3], np.ones((1, 3)), spec)
    assert unprotected(np.full(spec.shape, 0.5), fps, 2, MetricConfig(window=3)) == pytest.approx(0.125)
    # window clamps at the first step
    assert unprotected(np.full(spec.shape, 0.5), fps, 0, MetricConfig(window=3)) == pytest.approx(0.5)
    assert exposure(np.full(spec.shape, 0.5), fps, 0, E) == 1.0


def test_trivial_cases(rng):
    inst = random_instance(rng)
    zero = np.zeros(inst["spec"].shape)
    assert p_lambda(inst["fps"], inst["pred"], zero, E) == 0.0
    assert p_zeta(inst["fps"], zero, inst["gt"], E) == 0.0
    # with binary occupancy and whole-cell footprints, h vanishes wherever gt occupies
    fps = inst["fps"]
    whole = Footprints(fps.ptr, fps.cells, np.ones_like(fps.frac), fps.reach, fps.spec)
    binary = (inst["gt"] > 0.5).astype(float)
    for cfg in (E, EP):
        assert p_zeta(whole, binary, binary, cfg) in (0.0, None)


def test_undefined_when_denominator_zero():
    fps, a, g = golden_scene()
    fps0 = fps.with_reach(np.zeros((1, 3)))
    res = evaluate_metrics(fps0, a, g, {"A": a}, E)
    assert res.p_lambda is None and res.p_zeta is None and res.per_actor["A"] is None


def test_shape_mismatch_and_config_errors():
    fps, a, _ = golden_scene()
    with pytest.raises(ShapeError):
        p_lambda(fps, np.zeros((2, 2, 2)), a, E)
    with pytest.raises(ConfigurationError):
        MetricConfig(window=0)
    with pytest.raises(ConfigurationError):
        MetricConfig(exposure_variant="x")


def test_perfect_binary_prediction_blocks():
    spec = GridSpec(dx=1, dy=1, dt=1, along_extent=5, cross_extent=1, t_max=5)
    cells = [[{(s, 0): 1.0} for s in range(5)], [{(0, 0): 1.0}] * 5]
    fps = Footprints.from_cell_lists(cells, np.full((2, 5), 0.1), spec)
    gt = np.zeros(spec.shape)
    gt[3, 2, 0] = 1.0
    gt[:, 0, 0] = 0.0
    assert p_lambda(fps, gt, gt, E) == 0.0
    assert p_lambda(fps, np.zeros(spec.shape), gt, E) > 0.0


@pytest.mark.parametrize("variant", ["e", "e_prime"])
@pytest.mark.parametrize("window", [1, 3])
def test_reference_equivalence(variant, window):
    rng = np.random.default_rng(11 + window)
    cfg = MetricConfig(window=window, exposure_variant=variant)
    for _ in range(60):
        inst = random_instance(rng)
        res = evaluate_metrics(inst["fps"], inst["pred"], inst["gt"], inst["actors"], cfg)
        ref = reference.scores(inst["ref_fps"], inst["reach"], inst["pred"], inst["gt"], window, variant,
                               actor_fields=inst["actors"])
        for got, want in ((res.p_lambda, ref[0]), (res.p_zeta, ref[1])):
            assert (got is None) == (want is None)
            if got is not None:
                assert abs(got - want) <= 1e-9
        for k, want in ref[2].items():
            assert (res.per_actor[k] is None) == (want is None)
            if want is not None:
                assert abs(res.per_actor[k] - want) <= 1e-9


def fd_check(inst, cfg, h=1e-6):
    fps, pred, gt = inst["fps"], inst["pred"], inst["gt"]
    grad = grad_p_lambda(fps, pred, gt, cfg)
    fd = np.zeros_like(pred)
    touched = np.unique(fps.cells)
    for flat in touched:
        idx = np.unravel_index(flat, pred.shape)
        up, dn = pred.copy(), pred.copy()
        up[idx] += h
        dn[idx] -= h
        fd[idx] = (p_lambda(fps, up, gt, cfg) - p_lambda(fps, dn, gt, cfg)) / (2 * h)
    return grad, fd


@pytest.mark.parametrize("variant", ["e", "e_prime"])
def test_gradient_matches_finite_differences(variant):
    rng = np.random.default_rng(5)
    cfg = MetricConfig(exposure_variant=variant)
    for _ in range(10):
        inst = random_instance(rng, max_cells=4, max_steps=3, open_unit=True)
        grad, fd = fd_check(inst, cfg)
        scale = max(np.abs(fd).max(), 1e-12)
        assert np.abs(grad - fd).max() / scale <= 1e-5


def test_gradient_trivial_cases(rng):
    inst = random_instance(rng, open_unit=True)
    grad = grad_p_lambda(inst["fps"], inst["pred"], np.zeros(inst["spec"].shape), E)
    assert not grad.any()
    grad = grad_p_lambda(inst["fps"], inst["pred"], inst["gt"], E)
    untouched = np.ones(grad.size, bool)
    untouched[inst["fps"].cells] = False
    assert not grad.reshape(-1)[untouched].any()


def test_terms_invariants(rng):
    for _ in range(50):
        inst = random_instance(rng)
        t = footprint_terms(inst["fps"], inst["pred"], inst["gt"], EP)
        for arr in (t.d, t.e, t.e_prime, t.h, t.g, t.unprotected, t.exposed):
            assert arr.min() >= 0.0 and arr.max() <= 1.0
        assert np.all(t.d <= t.e + 1e-15) and np.all(t.h <= t.g + 1e-15)


seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(-30, 30))
def test_scale_invariance_power_of_two(seed, k):
    inst = random_instance(np.random.default_rng(seed))
    fps = inst["fps"]
    s = 2.0 ** k
    a = evaluate_metrics(fps, inst["pred"], inst["gt"], inst["actors"], EP)
    b = evaluate_metrics(fps.with_reach(fps.reach * s), inst["pred"], inst["gt"], inst["actors"], EP)
    assert (a.p_lambda, a.p_zeta, a.per_actor) == (b.p_lambda, b.p_zeta, b.per_actor)


@given(seeds, st.floats(1e-6, 1e6))
def test_scale_invariance_arbitrary_factor(seed, s):
    inst = random_instance(np.random.default_rng(seed))
    fps = inst["fps"]
    a = evaluate_metrics(fps, inst["pred"], inst["gt"], inst["actors"], EP)
    b = evaluate_metrics(fps.with_reach(fps.reach * s), inst["pred"], inst["gt"], inst["actors"], EP)
    for x, y in [(a.p_lambda, b.p_lambda), (a.p_zeta, b.p_zeta)] + [(a.per_actor[k], b.per_actor[k]) for k in a.per_actor]:
        assert (x is None) == (y is None)
        if x is not None:
            assert y == pytest.approx(x, rel=1e-12, abs=1e-15)


@given(seeds, st.floats(0.0, 1.0))
def test_safety_monotone_in_prediction(seed, bump):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    more = np.clip(inst["pred"] + bump * rng.uniform(size=inst["pred"].shape), 0.0, 1.0)
    a = p_lambda(inst["fps"], inst["pred"], inst["gt"], E)
    b = p_lambda(inst["fps"], more, inst["gt"], E)
    if a is not None:
        assert b <= a + 1e-12


@given(seeds, st.floats(0.0, 1.0))
def test_comfort_monotone_in_prediction(seed, bump):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng)
    more = np.clip(inst["pred"] + bump * rng.uniform(size=inst["pred"].shape), 0.0, 1.0)
    for cfg in (E, EP):
        a = p_zeta(inst["fps"], inst["pred"], inst["gt"], cfg)
        b = p_zeta(inst["fps"], more, inst["gt"], cfg)
        if a is not None:
            assert b >= a - 1e-12


@given(seeds, st.sampled_from(["e", "e_prime"]), st.integers(1, 5))
def test_outputs_in_unit_interval(seed, variant, window):
    inst = random_instance(np.random.default_rng(seed))
    res = evaluate_metrics(inst["fps"], inst["pred"], inst["gt"], inst["actors"],
                           MetricConfig(window=window, exposure_variant=variant))
    for v in [res.p_lambda, res.p_zeta, *res.per_actor.values()]:
        assert v is None or 0.0 <= v <= 1.0
