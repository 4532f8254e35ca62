"""Safety (P(lambda)) and comfort (P(zeta)) scores over an ego footprint ensemble.

Notation per footprint ``F`` at step ``H`` of trajectory ``b``:

* ``occ_pred`` / ``occ_gt``: probability that at least one cell of ``F`` is
  occupied, with coverage fractions attenuating each cell.
* ``unprotected``: no predicted occupancy over the protection window ending at ``H``.
* ``exposed``: no ground-truth occupancy over the steps before ``H``.
* ``d = unprotected * occ_gt * exposed``; ``e = exposed`` (or
  ``e' = exposed * unprotected``); ``h = (1 - unprotected) * (1 - occ_gt) * exposed``;
  ``g = (1 - occ_gt) * exposed``.

``P(lambda) = sum(w d) / sum(w e)`` and ``P(zeta) = sum(w h) / sum(w g)`` with
reach weights ``w``.  A zero denominator leaves the score undefined (None).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, MissingActorError, ShapeError
from .footprints import Footprints
from .kernels import segment_products
from .occupancy import OccupancyField

EXPOSURE_VARIANTS = ("e", "e_prime")


@dataclass(frozen=True)
class MetricConfig:
    """``window`` steps enter the protection product (``t1 = H - window + 1``,
    clamped to the first step).  ``exposure_window`` does the same for exposure;
    None means the whole history before ``H``.
    """

    window: int = 3
    exposure_variant: str = "e_prime"
    exposure_window: int | None = None

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigurationError("protection window must be at least one step")
        if self.exposure_window is not None and self.exposure_window < 1:
            raise ConfigurationError("exposure window must be at least one step")
        if self.exposure_variant not in EXPOSURE_VARIANTS:
            raise ConfigurationError(f"exposure_variant must be one of {EXPOSURE_VARIANTS}")


@dataclass(frozen=True, eq=False)
class FootprintTerms:
    occ_pred: np.ndarray
    occ_gt: np.ndarray
    unprotected: np.ndarray
    exposed: np.ndarray
    d: np.ndarray
    e: np.ndarray
    e_prime: np.ndarray
    h: np.ndarray
    g: np.ndarray

    def denominator_terms(self, variant: str) -> np.ndarray:
        return self.e if variant == "e" else self.e_prime


@dataclass
class MetricResult:
    p_lambda: float | None
    p_zeta: float | None
    per_actor: dict[str, float | None] = field(default_factory=dict)
    lambda_num: float = 0.0
    lambda_den: float = 0.0
    zeta_num: float = 0.0
    zeta_den: float = 0.0

    def to_dict(self) -> dict:
        return {
            "p_lambda": self.p_lambda,
            "p_zeta": self.p_zeta,
            "p_lambda_actor": dict(self.per_actor),
            "lambda_num": self.lambda_num,
            "lambda_den": self.lambda_den,
            "zeta_num": self.zeta_num,
            "zeta_den": self.zeta_den,
        }


def _values(fieldlike, fps: Footprints) -> np.ndarray:
    if isinstance(fieldlike, OccupancyField):
        if fieldlike.spec.shape != fps.spec.shape:
            raise ShapeError(f"field grid {fieldlike.spec.shape} != ensemble grid {fps.spec.shape}")
        return fieldlike.values.reshape(-1)
    v = np.asarray(fieldlike, dtype=np.float64)
    if v.shape != fps.spec.shape:
        raise ShapeError(f"field shape {v.shape} != ensemble grid {fps.spec.shape}")
    return v.reshape(-1)


def _footprint_free(fps: Footprints, values: np.ndarray) -> np.ndarray:
    """Per-footprint probability that no cell is occupied, shape (B, S)."""
    return segment_products(fps.ptr, fps.cells, fps.frac, values).reshape(fps.reach.shape)


def footprint_occupancy(fieldlike, cells: Mapping[tuple[int, int, int], float]) -> float:
    """Probability that at least one cell of one footprint is occupied.

    ``cells`` maps (time, along, cross) indices to coverage fractions.
    """
    values = fieldlike.values if isinstance(fieldlike, OccupancyField) else np.asarray(fieldlike)
    q = 1.0
    for idx, f in cells.items():
        q *= 1.0 - f * values[idx]
    return 1.0 - q


def _window_product(q: np.ndarray, window: int | None, include_current: bool) -> np.ndarray:
    """Product of ``q[:, t1..H]`` (or ``..H-1``) for every ``H``; empty products are 1."""
    n_b, n_s = q.shape
    if window is None:
        window = n_s + 1
    out = np.ones_like(q)
    last = 0 if include_current else 1
    first = window - 1
    # ascending t so the multiplication order matches a plain loop
    for lag in range(first, last - 1, -1):
        if lag >= n_s:
            continue
        shifted = np.ones_like(q)
        shifted[:, lag:] = q[:, : n_s - lag]
        out = out * shifted
    return out


def footprint_terms(fps: Footprints, pred_field, gt_field, cfg: MetricConfig) -> FootprintTerms:
    q_pred = _footprint_free(fps, _values(pred_field, fps))
    q_gt = _footprint_free(fps, _values(gt_field, fps))
    unprotected = _window_product(q_pred, cfg.window, include_current=True)
    exposed = _window_product(q_gt, cfg.exposure_window, include_current=False)
    occ_pred = 1.0 - q_pred
    occ_gt = 1.0 - q_gt
    free_gt = 1.0 - occ_gt
    return FootprintTerms(
        occ_pred=occ_pred,
        occ_gt=occ_gt,
        unprotected=unprotected,
        exposed=exposed,
        d=unprotected * occ_gt * exposed,
        e=exposed,
        e_prime=exposed * unprotected,
        h=(1.0 - unprotected) * free_gt * exposed,
        g=free_gt * exposed,
    )


def unprotected(pred_field, fps: Footprints, H: int, cfg: MetricConfig, b: int = 0) -> float:
    """Probability that footprint ``H`` (0-based step) of trajectory ``b`` is unprotected."""
    q = _footprint_free(fps, _values(pred_field, fps))
    return float(_window_product(q, cfg.window, include_current=True)[b, H])


def exposure(gt_field, fps: Footprints, H: int, cfg: MetricConfig, b: int = 0) -> float:
    """Probability that footprint ``H`` (0-based step) of trajectory ``b`` is exposed."""
    q = _footprint_free(fps, _values(gt_field, fps))
    return float(_window_product(q, cfg.exposure_window, include_current=False)[b, H])


def _ratio(num: float, den: float) -> float | None:
    if den <= 0.0:
        return None
    return min(max(num / den, 0.0), 1.0)


def _weighted_sum(w: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(w * x))


def p_lambda(fps: Footprints, pred_field, gt_field, cfg: MetricConfig) -> float | None:
    t = footprint_terms(fps, pred_field, gt_field, cfg)
    w = fps.reach
    return _ratio(_weighted_sum(w, t.d), _weighted_sum(w, t.denominator_terms(cfg.exposure_variant)))


def p_zeta(fps: Footprints, pred_field, gt_field, cfg: MetricConfig) -> float | None:
    t = footprint_terms(fps, pred_field, gt_field, cfg)
    w = fps.reach
    return _ratio(_weighted_sum(w, t.h), _weighted_sum(w, t.g))


def actor_intercepts(fps: Footprints, actor_field) -> np.ndarray:
    """(B, S) mask of footprints overlapping any of the actor's occupancy."""
    return _footprint_free(fps, _values(actor_field, fps)) < 1.0


def p_lambda_actor(
    fps: Footprints,
    pred_field,
    gt_field,
    per_actor_fields: Mapping[str, object],
    actor_id: str,
    cfg: MetricConfig,
) -> float | None:
    """P(lambda) with the numerator restricted to footprints intercepting one actor."""
    if actor_id not in per_actor_fields:
        raise MissingActorError(actor_id)
    t = footprint_terms(fps, pred_field, gt_field, cfg)
    w = fps.reach
    mask = actor_intercepts(fps, per_actor_fields[actor_id])
    den = _weighted_sum(w, t.denominator_terms(cfg.exposure_variant))
    return _ratio(_weighted_sum(w, np.where(mask, t.d, 0.0)), den)


def evaluate_metrics(
    fps: Footprints,
    pred_field,
    gt_field,
    per_actor_fields: Mapping[str, object] | None,
    cfg: MetricConfig,
) -> MetricResult:
    """All scores for one frame, sharing the footprint terms."""
    t = footprint_terms(fps, pred_field, gt_field, cfg)
    w = fps.reach
    wd = w * t.d
    lam_num = float(np.sum(wd))
    lam_den = _weighted_sum(w, t.denominator_terms(cfg.exposure_variant))
    zeta_num = _weighted_sum(w, t.h)
    zeta_den = _weighted_sum(w, t.g)
    per_actor = {}
    for actor_id, fld in (per_actor_fields or {}).items():
        mask = actor_intercepts(fps, fld)
        per_actor[actor_id] = _ratio(float(np.sum(np.where(mask, wd, 0.0))), lam_den)
    return MetricResult(
        p_lambda=_ratio(lam_num, lam_den),
        p_zeta=_ratio(zeta_num, zeta_den),
        per_actor=per_actor,
        lambda_num=lam_num,
        lambda_den=lam_den,
        zeta_num=zeta_num,
        zeta_den=zeta_den,
    )


def _window_adjoint(c: np.ndarray, window: int) -> np.ndarray:
    """``A[b, t] = sum of c[b, H]`` over every ``H`` whose protection window contains ``t``."""
    n_s = c.shape[1]
    out = np.zeros_like(c)
    for lag in range(min(window, n_s)):
        out[:, : n_s - lag] += c[:, lag:]
    return out


def grad_p_lambda(fps: Footprints, pred_field, gt_field, cfg: MetricConfig) -> np.ndarray:
    """Analytic dP(lambda)/dP_pred(x) for every grid cell, shape (T, A, C).

    Requires predicted probabilities in (0, 1) where footprints touch them.
    Returns NaNs when P(lambda) is undefined.
    """
    p_pred = _values(pred_field, fps)
    t = footprint_terms(fps, pred_field, gt_field, cfg)
    w = fps.reach
    num = _weighted_sum(w, t.d)
    den_terms = t.denominator_terms(cfg.exposure_variant)
    den = _weighted_sum(w, den_terms)
    size = p_pred.size
    if den <= 0.0:
        return np.full(fps.spec.shape, np.nan)

    seg = np.repeat(np.arange(fps.ptr.size - 1), np.diff(fps.ptr))
    # d log(1 - phi P) / dP for every footprint entry
    dlog = -fps.frac / (1.0 - fps.frac * p_pred[fps.cells])

    adj_num = _window_adjoint(w * t.d, cfg.window).reshape(-1)
    grad_num = np.bincount(fps.cells, weights=adj_num[seg] * dlog, minlength=size)
    if cfg.exposure_variant == "e":
        grad = grad_num / den
    else:
        adj_den = _window_adjoint(w * t.e_prime, cfg.window).reshape(-1)
        grad_den = np.bincount(fps.cells, weights=adj_den[seg] * dlog, minlength=size)
        grad = (grad_num * den - num * grad_den) / (den * den)
    return grad.reshape(fps.spec.shape)
