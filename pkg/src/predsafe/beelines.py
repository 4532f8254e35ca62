"""Counterfactual ego trajectories ("beelines") and their reach probabilities.

A beeline keeps a constant heading ``theta`` and constant acceleration ``a``
in path-relative space.  Positions follow ``r(t) = v_i t + a t^2 / 2`` until
the vehicle stops, after which it stays put.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .footprints import Footprints
from .occupancy import GridSpec, box_corners, rasterize_corners
from .path_frame import regular_mesh


@dataclass(frozen=True)
class DistributionConfig:
    """Heading and acceleration distributions of the ego.

    Heading is triangular on ``[-theta_max, theta_max]`` peaking at 0.
    Acceleration is a zero-mean Gaussian truncated to ``[-accel_max, accel_max]``.
    """

    theta_max_deg: float = 15.0
    accel_max: float = 3.0
    accel_sigma: float = 1.5

    def __post_init__(self) -> None:
        if self.theta_max_deg <= 0 or self.accel_max <= 0 or self.accel_sigma <= 0:
            raise ConfigurationError("distribution parameters must be positive")

    @property
    def theta_max(self) -> float:
        return math.radians(self.theta_max_deg)


def triangular_pdf(theta, theta_max: float):
    theta = np.asarray(theta, dtype=np.float64)
    return np.maximum(theta_max - np.abs(theta), 0.0) / (theta_max * theta_max)


def _truncation_mass(sigma: float, a_max: float) -> float:
    return math.erf(a_max / (sigma * math.sqrt(2.0)))


def truncated_gaussian_pdf(a, sigma: float, a_max: float):
    a = np.asarray(a, dtype=np.float64)
    z = a / sigma
    dens = np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi) * _truncation_mass(sigma, a_max))
    return np.where(np.abs(a) <= a_max, dens, 0.0)


def reach_density(x, y, t, v_i: float, cfg: DistributionConfig, t_max: float):
    """Density of ego footprint centers per m^2 per second.

    ``(x, y)`` is path-relative and measured from the ego origin.  While the
    implied acceleration keeps the vehicle moving (r >= v_i t / 2) this is the
    polar change of variables of the acceleration density, spread uniformly
    over ``(0, t_max]``.  Closer points are reached only by vehicles that have
    already stopped at ``r = v_i^2 / (2|a|)``; their density follows from the
    same change of variables applied to the stopping distance.
    """
    x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x, y, t)))
    r = np.hypot(x, y)
    live = (t > 0.0) & (t <= t_max) & (r > 0.0)
    ts = np.where(live, t, 1.0)
    rs = np.where(live, r, 1.0)
    f_theta = triangular_pdf(np.arctan2(y, x), cfg.theta_max)

    moving = rs >= v_i * ts / 2.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a_moving = 2.0 * (rs - v_i * ts) / (ts * ts)
        dens_moving = 2.0 / (t_max * ts * ts) * truncated_gaussian_pdf(a_moving, cfg.accel_sigma, cfg.accel_max) / rs

        a_stop = -(v_i * v_i) / (2.0 * rs)
        jac_stop = (v_i * v_i) / (2.0 * rs * rs)
        dens_stop = jac_stop * truncated_gaussian_pdf(a_stop, cfg.accel_sigma, cfg.accel_max) / (t_max * rs)

        dens = np.where(moving, dens_moving, dens_stop) * f_theta
    # denormal t or r overflow the closed form; the density is 0 there for any bounded acceleration
    out = np.where(live & np.isfinite(dens), dens, 0.0)
    return out if out.ndim else float(out)


def reach_probability(x, y, t, v_i: float, cfg: DistributionConfig, spec: GridSpec):
    """Probability mass of the footprint cell around ``(x, y, t)``: density times cell volume."""
    return reach_density(x, y, t, v_i, cfg, spec.t_max) * spec.cell_volume


def triangular_cdf(theta, theta_max: float):
    theta = np.clip(np.asarray(theta, dtype=np.float64), -theta_max, theta_max)
    u = 1.0 - np.abs(theta) / theta_max
    half = 0.5 * u * u
    return np.where(theta < 0.0, half, 1.0 - half)


_erf = np.vectorize(math.erf, otypes=[np.float64])


def truncated_gaussian_cdf(a, sigma: float, a_max: float):
    a = np.clip(np.asarray(a, dtype=np.float64), -a_max, a_max)
    return 0.5 + 0.5 * _erf(a / (sigma * math.sqrt(2.0))) / _truncation_mass(sigma, a_max)


def _accel_for_range(r, t, v_i: float, a_max: float):
    """Smallest acceleration whose beeline has travelled at least ``r`` by time ``t``.

    Range is non-decreasing in acceleration, so mass along a ray between
    ``r0`` and ``r1`` is ``F_a(accel(r1)) - F_a(accel(r0))``.
    """
    r = np.asarray(r, dtype=np.float64)
    moving = 2.0 * (r - v_i * t) / (t * t)
    with np.errstate(divide="ignore"):
        stopped = np.where(r > 0.0, -(v_i * v_i) / (2.0 * np.where(r > 0.0, r, 1.0)), -np.inf)
    a = np.where(r >= v_i * t / 2.0, moving, stopped)
    # r <= 0 is reached by every acceleration when v_i == 0 (vehicles that never move)
    a = np.where(r <= 0.0, -np.inf, a)
    return np.clip(a, -a_max, a_max)


def _ray_box(theta, x0, x1, y0, y1):
    """Entry/exit range of rays from the origin through axis-aligned boxes (slab method)."""
    dx = np.cos(theta)
    dy = np.sin(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        tx0 = np.where(dx != 0, x0 / dx, np.where(x0 <= 0, -np.inf, np.inf))
        tx1 = np.where(dx != 0, x1 / dx, np.where(x1 >= 0, np.inf, -np.inf))
        ty0 = np.where(dy != 0, y0 / dy, np.where(y0 <= 0, -np.inf, np.inf))
        ty1 = np.where(dy != 0, y1 / dy, np.where(y1 >= 0, np.inf, -np.inf))
    r_in = np.maximum(np.maximum(np.minimum(tx0, tx1), np.minimum(ty0, ty1)), 0.0)
    r_out = np.minimum(np.maximum(tx0, tx1), np.maximum(ty0, ty1))
    return r_in, r_out


def cell_reach_mass(x0, x1, y0, y1, t0, t1, v_i: float, cfg: DistributionConfig, t_max: float,
                    n_theta: int = 24, n_time: int = 8):
    """Reach probability mass of axis-aligned cells ``[x0,x1] x [y0,y1] x [t0,t1]``.

    Integrates the reach density over the cell.  Along each ray the radial
    integral is exact (it is a difference of acceleration CDF values); heading
    and time use midpoint quadrature.  Coordinates are relative to the ego origin.
    """
    x0, x1, y0, y1, t0, t1 = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (x0, x1, y0, y1, t0, t1)))
    shape = x0.shape
    x0, x1, y0, y1 = (v.reshape(-1) for v in (x0, x1, y0, y1))
    t0 = np.clip(t0.reshape(-1), 0.0, t_max)
    t1 = np.clip(t1.reshape(-1), 0.0, t_max)
    tmax_angle = cfg.theta_max
    corners_x = np.stack([x0, x1, x1, x0], -1)
    corners_y = np.stack([y0, y0, y1, y1], -1)
    ang = np.arctan2(corners_y, corners_x)
    contains_origin = (x0 <= 0) & (x1 >= 0) & (y0 <= 0) & (y1 >= 0)
    lo = np.where(contains_origin, -tmax_angle, np.maximum(ang.min(-1), -tmax_angle))
    hi = np.where(contains_origin, tmax_angle, np.minimum(ang.max(-1), tmax_angle))
    # cells behind the ego never straddle +-pi here since |theta| <= theta_max < pi/2
    span = np.maximum(hi - lo, 0.0)
    u = (np.arange(n_theta) + 0.5) / n_theta
    theta = lo[:, None] + span[:, None] * u[None, :]
    w_theta = triangular_pdf(theta, tmax_angle) * (span / n_theta)[:, None]
    r_in, r_out = _ray_box(theta, x0[:, None], x1[:, None], y0[:, None], y1[:, None])
    hit = r_out > r_in

    dt = t1 - t0
    ut = (np.arange(n_time) + 0.5) / n_time
    mass = np.zeros(x0.shape)
    for k in range(n_time):
        t = (t0 + dt * ut[k])[:, None]
        ts = np.where(t > 0, t, 1.0)
        f_out = truncated_gaussian_cdf(_accel_for_range(r_out, ts, v_i, cfg.accel_max), cfg.accel_sigma, cfg.accel_max)
        lower = np.where(r_in <= 0.0, -cfg.accel_max, _accel_for_range(r_in, ts, v_i, cfg.accel_max))
        f_in = truncated_gaussian_cdf(lower, cfg.accel_sigma, cfg.accel_max)
        radial = np.where(hit & (t > 0), np.maximum(f_out - f_in, 0.0), 0.0)
        mass += np.sum(radial * w_theta, axis=1) * (dt / n_time)
    return (mass / t_max).reshape(shape)


def beeline_ranges(theta: float, accel: float, v_i: float, times) -> np.ndarray:
    """Distance travelled at each time, held at the stopping point once speed reaches zero."""
    t = np.asarray(times, dtype=np.float64)
    if accel < 0.0:
        t_stop = v_i / -accel
        t = np.minimum(t, t_stop)
    return v_i * t + 0.5 * accel * t * t


@dataclass(frozen=True, eq=False)
class Beeline:
    theta: float
    accel: float
    centers: np.ndarray  # (S, 2) path-relative footprint centers
    stop_time: float | None


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    beelines: list[Beeline]
    footprints: Footprints
    v_i: float
    ego_dims: tuple[float, float]
    spec: GridSpec
    ego_offset: float = 0.0

    def __len__(self) -> int:
        return len(self.beelines)


def sample_lattice(lo: float, hi: float, n: int) -> np.ndarray:
    """Cell-centred samples over ``[lo, hi]`` (endpoints excluded)."""
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


@lru_cache(maxsize=8)
def _lattice_mesh(spec: GridSpec):
    return regular_mesh(spec)


def generate_beelines(
    cfg: DistributionConfig,
    n_theta: int,
    n_accel: int,
    v_i: float,
    ego_dims: tuple[float, float],
    spec: GridSpec,
    ego_offset: float = 0.0,
) -> TrajectoryEnsemble:
    """Build the fixed ego ensemble on the path-relative lattice.

    ``ego_offset`` is the ego's cross-track position; the ego sits at along-track 0.
    Each footprint's reach weight is the probability of its beeline's
    (heading, acceleration) lattice cell times ``dt / t_max``: the reach
    density integrated over the part of the cell swept by that beeline.  The
    weights of beelines sharing a grid cell therefore add up to that cell's
    reach probability.  Centers outside the grid carry no mass.
    """
    if n_theta < 1 or n_accel < 1:
        raise ConfigurationError("need at least one heading and one acceleration sample")
    if v_i < 0:
        raise ConfigurationError("initial speed must be non-negative")
    half = spec.cross_extent / 2.0
    if not -half <= ego_offset <= half:
        raise ConfigurationError(f"ego cross-track offset {ego_offset:.2f} m is outside the grid")

    thetas = sample_lattice(-cfg.theta_max, cfg.theta_max, n_theta)
    accels = sample_lattice(-cfg.accel_max, cfg.accel_max, n_accel)
    n_steps = spec.n_steps
    times = np.arange(1, n_steps + 1) * spec.dt

    beelines = []
    rel = np.empty((n_theta * n_accel, n_steps, 2))
    heading = np.empty((n_theta * n_accel, n_steps))
    for i, th in enumerate(thetas):
        for j, ac in enumerate(accels):
            b = i * n_accel + j
            r = beeline_ranges(th, ac, v_i, times)
            rel[b, :, 0] = r * math.cos(th)
            rel[b, :, 1] = r * math.sin(th)
            heading[b] = th
            stop = v_i / -ac if ac < 0 else None
            beelines.append(Beeline(float(th), float(ac), rel[b] + [0.0, ego_offset], stop))

    n_b = len(beelines)
    centers = rel + np.array([0.0, ego_offset])
    length, width = ego_dims
    poses = np.concatenate(
        [centers.reshape(-1, 2), heading.reshape(-1, 1), np.full((n_b * n_steps, 1), length),
         np.full((n_b * n_steps, 1), width)],
        axis=1,
    )
    mesh = _lattice_mesh(spec)
    bi, ci, frac = rasterize_corners(box_corners(poses), mesh)
    order = np.lexsort((ci, bi))
    bi, ci, frac = bi[order], ci[order], frac[order]
    plane = spec.n_along * spec.n_cross
    step_of = np.tile(np.arange(n_steps), n_b)
    cells = (step_of[bi] + 1) * plane + ci
    ptr = np.searchsorted(bi, np.arange(n_b * n_steps + 1), side="left")

    w_theta = np.diff(triangular_cdf(_edges(-cfg.theta_max, cfg.theta_max, n_theta), cfg.theta_max))
    w_accel = np.diff(truncated_gaussian_cdf(_edges(-cfg.accel_max, cfg.accel_max, n_accel),
                                             cfg.accel_sigma, cfg.accel_max))
    lattice_mass = (w_theta[:, None] * w_accel[None, :]).reshape(-1)
    mass = np.repeat(lattice_mass[:, None], n_steps, axis=1) * (spec.dt / spec.t_max)
    _, _, inside = _cell_index(centers, spec)
    reach = np.where(inside, mass, 0.0)
    fps = Footprints(ptr, cells, frac, reach, spec)
    return TrajectoryEnsemble(beelines, fps, float(v_i), (float(length), float(width)), spec, float(ego_offset))


def _edges(lo: float, hi: float, n: int) -> np.ndarray:
    return lo + np.arange(n + 1) * (hi - lo) / n


def _cell_index(centers: np.ndarray, spec: GridSpec):
    ia = np.floor(centers[..., 0] / spec.dx).astype(np.int64)
    ic = np.floor((centers[..., 1] + spec.cross_extent / 2.0) / spec.dy).astype(np.int64)
    inside = (ia >= 0) & (ia < spec.n_along) & (ic >= 0) & (ic < spec.n_cross)
    return ia, ic, inside


def share_cells(mass: np.ndarray, centers: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Split per-footprint mass evenly among beelines whose centers share a cell and step.

    Use this with point estimates such as :func:`reach_probability`, where each
    footprint carries its whole cell's mass.
    """
    n_b, n_s = mass.shape
    ia, ic, inside = _cell_index(centers, spec)
    key = (np.arange(n_s)[None, :] * spec.n_along + ia) * spec.n_cross + ic
    key = np.where(inside, key, -1)
    flat = key.reshape(-1)
    _, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    share = counts[inverse].reshape(n_b, n_s)
    return np.where(inside, mass / share, 0.0)
