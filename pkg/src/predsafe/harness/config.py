"""Evaluation configuration, loadable from JSON.

Layout::

    {
      "grid": {"dx": 0.5, "dy": 0.5, "dt": 0.3, "along_extent": 30, "cross_extent": 10, "t_max": 3.0},
      "beelines": {"theta_max_deg": 15, "accel_max": 3, "accel_sigma": 1.5,
                   "n_theta": 15, "n_accel": 11, "ego_length": null, "ego_width": null, "v_i": null},
      "metric": {"window": 3, "exposure_variant": "e_prime", "exposure_window": null},
      "occupancy": {"mode": "fractional", "threshold": 0.5},
      "baseline": {"horizons": [1, 2, 3], "l2_horizon": 3.0, "min_over_modes": false},
      "keep_horizon": null
    }

Every key is optional.  ``ego_length``/``ego_width``/``v_i`` override the
scenario's ego when set.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..baseline import DEFAULT_HORIZONS
from ..beelines import DistributionConfig
from ..errors import ConfigurationError
from ..metrics import MetricConfig
from ..occupancy import GridSpec


@dataclass(frozen=True)
class EvalConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    distribution: DistributionConfig = field(default_factory=DistributionConfig)
    n_theta: int = 15
    n_accel: int = 11
    ego_length: float | None = None
    ego_width: float | None = None
    v_i: float | None = None
    metric: MetricConfig = field(default_factory=MetricConfig)
    occupancy_mode: str = "fractional"
    occupancy_threshold: float = 0.5
    horizons: tuple[float, ...] = DEFAULT_HORIZONS
    l2_horizon: float = 3.0
    min_over_modes: bool = False
    keep_horizon: float | None = None

    def __post_init__(self) -> None:
        if self.occupancy_mode not in ("fractional", "binary"):
            raise ConfigurationError(f"unknown occupancy mode {self.occupancy_mode!r}")
        if self.keep_horizon is not None and self.keep_horizon < 0:
            raise ConfigurationError("keep_horizon must be non-negative")
        if self.l2_horizon not in self.horizons:
            object.__setattr__(self, "horizons", tuple(sorted(set(self.horizons) | {self.l2_horizon})))

    @classmethod
    def from_dict(cls, data: dict) -> "EvalConfig":
        known = {"grid", "beelines", "metric", "occupancy", "baseline", "keep_horizon"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
        grid = _build(GridSpec, data.get("grid", {}))
        bl = dict(data.get("beelines", {}))
        dist_keys = {f.name for f in fields(DistributionConfig)}
        distribution = _build(DistributionConfig, {k: v for k, v in bl.items() if k in dist_keys})
        rest = {k: v for k, v in bl.items() if k not in dist_keys}
        extra = set(rest) - {"n_theta", "n_accel", "ego_length", "ego_width", "v_i"}
        if extra:
            raise ConfigurationError(f"unknown beeline keys: {sorted(extra)}")
        metric = _build(MetricConfig, data.get("metric", {}))
        occ = data.get("occupancy", {})
        base = data.get("baseline", {})
        return cls(
            grid=grid,
            distribution=distribution,
            metric=metric,
            occupancy_mode=occ.get("mode", "fractional"),
            occupancy_threshold=float(occ.get("threshold", 0.5)),
            horizons=tuple(float(h) for h in base.get("horizons", DEFAULT_HORIZONS)),
            l2_horizon=float(base.get("l2_horizon", 3.0)),
            min_over_modes=bool(base.get("min_over_modes", False)),
            keep_horizon=data.get("keep_horizon"),
            **rest,
        )

    def to_dict(self) -> dict:
        return {
            "grid": asdict(self.grid),
            "beelines": {
                **asdict(self.distribution),
                "n_theta": self.n_theta,
                "n_accel": self.n_accel,
                "ego_length": self.ego_length,
                "ego_width": self.ego_width,
                "v_i": self.v_i,
            },
            "metric": asdict(self.metric),
            "occupancy": {"mode": self.occupancy_mode, "threshold": self.occupancy_threshold},
            "baseline": {
                "horizons": list(self.horizons),
                "l2_horizon": self.l2_horizon,
                "min_over_modes": self.min_over_modes,
            },
            "keep_horizon": self.keep_horizon,
        }


def _build(kind, section: dict):
    names = {f.name for f in fields(kind)}
    extra = set(section) - names
    if extra:
        raise ConfigurationError(f"unknown {kind.__name__} keys: {sorted(extra)}")
    return kind(**section)


def load_config(path: str | Path | None) -> EvalConfig:
    if path is None:
        return EvalConfig()
    with open(path) as fh:
        return EvalConfig.from_dict(json.load(fh))
