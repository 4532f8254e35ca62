"""Global rankings, signal-to-noise curves and per-scenario hit tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import EmptyReportError
from .evaluate import EvaluationRun

DEFAULT_TOP_K = (1, 3, 5)
DEFAULT_PERCENTILES = (10, 25, 50)


@dataclass(frozen=True)
class RankedActor:
    scenario_id: str
    actor_id: str
    p_lambda_actor: float | None
    l2: float | None
    flagged: bool

    @property
    def key(self) -> str:
        return f"{self.scenario_id}/{self.actor_id}"


@dataclass
class RankingReport:
    flag: str
    by_metric: list[str]
    by_l2: list[str]
    flagged: list[str]
    snr_metric: dict[int, float]
    snr_l2: dict[int, float]
    histogram: list[dict]
    bin_width: int
    scenario_ranks: dict[str, dict[str, dict[str, int]]] = field(default_factory=dict)
    top_k: dict[str, dict[int, float]] = field(default_factory=dict)
    top_percentile: dict[str, dict[int, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "flag": self.flag,
            "by_metric": self.by_metric,
            "by_l2": self.by_l2,
            "flagged": self.flagged,
            "snr": {
                "metric": {str(n): v for n, v in self.snr_metric.items()},
                "l2": {str(n): v for n, v in self.snr_l2.items()},
            },
            "histogram": self.histogram,
            "bin_width": self.bin_width,
            "scenario_ranks": self.scenario_ranks,
            "top_k": {m: {str(k): v for k, v in t.items()} for m, t in self.top_k.items()},
            "top_percentile": {m: {str(k): v for k, v in t.items()} for m, t in self.top_percentile.items()},
        }


def _order(actors: Sequence[RankedActor], score) -> list[RankedActor]:
    """Descending by score, undefined scores last, ties by key."""
    return sorted(actors, key=lambda a: (score(a) is None, -(score(a) or 0.0), a.key))


def snr(ordering: Sequence[RankedActor], n: int) -> float:
    """Fraction of flagged actors among the top ``n``."""
    if n <= 0:
        raise ValueError("N must be positive")
    return sum(a.flagged for a in ordering[:n]) / n


def collect_actors(runs: Iterable[EvaluationRun], flag: str = "is_unsafe") -> list[RankedActor]:
    out = []
    for run in runs:
        for a in run.actors.values():
            if not a.in_roi:
                continue
            out.append(RankedActor(run.scenario_id, a.actor_id, a.worst_p_lambda_actor, a.worst_l2,
                                   bool(getattr(a, flag))))
    return out


def rank_and_snr(
    runs: Sequence[EvaluationRun],
    top_ns: Sequence[int] = (10, 20, 50),
    flag: str = "is_unsafe",
    bin_width: int = 10,
    top_k: Sequence[int] = DEFAULT_TOP_K,
    percentiles: Sequence[int] = DEFAULT_PERCENTILES,
) -> RankingReport:
    """Order actors by worst P(lambda_actor) and by worst L2, then score both orderings.

    ``flag`` selects the ground-truth label: ``is_unsafe`` or ``is_aoi``.
    """
    actors = collect_actors(runs, flag)
    if not actors:
        raise EmptyReportError("no actors in the region of interest to rank")
    by_metric = _order(actors, lambda a: a.p_lambda_actor)
    by_l2 = _order(actors, lambda a: a.l2)

    n_bins = max(1, math.ceil(len(actors) / bin_width))
    histogram = []
    for b in range(n_bins):
        lo, hi = b * bin_width, (b + 1) * bin_width
        histogram.append({
            "bin": b,
            "count_metric": sum(a.flagged for a in by_metric[lo:hi]),
            "count_l2": sum(a.flagged for a in by_l2[lo:hi]),
            "snr_metric": snr(by_metric, hi),
            "snr_l2": snr(by_l2, hi),
        })

    report = RankingReport(
        flag=flag,
        by_metric=[a.key for a in by_metric],
        by_l2=[a.key for a in by_l2],
        flagged=sorted(a.key for a in actors if a.flagged),
        snr_metric={n: snr(by_metric, n) for n in top_ns},
        snr_l2={n: snr(by_l2, n) for n in top_ns},
        histogram=histogram,
        bin_width=bin_width,
    )
    _scenario_tables(report, actors, top_k, percentiles)
    return report


def _scenario_tables(report: RankingReport, actors, top_k, percentiles) -> None:
    scenarios: dict[str, list[RankedActor]] = {}
    for a in actors:
        scenarios.setdefault(a.scenario_id, []).append(a)
    hits = {m: [] for m in ("metric", "l2")}
    for sid, group in sorted(scenarios.items()):
        flagged = [a for a in group if a.flagged]
        if not flagged:
            continue
        ranks = {}
        for name, score in (("metric", lambda a: a.p_lambda_actor), ("l2", lambda a: a.l2)):
            order = [a.key for a in _order(group, score)]
            for a in flagged:
                r = order.index(a.key) + 1
                ranks.setdefault(a.actor_id, {})[name] = r
                hits[name].append((r, len(group)))
        report.scenario_ranks[sid] = ranks
    for name, rs in hits.items():
        if not rs:
            continue
        report.top_k[name] = {k: sum(r <= k for r, _ in rs) / len(rs) for k in top_k}
        report.top_percentile[name] = {
            q: sum(r <= max(1, math.ceil(q / 100 * n)) for r, n in rs) / len(rs) for q in percentiles
        }


def write_histogram_csv(report: RankingReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin", "count_metric", "count_l2", "snr_metric", "snr_l2"])
        for row in report.histogram:
            w.writerow([row["bin"], row["count_metric"], row["count_l2"],
                        f"{row['snr_metric']:.6f}", f"{row['snr_l2']:.6f}"])


def write_scenario_csv(report: RankingReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["table", "threshold", "metric", "l2"])
        for k in sorted(report.top_k.get("metric", {})):
            w.writerow(["top_k", k, f"{report.top_k['metric'][k]:.6f}", f"{report.top_k['l2'][k]:.6f}"])
        for q in sorted(report.top_percentile.get("metric", {})):
            w.writerow(["top_percentile", q, f"{report.top_percentile['metric'][q]:.6f}",
                        f"{report.top_percentile['l2'][q]:.6f}"])
