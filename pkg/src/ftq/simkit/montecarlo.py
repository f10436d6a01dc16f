"""Randomized-orientation recovery campaigns."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .. import quat
from .config import ScenarioConfig, scenario
from .metrics import Metrics
from .runner import run_scenario

XY_BIN_EDGES = np.round(np.arange(0.0, 1.61, 0.1), 10)
DROP_BIN_EDGES = np.round(np.arange(0.0, 2.01, 0.1), 10)


@dataclass
class RunRecord:
    index: int
    seed: int
    initial_q: list
    metrics: Metrics
    log: Optional[object] = field(default=None, repr=False)


def thread_cap(default: Optional[int] = None) -> int:
    env = os.environ.get("FTQ_THREADS")
    if env:
        return max(1, int(env))
    return default or (os.cpu_count() or 1)


def _run_one(args):
    index, cfg, keep_log = args
    log, metrics = run_scenario(cfg)
    q0 = log.states[0, 6:10].tolist()
    return RunRecord(index, cfg.seed, q0, metrics, log if keep_log else None)


def campaign_configs(n: int, base_seed: int, template: Optional[ScenarioConfig] = None,
                     include_identity: bool = False) -> List[ScenarioConfig]:
    if n < 1:
        raise ValueError("n must be at least 1")
    template = template or scenario("random_attitude")
    cfgs = []
    for i in range(n):
        cfg = template.with_(kind="random_attitude", seed=base_seed + i,
                             initial_v=(0.0, 0.0, 0.0), initial_omega=(0.0, 0.0, 0.0))
        if include_identity and i == 0:
            cfg = cfg.with_(initial_q=tuple(quat.IDENTITY))
        cfgs.append(cfg)
    return cfgs


def _histogram(values, edges):
    values = np.asarray(values, dtype=float)
    counts, _ = np.histogram(np.clip(values, edges[0], edges[-1]), bins=edges)
    return {"edges": edges.tolist(), "counts": counts.tolist(),
            "overflow": int(np.sum(values > edges[-1]))}


def summarize(records: List[RunRecord]) -> dict:
    m = [r.metrics for r in records]
    rec = np.array([x.recovery_time if x.recovery_time is not None else np.inf for x in m])
    xy = np.array([x.max_xy_offset for x in m])
    drop = np.array([x.max_alt_drop for x in m])
    pct = [5, 25, 50, 75, 95, 100]

    def percentiles(v):
        v = v[np.isfinite(v)]
        if v.size == 0:
            return {}
        return {f"p{p}": float(np.percentile(v, p)) for p in pct}

    return {
        "runs": len(records),
        "success_rate": float(np.mean([x.success for x in m])),
        "recovered_within_1s": float(np.mean(rec <= 1.0)),
        "recovered_within_2p5s": float(np.mean(rec <= 2.5)),
        "recovery_time": percentiles(rec),
        "max_xy_offset": percentiles(xy),
        "max_alt_drop": percentiles(drop),
        "xy_histogram": _histogram(xy, XY_BIN_EDGES),
        "drop_histogram": _histogram(drop, DROP_BIN_EDGES),
    }


def run_campaign(configs: List[ScenarioConfig], threads: Optional[int] = None,
                 keep_logs: bool = False) -> List[RunRecord]:
    """Run configs, in worker processes when more than one worker is allowed.

    Each run is self-contained, so results do not depend on the worker count.
    """
    workers = min(thread_cap(threads), len(configs))
    jobs = [(i, cfg, keep_logs) for i, cfg in enumerate(configs)]
    if workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))


def monte_carlo_recovery(n: int, base_seed: int, template: Optional[ScenarioConfig] = None,
                         threads: Optional[int] = None, include_identity: bool = False,
                         keep_logs: bool = False):
    """``n`` recoveries from uniformly random orientations at rest.

    Returns (summary dict, list of RunRecord). Failed runs are recorded, not raised.
    """
    records = run_campaign(campaign_configs(n, base_seed, template, include_identity), threads, keep_logs)
    return summarize(records), records
