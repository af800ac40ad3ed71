"""Choosing quantiser thresholds and AR order by maximising the exact evidence."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ar_engine import ARHyper
from .errors import BCTError, ConfigurationError, InputError, TuningError
from .inference import BCTConfig, InferenceState, cctw
from .quantiser import Quantiser

log = logging.getLogger(__name__)


@dataclass
class TuneResult:
    thresholds: tuple[float, ...]
    p: int
    log_evidence: float
    table: list[dict]

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "p": self.p,
            "log_evidence": self.log_evidence,
            "table": self.table,
        }


def select_hyper(
    series: Sequence[float],
    m: int,
    threshold_candidates: Sequence[Sequence[float]],
    p_max: int = 5,
    *,
    depth: int,
    beta: float | None = None,
    intercept: bool = False,
    tau: float = 2.0,
    lam: float = 1.0,
    mu0: float = 0.0,
    sigma0: float = 1.0,
) -> TuneResult:
    """Evaluate the log evidence of every ``(thresholds, p)`` pair, ``1 <= p <= p_max``.

    All candidates condition on the same first ``max(depth, p_max)`` samples so
    their evidences describe the same observations and are comparable. Ties go
    to the smaller ``p``, then to the lexicographically smaller thresholds.
    The prior mean and scale are given as scalars because the coefficient
    dimension changes with ``p``.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    if not threshold_candidates:
        raise ConfigurationError("no threshold candidates given")
    if p_max < 1:
        raise ConfigurationError(f"p_max must be >= 1, got {p_max}")
    quantisers = []
    for cand in threshold_candidates:
        q = Quantiser(cand)
        if q.m != m:
            raise ConfigurationError(f"candidate {tuple(cand)} has {len(q.thresholds)} thresholds, m={m} needs {m - 1}")
        quantisers.append(q)
    k = max(depth, p_max)
    if x.size < k + 1:
        raise InputError(f"series of length {x.size} is too short for depth {depth} and p_max {p_max}")

    table = []
    for q in quantisers:
        for p in range(1, p_max + 1):
            hyper = ARHyper(p=p, intercept=intercept, mu0=mu0, Sigma0=sigma0, tau=tau, lam=lam)
            cfg = BCTConfig(q, depth, hyper, beta)
            try:
                value = cctw(InferenceState.from_series(x, cfg, n_condition=k))
            except BCTError as exc:
                log.warning("candidate thresholds=%s p=%d failed: %s", q.thresholds, p, exc)
                value = -math.inf
            table.append({"thresholds": list(q.thresholds), "p": p, "log_evidence": value})

    finite = [row for row in table if math.isfinite(row["log_evidence"])]
    if not finite:
        raise TuningError("every candidate failed to produce a finite evidence")
    best = min(finite, key=lambda r: (-r["log_evidence"], r["p"], tuple(r["thresholds"])))
    return TuneResult(tuple(best["thresholds"]), best["p"], best["log_evidence"], table)
