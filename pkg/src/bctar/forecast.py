"""Rolling one-step-ahead forecasting with the MAP tree and MAP leaf parameters."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ar_engine import SuffStats, map_params, predict_mean
from .context_tree import ContextTree, context_of
from .errors import ConfigurationError, InputError
from .inference import BCTConfig, InferenceState, cbct


def mse(forecasts: Sequence[float], actuals: Sequence[float]) -> float:
    f = np.asarray(forecasts, dtype=float).reshape(-1)
    a = np.asarray(actuals, dtype=float).reshape(-1)
    if f.size != a.size:
        raise InputError(f"length mismatch: {f.size} forecasts vs {a.size} actuals")
    if f.size == 0:
        raise InputError("mse needs at least one forecast")
    return float(np.mean((f - a) ** 2))


@dataclass
class ForecastReport:
    forecasts: np.ndarray
    actuals: np.ndarray
    mse: float
    trees: list[tuple[str, ...]] = field(default_factory=list)
    step_seconds: np.ndarray = field(default_factory=lambda: np.empty(0))
    n_train: int = 0

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train,
            "n_test": int(self.forecasts.size),
            "mse": self.mse,
            "forecasts": self.forecasts.tolist(),
            "actuals": self.actuals.tolist(),
            "map_trees": [list(t) for t in self.trees],
            "step_seconds": self.step_seconds.tolist(),
        }


def split_point(n: int, split_fraction: float, n_condition: int) -> int:
    if not 0.0 < split_fraction < 1.0:
        raise ConfigurationError(f"split fraction must lie in (0, 1), got {split_fraction}")
    n_train = int(round(split_fraction * n))
    if n_train < n_condition + 1:
        raise InputError(f"training split of {n_train} samples needs at least {n_condition + 1}")
    if n_train >= n:
        raise InputError("split leaves no test samples")
    return n_train


def forecast_next(state: InferenceState, tree: ContextTree) -> float:
    """Posterior-mean forecast of the next sample under ``tree``."""
    leaf = context_of(tree, state.past_symbols())
    node = state.tmax.nodes.get(leaf)
    stats = node.stats if node is not None else SuffStats.empty(state.config.hyper.q)
    phi_hat, _ = map_params(stats, state.config.hyper)
    return predict_mean(phi_hat, state.current_regressor())


def rolling_forecast(
    series: Sequence[float],
    split_fraction: float,
    config: BCTConfig,
    refit: bool = True,
) -> ForecastReport:
    """Train on the leading split, then forecast each test sample and absorb it.

    With ``refit`` the MAP tree is recomputed before every forecast; without it
    the tree found on the training data is kept while the leaf statistics keep
    updating.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    n_train = split_point(x.size, split_fraction, config.n_condition)
    state = InferenceState.from_series(x[:n_train], config)
    tree = cbct(state).tree
    preds, trees, secs = [], [], []
    for value in x[n_train:]:
        t0 = time.perf_counter()
        if refit:
            tree = cbct(state).tree
        preds.append(forecast_next(state, tree))
        state.update(value)
        secs.append(time.perf_counter() - t0)
        trees.append(tuple(tree.labels()))
    preds = np.array(preds)
    actuals = x[n_train:].copy()
    return ForecastReport(preds, actuals, mse(preds, actuals), trees, np.array(secs), n_train)
