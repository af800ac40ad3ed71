"""Sampling from a context-tree AR mixture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .context_tree import ContextTree, Path, context_of, parse_label
from .errors import ConfigurationError, InputError
from .quantiser import Quantiser, quantize


@dataclass(frozen=True, eq=False)
class LeafParams:
    phi: np.ndarray
    sigma2: float


@dataclass(frozen=True, eq=False)
class BCTARModel:
    """A fully specified generator: tree, quantiser and AR parameters at every leaf.

    ``phi`` vectors are ordered like the regressors ``(x_{n-1}, ..., x_{n-p}[, 1])``.
    """

    tree: ContextTree
    quantiser: Quantiser
    params: Mapping[Path, LeafParams]
    intercept: bool = False

    def __post_init__(self) -> None:
        if self.tree.m != self.quantiser.m:
            raise ConfigurationError("tree and quantiser disagree on the alphabet size")
        missing = [leaf for leaf in self.tree.leaves if leaf not in self.params]
        if missing:
            raise ConfigurationError(f"no parameters for leaves {sorted(missing)}")
        dims = {np.asarray(par.phi).size for par in self.params.values()}
        if len(dims) != 1:
            raise ConfigurationError("all leaves must share the same AR order")
        if any(not par.sigma2 > 0 for par in self.params.values()):
            raise ConfigurationError("leaf noise variances must be positive")
        if self.p < 1:
            raise ConfigurationError("AR order must be at least 1")

    @property
    def p(self) -> int:
        return next(iter(self.params.values())).phi.size - int(self.intercept)

    @property
    def n_condition(self) -> int:
        return max(self.tree.depth, self.p)

    def regressor(self, history: Sequence[float]) -> np.ndarray:
        lags = [history[-j] for j in range(1, self.p + 1)]
        if self.intercept:
            lags.append(1.0)
        return np.array(lags)

    def leaf_for(self, history: Sequence[float]) -> Path:
        past = [quantize(v, self.quantiser) for v in history[::-1][: self.tree.depth]]
        return context_of(self.tree, past)

    def conditional_mean(self, history: Sequence[float]) -> float:
        """True one-step conditional mean given the samples so far."""
        par = self.params[self.leaf_for(history)]
        return float(par.phi @ self.regressor(history))

    @classmethod
    def from_dict(cls, spec: Mapping) -> "BCTARModel":
        """Build from ``{"thresholds": [...], "intercept": bool, "leaves": {label: {"phi": [...], "sigma2": v}}}``."""
        q = Quantiser(spec["thresholds"])
        leaves = {parse_label(k): v for k, v in spec["leaves"].items()}
        tree = ContextTree(q.m, leaves)
        params = {
            leaf: LeafParams(np.asarray(v["phi"], dtype=float), float(v["sigma2"])) for leaf, v in leaves.items()
        }
        return cls(tree, q, params, bool(spec.get("intercept", False)))


def simulate_bct_ar(
    model: BCTARModel,
    n: int,
    seed: int | None = None,
    init: Sequence[float] | None = None,
    burn_in: int | None = None,
) -> np.ndarray:
    """Draw ``n`` samples after discarding ``burn_in`` (default ``10 * max(D, p)``).

    ``init`` supplies the ``max(D, p)`` starting values (zeros by default) and
    is not part of the output.
    """
    if n < 0:
        raise ConfigurationError(f"n must be >= 0, got {n}")
    k = model.n_condition
    init = np.zeros(k) if init is None else np.asarray(init, dtype=float).reshape(-1)
    if init.size < k:
        raise InputError(f"need {k} initial values, got {init.size}")
    burn = 10 * k if burn_in is None else int(burn_in)
    rng = np.random.default_rng(seed)
    total = burn + n
    noise = rng.standard_normal(total)
    hist = list(init)
    for t in range(total):
        par = model.params[model.leaf_for(hist)]
        hist.append(float(par.phi @ model.regressor(hist)) + np.sqrt(par.sigma2) * noise[t])
    return np.array(hist[init.size + burn :])


# The three-leaf tree {1, 01, 00} with a threshold at 0 and AR(2) leaves.
# Generator parameters are our own choice: regimes differ in both dynamics and
# noise level so the structure is identifiable from a few hundred samples.
THREE_LEAF_MODEL = BCTARModel.from_dict(
    {
        "thresholds": [0.0],
        "intercept": False,
        "leaves": {
            "1": {"phi": [0.6, -0.3], "sigma2": 0.25},
            "01": {"phi": [-0.5, 0.3], "sigma2": 0.09},
            "00": {"phi": [0.4, 0.4], "sigma2": 0.04},
        },
    }
)
THREE_LEAF_SEED = 7
