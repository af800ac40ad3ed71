"""Exact inference over context trees: evidence, MAP tree, top-k trees, sequential updates.

All recursions run bottom-up over T_MAX in the natural-log domain. Children
that never occurred in the data are empty nodes with ``P_e = 1``; their
weighted probability is exactly 1 and their maximal probability depends only
on their depth (see :func:`_empty_max`).
"""

from __future__ import annotations

import heapq
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .ar_engine import ARHyper, SuffStats, log_pe, log_pe_many, regressor_matrix
from .context_tree import (
    ContextTree,
    Path,
    TMax,
    build_tmax,
    context_of,
    contexts,
    count_trees,
    default_beta,
    enumerate_trees,
    label,
    log_prior,
    ENUMERATION_LIMIT,
)
from .errors import CapacityError, ConfigurationError, InputError, NumericalError
from .quantiser import Quantiser, quantize, quantize_series

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BCTConfig:
    """Everything that defines the model class: quantiser, depth, tree prior and leaf prior."""

    quantiser: Quantiser
    depth: int
    hyper: ARHyper = field(default_factory=ARHyper)
    beta: float | None = None

    def __post_init__(self) -> None:
        if int(self.depth) != self.depth or self.depth < 0:
            raise ConfigurationError(f"depth must be a nonnegative integer, got {self.depth}")
        beta = default_beta(self.m) if self.beta is None else float(self.beta)
        if not 0.0 < beta < 1.0:
            raise ConfigurationError(f"beta must lie in (0, 1), got {beta}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "depth", int(self.depth))

    @property
    def m(self) -> int:
        return self.quantiser.m

    @property
    def n_condition(self) -> int:
        """Samples consumed as conditioning before the likelihood starts."""
        return max(self.depth, self.hyper.p)

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.quantiser.thresholds),
            "m": self.m,
            "D": self.depth,
            "beta": self.beta,
            **self.hyper.to_dict(),
        }


@dataclass
class MapResult:
    tree: ContextTree
    log_prior: float
    log_marginal: float
    log_posterior: float

    @property
    def posterior(self) -> float:
        return math.exp(self.log_posterior)

    def to_dict(self) -> dict:
        return {
            "leaves": self.tree.labels(),
            "log_prior": self.log_prior,
            "log_marginal": self.log_marginal,
            "log_posterior": self.log_posterior,
            "posterior": self.posterior,
        }


class InferenceState:
    """T_MAX with per-node statistics, plus the buffer needed for sequential updates.

    Build it in one pass with :meth:`from_series`, or start from conditioning
    samples only and feed observations through :meth:`update`; both routes
    give the same node statistics.
    """

    def __init__(self, config: BCTConfig, initial: Sequence[float], n_condition: int | None = None):
        k = config.n_condition if n_condition is None else int(n_condition)
        if k < config.n_condition:
            raise ConfigurationError(f"need at least {config.n_condition} conditioning samples, got {k}")
        initial = np.asarray(initial, dtype=float).reshape(-1)
        if initial.size < k:
            raise InputError(f"need {k} initial samples for conditioning, got {initial.size}")
        if not np.all(np.isfinite(initial)):
            raise InputError("initial samples must be finite")
        self.config = config
        self.n_condition = k
        self.tmax = TMax(config.m, config.depth)
        self.tmax.nodes[()].stats = SuffStats.empty(config.hyper.q)
        # only the most recent max(D, p) values are ever read
        width = max(config.depth, config.hyper.p, 1)
        tail = initial[-width:]
        self._raw = deque(tail.tolist(), maxlen=width)
        self._sym = deque(quantize_series(tail, config.quantiser).tolist(), maxlen=width)
        self._cache: dict = {}

    @classmethod
    def from_series(
        cls, series: Sequence[float], config: BCTConfig, n_condition: int | None = None
    ) -> "InferenceState":
        """Batch construction: ``series[:k]`` conditions, the rest is modelled."""
        x = np.asarray(series, dtype=float).reshape(-1)
        k = config.n_condition if n_condition is None else int(n_condition)
        if x.size < k + 1:
            raise InputError(f"series of length {x.size} is too short: need {k} conditioning samples plus one")
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            raise InputError(f"non-finite sample at index {bad[0]}")
        state = cls(config, x[:k], n_condition=k)
        D, hyper = config.depth, config.hyper
        y = quantize_series(x, config.quantiser)
        state.tmax = build_tmax(y[k - D :], D, config.m)
        X = regressor_matrix(x, k, hyper)
        targets = x[k:]
        paths = list(state.tmax.nodes)
        for path in paths:
            node = state.tmax.nodes[path]
            rows = np.asarray(node.indices) - 1
            node.stats = SuffStats.from_data(targets[rows], X[rows])
        state._refresh_log_pe(paths)
        width = state._raw.maxlen
        state._raw.extend(x[-width:].tolist())
        state._sym.extend(y[-width:].tolist())
        return state

    @property
    def n(self) -> int:
        return self.tmax.n

    def _refresh_log_pe(self, paths: Sequence[Path]) -> None:
        if not paths:
            return
        nodes = [self.tmax.nodes[p] for p in paths]
        counts = np.array([nd.stats.count for nd in nodes])
        s1 = np.array([nd.stats.s1 for nd in nodes])
        s2 = np.array([nd.stats.s2 for nd in nodes])
        S3 = np.array([nd.stats.S3 for nd in nodes])
        try:
            values = log_pe_many(counts, s1, s2, S3, self.config.hyper)
        except NumericalError:
            for nd in nodes:
                try:
                    log_pe(nd.stats, self.config.hyper)
                except NumericalError as exc:
                    raise NumericalError(f"node {label(nd.path)!r}: {exc}") from None
            raise
        for nd, v in zip(nodes, values):
            nd.log_pe = float(v)

    def past_symbols(self) -> list[int]:
        """Quantised recent samples, most recent first."""
        return list(reversed(self._sym))

    def current_regressor(self) -> np.ndarray:
        hyper = self.config.hyper
        vals = [self._raw[-j] for j in range(1, hyper.p + 1)]
        if hyper.intercept:
            vals.append(1.0)
        return np.array(vals)

    def current_context(self) -> tuple[int, ...]:
        return tuple(self.past_symbols()[: self.config.depth])

    def update(self, x_new: float) -> "InferenceState":
        """Absorb one observation, touching exactly the D+1 nodes on its context path."""
        x_new = float(x_new)
        if not math.isfinite(x_new):
            raise InputError(f"cannot update with non-finite sample {x_new!r}")
        xt = self.current_regressor()
        touched = self.tmax.insert(self.current_context(), self.n + 1)
        q = self.config.hyper.q
        for node in touched:
            if node.stats is None:
                node.stats = SuffStats.empty(q)
            node.stats.add(x_new, xt)
        self._refresh_log_pe([nd.path for nd in touched])
        self._raw.append(x_new)
        self._sym.append(quantize(x_new, self.config.quantiser))
        self._cache.clear()
        return self

    def log_pe_of(self, path: Path) -> float:
        node = self.tmax.nodes.get(path)
        return 0.0 if node is None else node.log_pe

    def _require_data(self) -> None:
        if self.n < 1:
            raise InputError("inference state holds no observations")


def update(state: InferenceState, x_new: float) -> InferenceState:
    return state.update(x_new)


def cctw(state: InferenceState) -> float:
    """Log evidence ``log p(x)`` by bottom-up weighting over T_MAX."""
    state._require_data()
    if "cctw" in state._cache:
        return state._cache["cctw"]
    cfg = state.config
    D = cfg.depth
    log_b, log_1mb = math.log(cfg.beta), math.log1p(-cfg.beta)
    for level in reversed(state.tmax.by_depth()):
        for node in level:
            if len(node.path) == D:
                node.log_pw = node.log_pe
            else:
                kids = sum(c.log_pw for c in state.tmax.children(node.path) if c is not None)
                node.log_pw = float(np.logaddexp(log_b + node.log_pe, log_1mb + kids))
    value = state.tmax.nodes[()].log_pw
    state._cache["cctw"] = value
    return value


@lru_cache(maxsize=None)
def _empty_max(d: int, depth: int, m: int, beta: float) -> tuple[float, bool]:
    """Best ``log`` prior weight of a data-free subtree rooted at depth ``d``, and whether to prune.

    For ``beta >= 1/2`` this is ``log beta`` with pruning at every depth below D.
    """
    if d == depth:
        return 0.0, True
    leaf = math.log(beta)
    split = math.log1p(-beta) + m * _empty_max(d + 1, depth, m, beta)[0]
    return (leaf, True) if leaf >= split else (split, False)


def _warn_beta(beta: float) -> None:
    if beta < 0.5:
        warnings.warn(
            f"beta = {beta} < 1/2: the MAP-tree guarantee of the maximisation pass no longer applies",
            stacklevel=3,
        )


def _expand_empty(path: Path, depth: int, m: int, beta: float, leaves: list[Path]) -> None:
    if _empty_max(len(path), depth, m, beta)[1]:
        leaves.append(path)
    else:
        for j in range(m):
            _expand_empty(path + (j,), depth, m, beta, leaves)


def _score(tree: ContextTree, state: InferenceState) -> tuple[float, float]:
    cfg = state.config
    lp = log_prior(tree, cfg.beta, cfg.depth)
    lm = sum(state.log_pe_of(leaf) for leaf in tree.leaves)
    return lp, lm


def _result(tree: ContextTree, state: InferenceState) -> MapResult:
    lp, lm = _score(tree, state)
    return MapResult(tree, lp, lm, min(lp + lm - cctw(state), 0.0))


def cbct(state: InferenceState) -> MapResult:
    """MAP context tree via bottom-up maximisation and top-down pruning.

    Ties between keeping a node as a leaf and splitting it go to the leaf.
    """
    state._require_data()
    if "cbct" in state._cache:
        return state._cache["cbct"]
    cfg = state.config
    D, m, beta = cfg.depth, cfg.m, cfg.beta
    _warn_beta(beta)
    log_b, log_1mb = math.log(beta), math.log1p(-beta)
    for level in reversed(state.tmax.by_depth()):
        for node in level:
            d = len(node.path)
            if d == D:
                node.log_pm, node.prune = node.log_pe, True
                continue
            kids = 0.0
            for c in state.tmax.children(node.path):
                kids += c.log_pm if c is not None else _empty_max(d + 1, D, m, beta)[0]
            leaf, split = log_b + node.log_pe, log_1mb + kids
            node.prune = leaf >= split
            node.log_pm = leaf if node.prune else split

    leaves: list[Path] = []
    stack: list[Path] = [()]
    while stack:
        path = stack.pop()
        node = state.tmax.nodes.get(path)
        if node is None:
            _expand_empty(path, D, m, beta, leaves)
        elif node.prune:
            leaves.append(path)
        else:
            stack.extend(path + (j,) for j in range(m))
    result = _result(ContextTree(m, leaves), state)
    state._cache["cbct"] = result
    return result


# --- top-k -------------------------------------------------------------------

# A candidate is (log value, children) where children is None for a leaf or a
# tuple of indices into each child's candidate list.
Candidate = tuple[float, tuple[int, ...] | None]


def _ranked_sums(lists: Sequence[Sequence[Candidate]], k: int) -> list[tuple[float, tuple[int, ...]]]:
    """The k largest sums picking one entry per list (each list sorted descending)."""
    if any(not lst for lst in lists):
        return []

    def total(idx):
        return math.fsum(lst[i][0] for lst, i in zip(lists, idx))

    start = (0,) * len(lists)
    heap = [(-total(start), start)]
    seen = {start}
    out = []
    while heap and len(out) < k:
        neg, idx = heapq.heappop(heap)
        out.append((-neg, idx))
        for j in range(len(lists)):
            if idx[j] + 1 < len(lists[j]):
                nxt = idx[:j] + (idx[j] + 1,) + idx[j + 1 :]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (-total(nxt), nxt))
    return out


def _merge(leaf: Candidate, splits: list[tuple[float, tuple[int, ...]]], k: int) -> list[Candidate]:
    # stable sort keeps the leaf ahead of equal-valued splits
    merged = [leaf] + [(v, idx) for v, idx in splits]
    merged.sort(key=lambda c: -c[0])
    return merged[:k]


def kbct(state: InferenceState, k: int) -> list[MapResult]:
    """The ``k`` a posteriori most likely trees, best first."""
    state._require_data()
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    cfg = state.config
    D, m, beta = cfg.depth, cfg.m, cfg.beta
    _warn_beta(beta)
    log_b, log_1mb = math.log(beta), math.log1p(-beta)

    empty: dict[int, list[Candidate]] = {D: [(0.0, None)]}
    for d in range(D - 1, -1, -1):
        splits = _ranked_sums([empty[d + 1]] * m, k)
        empty[d] = _merge((log_b, None), [(log_1mb + v, idx) for v, idx in splits], k)

    cands: dict[Path, list[Candidate]] = {}
    for level in reversed(state.tmax.by_depth()):
        for node in level:
            d = len(node.path)
            if d == D:
                cands[node.path] = [(node.log_pe, None)]
                continue
            child_lists = [
                cands[node.path + (j,)] if node.path + (j,) in state.tmax.nodes else empty[d + 1]
                for j in range(m)
            ]
            splits = _ranked_sums(child_lists, k)
            cands[node.path] = _merge(
                (log_b + node.log_pe, None), [(log_1mb + v, idx) for v, idx in splits], k
            )

    def collect(path: Path, i: int, out: list[Path]) -> None:
        children = cands[path][i][1]
        if children is None:
            out.append(path)
            return
        for j, ci in enumerate(children):
            child = path + (j,)
            if child in cands:
                collect(child, ci, out)
            else:
                collect_empty(child, ci, out)

    def collect_empty(path: Path, i: int, out: list[Path]) -> None:
        children = empty[len(path)][i][1]
        if children is None:
            out.append(path)
            return
        for j, ci in enumerate(children):
            collect_empty(path + (j,), ci, out)

    results = []
    for i in range(len(cands[()])):
        leaves: list[Path] = []
        collect((), i, leaves)
        results.append(_result(ContextTree(m, leaves), state))
    results.sort(key=lambda r: -r.log_posterior)
    return results


def tree_log_posterior(tree: ContextTree, state: InferenceState) -> float:
    if tree.m != state.config.m:
        raise ConfigurationError(f"tree alphabet {tree.m} differs from model alphabet {state.config.m}")
    lp, lm = _score(tree, state)
    return lp + lm - cctw(state)


# --- brute-force oracles -----------------------------------------------------


def _leaf_stats(tree: ContextTree, x: np.ndarray, config: BCTConfig, k: int) -> dict[Path, SuffStats]:
    """Per-leaf statistics by assigning each target to its leaf directly."""
    hyper = config.hyper
    y = quantize_series(x, config.quantiser)
    X = regressor_matrix(x, k, hyper)
    ctx = contexts(y[k - config.depth :], config.depth)
    out: dict[Path, SuffStats] = {}
    for r in range(x.size - k):
        leaf = context_of(tree, ctx[r])
        out.setdefault(leaf, SuffStats.empty(hyper.q)).add(float(x[k + r]), X[r])
    return out


def brute_force_scores(
    series: Sequence[float], config: BCTConfig, n_condition: int | None = None
) -> list[tuple[ContextTree, float]]:
    """``(tree, log prior + log marginal likelihood)`` for every tree in T(D)."""
    x = np.asarray(series, dtype=float).reshape(-1)
    k = config.n_condition if n_condition is None else int(n_condition)
    if x.size < k + 1:
        raise InputError(f"series of length {x.size} is too short")
    if count_trees(config.depth, config.m) > ENUMERATION_LIMIT:
        raise CapacityError(f"|T({config.depth})| exceeds {ENUMERATION_LIMIT}")
    out = []
    for tree in enumerate_trees(config.depth, config.m):
        leaf_stats = _leaf_stats(tree, x, config, k)
        lm = sum(log_pe(s, config.hyper) for s in leaf_stats.values())
        out.append((tree, log_prior(tree, config.beta, config.depth) + lm))
    return out


def brute_force_evidence(series: Sequence[float], config: BCTConfig, n_condition: int | None = None) -> float:
    scores = np.array([s for _, s in brute_force_scores(series, config, n_condition)])
    return float(np.logaddexp.reduce(scores))
