"""Proper m-ary context trees, the tree prior and the T_MAX construction.

Nodes are addressed by symbol tuples read from the root: the first symbol is
the quantised value of the most recent sample, the second the one before it,
and so on. The root is the empty tuple. Labels such as ``"01"`` are the same
tuple written as a digit string.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError, InputError, StructuralError

Path = tuple[int, ...]

ENUMERATION_LIMIT = 10**6


def default_beta(m: int) -> float:
    return 1.0 - 2.0 ** (-m + 1)


def label(path: Path) -> str:
    if any(s > 9 for s in path):
        return ".".join(str(s) for s in path)
    return "".join(str(s) for s in path)


def parse_label(text: str) -> Path:
    text = text.strip()
    if text in ("", "root", "()"):
        return ()
    if "." in text:
        return tuple(int(t) for t in text.split("."))
    return tuple(int(ch) for ch in text)


@dataclass(frozen=True)
class ContextTree:
    """A proper m-ary tree identified with its set of leaves."""

    m: int
    leaves: frozenset

    def __init__(self, m: int, leaves: Iterable[Sequence[int]]):
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "leaves", frozenset(tuple(int(s) for s in leaf) for leaf in leaves))
        self._validate()

    @classmethod
    def root(cls, m: int) -> "ContextTree":
        return cls(m, [()])

    @classmethod
    def from_labels(cls, m: int, labels: Iterable[str]) -> "ContextTree":
        return cls(m, [parse_label(t) for t in labels])

    @classmethod
    def complete(cls, m: int, depth: int) -> "ContextTree":
        return cls(m, itertools.product(range(m), repeat=depth))

    def _validate(self) -> None:
        if self.m < 2:
            raise StructuralError(f"alphabet size must be >= 2, got {self.m}")
        if not self.leaves:
            raise StructuralError("a context tree needs at least one leaf")
        for leaf in self.leaves:
            if any(s < 0 or s >= self.m for s in leaf):
                raise StructuralError(f"leaf {leaf} uses symbols outside 0..{self.m - 1}")
        internal = self.internal_nodes
        clash = internal & self.leaves
        if clash:
            raise StructuralError(f"leaf {label(min(clash))!r} also has descendants")
        for node in internal:
            for j in range(self.m):
                child = node + (j,)
                if child not in internal and child not in self.leaves:
                    raise StructuralError(
                        f"node {label(node)!r} is missing child {label(child)!r}; tree is not proper"
                    )

    @property
    def internal_nodes(self) -> frozenset:
        return frozenset(leaf[:d] for leaf in self.leaves for d in range(len(leaf)))

    @property
    def depth(self) -> int:
        return max(len(leaf) for leaf in self.leaves)

    def nodes(self) -> Iterator[Path]:
        """All nodes in preorder, children visited in symbol order."""
        internal = self.internal_nodes
        stack: list[Path] = [()]
        while stack:
            node = stack.pop()
            yield node
            if node in internal:
                stack.extend(node + (j,) for j in reversed(range(self.m)))

    def labels(self) -> list[str]:
        return sorted(label(leaf) for leaf in self.leaves)

    def is_leaf(self, path: Path) -> bool:
        return path in self.leaves

    def __repr__(self) -> str:
        return f"ContextTree(m={self.m}, leaves={self.labels()})"


def context_of(tree: ContextTree, past: Sequence[int]) -> Path:
    """Leaf of ``tree`` matching ``past`` (most recent symbol first)."""
    node: Path = ()
    leaves = tree.leaves
    while node not in leaves:
        d = len(node)
        if d >= len(past):
            raise InputError(f"context needs at least {d + 1} past symbols, got {len(past)}")
        node = node + (int(past[d]),)
        if d + 1 > tree.depth:
            raise StructuralError("walked below the deepest leaf; tree is not proper")
    return node


def log_prior(tree: ContextTree, beta: float, depth: int) -> float:
    """Log of the tree prior ``alpha^(|T|-1) * beta^(|T| - L_D(T))``."""
    if not 0.0 < beta < 1.0:
        raise StructuralError(f"beta must lie in (0, 1), got {beta}")
    if tree.depth > depth:
        raise StructuralError(f"tree depth {tree.depth} exceeds maximum depth {depth}")
    n_leaves = len(tree.leaves)
    n_full = sum(1 for leaf in tree.leaves if len(leaf) == depth)
    log_alpha = math.log1p(-beta) / (tree.m - 1)
    out = 0.0
    if n_leaves > 1:
        out += (n_leaves - 1) * log_alpha
    if n_leaves > n_full:
        out += (n_leaves - n_full) * math.log(beta)
    return out


def count_trees(depth: int, m: int) -> int:
    """|T(D)| via the recursion N(d) = 1 + N(d-1)^m, capped just above the guard."""
    n = 1
    for _ in range(depth):
        n = 1 + n**m
        if n > ENUMERATION_LIMIT:
            return ENUMERATION_LIMIT + 1
    return n


def enumerate_trees(depth: int, m: int) -> list[ContextTree]:
    """Every proper m-ary tree of depth at most ``depth``. Small cases only."""
    if depth < 0:
        raise StructuralError(f"depth must be >= 0, got {depth}")
    if count_trees(depth, m) > ENUMERATION_LIMIT:
        raise CapacityError(f"|T({depth})| for m={m} exceeds {ENUMERATION_LIMIT}")

    def subtrees(d: int) -> list[list[Path]]:
        # leaf sets of subtrees rooted at a depth-d node, relative to it
        if d == depth:
            return [[()]]
        below = subtrees(d + 1)
        out = [[()]]
        for combo in itertools.product(below, repeat=m):
            out.append([(j,) + rest for j, sub in enumerate(combo) for rest in sub])
        return out

    return [ContextTree(m, leaves) for leaves in subtrees(0)]


@dataclass
class TMaxNode:
    """One node of T_MAX.

    ``indices`` is the set B_s of (1-based) sample positions whose context
    passes through this node. ``stats`` and ``log_pe`` are filled in by the
    inference layer; ``log_pw``, ``log_pm`` and ``prune`` hold the outputs of
    the most recent weighting and maximisation passes.
    """

    path: Path
    indices: list[int] = field(default_factory=list)
    stats: object = None
    log_pe: float = 0.0
    log_pw: float = 0.0
    log_pm: float = 0.0
    prune: bool = False


@dataclass
class TMax:
    m: int
    depth: int
    nodes: dict[Path, TMaxNode] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.nodes.setdefault((), TMaxNode(()))

    @property
    def n(self) -> int:
        return len(self.nodes[()].indices)

    def insert(self, context: Sequence[int], index: int) -> list[TMaxNode]:
        """Record sample ``index`` on the depth-D path ``context``; returns the D+1 nodes."""
        touched = []
        path: Path = ()
        for d in range(self.depth + 1):
            if d:
                path = path + (int(context[d - 1]),)
            node = self.nodes.get(path)
            if node is None:
                node = self.nodes[path] = TMaxNode(path)
            node.indices.append(index)
            touched.append(node)
        return touched

    def children(self, path: Path) -> list[TMaxNode | None]:
        return [self.nodes.get(path + (j,)) for j in range(self.m)]

    def by_depth(self) -> list[list[TMaxNode]]:
        levels: list[list[TMaxNode]] = [[] for _ in range(self.depth + 1)]
        for path, node in self.nodes.items():
            levels[len(path)].append(node)
        return levels

    def leaves(self) -> list[Path]:
        return [p for p in self.nodes if len(p) == self.depth]


def contexts(symbols: Sequence[int], depth: int) -> np.ndarray:
    """Matrix of depth-D contexts: row i holds y_{i-1}, ..., y_{i-D} for each target.

    ``symbols`` starts with the ``depth`` conditioning symbols, so the result
    has ``len(symbols) - depth`` rows.
    """
    y = np.asarray(symbols, dtype=np.int64)
    n = y.size - depth
    if n < 1:
        raise InputError(f"need at least {depth + 1} symbols for depth {depth}, got {y.size}")
    out = np.empty((n, depth), dtype=np.int64)
    for j in range(depth):
        out[:, j] = y[depth - 1 - j : depth - 1 - j + n]
    return out


def build_tmax(symbols: Sequence[int], depth: int, m: int) -> TMax:
    """Build T_MAX from ``y_{-D+1}, ..., y_n`` (the first D symbols only condition)."""
    if depth < 0:
        raise StructuralError(f"depth must be >= 0, got {depth}")
    ctx = contexts(symbols, depth)
    if ctx.size and (ctx.min() < 0 or ctx.max() >= m):
        raise InputError(f"symbols must lie in 0..{m - 1}")
    tmax = TMax(m, depth)
    for i, row in enumerate(ctx, start=1):
        tmax.insert(row, i)
    return tmax


def tree_to_dict(
    tree: ContextTree,
    depth: int,
    beta: float,
    tmax: TMax | None = None,
    map_posterior: float | None = None,
) -> dict:
    """JSON-ready description of ``tree`` with per-node statistics from ``tmax``."""
    nodes = []
    for path in tree.nodes():
        entry: dict = {"path": label(path), "is_leaf": path in tree.leaves}
        node = tmax.nodes.get(path) if tmax is not None else None
        stats = getattr(node, "stats", None)
        if stats is None:
            entry["stats"] = {"count": 0}
        else:
            entry["stats"] = {
                "count": int(stats.count),
                "s1": float(stats.s1),
                "s2": [float(v) for v in stats.s2],
                "S3": [[float(v) for v in row] for row in stats.S3],
            }
        entry["log_pe"] = float(node.log_pe) if node is not None else 0.0
        nodes.append(entry)
    return {
        "m": tree.m,
        "D": depth,
        "beta": beta,
        "nodes": nodes,
        "map_posterior": map_posterior,
    }
