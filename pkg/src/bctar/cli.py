"""Command-line interface.

Every subcommand prints one JSON document on stdout that includes the fully
resolved run configuration. Failures print ``{"error": {...}}`` and exit
with status 2.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .ar_engine import ARHyper, SuffStats, map_params, posterior
from .context_tree import default_beta, label, tree_to_dict
from .data import TRANSFORMS, ingest, invert_forecasts, read_matrix, transform, write_series
from .errors import BCTError, ConfigurationError, InputError
from .forecast import rolling_forecast, split_point
from .inference import BCTConfig, InferenceState, cbct, cctw, kbct
from .quantiser import Quantiser, threshold_grid
from .simulate import THREE_LEAF_MODEL, BCTARModel, simulate_bct_ar
from .tuning import select_hyper

log = logging.getLogger("bctar")


@dataclass
class RunConfig:
    depth: int = 2
    m: int | None = None
    beta: float | None = None
    thresholds: list[float] | str = "tune"
    p: int | str = "tune"
    p_max: int = 5
    grid_points: int = 9
    grid_mode: str = "auto"
    intercept: bool = False
    tau: float = 2.0
    lam: float = 1.0
    mu0: list[float] | float = 0.0
    sigma0: list[list[float]] | float = 1.0
    transform: str = "none"
    split: float = 0.5
    seed: int | None = None
    k: int = 5
    refit: bool = True
    invert_transform: bool = False
    input: str | None = None
    column: str | None = None
    tuning: list[dict] | None = field(default=None, repr=False)

    def validate(self) -> None:
        if self.depth < 0:
            raise ConfigurationError(f"depth must be >= 0, got {self.depth}")
        if self.transform not in TRANSFORMS:
            raise ConfigurationError(f"transform must be one of {TRANSFORMS}")
        if isinstance(self.thresholds, list):
            Quantiser(self.thresholds)
            if self.m is not None and self.m != len(self.thresholds) + 1:
                raise ConfigurationError(f"{len(self.thresholds)} thresholds do not match m={self.m}")
            self.m = len(self.thresholds) + 1
        elif self.m is None:
            self.m = 2
        if self.m < 2:
            raise ConfigurationError(f"m must be >= 2, got {self.m}")
        if self.beta is not None and not 0 < self.beta < 1:
            raise ConfigurationError(f"beta must lie in (0, 1), got {self.beta}")
        if isinstance(self.p, int) and self.p < 1:
            raise ConfigurationError(f"p must be >= 1, got {self.p}")
        if self.p_max < 1 or self.grid_points < 1 or self.k < 1:
            raise ConfigurationError("p-max, grid-points and k must be >= 1")
        if not 0 < self.split < 1:
            raise ConfigurationError(f"split must lie in (0, 1), got {self.split}")
        if self.tau <= 0 or self.lam <= 0:
            raise ConfigurationError("tau and lambda must be positive")

    @property
    def needs_tuning(self) -> bool:
        return self.thresholds == "tune" or self.p == "tune"

    def model_config(self) -> BCTConfig:
        hyper = ARHyper(
            p=int(self.p),
            intercept=self.intercept,
            mu0=np.asarray(self.mu0, dtype=float),
            Sigma0=np.asarray(self.sigma0, dtype=float),
            tau=self.tau,
            lam=self.lam,
        )
        return BCTConfig(Quantiser(self.thresholds), self.depth, hyper, self.beta)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("tuning")
        out["beta"] = default_beta(self.m) if self.beta is None and self.m else self.beta
        return out


def _parse_floats(text: str) -> list[float] | float:
    parts = [float(t) for t in text.split(",") if t.strip()]
    return parts[0] if len(parts) == 1 and "," not in text else parts


def _thresholds(text: str) -> list[float] | str:
    if text == "tune":
        return text
    vals = _parse_floats(text)
    return [vals] if isinstance(vals, float) else vals


def _order(text: str) -> int | str:
    return text if text == "tune" else int(text)


class _Parser(argparse.ArgumentParser):
    """Argument errors become :class:`ConfigurationError` so they share the JSON error path."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def _model_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    g = parent.add_argument_group("model")
    g.add_argument("--depth", "-D", type=int, default=2, help="maximum context depth D")
    g.add_argument("--alphabet", "-m", type=int, default=None, dest="m", help="alphabet size (implied by explicit thresholds)")
    g.add_argument("--beta", type=float, default=None, help="tree prior weight (default 1 - 2^(1-m))")
    g.add_argument("--thresholds", type=_thresholds, default="tune", help="comma-separated thresholds or 'tune'")
    g.add_argument("--order", "-p", type=_order, default="tune", dest="p", help="AR order or 'tune'")
    g.add_argument("--p-max", type=int, default=5)
    g.add_argument("--grid-points", type=int, default=9)
    g.add_argument("--grid-mode", choices=("auto", "symmetric", "subsets"), default="auto")
    g.add_argument("--intercept", action="store_true", help="add a constant term to each AR model")
    g.add_argument("--tau", type=float, default=2.0)
    g.add_argument("--lambda", type=float, default=1.0, dest="lam")
    g.add_argument("--mu0", type=_parse_floats, default=0.0, help="prior mean: scalar or comma list")
    g.add_argument("--sigma0", type=float, default=1.0, help="prior scale as a multiple of the identity")
    g.add_argument("--sigma0-file", default=None, help="CSV file holding the full prior scale matrix")
    d = parent.add_argument_group("data")
    d.add_argument("--input", "-i", required=True, help="CSV file")
    d.add_argument("--column", default=None, help="column name or 0-based index (default: last)")
    d.add_argument("--transform", choices=TRANSFORMS, default="none")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bctar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    model = _model_options()

    sub.add_parser("evidence", parents=[model], help="log evidence log p(x)")
    sub.add_parser("map", parents=[model], help="MAP context tree and its posterior")
    topk = sub.add_parser("topk", parents=[model], help="k most probable trees")
    topk.add_argument("--k", type=int, default=5)
    sub.add_parser("fit", parents=[model], help="leaf posteriors and MAP parameters of the MAP tree")
    sub.add_parser("tune", parents=[model], help="evidence table over thresholds and AR orders")
    fc = sub.add_parser("forecast", parents=[model], help="rolling one-step forecasts")
    fc.add_argument("--split", type=float, default=0.5, help="training fraction")
    fc.add_argument("--no-refit", dest="refit", action="store_false", help="freeze the training-time MAP tree")
    fc.add_argument("--invert-transform", action="store_true", help="also report forecasts on the level scale")

    sim = sub.add_parser("simulate", help="sample a series from a context-tree AR model")
    sim.add_argument("--model", default=None, help="JSON model file (default: built-in three-leaf model)")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--burn-in", type=int, default=None)
    sim.add_argument("--output", "-o", required=True, help="CSV file to write")
    return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
    sigma0: object = args.sigma0
    if args.sigma0_file:
        sigma0 = read_matrix(args.sigma0_file).tolist()
    cfg = RunConfig(
        depth=args.depth,
        m=args.m,
        beta=args.beta,
        thresholds=args.thresholds,
        p=args.p,
        p_max=args.p_max,
        grid_points=args.grid_points,
        grid_mode=args.grid_mode,
        intercept=args.intercept,
        tau=args.tau,
        lam=args.lam,
        mu0=args.mu0,
        sigma0=sigma0,
        transform=args.transform,
        split=getattr(args, "split", 0.5),
        k=getattr(args, "k", 5),
        refit=getattr(args, "refit", True),
        invert_transform=getattr(args, "invert_transform", False),
        input=args.input,
        column=args.column,
    )
    cfg.validate()
    return cfg


def _resolve(cfg: RunConfig, train: np.ndarray) -> None:
    """Replace 'tune' placeholders with evidence-maximising values."""
    if not cfg.needs_tuning:
        return
    if cfg.thresholds == "tune":
        candidates = threshold_grid(train, cfg.m, cfg.grid_points, cfg.grid_mode)
    else:
        candidates = [cfg.thresholds]
    if cfg.p == "tune":
        p_max = cfg.p_max
    else:
        p_max = int(cfg.p)
    if not (np.ndim(cfg.mu0) == 0 and np.ndim(cfg.sigma0) == 0):
        if cfg.p == "tune":
            raise ConfigurationError("tuning p needs scalar mu0 and sigma0")
    res = select_hyper(
        train,
        cfg.m,
        candidates,
        p_max,
        depth=cfg.depth,
        beta=cfg.beta,
        intercept=cfg.intercept,
        tau=cfg.tau,
        lam=cfg.lam,
        mu0=float(np.mean(cfg.mu0)),
        sigma0=float(np.asarray(cfg.sigma0).reshape(-1)[0]),
    )
    table = res.table
    if cfg.p != "tune":
        table = [row for row in table if row["p"] == int(cfg.p)]
        best = max(table, key=lambda r: r["log_evidence"])
        cfg.thresholds = list(best["thresholds"])
    else:
        cfg.thresholds = list(res.thresholds)
        cfg.p = res.p
    cfg.tuning = table


def _leaf_summary(state: InferenceState, path) -> dict:
    hyper = state.config.hyper
    node = state.tmax.nodes.get(path)
    stats = node.stats if node is not None else SuffStats.empty(hyper.q)
    post = posterior(stats, hyper)
    phi_hat, sigma2_hat = map_params(stats, hyper)
    return {
        "path": label(path),
        "count": int(stats.count),
        "sigma2_shape": post.shape,
        "sigma2_scale": post.scale,
        "phi_df": post.nu,
        "phi_mean": post.mean.tolist(),
        "phi_scale_matrix": post.P.tolist(),
        "phi_map": phi_hat.tolist(),
        "sigma2_map": sigma2_hat,
        "sigma_map": math.sqrt(sigma2_hat),
    }


def _analyse(command: str, cfg: RunConfig, series: np.ndarray) -> dict:
    out: dict = {"command": command}
    if command == "forecast":
        n_train = split_point(series.size, cfg.split, max(cfg.depth, cfg.p_max if cfg.p == "tune" else int(cfg.p)))
        _resolve(cfg, series[:n_train])
        report = rolling_forecast(series, cfg.split, cfg.model_config(), refit=cfg.refit)
        out["report"] = report.to_dict()
        return out

    _resolve(cfg, series)
    if command == "tune":
        out["tuning"] = cfg.tuning
        return out
    model = cfg.model_config()
    state = InferenceState.from_series(series, model)
    out["n"] = state.n
    out["log_evidence"] = cctw(state)
    if command == "map":
        res = cbct(state)
        out["map"] = res.to_dict()
        out["tree"] = tree_to_dict(res.tree, model.depth, model.beta, state.tmax, res.posterior)
    elif command == "topk":
        results = kbct(state, cfg.k)
        out["trees"] = [r.to_dict() for r in results]
        out["total_posterior"] = math.fsum(r.posterior for r in results)
    elif command == "fit":
        res = cbct(state)
        out["map"] = res.to_dict()
        out["leaves"] = [_leaf_summary(state, leaf) for leaf in sorted(res.tree.leaves)]
    return out


def run(argv: Sequence[str] | None = None) -> tuple[int, dict]:
    """Execute one command; returns ``(exit status, JSON-ready payload)``."""
    try:
        args = build_parser().parse_args(argv)
        if args.command == "simulate":
            return 0, _simulate(args)
        cfg = _run_config(args)
        levels = ingest(args.input, args.column)
        series = transform(levels, cfg.transform)
        payload = _analyse(args.command, cfg, series)
        if args.command == "forecast" and cfg.invert_transform:
            rep = payload["report"]
            start = rep["n_train"]
            lf = invert_forecasts(levels, np.asarray(rep["forecasts"]), start, cfg.transform)
            offset = 0 if cfg.transform == "none" else 1
            la = levels[start + offset : start + offset + lf.size]
            rep["level_forecasts"] = lf.tolist()
            rep["level_actuals"] = la.tolist()
            rep["level_mse"] = float(np.mean((lf - la) ** 2))
        result = {"config": cfg.to_dict()}
        if cfg.tuning is not None and args.command != "tune":
            result["tuning"] = cfg.tuning
        result.update(payload)
        return 0, result
    except BCTError as exc:
        return 2, {"error": {"type": exc.kind, "message": str(exc)}}


def _simulate(args: argparse.Namespace) -> dict:
    if args.model:
        try:
            spec = json.loads(Path(args.model).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read model file {args.model}: {exc}") from None
        model = BCTARModel.from_dict(spec)
    else:
        model = THREE_LEAF_MODEL
    series = simulate_bct_ar(model, args.n, seed=args.seed, burn_in=args.burn_in)
    write_series(args.output, series)
    return {
        "config": {
            "model": args.model or "builtin:three-leaf",
            "n": args.n,
            "seed": args.seed,
            "burn_in": args.burn_in if args.burn_in is not None else 10 * model.n_condition,
            "output": args.output,
        },
        "command": "simulate",
        "n": int(series.size),
    }


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BCTAR_LOG_LEVEL", "WARNING").upper(), stream=sys.stderr)
    status, payload = run(argv)
    json.dump(payload, sys.stdout, indent=2, allow_nan=True)
    sys.stdout.write("\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
