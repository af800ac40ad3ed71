"""Acceptance suite: one test per criterion, each recorded for the terminal summary.

Every test stores ``(passed, detail)`` in ``ACCEPTANCE`` before asserting, so
the summary printed by ``conftest.py`` lists all criteria even when some fail.
"""

import math
import statistics
import time

import numpy as np
from scipy import integrate, stats

from bctar import (
    THREE_LEAF_MODEL,
    ARHyper,
    InferenceState,
    SuffStats,
    cbct,
    cctw,
    enumerate_trees,
    kbct,
    log_pe,
    log_pe_known_var,
    log_prior,
    map_params,
    mse,
    posterior,
    rolling_forecast,
    simulate_bct_ar,
    tree_log_posterior,
)
from bctar.context_tree import default_beta
from bctar.inference import brute_force_evidence, brute_force_scores

from .helpers import ACCEPTANCE, make_config
from .oracles import evidence_quadrature, sigma2_integral, phi_integral


def record(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = (bool(ok), detail)
    assert ok, f"{key}: {detail}"


GRID = [(m, D) for m in (2, 3) for D in (0, 1, 2)]


def grid_instances(per_cell=50, seed=2024):
    """Random Gaussian series of total length <= 50 on the (m, D) grid; p varies in 1..3."""
    rng = np.random.default_rng(seed)
    for m, D in GRID:
        for _ in range(per_cell):
            p = int(rng.integers(1, 4))
            cfg = make_config(m=m, depth=D, p=p)
            n = int(rng.integers(cfg.n_condition + 1, 51))
            yield cfg, rng.standard_normal(n) * rng.uniform(0.3, 3.0)


def test_ac1_evidence_equals_enumeration():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for cfg, x in grid_instances():
        got = cctw(InferenceState.from_series(x, cfg))
        ref = brute_force_evidence(x, cfg)
        worst = max(worst, abs(got - ref) / abs(ref))
        count += 1
    elapsed = time.perf_counter() - t0
    record(
        "AC1 evidence = enumeration",
        worst <= 1e-10 and elapsed < 60,
        f"{count} series, max rel err {worst:.2e} (tol 1e-10), {elapsed:.1f}s (limit 60s)",
    )


def test_ac2_map_and_topk_equal_enumeration():
    failures, count = [], 0
    for cfg, x in grid_instances():
        state = InferenceState.from_series(x, cfg)
        scores = brute_force_scores(x, cfg)
        by_tree = dict(scores)
        ranked = sorted((s for _, s in scores), reverse=True)
        best = cbct(state)
        ok = math.isclose(by_tree[best.tree], ranked[0], rel_tol=1e-12, abs_tol=1e-12)
        for k in (1, 3, 5):
            top = kbct(state, k)
            got = [by_tree[r.tree] for r in top]
            # ties may permute, so compare the score sequence and the trees' own scores
            ok &= len(top) == min(k, len(scores))
            ok &= np.allclose(got, ranked[: len(top)], rtol=1e-12, atol=1e-12)
            ok &= np.allclose([r.log_prior + r.log_marginal for r in top], got, rtol=1e-12, atol=1e-12)
            ok &= len({r.tree for r in top}) == len(top)
        if not ok:
            failures.append((cfg.m, cfg.depth, x.size))
        count += 1
    record("AC2 MAP/top-k = enumeration", not failures, f"{count - len(failures)}/{count} instances match")


def test_ac3_marginal_likelihood_quadrature():
    rng = np.random.default_rng(77)
    worst_q, worst_kv = 0.0, 0.0
    for _ in range(20):
        n = int(rng.integers(1, 6))
        X = rng.normal(size=(n, 1))
        x = rng.normal(size=n)
        s = SuffStats.from_data(x, X)
        mu0, sigma0 = rng.normal(0, 0.5), rng.uniform(0.5, 2.0)
        tau, lam = rng.uniform(1.0, 3.0), rng.uniform(0.5, 2.0)
        h = ARHyper(p=1, mu0=mu0, Sigma0=sigma0, tau=tau, lam=lam)
        ref = evidence_quadrature(x, X, mu0, sigma0, tau, lam)
        worst_q = max(worst_q, abs(math.exp(log_pe(s, h)) - ref) / ref)

        # known-variance identity: mixing the fixed-variance evidence over the
        # inverse-gamma prior (coefficient prior scaled by sigma2) recovers P_e
        def integrand(s2):
            hs = ARHyper(p=1, mu0=mu0, Sigma0=s2 * sigma0)
            return stats.invgamma.pdf(s2, tau, scale=lam) * math.exp(log_pe_known_var(s, hs, s2))

        mixed = integrate.quad(integrand, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]
        worst_kv = max(worst_kv, abs(math.exp(log_pe(s, h)) - mixed) / mixed)
    record(
        "AC3 marginal likelihood quadrature",
        worst_q <= 1e-4 and worst_kv <= 1e-6,
        f"max rel err {worst_q:.2e} (tol 1e-4); known-variance identity {worst_kv:.2e} (tol 1e-6)",
    )


def test_ac4_posterior_and_map_estimates():
    rng = np.random.default_rng(88)
    worst, map_ok = 0.0, True
    for _ in range(5):
        n = int(rng.integers(1, 6))
        X = rng.normal(size=(n, 1))
        x = rng.normal(size=n)
        s = SuffStats.from_data(x, X)
        mu0, sigma0, tau, lam = rng.normal(0, 0.5), rng.uniform(0.5, 2.0), rng.uniform(1.0, 3.0), rng.uniform(0.5, 2.0)
        h = ARHyper(p=1, mu0=mu0, Sigma0=sigma0, tau=tau, lam=lam)
        post = posterior(s, h)
        xs, xts = x.tolist(), X[:, 0].tolist()
        Z = evidence_quadrature(x, X, mu0, sigma0, tau, lam)

        sd = math.sqrt(post.P[0, 0])
        phis = post.mean[0] + sd * np.linspace(-4, 4, 9)
        for phi in phis:
            oracle = sigma2_integral(phi, xs, xts, mu0, sigma0, tau, lam) / Z
            worst = max(worst, abs(math.exp(post.phi_logpdf([phi])) - oracle) / oracle)
        mode = post.scale / (post.shape + 1)
        for s2 in mode * np.array([0.25, 0.5, 1.0, 2.0, 4.0]):
            oracle = phi_integral(s2, xs, xts, mu0, sigma0, tau, lam) / Z
            worst = max(worst, abs(math.exp(post.sigma2_logpdf(s2)) - oracle) / oracle)

        phi_hat, s2_hat = map_params(s, h)
        step_s2 = mode * 0.01
        s2_grid = mode * np.linspace(0.5, 1.5, 101)
        s2_best = s2_grid[np.argmax([phi_integral(v, xs, xts, mu0, sigma0, tau, lam) for v in s2_grid])]
        step_phi = sd * 0.02
        phi_grid = post.mean[0] + sd * np.linspace(-1, 1, 101)
        phi_best = phi_grid[np.argmax([sigma2_integral(v, xs, xts, mu0, sigma0, tau, lam) for v in phi_grid])]
        map_ok &= abs(s2_best - s2_hat) <= step_s2 and abs(phi_best - phi_hat[0]) <= step_phi

    hp = ARHyper(p=2, mu0=[0.2, -0.4], Sigma0=np.array([[1.5, 0.2], [0.2, 0.7]]), tau=2.5, lam=0.8)
    prior = posterior(SuffStats.empty(2), hp)
    prior_ok = (
        prior.shape == hp.tau
        and prior.scale == hp.lam
        and prior.nu == 2 * hp.tau
        and np.array_equal(prior.mean, hp.mu0)
        and np.array_equal(prior.P, hp.lam / hp.tau * hp.Sigma0)
    )
    record(
        "AC4 posterior densities and MAP estimates",
        worst <= 1e-6 and map_ok and prior_ok,
        f"max pointwise rel err {worst:.2e} (tol 1e-6); MAP within grid step: {map_ok}; empty posterior = prior: {prior_ok}",
    )


def test_ac5_posterior_concentration():
    t0 = time.perf_counter()
    cfg = make_config(depth=3, p=2)
    truth = THREE_LEAF_MODEL.tree
    seeds = range(20)
    fractions, posts_500 = {}, []
    for n in (100, 300, 500):
        hits = 0
        for seed in seeds:
            x = simulate_bct_ar(THREE_LEAF_MODEL, n, seed=seed)
            res = cbct(InferenceState.from_series(x, cfg))
            hits += res.tree == truth
            if n == 500:
                posts_500.append(res.posterior)
        fractions[n] = hits / len(seeds)
    elapsed = time.perf_counter() - t0
    vals = [fractions[n] for n in (100, 300, 500)]
    med = statistics.median(posts_500)
    ok = fractions[500] >= 0.9 and med >= 0.9 and vals == sorted(vals) and elapsed < 120
    record(
        "AC5 posterior concentration",
        ok,
        f"recovery {vals} at n=100/300/500, median MAP posterior {med:.3f} at n=500, {elapsed:.1f}s",
    )


def test_ac6_sequential_equals_batch():
    rng = np.random.default_rng(66)
    worst, same_map, ok_stats = 0.0, True, True
    for m, D, p, intercept, n in [(2, 3, 2, False, 300), (3, 2, 1, True, 200), (2, 5, 3, False, 500), (3, 4, 2, True, 400)]:
        cfg = make_config(m=m, depth=D, p=p, intercept=intercept)
        x = rng.standard_normal(n)
        k = cfg.n_condition
        seq = InferenceState(cfg, x[:k])
        for v in x[k:]:
            seq.update(v)
        batch = InferenceState.from_series(x, cfg)
        ok_stats &= set(seq.tmax.nodes) == set(batch.tmax.nodes)
        for path, node in batch.tmax.nodes.items():
            a, b = seq.tmax.nodes[path], node
            ok_stats &= a.stats.count == b.stats.count and a.indices == b.indices
            ok_stats &= np.allclose(a.stats.S3, b.stats.S3, rtol=1e-12, atol=1e-12)
            ok_stats &= np.allclose(a.stats.s2, b.stats.s2, rtol=1e-12, atol=1e-12)
            ok_stats &= math.isclose(a.stats.s1, b.stats.s1, rel_tol=1e-12)
            worst = max(worst, abs(a.log_pe - b.log_pe) / max(1.0, abs(b.log_pe)))
        worst = max(worst, abs(cctw(seq) - cctw(batch)) / abs(cctw(batch)))
        same_map &= cbct(seq).tree == cbct(batch).tree
    record(
        "AC6 sequential = batch",
        ok_stats and same_map and worst <= 1e-12,
        f"node stats equal: {ok_stats}; max rel diff in log quantities {worst:.2e} (tol 1e-12); MAP equal: {same_map}",
    )


def _pipeline_seconds(x, cfg, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        state = InferenceState.from_series(x, cfg)
        cctw(state)
        cbct(state)
        best = min(best, time.perf_counter() - t0)
    return best


def test_ac7_linear_complexity():
    cfg = make_config(m=2, depth=5, p=2)
    x = simulate_bct_ar(THREE_LEAF_MODEL, 20000, seed=3)
    _pipeline_seconds(x[:2000], cfg, repeats=2)  # warm caches and imports
    t_half = _pipeline_seconds(x[:10000], cfg)
    t_full = _pipeline_seconds(x, cfg)
    ratio = t_full / t_half

    state = InferenceState(cfg, x[: cfg.n_condition])
    times = np.empty(x.size - cfg.n_condition)
    clock = time.perf_counter
    for i, v in enumerate(x[cfg.n_condition :]):
        t0 = clock()
        state.update(v)
        times[i] = clock() - t0
    early = float(np.median(times[1000:3000]))
    late = float(np.median(times[-2000:]))
    upd = late / early
    record(
        "AC7 linear complexity",
        ratio <= 2.5 and upd <= 1.5,
        f"time(20000)/time(10000) = {ratio:.2f} (limit 2.5); late/early per-update = {upd:.2f} (limit 1.5)",
    )


def test_ac8_prior_and_posterior_normalisation():
    worst_prior = 0.0
    for m in (2, 3):
        beta = default_beta(m)
        for D in range(4):
            total = math.fsum(math.exp(log_prior(t, beta, D)) for t in enumerate_trees(D, m))
            worst_prior = max(worst_prior, abs(total - 1.0))
    rng = np.random.default_rng(8)
    worst_post = 0.0
    for m, D in GRID + [(2, 3)]:
        cfg = make_config(m=m, depth=D, p=int(rng.integers(1, 3)))
        state = InferenceState.from_series(rng.standard_normal(40), cfg)
        total = math.fsum(math.exp(tree_log_posterior(t, state)) for t in enumerate_trees(D, m))
        worst_post = max(worst_post, abs(total - 1.0))
    record(
        "AC8 prior and posterior normalisation",
        worst_prior <= 1e-12 and worst_post <= 1e-10,
        f"prior |sum-1| {worst_prior:.1e} (tol 1e-12); posterior |sum-1| {worst_post:.1e} (tol 1e-10)",
    )


def test_ac9_forecast_close_to_oracle():
    n = 1000
    cfg = make_config(depth=3, p=2)
    ratios = []
    for seed in range(5):
        x = simulate_bct_ar(THREE_LEAF_MODEL, n, seed=seed)
        rep = rolling_forecast(x, 0.5, cfg)
        oracle = [THREE_LEAF_MODEL.conditional_mean(x[:i]) for i in range(rep.n_train, n)]
        ratios.append(rep.mse / mse(oracle, x[rep.n_train :]))
    record(
        "AC9 forecast MSE vs oracle",
        max(ratios) <= 1.10,
        f"MSE / oracle MSE over 5 seeds: max {max(ratios):.3f}, mean {np.mean(ratios):.3f} (limit 1.10)",
    )
