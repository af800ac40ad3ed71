"""Conjugate AR(p) leaf models: sufficient statistics, marginal likelihoods and posteriors.

Each leaf carries ``x_n = phi^T xt_{n-1} + e_n`` with ``e_n ~ N(0, sigma^2)``,
``sigma^2 ~ Inv-Gamma(tau, lam)`` and ``phi | sigma^2 ~ N(mu0, sigma^2 Sigma0)``.
Everything here is a function of the sums ``count, s1, s2, S3`` only.

Linear algebra goes through the Cholesky factor ``L`` of ``Sigma0``: with
``M = I + L^T S3 L`` we have ``det(I + Sigma0 S3) = det(M)`` and
``(S3 + Sigma0^{-1})^{-1} = L M^{-1} L^T``, so nothing is ever inverted
explicitly and ``M`` is symmetric positive definite by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, stats
from scipy.special import gammaln

from .errors import ConfigurationError, InputError, NumericalError

LOG_2PI = math.log(2.0 * math.pi)
DS_CLAMP = 1e-8


@dataclass(frozen=True, eq=False)
class ARHyper:
    """AR order, intercept flag and normal-inverse-gamma prior hyperparameters.

    ``mu0`` and ``Sigma0`` accept scalars (broadcast to ``mu0 * 1`` and
    ``Sigma0 * I``) or full arrays of dimension ``q = p + intercept``.
    """

    p: int = 1
    intercept: bool = False
    mu0: np.ndarray | float = 0.0
    Sigma0: np.ndarray | float = 1.0
    tau: float = 2.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        if int(self.p) != self.p or self.p < 1:
            raise ConfigurationError(f"AR order p must be a positive integer, got {self.p}")
        if not (self.tau > 0 and self.lam > 0):
            raise ConfigurationError(f"tau and lambda must be positive, got {self.tau}, {self.lam}")
        q = self.q
        mu0 = np.asarray(self.mu0, dtype=float)
        mu0 = np.full(q, float(mu0)) if mu0.ndim == 0 else mu0.reshape(-1)
        Sigma0 = np.asarray(self.Sigma0, dtype=float)
        Sigma0 = float(Sigma0) * np.eye(q) if Sigma0.ndim == 0 else Sigma0
        if mu0.shape != (q,) or Sigma0.shape != (q, q):
            raise ConfigurationError(
                f"prior dimensions must be q={q}; got mu0 {mu0.shape}, Sigma0 {Sigma0.shape}"
            )
        if not np.allclose(Sigma0, Sigma0.T, rtol=1e-12, atol=1e-14):
            raise ConfigurationError("Sigma0 must be symmetric")
        try:
            chol = np.linalg.cholesky(Sigma0)
        except np.linalg.LinAlgError:
            raise ConfigurationError("Sigma0 must be positive definite") from None
        prec_mu = linalg.cho_solve((chol, True), mu0)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "Sigma0", Sigma0)
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "_chol", chol)
        object.__setattr__(self, "_prec_mu", prec_mu)
        object.__setattr__(self, "_mu_prec_mu", float(mu0 @ prec_mu))

    @property
    def q(self) -> int:
        return self.p + int(bool(self.intercept))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "intercept": bool(self.intercept),
            "mu0": self.mu0.tolist(),
            "Sigma0": self.Sigma0.tolist(),
            "tau": self.tau,
            "lambda": self.lam,
        }


@dataclass(eq=False)
class SuffStats:
    """Running sums ``|B_s|``, ``s1 = sum x^2``, ``s2 = sum x*xt``, ``S3 = sum xt xt^T``."""

    count: int
    s1: float
    s2: np.ndarray
    S3: np.ndarray

    @classmethod
    def empty(cls, q: int) -> "SuffStats":
        return cls(0, 0.0, np.zeros(q), np.zeros((q, q)))

    @classmethod
    def from_data(cls, x: Sequence[float], X: np.ndarray) -> "SuffStats":
        x = np.asarray(x, dtype=float).reshape(-1)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(x.size, -1)
        return cls(int(x.size), float(x @ x), X.T @ x, X.T @ X)

    @property
    def q(self) -> int:
        return self.s2.shape[0]

    def add(self, x: float, xt: np.ndarray) -> None:
        """In-place single-sample update."""
        self.count += 1
        self.s1 += x * x
        self.s2 += x * xt
        self.S3 += np.outer(xt, xt)

    def copy(self) -> "SuffStats":
        return SuffStats(self.count, self.s1, self.s2.copy(), self.S3.copy())

    def __add__(self, other: "SuffStats") -> "SuffStats":
        return SuffStats(self.count + other.count, self.s1 + other.s1, self.s2 + other.s2, self.S3 + other.S3)


def regressor(series: Sequence[float], i: int, hyper: ARHyper) -> np.ndarray:
    """``(x_{i-1}, ..., x_{i-p})``, with a trailing 1 when the intercept is on."""
    if i - hyper.p < 0 or i > len(series):
        raise InputError(f"index {i} needs {hyper.p} earlier samples")
    lags = [float(series[i - j]) for j in range(1, hyper.p + 1)]
    if hyper.intercept:
        lags.append(1.0)
    return np.array(lags)


def regressor_matrix(x: np.ndarray, start: int, hyper: ARHyper) -> np.ndarray:
    """Rows are the regressors for targets ``x[start:]``."""
    n = x.size - start
    cols = [x[start - j : start - j + n] for j in range(1, hyper.p + 1)]
    if hyper.intercept:
        cols.append(np.ones(n))
    return np.column_stack(cols) if n else np.empty((0, hyper.q))


def stats_update(stats: SuffStats, x_i: float, xt: np.ndarray) -> SuffStats:
    xt = np.asarray(xt, dtype=float)
    if xt.shape != stats.s2.shape:
        raise InputError(f"regressor has shape {xt.shape}, statistics expect {stats.s2.shape}")
    out = stats.copy()
    out.add(float(x_i), xt)
    return out


def _whiten(S3: np.ndarray, v: np.ndarray, hyper: ARHyper) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cholesky of ``M = I + L^T S3 L`` (stacked) and ``w = K^{-1} L^T v``."""
    L = hyper._chol
    M = np.eye(hyper.q) + L.T @ S3 @ L
    try:
        K = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NumericalError("I + Sigma0 S3 is not positive definite") from None
    w = np.linalg.solve(K, (v @ L)[..., None])[..., 0]
    logdet = 2.0 * np.log(np.diagonal(K, axis1=-2, axis2=-1)).sum(axis=-1)
    return K, w, logdet


def _residual(s1, w, mu_prec_mu) -> np.ndarray:
    ds = np.asarray(s1 + mu_prec_mu - np.einsum("...i,...i->...", w, w), dtype=float)
    tol = -DS_CLAMP * (1.0 + np.abs(s1))
    if np.any(ds < tol):
        raise NumericalError(f"residual D_s = {ds.min():.3e} is negative beyond rounding")
    return np.maximum(ds, 0.0)


def log_pe_many(counts, s1, s2, S3, hyper: ARHyper) -> np.ndarray:
    """Vectorised log marginal likelihood over a stack of statistics."""
    counts = np.asarray(counts, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    _, w, logdet = _whiten(np.asarray(S3, dtype=float), np.asarray(s2) + hyper._prec_mu, hyper)
    ds = _residual(s1, w, hyper._mu_prec_mu)
    tau, lam = hyper.tau, hyper.lam
    shape = tau + 0.5 * counts
    out = (
        -0.5 * (counts * LOG_2PI + logdet)
        + gammaln(shape)
        - gammaln(tau)
        + tau * math.log(lam)
        - shape * np.log(lam + 0.5 * ds)
    )
    return np.where(counts == 0, 0.0, out)


def log_pe(stats: SuffStats, hyper: ARHyper) -> float:
    """Log marginal likelihood of the samples summarised by ``stats``.

    An empty node has likelihood 1 (log 0).
    """
    if stats.count == 0:
        return 0.0
    return float(log_pe_many(stats.count, stats.s1, stats.s2, stats.S3, hyper))


def log_pe_known_var(stats: SuffStats, hyper: ARHyper, sigma2: float) -> float:
    """Log marginal likelihood when the noise variance is fixed at ``sigma2``.

    The coefficient prior is ``N(mu0, Sigma0)`` here (no scaling by sigma2).
    """
    if not sigma2 > 0:
        raise ConfigurationError(f"sigma2 must be positive, got {sigma2}")
    if stats.count == 0:
        return 0.0
    # Same algebra as log_pe with the data sums divided by sigma2.
    _, w, logdet = _whiten(stats.S3 / sigma2, stats.s2 / sigma2 + hyper._prec_mu, hyper)
    e_over_s2 = _residual(stats.s1 / sigma2, w, hyper._mu_prec_mu)
    return float(-0.5 * (stats.count * (LOG_2PI + math.log(sigma2)) + logdet + e_over_s2))


@dataclass(frozen=True, eq=False)
class ARPosterior:
    """Inverse-gamma posterior for sigma^2 and multivariate-t posterior for phi."""

    shape: float
    scale: float
    nu: float
    mean: np.ndarray
    P: np.ndarray

    def sigma2_logpdf(self, sigma2):
        return stats.invgamma.logpdf(sigma2, self.shape, scale=self.scale)

    def phi_logpdf(self, phi):
        return stats.multivariate_t.logpdf(phi, loc=self.mean, shape=self.P, df=self.nu)

    def predictive(self, xt: np.ndarray) -> tuple[float, float, float]:
        """(location, scale^2, dof) of the Student-t one-step predictive at ``xt``."""
        xt = np.asarray(xt, dtype=float)
        s2 = self.scale / self.shape
        var = s2 + float(xt @ self.P @ xt)
        return float(self.mean @ xt), var, self.nu


def _posterior_parts(stats: SuffStats, hyper: ARHyper):
    if stats.count == 0 and not stats.S3.any() and not stats.s2.any():
        # no data: return the prior's own parameters rather than a rounded round trip
        return 0.0, hyper.Sigma0.copy(), hyper.mu0.copy()
    K, w, _ = _whiten(stats.S3, stats.s2 + hyper._prec_mu, hyper)
    ds = float(_residual(stats.s1, w, hyper._mu_prec_mu))
    # W^T W = L M^{-1} L^T = (S3 + Sigma0^{-1})^{-1}
    W = linalg.solve_triangular(K, hyper._chol.T, lower=True)
    mean = W.T @ w
    return ds, W.T @ W, mean


def posterior(stats: SuffStats, hyper: ARHyper) -> ARPosterior:
    ds, cov, mean = _posterior_parts(stats, hyper)
    n = stats.count
    shape = hyper.tau + 0.5 * n
    scale = hyper.lam + 0.5 * ds
    nu = 2.0 * hyper.tau + n
    P = ((2.0 * hyper.lam + ds) / nu) * cov
    return ARPosterior(shape, scale, nu, mean, 0.5 * (P + P.T))


def map_params(stats: SuffStats, hyper: ARHyper) -> tuple[np.ndarray, float]:
    """Posterior modes: ``phi_hat = m_s`` and ``sigma2_hat = (2 lam + D_s) / (2 tau + n + 2)``."""
    ds, _, mean = _posterior_parts(stats, hyper)
    sigma2 = (2.0 * hyper.lam + ds) / (2.0 * hyper.tau + stats.count + 2.0)
    return mean, sigma2


def predict_mean(phi_hat: np.ndarray, xt: np.ndarray) -> float:
    phi_hat = np.asarray(phi_hat, dtype=float)
    xt = np.asarray(xt, dtype=float)
    if phi_hat.shape != xt.shape:
        raise InputError(f"coefficient shape {phi_hat.shape} does not match regressor {xt.shape}")
    return float(phi_hat @ xt)
