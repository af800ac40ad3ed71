"""Brute-force numerical references, written without touching the closed forms under test.

Densities are spelled out with ``math`` because the integrands are evaluated
hundreds of thousands of times.
"""

import math

import numpy as np
from scipy import integrate


def normal_pdf(x, mean, var):
    return math.exp(-0.5 * (x - mean) ** 2 / var) / math.sqrt(2 * math.pi * var)


def invgamma_pdf(s2, shape, scale):
    if s2 <= 0:
        return 0.0
    return math.exp(shape * math.log(scale) - math.lgamma(shape) - (shape + 1) * math.log(s2) - scale / s2)


def likelihood(phi, sigma2, xs, xts):
    """Gaussian AR likelihood for a scalar coefficient; ``xts`` holds the scalar regressors."""
    rss = math.fsum((x - phi * xt) ** 2 for x, xt in zip(xs, xts))
    return math.exp(-0.5 * rss / sigma2 - 0.5 * len(xs) * math.log(2 * math.pi * sigma2))


def joint(phi, sigma2, xs, xts, mu0, sigma0, tau, lam):
    """Likelihood x prior for an AR(1) leaf with phi | sigma2 ~ N(mu0, sigma2*sigma0)."""
    if sigma2 <= 0:
        return 0.0
    return likelihood(phi, sigma2, xs, xts) * normal_pdf(phi, mu0, sigma2 * sigma0) * invgamma_pdf(sigma2, tau, lam)


def phi_integral(sigma2, xs, xts, mu0, sigma0, tau, lam):
    f = lambda phi: joint(phi, sigma2, xs, xts, mu0, sigma0, tau, lam)
    return integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-11, limit=200)[0]


def sigma2_integral(phi, xs, xts, mu0, sigma0, tau, lam):
    g = lambda s2: joint(phi, s2, xs, xts, mu0, sigma0, tau, lam)
    return integrate.quad(g, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]


def evidence_quadrature(xs, xts, mu0, sigma0, tau, lam):
    """Nested adaptive quadrature of the leaf marginal likelihood over (phi, sigma2)."""
    xs, xts = list(map(float, np.ravel(xs))), list(map(float, np.ravel(xts)))
    g = lambda s2: phi_integral(s2, xs, xts, mu0, sigma0, tau, lam)
    return integrate.quad(g, 0, np.inf, epsabs=0, epsrel=1e-10, limit=400)[0]


def known_var_quadrature(xs, xts, mu0, sigma0, sigma2):
    """Integral over phi of the fixed-variance likelihood times N(mu0, sigma0)."""
    xs, xts = list(map(float, np.ravel(xs))), list(map(float, np.ravel(xts)))
    f = lambda phi: likelihood(phi, sigma2, xs, xts) * normal_pdf(phi, mu0, sigma0)
    return integrate.quad(f, -np.inf, np.inf, epsabs=0, epsrel=1e-11, limit=200)[0]
