"""Independent oracles used by the tests.

Everything here deliberately avoids the library's own code paths: the
lasso oracle is accelerated proximal gradient, the pursuit oracle is
exhaustive subset search, and the density oracle integrates the
characteristic-function inversion formula with scipy's adaptive
quadrature.
"""

import itertools
import math

import numpy as np
from scipy.integrate import quad


def fista_lasso(D, x, lambda2, gamma, tol=1e-10, max_iter=200_000):
    """Minimize lambda2 ||x - D s||^2 + gamma ||s||_1 by accelerated
    proximal gradient, run to a 1e-10 iterate tolerance."""
    D = np.asarray(D, float)
    x = np.asarray(x, float)
    L = 2.0 * lambda2 * np.linalg.norm(D, 2) ** 2
    s = np.zeros(D.shape[1])
    y = s.copy()
    t = 1.0
    for _ in range(max_iter):
        g = 2.0 * lambda2 * (D.T @ (D @ y - x))
        s_new = y - g / L
        s_new = np.sign(s_new) * np.maximum(np.abs(s_new) - gamma / L, 0.0)
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = s_new + ((t - 1.0) / t_new) * (s_new - s)
        if np.abs(s_new - s).max() < tol:
            return s_new
        s, t = s_new, t_new
    return s


def lasso_objective(D, x, s, lambda2, gamma):
    r = x - D @ s
    return float(lambda2 * r @ r + gamma * np.sum(np.abs(s)))


def best_subset_residual(D, x, size):
    """Smallest least-squares residual norm over all supports of `size`."""
    D = np.asarray(D, float)
    x = np.asarray(x, float)
    best = float(np.linalg.norm(x))
    best_support = ()
    for support in itertools.combinations(range(D.shape[1]), size):
        sub = D[:, support]
        coef, *_ = np.linalg.lstsq(sub, x, rcond=None)
        resid = float(np.linalg.norm(x - sub @ coef))
        if resid < best:
            best = resid
            best_support = support
    return best, best_support


def stable_pdf_quad(alpha, beta, sigma, mu, x):
    """Density by adaptive quadrature of (1/pi) Int Re[e^{-iwz} Phi(w)] dw.

    Standard S1 parameterization, alpha != 1.
    """
    tan_term = 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)
    z = (x - mu) / sigma

    def integrand(w):
        scale = w**alpha
        phi = complex(-scale, beta * tan_term * scale)
        return (np.exp(phi - 1j * w * z)).real

    total, _ = quad(integrand, 0.0, math.log(1e14) ** (1.0 / alpha), limit=800)
    return total / math.pi / sigma


def stable_cdf_quad(alpha, beta, sigma, mu, x):
    """Distribution function by adaptive quadrature of the Gil-Pelaez
    inversion F(x) = 1/2 - (1/pi) Int Im[e^{-iwz} Phi(w)]/w dw."""
    tan_term = 0.0 if alpha == 2.0 else math.tan(math.pi * alpha / 2.0)
    z = (x - mu) / sigma

    def integrand(w):
        scale = w**alpha
        phi = complex(-scale, beta * tan_term * scale)
        return (np.exp(phi - 1j * w * z)).imag / w

    upper = math.log(1e14) ** (1.0 / alpha)
    total, _ = quad(integrand, 1e-12, upper, limit=2000)
    return 0.5 - total / math.pi


def stable_positive_mass_quad(alpha, beta, sigma, mu):
    """P(X >= 0) = 1 - F(0), with F from the Gil-Pelaez quadrature."""
    return 1.0 - stable_cdf_quad(alpha, beta, sigma, mu, 0.0)


def empirical_cf(samples, omega):
    samples = np.asarray(samples, float)
    omega = np.atleast_1d(np.asarray(omega, float))
    vals = np.exp(1j * np.outer(omega, samples)).mean(axis=1)
    return vals if vals.size > 1 else vals[0]
