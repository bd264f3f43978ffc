"""Slow, independent reference implementations used only by the tests.

Everything here is deliberately naive: numeric quadrature for normal
expectations, exhaustive path enumeration for discrete walks, and double
loops for maxima.  The production code must match these, never the other
way around.
"""

import itertools
import math

import numpy as np
from scipy.integrate import quad


def normal_pdf(x, mu, sd):
    return math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))


def quad_rectified_exp(mu, sd, lam):
    """E exp(lam * max(Z, 0)) for Z ~ Normal(mu, sd^2), by quadrature."""
    norm = sd * math.sqrt(2 * math.pi)

    def integrand(x):
        # fused exponent so the Gaussian factor tames exp(lam*x)
        expo = lam * x - 0.5 * ((x - mu) / sd) ** 2
        return math.exp(expo) / norm if expo > -700.0 else 0.0

    left = quad(lambda x: normal_pdf(x, mu, sd), -np.inf, 0.0)[0]
    upper = mu + lam * sd**2 + 40.0 * sd  # integrand negligible beyond
    right = quad(integrand, 0.0, upper, limit=200)[0]
    return left + right


def quad_rectified_moments(mu, sd):
    """(E max(Z,0), E max(Z,0)^2) for Z ~ Normal(mu, sd^2)."""
    m1 = quad(lambda x: x * normal_pdf(x, mu, sd), 0.0, np.inf)[0]
    m2 = quad(lambda x: x * x * normal_pdf(x, mu, sd), 0.0, np.inf)[0]
    return m1, m2


def quad_one_minus_exp_pos(mu, sd, lam):
    """E max(1 - exp(lam * Z), 0) for Z ~ Normal(mu, sd^2)."""
    return quad(
        lambda x: (1.0 - math.exp(lam * x)) * normal_pdf(x, mu, sd),
        -np.inf,
        0.0,
    )[0]


def enumerate_paths(support, probs, n):
    """All length-n increment paths with their probabilities."""
    for path in itertools.product(range(len(support)), repeat=n):
        p = 1.0
        for i in path:
            p *= probs[i]
        yield [support[i] for i in path], p


def path_cusum_stats(support, probs, n):
    """Exhaustive joint law of (W_n, max W) for a finite-support walk.

    Returns a list of (w_final, w_max, probability) triples; O(k^n), so
    keep n small.
    """
    out = []
    for ys, p in enumerate_paths(support, probs, n):
        w = 0.0
        m = 0.0
        for y in ys:
            w = max(w + y, 0.0)
            m = max(m, w)
        out.append((w, m, p))
    return out


def path_mean_var_mgf(support, probs, n, lam):
    stats = path_cusum_stats(support, probs, n)
    mean = sum(w * p for w, _, p in stats)
    second = sum(w * w * p for w, _, p in stats)
    mgf = sum(math.exp(lam * w) * p for w, _, p in stats)
    return mean, second - mean * mean, mgf


def brute_max_increment_span(y):
    """max over 0 <= a < b <= n of S_b - S_a by a double loop."""
    s = np.concatenate(([0.0], np.cumsum(np.asarray(y, dtype=float))))
    best = 0.0
    for b in range(1, len(s)):
        for a in range(b):
            best = max(best, s[b] - s[a])
    return best
