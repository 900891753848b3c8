"""Independent reference computations used by the tests.

Nothing here calls into the package's fast paths: inner products are
scalar loops, probabilities come from direct sampling.
"""

import cmath
import math

import numpy as np


def inner_loop(h, w):
    """sum_k conj(h_k) w_k by an explicit loop."""
    acc = 0j
    for a, b in zip(h, w):
        acc += complex(a).conjugate() * complex(b)
    return acc


def steering_loop(n, sin_theta):
    return [cmath.exp(-1j * math.pi * k * sin_theta) / math.sqrt(n) for k in range(n)]


def mean_and_se(samples):
    samples = np.asarray(samples, dtype=float)
    return samples.mean(), samples.std(ddof=1) / math.sqrt(samples.size)


def pairwise_outcomes(bits, n_star, n_prime, l, noise):
    """Score 1 / 0.5 / 0 for p_{n*} > p_{n'} given codebooks and noise.

    bits: (T, M, N) 0/1; n_star, n_prime: (T,) 0-based; noise: (T, M).
    Votes are built from the on-grid LoS measurements c_{m,n*}/L + n_m.
    Ties in distribution (identical columns) score 1/2.
    """
    t = np.arange(bits.shape[0])
    c_star = bits[t, :, n_star].astype(float)
    c_prime = bits[t, :, n_prime].astype(float)
    y = c_star / l + noise
    p_star = (c_star * y).sum(axis=1)
    p_prime = (c_prime * y).sum(axis=1)
    same = (c_star == c_prime).all(axis=1)
    return np.where(same, 0.5, (p_star > p_prime).astype(float))


def random_pair(rng, n, size):
    """Uniform n* and uniform n' != n*, both 0-based."""
    n_star = rng.integers(0, n, size)
    n_prime = (n_star + rng.integers(1, n, size)) % n
    return n_star, n_prime


def gaussian_tail_mc(mean, var, samples, rng):
    """Fraction of N(mean, var) draws above zero."""
    x = mean + math.sqrt(var) * rng.standard_normal(samples)
    return mean_and_se(x > 0)


def binomial_pmf_direct(k, n, p):
    return math.comb(n, k) * p ** k * (1 - p) ** (n - k)


def existing_codebooks(rng, count, n, m, l):
    """(count, M, N) 0/1 arrays, each row an independent uniform L-subset."""
    keys = rng.random((count, m, n))
    order = np.argsort(keys, axis=-1)
    bits = np.zeros((count, m, n), dtype=np.int8)
    np.put_along_axis(bits, order[..., :l], 1, axis=-1)
    return bits


def proposed_codebooks(rng, count, n, m, l):
    """Grouped construction: each block of N/L rows partitions a random permutation."""
    per = n // l
    perms = np.argsort(rng.random((count, m // per, n)), axis=-1)
    rows = perms.reshape(count, m // per, per, l).reshape(count, m, l)
    bits = np.zeros((count, m, n), dtype=np.int8)
    np.put_along_axis(bits, rows, 1, axis=-1)
    return bits


def pairwise_mc(bits, l, sigma2, rng):
    """Average pairwise score over random (n*, n') with fresh noise; returns (mean, se)."""
    count, m, n = bits.shape
    n_star, n_prime = random_pair(rng, n, count)
    noise = math.sqrt(sigma2) * rng.standard_normal((count, m))
    return mean_and_se(pairwise_outcomes(bits, n_star, n_prime, l, noise))
