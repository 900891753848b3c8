"""Success-probability analysis for on-grid LoS channels.

With ``h = a(theta_{n*})`` the voted powers are ``p_n = K_{n*,n}/L + sum_m
c_{m,n} n_m``, so everything depends on the codebook only through the
column counts ``G_n`` and pair overlaps ``K_{a,b}``.

The heuristic ``p_tilde`` is the probability that the best beam out-votes a
single uniformly chosen competitor, averaged over random codebooks. Its
probability weights are evaluated in log space; the Gaussian tail uses
``erfc`` from libm (``math.erfc``) or Cephes (``scipy.special.erfc``), both
accurate to a few ulp, far inside 1e-12 absolute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, gammaln, xlog1py, xlogy

from . import _rng
from .codebook import (CodebookFamily, HashCodebook, Provenance,
                       check_proposed_params, rows_to_bits, stats)

FAMILIES = ("existing", "proposed")
METHODS = ("noise_mc", "gaussian_region_mc")


# ---------------------------------------------------------------------------
# pairwise comparison


@dataclass(frozen=True)
class PairwiseContext:
    g_star: int
    g_prime: int
    k: int
    l: int
    sigma2: float

    def __post_init__(self):
        if not 0 <= self.k <= min(self.g_star, self.g_prime):
            raise ValueError(f"need 0 <= k <= min(g_star, g_prime), got k={self.k}, "
                             f"g_star={self.g_star}, g_prime={self.g_prime}")
        if self.l < 1:
            raise ValueError(f"L must be >= 1, got {self.l}")
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


def pairwise_win_prob(ctx: PairwiseContext) -> float:
    """P{p_n* > p_n'} given the codebook.

    The difference is Gaussian with mean ``(g_star - k)/L`` and variance
    ``(g_star + g_prime - 2k) sigma2``; the result is its upper tail at 0.
    A zero-variance difference scores 1, 1/2 or 0 by the sign of the mean.
    """
    mean = (ctx.g_star - ctx.k) / ctx.l
    var = (ctx.g_star + ctx.g_prime - 2 * ctx.k) * ctx.sigma2
    if var == 0:
        return 1.0 if mean > 0 else 0.5 if mean == 0 else 0.0
    return 0.5 * math.erfc(-mean / math.sqrt(2.0 * var))


def _win_prob(mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    # vectorised pairwise_win_prob
    degenerate = np.where(mean > 0, 1.0, np.where(mean == 0, 0.5, 0.0))
    safe = np.where(var > 0, var, 1.0)
    tail = 0.5 * erfc(-mean / np.sqrt(2.0 * safe))
    return np.where(var > 0, tail, degenerate)


# ---------------------------------------------------------------------------
# combinatorial weights


def binom_pmf(k, n, p) -> np.ndarray:
    """Binomial pmf evaluated through log-gamma; zero outside ``0 <= k <= n``."""
    k = np.asarray(k, dtype=float)
    n = np.asarray(n, dtype=float)
    valid = (k >= 0) & (k <= n)
    kk = np.where(valid, k, 0.0)
    nn = np.where(valid, n, 0.0)
    logpmf = (gammaln(nn + 1) - gammaln(kk + 1) - gammaln(nn - kk + 1)
              + xlogy(kk, p) + xlog1py(nn - kk, -p))
    return np.where(valid, np.exp(logpmf), 0.0)


def _check_nml(n: int, m: int, l: int) -> None:
    if n < 2 or m < 1 or not 1 <= l <= n:
        raise ValueError(f"need N >= 2, M >= 1 and 1 <= L <= N, got N={n}, M={m}, L={l}")


@dataclass
class ExistingWeights:
    """Probability weights over (g_star, k, g_prime), each axis of length M+1.

    ``g_star_pmf[g]``: P{G_n* = g}.
    ``k_given_g[g, k]``: P{K = k | G_n* = g}.
    ``gp_given[g, k, g']``: P{G_n' = g' | G_n* = g, K = k}.
    """

    g_star_pmf: np.ndarray
    k_given_g: np.ndarray
    gp_given: np.ndarray

    def joint(self) -> np.ndarray:
        return self.g_star_pmf[:, None, None] * self.k_given_g[:, :, None] * self.gp_given


def existing_weights(n: int, m: int, l: int, printed: bool = False) -> ExistingWeights:
    """Weights for independently drawn rows.

    The competitor gains ``g' - k`` selections from rows that do not contain
    the best beam, each with probability ``L/(N-1)``: there are ``M - g_star``
    such rows. ``printed=True`` instead uses ``M - k`` trials for that
    binomial, an overcount that makes the metric pessimistic by several
    standard errors on small configurations.
    """
    _check_nml(n, m, l)
    g = np.arange(m + 1)
    gs = g[:, None, None]
    kk = g[None, :, None]
    gp = g[None, None, :]
    q = min(l / (n - 1), 1.0)  # only reaches 1 when L = N, where its weight is nil
    trials = (m - kk) if printed else (m - gs)
    gp_given = binom_pmf(gp - kk, trials, q)
    gp_given = np.where(kk <= gs, gp_given, 0.0)
    return ExistingWeights(
        g_star_pmf=binom_pmf(g, m, l / n),
        k_given_g=binom_pmf(g[None, :], g[:, None], (l - 1) / (n - 1)),
        gp_given=gp_given,
    )


def p_tilde_existing(n: int, m: int, l: int, sigma2: float, printed: bool = False) -> float:
    """Heuristic metric for codebooks whose rows are independent L-subsets."""
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    w = existing_weights(n, m, l, printed)
    g = np.arange(m + 1)
    gs, kk, gp = g[:, None, None], g[None, :, None], g[None, None, :]
    win = _win_prob((gs - kk) / l, (gs + gp - 2 * kk) * sigma2)
    return float(np.sum(win * w.joint()))


def proposed_k_weights(n: int, m: int, l: int) -> np.ndarray:
    """P{K = k}, k = 0..G, for the grouped construction.

    Written with the two correction factors ``1 - (ML - NG)/N`` and
    ``1 - (ML - NG)/(N - 1)``; they equal 1 whenever the construction is
    admissible, leaving Binomial(G, (L-1)/(N-1)).
    """
    check_proposed_params(n, m, l)
    if n < 2:
        raise ValueError(f"N must be >= 2, got {n}")
    g = m * l // n
    excess = m * l - n * g
    k = np.arange(g + 1)
    scale = (1 - excess / n) * (1 - excess / (n - 1))
    return scale * binom_pmf(k, g, (l - 1) / (n - 1))


def p_tilde_proposed(n: int, m: int, l: int, sigma2: float) -> float:
    """Heuristic metric for the grouped construction (all G_n = ML/N)."""
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    w = proposed_k_weights(n, m, l)
    g = m * l // n
    k = np.arange(g + 1)
    win = _win_prob((g - k) / l, (2 * g - 2 * k) * sigma2)
    return float(np.sum(win * w))


def p_tilde(family: str, n: int, m: int, l: int, sigma2: float) -> float:
    if family == "proposed":
        return p_tilde_proposed(n, m, l, sigma2)
    if family == "existing":
        return p_tilde_existing(n, m, l, sigma2)
    raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


# ---------------------------------------------------------------------------
# choosing L


def admissible_l(n: int, m: int, family: str) -> list[int]:
    if family == "proposed":
        return [l for l in range(1, n + 1) if n % l == 0 and m % (n // l) == 0]
    if family == "existing":
        return list(range(1, n + 1))
    raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


@dataclass
class MetricReport:
    family: str
    n: int
    m: int
    sigma2: float
    l_values: list[int] = field(default_factory=list)
    p_tilde: list[float] = field(default_factory=list)
    l_star: int = 0


def optimize_l(n: int, m: int, sigma2: float, family: str) -> MetricReport:
    """Evaluate p_tilde over every admissible L; L* is the smallest maximiser."""
    ls = admissible_l(n, m, family)
    if not ls:
        raise ValueError(f"no admissible L for N={n}, M={m} in the {family} family")
    values = [p_tilde(family, n, m, l, sigma2) for l in ls]
    best = int(np.argmax(values))
    return MetricReport(family, n, m, sigma2, ls, values, ls[best])


# ---------------------------------------------------------------------------
# success probability for a given codebook


@dataclass
class GaussianRegion:
    """``A n < t`` describes the best beam winning every comparison.

    Row ``j`` of ``a_matrix`` holds ``c_{m,n} - c_{m,n*}`` for the j-th beam
    ``n != n*``; ``t_vector`` holds ``(G_n* - K_{n*,n}) / L``.
    """

    a_matrix: np.ndarray
    t_vector: np.ndarray
    lam: float
    others: np.ndarray  # 0-based beam index of each row

    def covariance(self, sigma2: float) -> np.ndarray:
        a = self.a_matrix
        return sigma2 * (a @ a.T) + self.lam * np.eye(a.shape[0])


def gaussian_region(cb: HashCodebook, n_star: int, lam: float) -> GaussianRegion:
    _check_beam(cb, n_star)
    if not lam >= 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    c = cb.bits.astype(float)
    j = n_star - 1
    others = np.array([n for n in range(cb.cols) if n != j])
    st = stats(cb)
    a = (c[:, others] - c[:, [j]]).T
    t = (st.column_counts[j] - st.overlap[j, others]) / cb.l_per_row
    return GaussianRegion(a, t, lam, others)


def _check_beam(cb: HashCodebook, n_star: int) -> None:
    if not 1 <= n_star <= cb.cols:
        raise ValueError(f"n_star must be in 1..{cb.cols}, got {n_star}")


def _wins(p: np.ndarray, j) -> np.ndarray:
    """Whether beam ``j`` (0-based, scalar or per row) is the voted beam.

    Earlier beams must be strictly beaten; later ones only matched, which is
    the smallest-index tie-break used by the trainer.
    """
    t, n = p.shape
    j = np.broadcast_to(np.asarray(j), (t,))
    ps = p[np.arange(t), j][:, None]
    before = np.arange(n)[None, :] < j[:, None]
    ok = np.where(before, p < ps, p <= ps)
    return ok.all(axis=1)


def success_hits(cb: HashCodebook, n_star: int, sigma2: float, method: str = "noise_mc",
                 trials: int = 100_000, seed=0, lam: float | None = None) -> int:
    _check_beam(cb, n_star)
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    j = n_star - 1
    hits = 0
    if method == "noise_mc":
        bits = cb.bits.astype(float)
        mean = stats(cb).overlap[j] / cb.l_per_row
        sd = math.sqrt(sigma2)
        for b, size in _rng.blocks(trials):
            noise = sd * _rng.block_rng(seed, b, _rng.NOISE).standard_normal((size, cb.rows))
            p = np.broadcast_to(mean, (size, cb.cols)).copy()
            for row in range(cb.rows):
                p += noise[:, row, None] * bits[row]
            hits += int(np.count_nonzero(_wins(p, j)))
        return hits
    if method == "gaussian_region_mc":
        region = gaussian_region(cb, n_star, 1e-6 * sigma2 if lam is None else lam)
        w, v = np.linalg.eigh(region.covariance(sigma2))
        root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        for b, size in _rng.blocks(trials):
            z = _rng.block_rng(seed, b, _rng.NOISE).standard_normal((size, root.shape[0]))
            x = z @ root
            hits += int(np.count_nonzero((x < region.t_vector).all(axis=1)))
        return hits
    raise ValueError(f"method must be one of {METHODS}, got {method!r}")


def success_probability(cb: HashCodebook, n_star: int, sigma2: float, method: str = "noise_mc",
                        trials: int = 100_000, seed=0, lam: float | None = None) -> float:
    """P{voted beam = n*} for the on-grid LoS channel at beam ``n_star``.

    ``noise_mc`` samples the M measurement noises and applies the voting
    rule exactly. ``gaussian_region_mc`` samples the (N-1)-dimensional
    comparison vector from ``N(0, Sigma + lam I)`` and counts samples inside
    the success region; ``lam`` defaults to ``1e-6 * sigma2``. The region
    treats every comparison as strict, so it scores a structurally tied
    competitor (identical codebook column) as a coin flip instead of
    applying the index tie-break.
    """
    return success_hits(cb, n_star, sigma2, method, trials, seed, lam) / trials


def family_success_hits(family: CodebookFamily, sigma2: float, trials: int, seed) -> int:
    """Successes of the voting rule with a fresh codebook and a uniform n* per trial.

    Random draws follow the stream layout of ``trainer.run_campaign`` with a
    random on-grid LoS sampler.
    """
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    n, m, l = family.n, family.m, family.l
    sd = math.sqrt(sigma2)
    hits = 0
    for b, size in _rng.blocks(trials):
        j = _rng.block_rng(seed, b, _rng.CHANNEL).integers(1, n + 1, size=size) - 1
        noise = sd * _rng.block_rng(seed, b, _rng.NOISE).standard_normal((size, m))
        bits = rows_to_bits(family.sample_rows(_rng.block_rng(seed, b, _rng.CODEBOOK), size), n)
        col_star = bits[np.arange(size), :, j].astype(np.int64)          # (T, M)
        overlap = np.einsum("tm,tmn->tn", col_star, bits.astype(np.int64))  # K_{n*, n}
        p = overlap / l
        for row in range(m):
            p += noise[:, row, None] * bits[:, row, :]
        hits += int(np.count_nonzero(_wins(p, j)))
    return hits


def family_success_probability(family: CodebookFamily, sigma2: float, trials: int, seed) -> float:
    return family_success_hits(family, sigma2, trials, seed) / trials
