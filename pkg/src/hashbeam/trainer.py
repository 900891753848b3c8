"""Hash beam training: measurement, voting and Monte Carlo campaigns.

Noise is real Gaussian added to the received power, so measured RSRP can be
negative. Both the true beam and the voted beam use the smallest index among
ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _rng
from .arraychan import ArrayConfig, dft_beam, dft_matrix
from .codebook import CodebookFamily, HashCodebook

CodebookLike = Union[HashCodebook, CodebookFamily]

TRUTH_CRITERIA = ("best_beam", "los_nearest")


SNR_REFERENCES = ("element", "beam")


def snr_to_sigma2(snr_db: float, n_antennas: int, reference: str = "element") -> float:
    """Noise variance of the RSRP measurements for a given SNR.

    ``element``: SNR per antenna element, before the N-fold array gain, so a
    perfectly aligned unit-gain beam sees ``N * SNR``.
    ``beam``: SNR of the aligned beam itself, ``sigma2 = 1/SNR``.
    """
    base = 10.0 ** (-snr_db / 10.0)
    if reference == "element":
        return base / n_antennas
    if reference == "beam":
        return base
    raise ValueError(f"snr reference must be one of {SNR_REFERENCES}, got {reference!r}")


@dataclass(frozen=True)
class NoiseModel:
    sigma2: float
    seed: int | None = None

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2}")


@dataclass
class TrainingOutcome:
    rsrp: np.ndarray   # y, length M
    votes: np.ndarray  # p, length N
    selected: int      # 1-based


def training_beam(cb: HashCodebook, m: int, cfg: ArrayConfig) -> np.ndarray:
    """Weight vector of training beam ``m`` (1-based): selected DFT beams over sqrt(L)."""
    if not 1 <= m <= cb.rows:
        raise ValueError(f"training beam index must be in 1..{cb.rows}, got {m}")
    if cfg.n_antennas != cb.cols:
        raise ValueError(f"codebook has {cb.cols} columns but the array has {cfg.n_antennas} antennas")
    w = np.zeros(cfg.n_antennas, dtype=complex)
    for n in np.flatnonzero(cb.bits[m - 1]):
        w += dft_beam(cfg, int(n) + 1)
    return w / math.sqrt(cb.l_per_row)


def measure(cb: HashCodebook, h: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """RSRP ``y_m = |h^H w_m|^2 + n_m`` for every training beam.

    ``h^H w_m`` is formed in the beam domain as the sum of ``h^H f_n`` over
    the row's beams, divided by sqrt(L).
    """
    h = np.asarray(h)
    if h.shape != (cb.cols,):
        raise ValueError(f"channel must have length {cb.cols}, got shape {h.shape}")
    coeffs = h.conj() @ dft_matrix(ArrayConfig(cb.cols))
    y = np.abs(coeffs[cb.row_indices()].sum(axis=1)) ** 2 / cb.l_per_row
    if noise.sigma2 > 0:
        rng = np.random.default_rng(noise.seed)
        y = y + math.sqrt(noise.sigma2) * rng.standard_normal(cb.rows)
    return y


def vote_and_select(cb: HashCodebook, y: np.ndarray) -> TrainingOutcome:
    y = np.asarray(y, dtype=float)
    if y.shape != (cb.rows,):
        raise ValueError(f"y must have length {cb.rows}, got shape {y.shape}")
    votes = _votes(cb.row_indices()[None], y[None], cb.cols)[0]
    return TrainingOutcome(rsrp=y, votes=votes, selected=int(np.argmax(votes)) + 1)


def _votes(rows: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """p_n = sum of y_m over rows containing n, for a batch.

    rows: (T, M, L) or (1, M, L); y: (T, M). Contributions to each beam are
    accumulated in row order, so beams with identical codebook columns end up
    with bit-identical votes.
    """
    t = y.shape[0]
    rows = np.broadcast_to(rows, (t,) + rows.shape[1:])
    flat = (np.arange(t)[:, None, None] * n + rows).ravel()
    weights = np.broadcast_to(y[:, :, None], rows.shape).ravel()
    return np.bincount(flat, weights=weights, minlength=t * n).reshape(t, n)


def _ground_truth(batch, coeffs: np.ndarray, cfg: ArrayConfig, truth: str) -> np.ndarray:
    """0-based reference beam per trial."""
    if truth == "best_beam":
        return np.argmax(np.abs(coeffs) ** 2, axis=1)
    if truth == "los_nearest":
        s = np.sin(batch.angles[:, 0])
        return np.argmin(np.abs(s[:, None] - cfg.grid_sines[None, :]), axis=1)
    raise ValueError(f"truth must be one of {TRUTH_CRITERIA}, got {truth!r}")


def _draw(channel_sampler, m: int, seed, block: int, size: int, truth: str):
    cfg = channel_sampler.cfg
    batch = channel_sampler.sample(_rng.block_rng(seed, block, _rng.CHANNEL), size)
    coeffs = batch.beam_coefficients(cfg)
    z = _rng.block_rng(seed, block, _rng.NOISE).standard_normal((size, m))
    return coeffs, _ground_truth(batch, coeffs, cfg, truth), z


def _block_hits(rows: np.ndarray, l: int, coeffs: np.ndarray, z: np.ndarray,
                sigma2: float, target: np.ndarray) -> int:
    t, n = coeffs.shape
    rows = np.broadcast_to(rows, (t,) + rows.shape[1:])
    gathered = np.take_along_axis(coeffs[:, None, :], rows, axis=-1)
    y = np.abs(gathered.sum(axis=-1)) ** 2 / l
    if sigma2 > 0:
        y = y + math.sqrt(sigma2) * z[:, : y.shape[1]]
    selected = np.argmax(_votes(rows, y, n), axis=1)
    return int(np.count_nonzero(selected == target))


def _check_dims(cb: CodebookLike, channel_sampler, sigma2: float) -> None:
    if channel_sampler.cfg.n_antennas != cb.cols:
        raise ValueError(f"codebook has {cb.cols} columns but the channel has "
                         f"{channel_sampler.cfg.n_antennas} antennas")
    if not sigma2 >= 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")


def campaign_hits(cb: CodebookLike, channel_sampler, sigma2: float, trials: int, seed,
                  truth: str = "best_beam") -> int:
    """Number of trials where the voted beam equals the reference beam.

    ``cb`` is either one codebook used for every trial or a random family,
    in which case each trial draws its own codebook.
    """
    _check_dims(cb, channel_sampler, sigma2)
    hits = 0
    for b, size in _rng.blocks(trials):
        coeffs, target, z = _draw(channel_sampler, cb.rows, seed, b, size, truth)
        if isinstance(cb, CodebookFamily):
            rows = cb.sample_rows(_rng.block_rng(seed, b, _rng.CODEBOOK), size)
        else:
            rows = cb.row_indices()[None]
        hits += _block_hits(rows, cb.l_per_row, coeffs, z, sigma2, target)
    return hits


def run_campaign(cb: CodebookLike, channel_sampler, sigma2: float, trials: int, seed,
                 truth: str = "best_beam") -> float:
    """Fraction of ``trials`` in which beam training picks the reference beam."""
    return campaign_hits(cb, channel_sampler, sigma2, trials, seed, truth) / trials


class Benchmark:
    """Frozen channel and noise draws for scoring many codebooks.

    ``Benchmark(s, m, sigma2, trials, seed).successes(cb)`` equals
    ``campaign_hits(cb, s, sigma2, trials, seed)`` for any fixed codebook
    with ``m`` rows, without redrawing channels per codebook.
    """

    def __init__(self, channel_sampler, m: int, sigma2: float, trials: int, seed,
                 truth: str = "best_beam"):
        if not sigma2 >= 0:
            raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
        self.channel_sampler = channel_sampler
        self.m = m
        self.sigma2 = sigma2
        self.trials = trials
        self._blocks = [_draw(channel_sampler, m, seed, b, size, truth)
                        for b, size in _rng.blocks(trials)]

    def successes(self, cb: HashCodebook) -> int:
        _check_dims(cb, self.channel_sampler, self.sigma2)
        if cb.rows != self.m:
            raise ValueError(f"benchmark was drawn for M={self.m}, codebook has M={cb.rows}")
        rows = cb.row_indices()[None]
        return sum(_block_hits(rows, cb.l_per_row, coeffs, z, self.sigma2, target)
                   for coeffs, target, z in self._blocks)
