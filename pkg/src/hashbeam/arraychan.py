"""ULA geometry, DFT beams and geometric channels.

Beam indices are 1-based at the API level: beam ``n`` points at
``sin(theta_n) = -1 + 2n/N`` for ``n = 1..N``. Antenna spacing is half a
wavelength, so the per-element phase step is ``pi * sin(theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np


@dataclass(frozen=True)
class ArrayConfig:
    """Uniform linear array with ``n_antennas`` elements."""

    n_antennas: int

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ValueError(f"n_antennas must be an integer >= 2, got {self.n_antennas}")

    @property
    def grid_sines(self) -> np.ndarray:
        """sin(theta_n) for n = 1..N."""
        n = np.arange(1, self.n_antennas + 1)
        return -1.0 + 2.0 * n / self.n_antennas


@dataclass(frozen=True)
class ChannelPath:
    gain: complex
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle) or abs(self.angle) > math.pi / 2:
            raise ValueError(f"path angle must lie in [-pi/2, pi/2], got {self.angle}")


Channel = Sequence[ChannelPath]


def _response(n_antennas: int, sines: np.ndarray) -> np.ndarray:
    """Array response for each entry of ``sines``; shape ``sines.shape + (N,)``."""
    k = np.arange(n_antennas)
    phase = -np.pi * np.multiply.outer(sines, k)
    return np.exp(1j * phase) / math.sqrt(n_antennas)


def steering_vector(cfg: ArrayConfig, angle: float) -> np.ndarray:
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle}")
    return _response(cfg.n_antennas, np.asarray(math.sin(angle)))


def dft_beam(cfg: ArrayConfig, n: int) -> np.ndarray:
    """Beam ``f_n`` (1-based). Built from the grid sine directly, not via arcsin."""
    if not 1 <= n <= cfg.n_antennas:
        raise ValueError(f"beam index must be in 1..{cfg.n_antennas}, got {n}")
    return _response(cfg.n_antennas, np.asarray(-1.0 + 2.0 * n / cfg.n_antennas))


def dft_matrix(cfg: ArrayConfig) -> np.ndarray:
    """N x N matrix whose column ``n-1`` is ``f_n``."""
    return _response(cfg.n_antennas, cfg.grid_sines).T


def grid_angle(cfg: ArrayConfig, n: int) -> float:
    if not 1 <= n <= cfg.n_antennas:
        raise ValueError(f"beam index must be in 1..{cfg.n_antennas}, got {n}")
    return math.asin(-1.0 + 2.0 * n / cfg.n_antennas)


def synthesize_channel(cfg: ArrayConfig, paths: Channel) -> np.ndarray:
    if len(paths) == 0:
        raise ValueError("channel needs at least one path")
    h = np.zeros(cfg.n_antennas, dtype=complex)
    for p in paths:
        h += p.gain * steering_vector(cfg, p.angle)
    return h


def beam_rsrp(h: np.ndarray, w: np.ndarray) -> float:
    """Noiseless received power ``|h^H w|^2``."""
    h = np.asarray(h)
    w = np.asarray(w)
    if h.shape != w.shape or h.ndim != 1:
        raise ValueError(f"h and w must be 1-d vectors of equal length, got {h.shape} and {w.shape}")
    return float(abs(np.vdot(h, w)) ** 2)


# ---------------------------------------------------------------------------
# batched channels and samplers


@dataclass
class ChannelBatch:
    """``T`` channels with ``P`` paths each. Path 0 is the LoS path."""

    gains: np.ndarray   # (T, P) complex
    angles: np.ndarray  # (T, P) radians

    def __len__(self):
        return self.gains.shape[0]

    def vectors(self, cfg: ArrayConfig) -> np.ndarray:
        """Channel vectors ``h``, shape (T, N)."""
        resp = _response(cfg.n_antennas, np.sin(self.angles))  # (T, P, N)
        return np.einsum("tp,tpn->tn", self.gains, resp)

    def beam_coefficients(self, cfg: ArrayConfig) -> np.ndarray:
        """``h^H f_n`` for every channel and beam, shape (T, N)."""
        return self.vectors(cfg).conj() @ dft_matrix(cfg)


class ChannelSampler(Protocol):
    def sample(self, rng: np.random.Generator, count: int) -> ChannelBatch: ...


@dataclass(frozen=True)
class OnGridLoS:
    """Single unit-gain path on a grid angle.

    With ``beam=None`` the grid index is uniform over 1..N per draw,
    otherwise it is fixed.
    """

    cfg: ArrayConfig
    beam: int | None = None

    def sample(self, rng: np.random.Generator, count: int) -> ChannelBatch:
        n = self.cfg.n_antennas
        if self.beam is None:
            idx = rng.integers(1, n + 1, size=count)
        else:
            if not 1 <= self.beam <= n:
                raise ValueError(f"beam index must be in 1..{n}, got {self.beam}")
            idx = np.full(count, self.beam)
        angles = np.arcsin(-1.0 + 2.0 * idx / n)[:, None]
        return ChannelBatch(np.ones((count, 1), dtype=complex), angles)


@dataclass(frozen=True)
class Multipath:
    """One LoS path plus NLoS paths with CN(0, var) gains and uniform angles."""

    cfg: ArrayConfig
    gain_variances: tuple[float, ...] = (1.0, 0.01, 0.01)
    angle_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)

    def sample(self, rng: np.random.Generator, count: int) -> ChannelBatch:
        var = np.asarray(self.gain_variances, dtype=float)
        p = var.size
        g = rng.standard_normal((count, p, 2)) * np.sqrt(var / 2)[None, :, None]
        gains = g[..., 0] + 1j * g[..., 1]
        lo, hi = self.angle_range
        angles = rng.uniform(lo, hi, size=(count, p))
        return ChannelBatch(gains, angles)
