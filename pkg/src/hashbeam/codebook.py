"""Hash codebooks: generators, statistics, persistence and the offline search.

A hash codebook is an M x N binary matrix. Row ``m`` lists the DFT beams
superposed in training beam ``m``; every row selects exactly ``L`` beams.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng

logger = logging.getLogger(__name__)

FORMAT_MAGIC = "# hash-codebook v1"


class Provenance(enum.Enum):
    EXISTING_RANDOM = "existing_random"
    PROPOSED_RANDOM = "proposed_random"
    FIXED = "fixed"
    SWEEPING = "sweeping"
    HIERARCHICAL = "hierarchical"


class CodebookValidationError(ValueError):
    """A codebook breaks one of its structural invariants."""


class CodebookFormatError(ValueError):
    """A codebook file could not be parsed."""


def check_proposed_params(n: int, m: int, l: int) -> None:
    """Raise ValueError unless (N, M, L) admits the grouped construction."""
    if n < 1 or m < 1 or l < 1:
        raise ValueError(f"N, M, L must be positive, got N={n}, M={m}, L={l}")
    if l > n:
        raise ValueError(f"L={l} exceeds N={n}")
    if n % l:
        raise ValueError(f"N mod L must be 0 (N={n}, L={l})")
    if m % (n // l):
        raise ValueError(f"M mod (N/L) must be 0 (M={m}, N/L={n // l})")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(eq=False)
class HashCodebook:
    bits: np.ndarray
    l_per_row: int
    provenance: Provenance
    seed: int | None = None

    def __post_init__(self):
        self.bits = np.array(self.bits, dtype=np.uint8, ndmin=2)
        self.provenance = Provenance(self.provenance)
        self.validate()

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    def validate(self) -> None:
        c = self.bits
        m, n, l = self.rows, self.cols, self.l_per_row
        if c.ndim != 2 or m < 1 or n < 1:
            raise CodebookValidationError(f"codebook must be a non-empty matrix, got shape {c.shape}")
        if np.any(c > 1):
            raise CodebookValidationError("codebook entries must be 0 or 1")
        row_sums = c.sum(axis=1)
        bad = np.flatnonzero(row_sums != l)
        if bad.size:
            r = bad[0]
            raise CodebookValidationError(f"row {r + 1} sums to {row_sums[r]}, expected L={l}")
        prov = self.provenance
        if prov in (Provenance.PROPOSED_RANDOM, Provenance.FIXED):
            try:
                check_proposed_params(n, m, l)
            except ValueError as exc:
                raise CodebookValidationError(str(exc)) from None
            group = n // l
            per_group = c.reshape(m // group, group, n).sum(axis=1)
            if np.any(per_group != 1):
                g, col = np.argwhere(per_group != 1)[0]
                raise CodebookValidationError(
                    f"beam {col + 1} appears {per_group[g, col]} times in row group {g + 1}, expected 1")
        elif prov is Provenance.SWEEPING:
            if m != n or l != 1 or not np.array_equal(c, np.eye(n, dtype=np.uint8)):
                raise CodebookValidationError("sweeping codebook must be the N x N identity")
        elif prov is Provenance.HIERARCHICAL:
            if not _is_power_of_two(n) or n < 2 or m != 2 * int(math.log2(n)) or l != n // 2:
                raise CodebookValidationError(
                    f"hierarchical codebook needs N a power of two, M=2log2(N), L=N/2; got N={n}, M={m}, L={l}")

    def row_indices(self) -> np.ndarray:
        """0-based beam indices per row, shape (M, L), ascending within a row."""
        return np.nonzero(self.bits)[1].reshape(self.rows, self.l_per_row)

    def __eq__(self, other):
        if not isinstance(other, HashCodebook):
            return NotImplemented
        return (self.l_per_row == other.l_per_row
                and self.provenance is other.provenance
                and self.seed == other.seed
                and np.array_equal(self.bits, other.bits))

    def __repr__(self):
        return (f"HashCodebook(M={self.rows}, N={self.cols}, L={self.l_per_row}, "
                f"provenance={self.provenance.value}, seed={self.seed})")


# ---------------------------------------------------------------------------
# generators


def _take_subset(rng: np.random.Generator, pool: list[int], l: int) -> list[int]:
    # partial Fisher-Yates: afterwards pool[:l] is a uniform l-subset
    size = len(pool)
    for i in range(l):
        j = i + int(rng.integers(size - i))
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:l]


def gen_existing_random(n: int, m: int, l: int, seed: int | None) -> HashCodebook:
    """Every row is an independent uniform L-subset of the N beams."""
    if n < 1 or m < 1 or l < 1:
        raise ValueError(f"N, M, L must be positive, got N={n}, M={m}, L={l}")
    if l > n:
        raise ValueError(f"L={l} exceeds N={n}")
    rng = np.random.default_rng(seed)
    bits = np.zeros((m, n), dtype=np.uint8)
    for row in range(m):
        bits[row, _take_subset(rng, list(range(n)), l)] = 1
    return HashCodebook(bits, l, Provenance.EXISTING_RANDOM, seed)


def gen_proposed_random(n: int, m: int, l: int, seed: int | None) -> HashCodebook:
    """Grouped sampling without replacement.

    Rows come in groups of N/L. The candidate pool resets to all N beams at
    the start of each group and every row removes the L beams it draws, so
    each beam is used once per group and ``ML/N`` times overall.
    """
    check_proposed_params(n, m, l)
    rng = np.random.default_rng(seed)
    group = n // l
    bits = np.zeros((m, n), dtype=np.uint8)
    pool: list[int] = []
    for row in range(m):
        if row % group == 0:
            pool = list(range(n))
        chosen = _take_subset(rng, pool, l)
        bits[row, chosen] = 1
        pool = pool[l:]
    return HashCodebook(bits, l, Provenance.PROPOSED_RANDOM, seed)


def gen_sweeping(n: int) -> HashCodebook:
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    return HashCodebook(np.eye(n, dtype=np.uint8), 1, Provenance.SWEEPING)


def gen_hierarchical(n: int) -> HashCodebook:
    """Bit-partition codebook: for each bit of ``n-1`` (LSB first), a row with
    the bit clear followed by a row with the bit set."""
    if not _is_power_of_two(n) or n < 2:
        raise ValueError(f"hierarchical codebook needs N a power of two >= 2, got {n}")
    idx = np.arange(n)
    rows = []
    for b in range(int(math.log2(n))):
        is_set = (idx >> b) & 1
        rows.append(1 - is_set)
        rows.append(is_set)
    return HashCodebook(np.array(rows, dtype=np.uint8), n // 2, Provenance.HIERARCHICAL)


# ---------------------------------------------------------------------------
# random families, one fresh codebook per trial


@dataclass(frozen=True)
class CodebookFamily:
    """Distribution over random codebooks, sampled in bulk by the simulators."""

    kind: Provenance
    n: int
    m: int
    l: int

    def __post_init__(self):
        object.__setattr__(self, "kind", Provenance(self.kind))
        if self.kind is Provenance.PROPOSED_RANDOM:
            check_proposed_params(self.n, self.m, self.l)
        elif self.kind is Provenance.EXISTING_RANDOM:
            if self.n < 1 or self.m < 1 or not 1 <= self.l <= self.n:
                raise ValueError(f"need 1 <= L <= N and M >= 1, got N={self.n}, M={self.m}, L={self.l}")
        else:
            raise ValueError(f"no random family for provenance {self.kind.value}")

    @property
    def rows(self) -> int:
        return self.m

    @property
    def cols(self) -> int:
        return self.n

    @property
    def l_per_row(self) -> int:
        return self.l

    def sample_rows(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Row index sets of ``count`` independent codebooks, shape (count, M, L)."""
        n, m, l = self.n, self.m, self.l
        # ranks of iid uniform keys give uniform permutations (float64 ties are negligible)
        if self.kind is Provenance.PROPOSED_RANDOM:
            groups = m * l // n
            return rng.random((count, groups, n)).argsort(axis=-1).reshape(count, m, l)
        if 8 * l <= n:
            return _floyd_subsets(rng, n, l, (count, m))
        if l == n:
            return np.broadcast_to(np.arange(n), (count, m, n)).copy()
        keys = rng.random((count, m, n))
        return np.argpartition(keys, l - 1, axis=-1)[..., :l]

    def generate(self, seed: int | None) -> HashCodebook:
        if self.kind is Provenance.PROPOSED_RANDOM:
            return gen_proposed_random(self.n, self.m, self.l, seed)
        return gen_existing_random(self.n, self.m, self.l, seed)


def _floyd_subsets(rng: np.random.Generator, n: int, l: int, shape: tuple[int, ...]) -> np.ndarray:
    # Floyd's algorithm, vectorised over `shape`; uniform over l-subsets
    out = np.empty(shape + (l,), dtype=np.int64)
    for i, j in enumerate(range(n - l, n)):
        t = rng.integers(0, j + 1, size=shape)
        dup = (out[..., :i] == t[..., None]).any(axis=-1)
        out[..., i] = np.where(dup, j, t)
    return out


def rows_to_bits(rows: np.ndarray, n: int) -> np.ndarray:
    """Dense 0/1 matrices from row index sets; (..., M, L) -> (..., M, N)."""
    bits = np.zeros(rows.shape[:-1] + (n,), dtype=np.uint8)
    np.put_along_axis(bits, rows, 1, axis=-1)
    return bits


# ---------------------------------------------------------------------------
# statistics


@dataclass
class CodebookStats:
    column_counts: np.ndarray  # G_n, length N
    overlap: np.ndarray        # K_{a,b}, N x N

    def pair_overlap(self, a: int, b: int) -> int:
        """K_{a,b} for 1-based beam indices."""
        return int(self.overlap[a - 1, b - 1])


def stats(cb: HashCodebook) -> CodebookStats:
    c = cb.bits.astype(np.int64)
    return CodebookStats(column_counts=c.sum(axis=0), overlap=c.T @ c)


# ---------------------------------------------------------------------------
# persistence


def dumps(cb: HashCodebook) -> str:
    lines = [
        FORMAT_MAGIC,
        f"N {cb.cols}",
        f"M {cb.rows}",
        f"L {cb.l_per_row}",
        f"provenance {cb.provenance.value}",
        f"seed {'none' if cb.seed is None else cb.seed}",
    ]
    lines += ["".join("1" if v else "0" for v in row) for row in cb.bits]
    return "\n".join(lines) + "\n"


def loads(text: str) -> HashCodebook:
    lines = text.splitlines()
    if not lines or lines[0].strip() != FORMAT_MAGIC:
        raise CodebookFormatError(f"line 1: expected header {FORMAT_MAGIC!r}")
    header = {}
    for lineno, key in enumerate(("N", "M", "L", "provenance", "seed"), start=2):
        if lineno > len(lines):
            raise CodebookFormatError(f"line {lineno}: missing field {key!r} (file truncated)")
        parts = lines[lineno - 1].split()
        if len(parts) != 2 or parts[0] != key:
            raise CodebookFormatError(f"line {lineno}: expected '{key} <value>', got {lines[lineno - 1]!r}")
        header[key] = parts[1]
    try:
        n, m, l = (int(header[k]) for k in ("N", "M", "L"))
    except ValueError:
        raise CodebookFormatError("lines 2-4: N, M, L must be integers") from None
    try:
        prov = Provenance(header["provenance"])
    except ValueError:
        raise CodebookFormatError(f"line 5: unknown provenance {header['provenance']!r}") from None
    if header["seed"] == "none":
        seed = None
    else:
        try:
            seed = int(header["seed"])
        except ValueError:
            raise CodebookFormatError(f"line 6: seed must be an integer or 'none', got {header['seed']!r}") from None
    body = [ln for ln in lines[6:]]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != m:
        raise CodebookFormatError(f"line {7 + len(body)}: expected {m} matrix rows, found {len(body)} (file truncated?)")
    bits = np.zeros((m, n), dtype=np.uint8)
    for r, ln in enumerate(body):
        s = ln.strip()
        if len(s) != n or set(s) - {"0", "1"}:
            raise CodebookFormatError(f"line {7 + r}: expected {n} characters from {{0,1}}")
        bits[r] = np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")
    return HashCodebook(bits, l, prov, seed)


def save(cb: HashCodebook, path: str | Path) -> None:
    Path(path).write_text(dumps(cb))


def load(path: str | Path) -> HashCodebook:
    return loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# offline search


def candidate_seed(seed, index: int) -> int:
    """Generation seed of candidate ``index`` in a search seeded with ``seed``."""
    return _rng.derive_seed(seed, index)


def search_fixed(n: int, m: int, l: int, x: int, channel_sampler, sigma2: float,
                 trials: int, seed, workers: int = 1,
                 truth: str = "best_beam") -> tuple[HashCodebook, float]:
    """Pick the best of ``x`` proposed-random codebooks by simulated accuracy.

    All candidates see the same channel and noise draws (those of
    ``trainer.run_campaign(..., seed=seed)``). Candidate ``i`` is
    ``gen_proposed_random(n, m, l, candidate_seed(seed, i))``. Ties go to the
    lowest candidate index.
    """
    from . import trainer

    if x < 1:
        raise ValueError(f"candidate count must be >= 1, got {x}")
    check_proposed_params(n, m, l)
    candidates = [gen_proposed_random(n, m, l, candidate_seed(seed, i)) for i in range(x)]
    bench = trainer.Benchmark(channel_sampler, m, sigma2, trials, seed, truth)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(bench.successes, candidates))
    else:
        hits = [bench.successes(cb) for cb in candidates]

    best = int(np.argmax(hits))
    logger.info("fixed search: best candidate %d with %d/%d hits", best, hits[best], trials)
    winner = candidates[best]
    fixed = HashCodebook(winner.bits, l, Provenance.FIXED, winner.seed)
    return fixed, hits[best] / trials
