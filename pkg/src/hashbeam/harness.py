"""Experiment presets and result tables for the beam-training figures.

Every experiment point draws from streams keyed on the master seed plus the
point's content (experiment tag, L, SNR index), never on scheduling order, so
the output is the same for any worker count. Rows are written sorted by
(family, L, snr_db, metric).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import __version__, analysis, trainer
from .arraychan import ArrayConfig, Multipath, OnGridLoS
from .codebook import (CodebookFamily, Provenance, gen_hierarchical, gen_sweeping,
                       search_fixed)

logger = logging.getLogger(__name__)

CSV_HEADER = ["experiment", "family", "L", "snr_db", "metric", "value", "stderr", "trials", "seed"]
EXPERIMENTS = ("fig2", "fig3", "fig4", "custom")
SCHEMES = ("existing", "proposed", "fixed", "sweeping", "hierarchical")
CHANNELS = ("ongrid_los", "multipath")

# seed-tree tags; one per kind of experiment point
_SIM, _THEORY, _LINK, _SEARCH = 1, 2, 3, 4

_RANDOM_KIND = {"existing": Provenance.EXISTING_RANDOM, "proposed": Provenance.PROPOSED_RANDOM}


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    n_antennas: int = 128
    m_trainings: int = 64
    l_values: list[int] | None = None  # None: every L admissible for the proposed family
    snr_db_values: list[float] = field(default_factory=lambda: [10.0])
    trials: int = 20_000
    master_seed: int = 0
    channel: str = "ongrid_los"
    gain_variances: list[float] = field(default_factory=lambda: [1.0, 0.01, 0.01])
    angle_range: list[float] = field(default_factory=lambda: [-math.pi / 2, math.pi / 2])
    families: list[str] = field(default_factory=lambda: ["existing", "proposed"])
    fixed_x: int = 1000
    fixed_trials: int | None = None  # None: same as trials
    fixed_search_snr_db: float = 10.0
    truth: str = "best_beam"
    snr_reference: str = "element"

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.n_antennas < 2 or self.m_trainings < 1:
            raise ValueError("need n_antennas >= 2 and m_trainings >= 1")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not self.snr_db_values:
            raise ValueError("SNR list must be non-empty")
        if self.master_seed < 0:
            raise ValueError(f"master seed must be non-negative, got {self.master_seed}")
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        bad = [f for f in self.families if f not in SCHEMES]
        if bad or not self.families:
            raise ValueError(f"families must be a non-empty subset of {SCHEMES}, got {self.families}")
        if self.l_values is not None and (not self.l_values or min(self.l_values) < 1
                                          or max(self.l_values) > self.n_antennas):
            raise ValueError(f"L values must lie in 1..{self.n_antennas}, got {self.l_values}")
        if self.fixed_x < 1:
            raise ValueError(f"fixed_x must be >= 1, got {self.fixed_x}")
        if self.fixed_trials is not None and self.fixed_trials < 1:
            raise ValueError(f"fixed_trials must be >= 1, got {self.fixed_trials}")
        if self.truth not in trainer.TRUTH_CRITERIA:
            raise ValueError(f"truth must be one of {trainer.TRUTH_CRITERIA}, got {self.truth!r}")
        if self.snr_reference not in trainer.SNR_REFERENCES:
            raise ValueError(f"snr_reference must be one of {trainer.SNR_REFERENCES}, "
                             f"got {self.snr_reference!r}")
        if len(self.angle_range) != 2 or not self.angle_range[0] <= self.angle_range[1]:
            raise ValueError(f"angle_range must be [lo, hi], got {self.angle_range}")

    def resolved_l_values(self) -> list[int]:
        if self.l_values is not None:
            return list(self.l_values)
        return analysis.admissible_l(self.n_antennas, self.m_trainings, "proposed")

    def sigma2(self, snr_db: float) -> float:
        return trainer.snr_to_sigma2(snr_db, self.n_antennas, self.snr_reference)

    def sampler(self):
        cfg = ArrayConfig(self.n_antennas)
        if self.channel == "ongrid_los":
            return OnGridLoS(cfg)
        return Multipath(cfg, tuple(self.gain_variances), tuple(self.angle_range))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


def preset(experiment: str, **overrides) -> ExperimentConfig:
    """Configuration of a named figure, with optional field overrides."""
    base: dict = {"experiment": experiment}
    if experiment == "fig2":
        base.update(snr_db_values=[10.0], channel="ongrid_los", families=["existing", "proposed"])
    elif experiment == "fig3":
        base.update(snr_db_values=[0.0, 5.0, 10.0, 15.0], channel="ongrid_los",
                    families=["existing", "proposed"])
    elif experiment == "fig4":
        base.update(snr_db_values=[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0], channel="multipath",
                    l_values=[8], families=["existing", "proposed", "fixed", "sweeping"])
    elif experiment != "custom":
        raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {experiment!r}")
    base.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**base)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# result table


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    family: str
    l: int
    snr_db: float
    metric: str
    value: float
    stderr: float
    trials: int
    seed: int

    @classmethod
    def rate(cls, experiment, family, l, snr_db, metric, hits, trials, seed) -> "ResultRow":
        v = hits / trials
        return cls(experiment, family, l, float(snr_db), metric, v,
                   math.sqrt(v * (1.0 - v) / trials), trials, seed)

    def sort_key(self):
        return (self.family, self.l, self.snr_db, self.metric)


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def sorted(self) -> "ResultTable":
        return ResultTable(sorted(self.rows, key=ResultRow.sort_key))

    def select(self, **where) -> list[ResultRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]

    def value(self, **where) -> float:
        hits = self.select(**where)
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {where}")
        return hits[0].value

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.sorted().rows:
            w.writerow([r.experiment, r.family, r.l, repr(r.snr_db), r.metric,
                        repr(float(r.value)), repr(float(r.stderr)), r.trials, r.seed])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = [ResultRow(e, f, int(l), float(s), m, float(v), float(se), int(t), int(seed))
                for e, f, l, s, m, v, se, t, seed in reader]
        return cls(rows)


def metadata(cfg: ExperimentConfig) -> dict:
    return {"toolkit": "hashbeam", "version": __version__, "config": cfg.to_dict()}


def write_outputs(table: ResultTable, cfg: ExperimentConfig, path: str | Path) -> Path:
    """Write the CSV and its ``<path>.meta.json`` sidecar; return the sidecar path."""
    path = Path(path)
    path.write_text(table.to_csv())
    side = path.with_name(path.name + ".meta.json")
    side.write_text(json.dumps(metadata(cfg), indent=2, sort_keys=True) + "\n")
    return side


def load_sidecar(path: str | Path) -> ExperimentConfig:
    data = json.loads(Path(path).read_text())
    if "config" not in data:
        raise ValueError(f"{path}: sidecar has no 'config' entry")
    return ExperimentConfig.from_dict(data["config"])


# ---------------------------------------------------------------------------
# runners


def _run_tasks(tasks: list[Callable[[], list[ResultRow]]], workers: int) -> ResultTable:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda f: f(), tasks))
    else:
        parts = [f() for f in tasks]
    return ResultTable([row for part in parts for row in part]).sorted()


def _l_sweep(cfg: ExperimentConfig, with_theory: bool, workers: int) -> ResultTable:
    n, m, master = cfg.n_antennas, cfg.m_trainings, cfg.master_seed
    sampler = OnGridLoS(ArrayConfig(n))
    tasks = []
    for l in cfg.resolved_l_values():
        for fam in cfg.families:
            if fam not in _RANDOM_KIND:
                raise ValueError(f"{cfg.experiment} only supports the existing/proposed families, got {fam!r}")
            if fam == "proposed" and l not in analysis.admissible_l(n, m, "proposed"):
                continue
            family = CodebookFamily(_RANDOM_KIND[fam], n, m, l)
            for si, snr in enumerate(cfg.snr_db_values):
                s2 = cfg.sigma2(snr)

                def sim(family=family, fam=fam, l=l, si=si, snr=snr, s2=s2):
                    hits = trainer.campaign_hits(family, sampler, s2, cfg.trials, (master, _SIM, l, si))
                    return [ResultRow.rate(cfg.experiment, fam, l, snr, "success_sim",
                                           hits, cfg.trials, master)]
                tasks.append(sim)
                if with_theory:
                    def theory(family=family, fam=fam, l=l, si=si, snr=snr, s2=s2):
                        hits = analysis.family_success_hits(family, s2, cfg.trials,
                                                            (master, _THEORY, l, si))
                        rows = [ResultRow.rate(cfg.experiment, fam, l, snr, "success_theory",
                                               hits, cfg.trials, master)]
                        pt = analysis.p_tilde(fam, n, m, l, s2)
                        rows.append(ResultRow(cfg.experiment, fam, l, float(snr), "p_tilde",
                                              pt, 0.0, 0, master))
                        return rows
                    tasks.append(theory)
    return _run_tasks(tasks, workers)


def run_fig2(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Simulated and theoretical success probability plus p_tilde versus L (on-grid LoS)."""
    cfg.validate()
    return _l_sweep(cfg, with_theory=True, workers=workers)


def run_fig3(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Simulated success probability over an (L, SNR) grid (on-grid LoS)."""
    cfg.validate()
    return _l_sweep(cfg, with_theory=False, workers=workers)


def _fig4_schemes(cfg: ExperimentConfig):
    """(name, L, codebook-like) for every requested scheme."""
    n, m = cfg.n_antennas, cfg.m_trainings
    ls = cfg.resolved_l_values()
    if len(ls) != 1:
        raise ValueError(f"fig4 needs exactly one L value, got {ls}")
    l = ls[0]
    search_trials = cfg.fixed_trials or cfg.trials
    out = []
    for name in cfg.families:
        if name in _RANDOM_KIND:
            out.append((name, l, CodebookFamily(_RANDOM_KIND[name], n, m, l)))
        elif name == "fixed":
            cb, acc = search_fixed(n, m, l, cfg.fixed_x, cfg.sampler(),
                                   cfg.sigma2(cfg.fixed_search_snr_db), search_trials,
                                   (cfg.master_seed, _SEARCH), truth=cfg.truth)
            logger.info("fixed codebook seed %s, search accuracy %.4f", cb.seed, acc)
            out.append((name, l, cb))
        elif name == "sweeping":
            out.append((name, 1, gen_sweeping(n)))
        elif name == "hierarchical":
            cb = gen_hierarchical(n)
            out.append((name, cb.l_per_row, cb))
    return out


def run_fig4(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Success rate of each scheme over SNR on the multipath channel.

    All schemes at one SNR share channel and noise draws. The fixed codebook
    is searched once, at ``fixed_search_snr_db``, on draws independent of the
    evaluation draws.
    """
    cfg.validate()
    sampler = cfg.sampler()
    master = cfg.master_seed
    schemes = _fig4_schemes(cfg)
    tasks = []
    for name, l, cb in schemes:
        for si, snr in enumerate(cfg.snr_db_values):
            def point(name=name, l=l, cb=cb, si=si, snr=snr):
                hits = trainer.campaign_hits(cb, sampler, cfg.sigma2(snr), cfg.trials,
                                             (master, _LINK, si), truth=cfg.truth)
                return [ResultRow.rate(cfg.experiment, name, l, snr, "success_sim",
                                       hits, cfg.trials, master)]
            tasks.append(point)
    return _run_tasks(tasks, workers)


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4}


def run(cfg: ExperimentConfig, workers: int = 1) -> ResultTable:
    """Dispatch on ``cfg.experiment``; ``custom`` runs follow the channel setting."""
    if cfg.experiment in RUNNERS:
        return RUNNERS[cfg.experiment](cfg, workers)
    cfg.validate()
    if cfg.channel == "multipath" or not set(cfg.families) <= set(_RANDOM_KIND):
        return run_fig4(cfg, workers)
    return run_fig2(cfg, workers)
