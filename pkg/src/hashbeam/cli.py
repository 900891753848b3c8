"""Command-line entry point: ``hashbeam <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, codebook, harness, trainer
from .arraychan import ArrayConfig, Multipath, OnGridLoS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4

GENERATORS = ("existing", "proposed", "sweeping", "hierarchical")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _sampler(args, n: int):
    cfg = ArrayConfig(n)
    if args.channel == "ongrid_los":
        return OnGridLoS(cfg)
    return Multipath(cfg)


def _generate(family: str, n: int, m: int | None, l: int | None, seed: int | None):
    if family == "sweeping":
        return codebook.gen_sweeping(n)
    if family == "hierarchical":
        return codebook.gen_hierarchical(n)
    if m is None or l is None:
        raise ValueError(f"--m and --l are required for the {family} family")
    if family == "proposed":
        return codebook.gen_proposed_random(n, m, l, seed)
    return codebook.gen_existing_random(n, m, l, seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_codebook(args) -> int:
    cb = _generate(args.family, args.n, args.m, args.l, args.seed)
    codebook.save(cb, args.out)
    print(f"wrote {cb!r} to {args.out}")
    return EXIT_OK


def cmd_stats(args) -> int:
    cb = codebook.load(args.path)
    st = codebook.stats(cb)
    g = st.column_counts
    off = st.overlap[~np.eye(cb.cols, dtype=bool)]
    print(f"N={cb.cols} M={cb.rows} L={cb.l_per_row} provenance={cb.provenance.value} seed={cb.seed}")
    print(f"column counts: min={g.min()} max={g.max()} mean={g.mean():.4g}")
    print("column counts:", " ".join(str(v) for v in g))
    if off.size:
        print(f"pair overlap (a != b): min={off.min()} max={off.max()} mean={off.mean():.4g}")
    return EXIT_OK


def _codebook_for(args):
    if args.codebook:
        return codebook.load(args.codebook)
    if not args.family:
        raise ValueError("give either --codebook PATH or --family")
    if args.family in ("existing", "proposed") and args.fresh:
        kind = codebook.Provenance.EXISTING_RANDOM if args.family == "existing" else codebook.Provenance.PROPOSED_RANDOM
        return codebook.CodebookFamily(kind, args.n, args.m, args.l)
    return _generate(args.family, args.n, args.m, args.l, args.seed)


def cmd_simulate(args) -> int:
    cb = _codebook_for(args)
    s2 = trainer.snr_to_sigma2(args.snr_db, cb.cols, args.snr_reference)
    hits = trainer.campaign_hits(cb, _sampler(args, cb.cols), s2, args.trials, args.seed,
                                 truth=args.truth)
    v = hits / args.trials
    print(f"success_rate={v!r} stderr={math.sqrt(v * (1 - v) / args.trials)!r} "
          f"trials={args.trials} sigma2={s2!r}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if args.codebook:
        cb = codebook.load(args.codebook)
        s2 = trainer.snr_to_sigma2(args.snr_db, cb.cols, args.snr_reference)
        p = analysis.success_probability(cb, args.n_star, s2, args.method, args.trials, args.seed,
                                         args.lam)
        print(f"success_probability={p!r} method={args.method} n_star={args.n_star} sigma2={s2!r}")
        return EXIT_OK
    if args.family not in analysis.FAMILIES or args.m is None or args.l is None:
        raise ValueError("give --codebook PATH, or --family {existing,proposed} with --n, --m, --l")
    s2 = trainer.snr_to_sigma2(args.snr_db, args.n, args.snr_reference)
    pt = analysis.p_tilde(args.family, args.n, args.m, args.l, s2)
    print(f"p_tilde={pt!r} family={args.family} N={args.n} M={args.m} L={args.l} sigma2={s2!r}")
    return EXIT_OK


def cmd_optimize_l(args) -> int:
    s2 = trainer.snr_to_sigma2(args.snr_db, args.n, args.snr_reference)
    rep = analysis.optimize_l(args.n, args.m, s2, args.family)
    print("L,p_tilde")
    for l, v in zip(rep.l_values, rep.p_tilde):
        print(f"{l},{v!r}")
    print(f"L*={rep.l_star}")
    return EXIT_OK


def cmd_search_fixed(args) -> int:
    s2 = trainer.snr_to_sigma2(args.snr_db, args.n, args.snr_reference)
    cb, acc = codebook.search_fixed(args.n, args.m, args.l, args.x, _sampler(args, args.n), s2,
                                    args.trials, args.seed, workers=args.workers)
    codebook.save(cb, args.out)
    print(f"accuracy={acc!r} seed={cb.seed} wrote {args.out}")
    return EXIT_OK


def cmd_figure(args) -> int:
    if args.config:
        cfg = harness.load_sidecar(args.config)
    else:
        cfg = harness.preset(args.command, trials=args.trials, master_seed=args.seed,
                             snr_db_values=args.snr_db, l_values=args.l_values, fixed_x=args.x,
                             fixed_trials=args.search_trials, snr_reference=args.snr_reference)
    table = harness.run(cfg, workers=args.workers)
    out = Path(args.out or f"{cfg.experiment}.csv")
    side = harness.write_outputs(table, cfg, out)
    print(f"wrote {len(table.rows)} rows to {out} (config in {side})")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hashbeam", description="Hash beam training toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def snr_opts(sp, default=10.0):
        sp.add_argument("--snr-db", type=float, default=default)
        sp.add_argument("--snr-reference", choices=trainer.SNR_REFERENCES, default="element")

    sp = sub.add_parser("gen-codebook", help="generate a codebook file")
    sp.add_argument("--family", choices=GENERATORS, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int)
    sp.add_argument("--l", type=int)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_codebook)

    sp = sub.add_parser("stats", help="column counts and pair overlaps of a codebook file")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("simulate", help="Monte Carlo beam training campaign")
    sp.add_argument("--codebook")
    sp.add_argument("--family", choices=GENERATORS)
    sp.add_argument("--fresh", action="store_true", help="draw a new random codebook every trial")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--m", type=int)
    sp.add_argument("--l", type=int)
    sp.add_argument("--channel", choices=harness.CHANNELS, default="ongrid_los")
    sp.add_argument("--truth", choices=trainer.TRUTH_CRITERIA, default="best_beam")
    sp.add_argument("--trials", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    snr_opts(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("analyze", help="p_tilde for a family, or success probability for a codebook")
    sp.add_argument("--codebook")
    sp.add_argument("--n-star", type=int, default=1)
    sp.add_argument("--method", choices=analysis.METHODS, default="noise_mc")
    sp.add_argument("--lam", type=float)
    sp.add_argument("--family", choices=analysis.FAMILIES)
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--m", type=int)
    sp.add_argument("--l", type=int)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    snr_opts(sp)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("optimize-l", help="p_tilde curve over admissible L and its maximiser")
    sp.add_argument("--family", choices=analysis.FAMILIES, required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    snr_opts(sp)
    sp.set_defaults(func=cmd_optimize_l)

    sp = sub.add_parser("search-fixed", help="offline search for a fixed codebook")
    sp.add_argument("--n", type=int, default=128)
    sp.add_argument("--m", type=int, default=64)
    sp.add_argument("--l", type=int, default=8)
    sp.add_argument("--x", type=int, default=1000)
    sp.add_argument("--channel", choices=harness.CHANNELS, default="multipath")
    sp.add_argument("--trials", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", required=True)
    snr_opts(sp)
    sp.set_defaults(func=cmd_search_fixed)

    for name in ("fig2", "fig3", "fig4"):
        sp = sub.add_parser(name, help=f"reproduce the {name} experiment as a CSV table")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--snr-db", type=_floats, help="comma-separated SNR grid in dB")
        sp.add_argument("--l-values", type=_ints, help="comma-separated L values")
        sp.add_argument("--x", type=int, help="fixed-codebook candidates (fig4)")
        sp.add_argument("--search-trials", type=int, help="trials per fixed-codebook candidate")
        sp.add_argument("--snr-reference", choices=trainer.SNR_REFERENCES)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--config", help="re-run from a .meta.json sidecar")
        sp.add_argument("--out", help="CSV path (default: <experiment>.csv)")
        sp.set_defaults(func=cmd_figure)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except codebook.CodebookFormatError as exc:
        print(f"error: malformed codebook file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
