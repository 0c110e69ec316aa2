"""Frame error rate by Monte Carlo and by mixture importance sampling over an
SNR sweep, written as CSV.

    python scripts/is_vs_mc.py tests/data/mackay_96_3_963.alist --snr 3.5 4 4.5 --mc-trials 100000
"""

import argparse
import csv
import sys
from dataclasses import dataclass, field

from errfloor import (BoundaryProbe, ChannelModel, DecoderConfig, ISDensity, NoiseSource, SearchParams,
                      is_estimate, load_alist, mc_estimate, rank_catalog, run_search, select_shift_points)


@dataclass
class Config:
    alist: str
    snr: list = field(default_factory=lambda: [3.5, 4.0, 4.5])
    epsilon1: float = 2.0
    gamma: float = 0.8
    search_ebno: float = 5.0
    threshold: float | None = None
    per_center: int = 30
    mc_trials: int = 100_000
    seed: int = 1
    out: str = "-"


def main(cfg: Config):
    code = load_alist(cfg.alist)
    dec = DecoderConfig()
    cat = run_search(code, SearchParams(cfg.epsilon1, gamma=cfg.gamma, eb_no_db=cfg.search_ebno), dec)
    _, ranked = rank_catalog(cat, code, BoundaryProbe(), dec, ChannelModel(cfg.search_ebno, code.rate))
    points = [e.pattern for e in select_shift_points(ranked, cfg.threshold)]
    print(f"{len(cat)} events, {len(points)} shift points", file=sys.stderr)
    out = sys.stdout if cfg.out == "-" else open(cfg.out, "w", newline="")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["eb_no_db", "source", "trials", "errors_or_hits", "p_f_hat", "ci_lo", "ci_hi"])
    for snr in cfg.snr:
        ch = ChannelModel(snr, code.rate)
        # distinct seeds keep the two estimates independent
        mc = mc_estimate(code, ch, cfg.mc_trials, dec, NoiseSource(cfg.seed), batch_size=4000)
        est = is_estimate(code, ch, ISDensity(points, ch.sigma2), cfg.per_center, dec, NoiseSource(cfg.seed + 1),
                          batch_size=4000)
        w.writerow([snr, "mc", mc.trials, mc.errors, mc.p_f_hat, *mc.interval()])
        w.writerow([snr, "is", est.trials, est.hits, est.p_f_hat, *est.interval()])
        out.flush()


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("alist")
    ap.add_argument("--snr", type=float, nargs="+")
    ap.add_argument("--threshold", type=float)
    ap.add_argument("--per-center", dest="per_center", type=int)
    ap.add_argument("--mc-trials", dest="mc_trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    args = {k: v for k, v in vars(ap.parse_args()).items() if v is not None}
    main(Config(**args))
