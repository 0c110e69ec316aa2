"""Step 1 + 2 on one code: impulse search, then boundary ranking.

    python scripts/search_and_rank.py tests/data/mackay_96_33_964.alist --epsilon1 2.0 --gamma 0.8 --ebno 5
"""

import argparse
from dataclasses import dataclass

from errfloor import BoundaryProbe, ChannelModel, DecoderConfig, SearchParams, load_alist, rank_catalog, run_search


@dataclass
class Config:
    alist: str
    epsilon1: float = 3.0
    gamma: float = 0.6
    ebno: float = 6.0
    probe_ebno: float | None = None
    iters: int = 50
    workers: int = 1
    top: int = 10


def main(cfg: Config):
    code = load_alist(cfg.alist)
    dec = DecoderConfig(max_iters=cfg.iters)
    cat = run_search(code, SearchParams(cfg.epsilon1, gamma=cfg.gamma, eb_no_db=cfg.ebno), dec,
                     workers=cfg.workers)
    print(f"{code.describe()}: {cat.decodings} decodings, {len(cat)} events, "
          f"mean {cat.mean_iterations:.2f} iterations, {cat.wall_time:.1f} s")
    if not len(cat):
        return
    snr = cfg.probe_ebno if cfg.probe_ebno is not None else cfg.ebno
    rows, _ = rank_catalog(cat, code, BoundaryProbe(), dec, ChannelModel(snr, code.rate))
    print(f"{'class':<10}{'mult':>6}{'mean d2':>10}{'min d2':>10}{'elem':>6}")
    for r in rows[: cfg.top]:
        print(f"{r.label:<10}{r.multiplicity:>6}{r.mean_d_e2:>10.2f}{r.min_d_e2:>10.2f}{r.elementary:>6}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("alist")
    for f in ("epsilon1", "gamma", "ebno", "probe_ebno"):
        ap.add_argument(f"--{f.replace('_', '-')}", dest=f, type=float)
    for f in ("iters", "workers", "top"):
        ap.add_argument(f"--{f}", type=int)
    args = {k: v for k, v in vars(ap.parse_args()).items() if v is not None}
    main(Config(**args))
