"""Importance sampling on a half-space error region, where the exact tail
probability is known, repeated over several seeds.

    python scripts/halfspace_toy.py --target 1e-8 --seeds 8
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from errfloor import BitPattern, ISDensity, NoiseSource, run_importance_sampling


@dataclass
class Config:
    n: int = 4
    target: float = 1e-8
    samples: int = 10_000
    seeds: int = 8
    shift: float = 1.0


def main(cfg: Config):
    n = cfg.n
    # error iff sum(y) < 0 with y ~ N(1, s2)^n, so P = Q(sqrt(n / s2))
    sigma2 = n / norm.isf(cfg.target) ** 2
    exact = norm.sf(math.sqrt(n / sigma2))
    event = BitPattern(tuple(range(n)), n)

    def oracle(y):
        err = y.sum(axis=1) < 0
        return err, np.where(err, n, 0), [event] * int(err.sum())

    density = ISDensity([event], sigma2, shift=cfg.shift)
    errs = []
    for seed in range(cfg.seeds):
        est = run_importance_sampling(oracle, density, cfg.samples, NoiseSource(seed))
        rel = est.p_f_hat / exact - 1
        errs.append(rel)
        print(f"seed {seed}: {est.p_f_hat:.4e}  rel. error {rel:+.2%}  rel. s.e. {est.std_error / est.p_f_hat:.2%}")
    print(f"exact {exact:.4e}; mean rel. error {np.mean(errs):+.2%}, spread {np.std(errs):.2%}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int)
    ap.add_argument("--target", type=float)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--seeds", type=int)
    ap.add_argument("--shift", type=float)
    args = {k: v for k, v in vars(ap.parse_args()).items() if v is not None}
    main(Config(**args))
