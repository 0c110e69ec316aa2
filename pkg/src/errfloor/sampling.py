"""Monte Carlo and mixture mean-shift importance sampling of frame/bit error
rates over the AWGN channel.

Trial ``t`` always draws its standard-normal vector from a substream keyed by
``(master_seed, t)``, so results do not depend on batching or worker count,
and an unshifted importance sampler replays a Monte Carlo run exactly.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.special import logsumexp
from scipy.stats import beta

from .code import BitPattern, TannerCode, classify_pattern
from .decoder import ChannelModel, DecoderConfig, decode_batch

LOG_TINY = math.log(np.finfo(float).tiny)  # exp() of anything below underflows

# (y batch) -> (frame_error, bit_errors, event supports for the erroneous frames)
ErrorOracle = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, list[BitPattern]]]


@dataclass(frozen=True)
class NoiseSource:
    master_seed: int = 0

    def standard_normal(self, trial: int, n: int) -> np.ndarray:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(int(trial),))
        return np.random.default_rng(ss).standard_normal(n)

    def block(self, trials: Sequence[int], n: int) -> np.ndarray:
        return np.stack([self.standard_normal(t, n) for t in trials]) if len(trials) else np.zeros((0, n))


def sample_nominal(noise: NoiseSource, trial: int, channel: ChannelModel, n: int) -> np.ndarray:
    return 1.0 + channel.sigma * noise.standard_normal(trial, n)


@dataclass
class ISDensity:
    """Equal-weight mixture of Gaussians centred at ``1 - shift * indicator(event)``."""

    events: list[BitPattern]
    sigma2: float
    shift: float = 1.0
    psi: float | None = None  # None: n/2

    def __post_init__(self):
        if not self.events:
            raise ValueError("the biasing density needs at least one center")
        ns = {e.n for e in self.events}
        if len(ns) != 1:
            raise ValueError("all centers must have the same length")
        if self.shift > 1.0:
            warnings.warn(f"shift {self.shift} > 1 biases past the codeword midpoint; "
                          "over-biasing can underestimate P_f", stacklevel=2)

    @property
    def n(self) -> int:
        return self.events[0].n

    @property
    def M(self) -> int:
        return len(self.events)

    @property
    def psi_value(self) -> float:
        return self.n / 2 if self.psi is None else self.psi

    def center(self, m: int) -> np.ndarray:
        c = np.ones(self.n)
        c[list(self.events[m].support)] -= self.shift
        return c

    @property
    def indicator(self) -> sparse.csr_matrix:
        rows = [m for m, e in enumerate(self.events) for _ in e.support]
        cols = [i for e in self.events for i in e.support]
        return sparse.csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(self.M, self.n))

    @property
    def sizes(self) -> np.ndarray:
        return np.array([e.weight for e in self.events], dtype=float)

    def with_events(self, extra: Sequence[BitPattern]) -> "ISDensity":
        return ISDensity(list(self.events) + list(extra), self.sigma2, self.shift, self.psi)


def sample_biased(noise: NoiseSource, trial: int, density: ISDensity) -> tuple[np.ndarray, int]:
    m = trial % density.M
    return density.center(m) + math.sqrt(density.sigma2) * noise.standard_normal(trial, density.n), m


def log_weights(y: np.ndarray, density: ISDensity, psi: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``log f(y) - log f*(y)`` for a ``(B, n)`` batch, plus a per-row flag set when
    every mixture term would underflow in ``exp`` even after adding ``psi``.

    Squared distances to the centres use ``|y-c_m|^2 = |y-1|^2 + 2s<y-1, mu_m> + s^2 |mu_m|``.
    The mixture is summed with the largest exponent factored out.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))
    psi = density.psi_value if psi is None else psi
    s, two_s2 = density.shift, 2 * density.sigma2
    dev = y - 1.0
    d0 = np.einsum("ij,ij->i", dev, dev)
    proj = (density.indicator @ dev.T).T  # (B, M)
    dm = d0[:, None] + 2 * s * proj + s * s * density.sizes[None, :]
    num = psi - d0 / two_s2
    den = psi - dm / two_s2
    flagged = den.max(axis=1) < LOG_TINY
    log_mix = logsumexp(den, axis=1) - math.log(density.M)
    return num - log_mix, flagged


def weight(y, density: ISDensity, psi: float | None = None) -> float:
    lw, _ = log_weights(np.asarray(y, dtype=float)[None], density, psi)
    return float(np.exp(lw[0]))


@dataclass
class MCEstimate:
    trials: int = 0
    errors: int = 0
    bit_errors: int = 0
    n: int = 1
    class_tallies: dict = field(default_factory=dict)
    event_tallies: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def p_f_hat(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    @property
    def p_b_hat(self) -> float:
        return self.bit_errors / (self.trials * self.n) if self.trials else 0.0

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        """Exact (Clopper-Pearson) binomial interval for the frame error rate."""
        a = 1 - level
        k, N = self.errors, self.trials
        lo = beta.ppf(a / 2, k, N - k + 1) if k > 0 else 0.0
        hi = beta.ppf(1 - a / 2, k + 1, N - k) if k < N else 1.0
        return float(lo), float(hi)


@dataclass
class NewEvent:
    pattern: BitPattern
    count: int = 0
    weight_sum: float = 0.0


@dataclass
class ISEstimate:
    """Sums are taken once over all hits with ``math.fsum``, so they do not
    depend on batch boundaries."""

    trials: int = 0
    n: int = 1
    hits: int = 0
    intended_hits: int = 0
    weight_sum: float = 0.0
    bit_weight_sum: float = 0.0  # sum of w * bit errors
    weight_sq_sum: float = 0.0
    overflow_flags: int = 0
    new_events: dict = field(default_factory=dict)  # support -> NewEvent
    center_hits: np.ndarray | None = None
    logged: list = field(default_factory=list)  # (trial, weight) per hit when logging
    wall_time: float = 0.0

    @property
    def p_f_hat(self) -> float:
        return self.weight_sum / self.trials if self.trials else 0.0

    @property
    def p_b_hat(self) -> float:
        return self.bit_weight_sum / (self.trials * self.n) if self.trials else 0.0

    @property
    def v_hat(self) -> float:
        """On-line second moment ``(1/L) sum I_e w^2``.  A large value flags a poor
        estimate; a small one proves nothing."""
        return self.weight_sq_sum / self.trials if self.trials else 0.0

    @property
    def std_error(self) -> float:
        if not self.trials:
            return math.inf
        return math.sqrt(max(self.v_hat - self.p_f_hat ** 2, 0.0) / self.trials)

    def interval(self, level: float = 0.95) -> tuple[float, float]:
        from scipy.stats import norm

        z = norm.ppf(0.5 + level / 2)
        return max(self.p_f_hat - z * self.std_error, 0.0), self.p_f_hat + z * self.std_error


def code_oracle(code: TannerCode, channel: ChannelModel, cfg: DecoderConfig) -> ErrorOracle:
    """Decode a batch; an error is any final state other than the all-zeros codeword."""

    def oracle(y):
        out = decode_batch(code, y, channel, cfg)
        err = out.frame_error
        events = [out.event(int(i)) for i in np.flatnonzero(err)]
        return err, out.bit_errors, events

    return oracle


def run_monte_carlo(oracle: ErrorOracle, n: int, sigma2: float, trials: int, noise: NoiseSource,
                    batch_size: int = 1000, classify=None, first_trial: int = 0) -> MCEstimate:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    est = MCEstimate(n=n)
    t0 = time.perf_counter()
    sigma = math.sqrt(sigma2)
    for start in range(first_trial, first_trial + trials, batch_size):
        ids = range(start, min(start + batch_size, first_trial + trials))
        y = 1.0 + sigma * noise.block(ids, n)
        err, bits, events = oracle(y)
        est.trials += len(ids)
        est.errors += int(err.sum())
        est.bit_errors += int(bits[err].sum())
        for ev in events:
            est.event_tallies[ev.support] = est.event_tallies.get(ev.support, 0) + 1
            if classify is not None:
                c = classify(ev)
                est.class_tallies[(c.a, c.b)] = est.class_tallies.get((c.a, c.b), 0) + 1
    est.wall_time = time.perf_counter() - t0
    return est


def mc_estimate(code: TannerCode, channel: ChannelModel, trials: int, cfg: DecoderConfig,
                noise: NoiseSource, batch_size: int = 1000) -> MCEstimate:
    return run_monte_carlo(code_oracle(code, channel, cfg), code.n, channel.sigma2, trials, noise,
                           batch_size, classify=lambda p: classify_pattern(code, p))


def run_importance_sampling(oracle: ErrorOracle, density: ISDensity, per_center: int, noise: NoiseSource,
                            batch_size: int = 1000, log_hits: bool = False) -> ISEstimate:
    """``M * per_center`` trials; trial ``t`` is drawn around centre ``t mod M``."""
    if per_center < 1:
        raise ValueError("per_center must be >= 1")
    M, n = density.M, density.n
    L = M * per_center
    sigma = math.sqrt(density.sigma2)
    known = {e.support: m for m, e in enumerate(density.events)}
    centers = np.stack([density.center(m) for m in range(M)])
    est = ISEstimate(n=n, center_hits=np.zeros(M, dtype=np.int64))
    hit_w, hit_bits = [], []
    t0 = time.perf_counter()
    for start in range(0, L, batch_size):
        ids = np.arange(start, min(start + batch_size, L))
        owner = ids % M
        y = centers[owner] + sigma * noise.block(ids, n)
        err, bits, events = oracle(y)
        est.trials += len(ids)
        if not err.any():
            continue
        idx = np.flatnonzero(err)
        lw, flagged = log_weights(y[idx], density)
        w = np.exp(lw)
        est.overflow_flags += int(flagged.sum())
        est.hits += len(idx)
        hit_w.append(w)
        hit_bits.append(bits[idx])
        for j, i in enumerate(idx):
            ev = events[j]
            m = int(owner[i])
            est.center_hits[m] += 1
            if ev.support == density.events[m].support:
                est.intended_hits += 1
            elif ev.support not in known:
                rec = est.new_events.setdefault(ev.support, NewEvent(ev))
                rec.count += 1
                rec.weight_sum += float(w[j])
            if log_hits:
                est.logged.append((int(ids[i]), float(w[j])))
    if hit_w:
        w, b = np.concatenate(hit_w), np.concatenate(hit_bits)
        est.weight_sum = math.fsum(w)
        est.bit_weight_sum = math.fsum(w * b)
        est.weight_sq_sum = math.fsum(w * w)
    est.wall_time = time.perf_counter() - t0
    return est


def is_estimate(code: TannerCode, channel: ChannelModel, density: ISDensity, per_center: int,
                cfg: DecoderConfig, noise: NoiseSource, batch_size: int = 1000,
                log_hits: bool = False) -> ISEstimate:
    if not math.isclose(density.sigma2, channel.sigma2, rel_tol=1e-12):
        raise ValueError("biasing density must share the channel noise variance")
    return run_importance_sampling(code_oracle(code, channel, cfg), density, per_center, noise,
                                   batch_size, log_hits)


def adapt_density(estimate: ISEstimate, density: ISDensity, d_e2_of: Callable[[BitPattern], float],
                  threshold: float) -> tuple[ISDensity, list[tuple[BitPattern, float]]]:
    """Append new events whose boundary distance is below ``threshold``.

    Returns the enlarged density (callers restart estimation with it) and the
    ``(event, d2)`` pairs that were probed.
    """
    probed = [(rec.pattern, d_e2_of(rec.pattern)) for _, rec in sorted(estimate.new_events.items())]
    extra = [p for p, d in probed if d < threshold]
    if not extra:
        return density, probed
    return density.with_events(extra), probed
