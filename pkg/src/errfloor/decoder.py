"""Flooding message-passing decoder (belief propagation or min-sum) with
per-iteration hard-decision history.

The batched core works on a ``(frames, edges)`` message array so that one call
decodes many received vectors; ``decode`` is the single-frame wrapper.  The
scalar ``check_update`` / ``variable_update`` / ``marginal`` functions state the
node rules on plain lists and serve as the reference the batched core is
tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .code import BitPattern, TannerCode, TsClass, classify_pattern

BP = "bp"
MIN_SUM = "min-sum"
ALGORITHMS = (BP, MIN_SUM)


@dataclass(frozen=True)
class ChannelModel:
    """BPSK over AWGN with unit symbol energy: ``y = 1 - 2x + noise``."""

    eb_no_db: float
    rate: float

    @classmethod
    def from_sigma2(cls, sigma2: float, rate: float = 0.5) -> "ChannelModel":
        return cls(10 * math.log10(1.0 / (2 * rate * sigma2)), rate)

    @property
    def es_no(self) -> float:
        return self.rate * 10 ** (self.eb_no_db / 10)

    @property
    def sigma2(self) -> float:
        return 1.0 / (2 * self.es_no)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.sigma2


@dataclass(frozen=True)
class DecoderConfig:
    algorithm: str = BP
    max_iters: int = 50
    llr_clamp: float = 30.0
    early_exit: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.llr_clamp > 0:
            raise ValueError("llr_clamp must be positive")


@dataclass(frozen=True)
class DecodeOutcome:
    converged: bool
    iterations_used: int
    final_hard_decision: BitPattern
    syndrome_weight_history: tuple[int, ...]
    min_syndrome_state: BitPattern
    min_syndrome_iteration: int  # 1-based
    min_syndrome_weight: int

    @property
    def correct(self) -> bool:
        return self.converged and self.final_hard_decision.weight == 0


class NoErrorEvent(ValueError):
    pass


def earliest_minimum(history: Sequence[int]) -> int:
    """0-based index of the first iteration reaching the minimum syndrome weight."""
    return min(range(len(history)), key=lambda i: (history[i], i))


def channel_llr(y, channel: ChannelModel, n: int | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if n is not None and y.shape[-1] != n:
        raise ValueError(f"received length {y.shape[-1]} != {n}")
    return channel.llr_scale * y


def check_update(incoming: Sequence[float], algorithm: str = BP, llr_clamp: float = 30.0) -> float:
    if len(incoming) == 0:
        raise ValueError("check update needs at least one incoming message")
    x = np.asarray(incoming, dtype=float)
    if algorithm == MIN_SUM:
        return float(np.prod(np.sign(x)) * np.min(np.abs(x)))
    t = np.prod(np.tanh(np.clip(x, -llr_clamp, llr_clamp) / 2))
    lim = math.tanh(llr_clamp / 2)
    return float(2 * np.arctanh(np.clip(t, -lim, lim)))


def variable_update(incoming: Sequence[float], lc: float, llr_clamp: float = 30.0) -> float:
    s = float(np.sum(incoming)) + lc
    return min(max(s, -llr_clamp), llr_clamp)


def marginal(incoming: Sequence[float], lc: float) -> tuple[float, int]:
    """Marginal LLR and its hard decision (0 unless the LLR is negative)."""
    lq = float(np.sum(incoming)) + lc
    return lq, int(lq < 0)


class EdgeLayout:
    """Index arrays for the batched decoder; edges are numbered check-major."""

    def __init__(self, code: TannerCode):
        self.n, self.m = code.n, code.m
        edge_var, edge_chk = [], []
        for c, vs in enumerate(code.row_adjacency):
            for v in vs:
                edge_var.append(v)
                edge_chk.append(c)
        E = len(edge_var)
        self.num_edges = E
        self.edge_var = np.array(edge_var, dtype=np.int64)
        dc = code.check_degrees
        self.chk_edges = np.full((self.m, int(dc.max())), E, dtype=np.int64)
        pos = 0
        for c, d in enumerate(dc):
            self.chk_edges[c, :d] = np.arange(pos, pos + d)
            pos += d
        self.chk_pad = self.chk_edges == E
        self.any_pad = bool(self.chk_pad.any())
        self.real_slots = ~self.chk_pad
        dvs = code.var_degrees
        self.var_edges = np.full((self.n, int(dvs.max())), E, dtype=np.int64)
        fill = np.zeros(self.n, dtype=np.int64)
        for e, v in enumerate(edge_var):
            self.var_edges[v, fill[v]] = e
            fill[v] += 1


def _layout(code: TannerCode) -> EdgeLayout:
    lay = code.__dict__.get("_edge_layout")
    if lay is None:
        lay = EdgeLayout(code)
        code.__dict__["_edge_layout"] = lay
    return lay


def _exclusive_scan(x: np.ndarray, op) -> np.ndarray:
    """For each slot along the last axis, ``op``-reduce all other slots."""
    pre = op.accumulate(x, axis=-1)
    suf = op.accumulate(x[..., ::-1], axis=-1)[..., ::-1]
    out = np.empty_like(x)
    out[..., 0] = suf[..., 1]
    out[..., -1] = pre[..., -2]
    if x.shape[-1] > 2:
        out[..., 1:-1] = op(pre[..., :-2], suf[..., 2:])
    return out


def _check_stage(q: np.ndarray, lay: EdgeLayout, cfg: DecoderConfig) -> np.ndarray:
    vals = q[:, lay.chk_edges]  # (B, m, dcmax)
    if vals.shape[-1] == 1:
        raise ValueError("degree-1 checks are not supported")
    if cfg.algorithm == BP:
        t = np.tanh(vals / 2)
        if lay.any_pad:
            t[:, lay.chk_pad] = 1.0
        prod = _exclusive_scan(t, np.multiply)
        lim = math.tanh(cfg.llr_clamp / 2)
        np.clip(prod, -lim, lim, out=prod)
        out = 2 * np.arctanh(prod)
    else:
        sgn = np.sign(vals)
        mag = np.abs(vals)
        if lay.any_pad:
            sgn[:, lay.chk_pad] = 1.0
            mag[:, lay.chk_pad] = np.inf
        out = _exclusive_scan(sgn, np.multiply) * _exclusive_scan(mag, np.minimum)
    r = np.zeros_like(q)
    r[:, : lay.num_edges] = out[:, lay.real_slots] if lay.any_pad else out.reshape(len(q), -1)
    return r


@dataclass
class BatchOutcome:
    """Per-frame decode results as arrays; ``outcome(i)`` builds a ``DecodeOutcome``."""

    converged: np.ndarray  # (B,) bool
    iterations: np.ndarray  # (B,) int
    final_hard: np.ndarray  # (B, n) bool
    history: np.ndarray  # (B, max_iters) int, -1 past iterations_used
    min_hard: np.ndarray  # (B, n) bool
    min_iter: np.ndarray  # (B,) int, 1-based
    min_weight: np.ndarray  # (B,) int

    def __len__(self):
        return len(self.converged)

    @cached_property
    def frame_error(self) -> np.ndarray:
        return ~self.converged | self.final_hard.any(axis=1)

    @cached_property
    def bit_errors(self) -> np.ndarray:
        return self.final_hard.sum(axis=1)

    def outcome(self, i: int) -> DecodeOutcome:
        it = int(self.iterations[i])
        return DecodeOutcome(
            converged=bool(self.converged[i]),
            iterations_used=it,
            final_hard_decision=BitPattern.from_bits(self.final_hard[i]),
            syndrome_weight_history=tuple(int(w) for w in self.history[i, :it]),
            min_syndrome_state=BitPattern.from_bits(self.min_hard[i]),
            min_syndrome_iteration=int(self.min_iter[i]),
            min_syndrome_weight=int(self.min_weight[i]),
        )

    def event(self, i: int) -> BitPattern:
        """Error-event support: the minimum-syndrome hard decision."""
        return BitPattern.from_bits(self.min_hard[i])


def decode_llr_batch(code: TannerCode, lc: np.ndarray, cfg: DecoderConfig) -> BatchOutcome:
    """Decode a ``(B, n)`` array of channel LLRs."""
    lay = _layout(code)
    lc = np.atleast_2d(np.asarray(lc, dtype=float))
    B, n = lc.shape
    if n != code.n:
        raise ValueError(f"received length {n} != code length {code.n}")
    E, I = lay.num_edges, cfg.max_iters
    clamp = cfg.llr_clamp

    converged = np.zeros(B, dtype=bool)
    iterations = np.zeros(B, dtype=np.int64)
    final_hard = np.zeros((B, n), dtype=bool)
    history = np.full((B, I), -1, dtype=np.int64)
    min_hard = np.zeros((B, n), dtype=bool)
    min_iter = np.zeros(B, dtype=np.int64)
    min_weight = np.full(B, np.iinfo(np.int64).max, dtype=np.int64)

    active = np.arange(B)
    lc_a = lc
    q = np.zeros((B, E + 1))
    q[:, :E] = np.clip(lc[:, lay.edge_var], -clamp, clamp)
    for it in range(1, I + 1):
        r = _check_stage(q, lay, cfg)
        lq = r[:, lay.var_edges].sum(axis=2) + lc_a
        hard = lq < 0
        hb = np.zeros((len(active), E + 1), dtype=np.int8)
        hb[:, :E] = hard[:, lay.edge_var]
        synd = hb[:, lay.chk_edges].sum(axis=2) & 1
        w = synd.sum(axis=1)
        history[active, it - 1] = w
        better = w < min_weight[active]
        if better.any():
            idx = active[better]
            min_weight[idx] = w[better]
            min_iter[idx] = it
            min_hard[idx] = hard[better]
        done = w == 0
        if not cfg.early_exit:
            done = np.zeros_like(done)
        if it == I:
            done = np.ones_like(done)
        if done.any():
            idx = active[done]
            converged[idx] = w[done] == 0
            iterations[idx] = it
            final_hard[idx] = hard[done]
            keep = ~done
            if not keep.any():
                break
            active, lc_a, lq, r = active[keep], lc_a[keep], lq[keep], r[keep]
        q = np.zeros_like(r)
        q[:, :E] = np.clip(lq[:, lay.edge_var] - r[:, :E], -clamp, clamp)
    return BatchOutcome(converged, iterations, final_hard, history, min_hard, min_iter, min_weight)


def decode_batch(code: TannerCode, y: np.ndarray, channel: ChannelModel, cfg: DecoderConfig) -> BatchOutcome:
    return decode_llr_batch(code, channel_llr(y, channel, code.n), cfg)


def decode(code: TannerCode, y, channel: ChannelModel, cfg: DecoderConfig) -> DecodeOutcome:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.shape[0] != code.n:
        raise ValueError(f"received vector must have length {code.n}")
    return decode_batch(code, y[None, :], channel, cfg).outcome(0)


def extract_trapping_set(outcome: DecodeOutcome, code: TannerCode | None = None) -> tuple[BitPattern, TsClass | None]:
    """The minimum-syndrome hard decision of a failed (or miscorrected) decode."""
    if outcome.correct:
        raise NoErrorEvent("decoder converged to the reference codeword")
    ts = outcome.min_syndrome_state
    return ts, (classify_pattern(code, ts) if code is not None else None)
