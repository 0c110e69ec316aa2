"""Distance from the transmitted point to the decoder's error boundary along
each catalogued event, and dominance ranking by that distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import erfc

from .code import BitPattern, TannerCode
from .decoder import ChannelModel, DecoderConfig, decode_batch
from .search import CatalogEntry, TsCatalog


@dataclass(frozen=True)
class BoundaryProbe:
    l_min: float = 1.0
    l_max: float = 3.5
    p: int = 10

    def __post_init__(self):
        if not self.l_min < self.l_max:
            raise ValueError("need l_min < l_max")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    @property
    def resolution(self) -> float:
        return (self.l_max - self.l_min) / 2 ** self.p


@dataclass(frozen=True)
class BoundaryResult:
    epsilon_star: float
    d_e2: float
    bracketed: bool
    decodings: int = 0


def bisect_threshold(is_error: Callable[[float], bool], probe: BoundaryProbe,
                     check_ends: bool = True) -> tuple[float, bool, int]:
    """Binary search for the impulse magnitude where ``is_error`` switches on.

    Starts at the midpoint of ``[l_min, l_max]``; after each call the next
    magnitude moves up (decoded correctly) or down (error) by
    ``(l_max - l_min) / 2**i``.  Returns ``(estimate, bracketed, calls)``, the
    estimate being the point the p-th step leads to.
    """
    span = probe.l_max - probe.l_min
    eps = (probe.l_min + probe.l_max) / 2
    calls = 0
    for i in range(2, probe.p + 2):
        err = is_error(eps)
        calls += 1
        eps += -span / 2 ** i if err else span / 2 ** i
    bracketed = True
    if check_ends:
        lo_err = is_error(probe.l_min)
        hi_err = is_error(probe.l_max)
        calls += 2
        bracketed = (not lo_err) and hi_err
    return eps, bracketed, calls


def boundary_input(n: int, support: Iterable[int], eps: float) -> np.ndarray:
    y = np.ones(n)
    y[list(support)] = 1 - eps
    return y


def probe_boundary(code: TannerCode, ts: BitPattern, probe: BoundaryProbe, cfg: DecoderConfig,
                   channel: ChannelModel) -> BoundaryResult:
    """Bisection along the line from the all-ones point toward ``ts``.

    Any outcome other than the all-zeros codeword is an error.
    """
    if ts.weight == 0:
        raise ValueError("empty trapping set")

    def is_error(eps: float) -> bool:
        out = decode_batch(code, boundary_input(code.n, ts.support, eps)[None], channel, cfg)
        return bool(out.frame_error[0])

    eps, bracketed, calls = bisect_threshold(is_error, probe)
    return BoundaryResult(eps, ts.weight * eps ** 2, bracketed, calls)


def q_function(x):
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2))


def q_contribution(d_e2: float, channel: ChannelModel) -> float:
    """``Q(sqrt(2 d_e2 Es/No))``; an order-of-magnitude proxy for an event's share of P_f."""
    if d_e2 < 0:
        raise ValueError("d_e2 must be non-negative")
    return float(q_function(math.sqrt(2 * d_e2 * channel.es_no)))


@dataclass(frozen=True)
class ClassRow:
    a: int
    b: int
    multiplicity: int
    mean_d_e2: float  # over bracketed members only
    min_d_e2: float
    elementary: int
    unbracketed: int

    @property
    def label(self) -> str:
        return f"({self.a},{self.b})"


def _entry_order(e: CatalogEntry):
    return (e.d_e2, e.key)


def probe_many(code: TannerCode, patterns: list[BitPattern], probe: BoundaryProbe, cfg: DecoderConfig,
               channel: ChannelModel, batch_size: int = 512) -> list[BoundaryResult]:
    """``probe_boundary`` for many events at once: each bisection step decodes
    one batch holding the current magnitude of every event."""
    results: list[BoundaryResult] = []
    span = probe.l_max - probe.l_min
    for start in range(0, len(patterns), batch_size):
        pats = patterns[start:start + batch_size]
        if any(p.weight == 0 for p in pats):
            raise ValueError("empty trapping set")
        mask = np.stack([p.to_bits() for p in pats])

        def errors(eps: np.ndarray) -> np.ndarray:
            y = 1.0 - mask * eps[:, None]
            return decode_batch(code, y, channel, cfg).frame_error

        eps = np.full(len(pats), (probe.l_min + probe.l_max) / 2)
        for i in range(2, probe.p + 2):
            eps = eps + np.where(errors(eps), -1.0, 1.0) * span / 2 ** i
        lo = errors(np.full(len(pats), probe.l_min))
        hi = errors(np.full(len(pats), probe.l_max))
        for p, e, l, h in zip(pats, eps, lo, hi):
            results.append(BoundaryResult(float(e), p.weight * float(e) ** 2, bool(~l & h), probe.p + 2))
    return results


def rank_catalog(catalog: TsCatalog, code: TannerCode, probe: BoundaryProbe, cfg: DecoderConfig,
                 channel: ChannelModel, reprobe: bool = False) -> tuple[list[ClassRow], list[CatalogEntry]]:
    """Probe every entry and group by class, classes ordered by their minimum d²."""
    if not len(catalog):
        raise ValueError("empty catalog")
    todo = [e for e in catalog.sorted_entries() if e.d_e2 is None or reprobe]
    for e, r in zip(todo, probe_many(code, [e.pattern for e in todo], probe, cfg, channel)):
        e.epsilon_star, e.d_e2, e.bracketed = r.epsilon_star, r.d_e2, r.bracketed
    return summarize_classes(catalog.entries.values()), sorted(catalog.entries.values(), key=_entry_order)


def summarize_classes(entries: Iterable[CatalogEntry]) -> list[ClassRow]:
    groups: dict[tuple[int, int], list[CatalogEntry]] = {}
    for e in entries:
        groups.setdefault((e.ts_class.a, e.ts_class.b), []).append(e)
    rows = []
    for (a, b), es in groups.items():
        good = [e.d_e2 for e in es if e.bracketed]
        rows.append(ClassRow(
            a, b, len(es),
            float(np.mean(good)) if good else math.nan,
            min(e.d_e2 for e in es),
            sum(e.ts_class.elementary for e in es),
            sum(not e.bracketed for e in es),
        ))
    rows.sort(key=lambda r: (r.min_d_e2, r.b, r.a))
    return rows


def select_shift_points(ranked: list[CatalogEntry], threshold: float | None = None,
                        cap: int | None = None) -> list[CatalogEntry]:
    """Entries with d² below ``threshold`` and/or the ``cap`` nearest ones."""
    chosen = sorted((e for e in ranked if e.d_e2 is not None), key=_entry_order)
    if threshold is not None:
        chosen = [e for e in chosen if e.d_e2 < threshold]
    if cap is not None:
        chosen = chosen[:cap]
    if not chosen:
        raise ValueError("no shift points selected; the biasing density needs at least one center")
    return chosen


# --- tables ----------------------------------------------------------------

def write_class_table(rows: list[ClassRow], path, probe_eb_no_db: float) -> None:
    out = [f"# probe_eb_no_db={probe_eb_no_db}",
           "error_class,multiplicity,d2_eps,min_d2_eps,ts_elem,unbracketed"]
    for r in rows:
        out.append(f"\"{r.label}\",{r.multiplicity},{r.mean_d_e2:.4f},{r.min_d_e2:.4f},{r.elementary},{r.unbracketed}")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def write_entry_table(entries: list[CatalogEntry], path, probe_eb_no_db: float) -> None:
    out = [f"# probe_eb_no_db={probe_eb_no_db}",
           "support,a,b,elementary,count,epsilon_star,d2_eps,bracketed"]
    for e in entries:
        c = e.ts_class
        out.append(f"{e.pattern.one_based()},{c.a},{c.b},{int(c.elementary)},{e.count},"
                   f"{e.epsilon_star:.6f},{e.d_e2:.6f},{int(bool(e.bracketed))}")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")


def read_entry_table(path, code: TannerCode) -> list[CatalogEntry]:
    from .code import classify_pattern

    entries = []
    with open(path) as f:
        for line in f:
            if line.startswith("#") or line.startswith("support") or not line.strip():
                continue
            s, a, b, el, cnt, eps, d2, br = line.strip().split(",")
            pat = BitPattern(tuple(int(t) - 1 for t in s.split()), code.n)
            entries.append(CatalogEntry(pat, classify_pattern(code, pat), int(cnt), -1,
                                        float(eps), float(d2), bool(int(br))))
    return entries
