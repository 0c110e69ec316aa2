"""Deterministic error-impulse search for dominant trapping sets.

For each root variable the impulse bits are the root plus one variable from
each of ``v_num`` of its check branches (optionally one more tier deep); the
decoder is fed ``1 - eps1`` on those bits, ``1 - eps2`` on the next tier and
``gamma`` everywhere else, and any failure is recorded through its
minimum-syndrome hard decision.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .code import BitPattern, NeighborTree, TannerCode, TsClass, build_neighbor_tree, classify_pattern, search_order
from .decoder import ChannelModel, DecoderConfig, decode_batch


@dataclass(frozen=True)
class SearchParams:
    epsilon1: float = 3.0
    epsilon2: float | None = None  # None: no second-tier impulse
    gamma: float | Mapping[int, float] = 0.6  # scalar, or per root degree
    eb_no_db: float = 6.0
    v_num: int | None = None  # None: every branch of the root
    tree_depth: int = 1
    degree_cutoff: int | None = 2  # irregular codes: roots from this many smallest degree classes

    def __post_init__(self):
        if self.tree_depth not in (1, 2):
            raise ValueError("tree_depth must be 1 or 2")
        if self.v_num is not None and self.v_num < 1:
            raise ValueError("v_num must be >= 1")
        gammas = self.gamma.values() if isinstance(self.gamma, Mapping) else [self.gamma]
        for g in gammas:
            if not 0 < g <= 1:
                raise ValueError("gamma must lie in (0, 1]")
            floor = 1 - g
            if self.epsilon2 is not None:
                if not self.epsilon1 > self.epsilon2 > floor - 1e-12:
                    raise ValueError("need epsilon1 > epsilon2 >= 1 - gamma")
            elif self.epsilon1 < floor:
                raise ValueError("need epsilon1 >= 1 - gamma")

    def gamma_for(self, degree: int) -> float:
        if isinstance(self.gamma, Mapping):
            if degree in self.gamma:
                return float(self.gamma[degree])
            return float(self.gamma[min(self.gamma, key=lambda d: abs(d - degree))])
        return float(self.gamma)

    def branches_for(self, degree: int) -> int:
        return degree if self.v_num is None else self.v_num

    def as_dict(self) -> dict:
        d = asdict(self)
        if isinstance(self.gamma, Mapping):
            d["gamma"] = dict(self.gamma)
        return d


@dataclass(frozen=True)
class ImpulsePattern:
    tier01_support: tuple[int, ...]
    tier2_support: tuple[int, ...]
    n: int
    root: int = -1


@dataclass
class CatalogEntry:
    pattern: BitPattern
    ts_class: TsClass
    count: int = 1
    first_root: int = -1
    epsilon_star: float | None = None
    d_e2: float | None = None
    bracketed: bool | None = None

    @property
    def key(self) -> tuple[int, ...]:
        return self.pattern.support


@dataclass
class TsCatalog:
    n: int
    entries: dict[tuple[int, ...], CatalogEntry] = field(default_factory=dict)
    decodings: int = 0
    total_iterations: int = 0
    wall_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.sorted_entries())

    @property
    def mean_iterations(self) -> float:
        return self.total_iterations / self.decodings if self.decodings else 0.0

    def add(self, pattern: BitPattern, ts_class: TsClass, root: int = -1, count: int = 1):
        e = self.entries.get(pattern.support)
        if e is None:
            self.entries[pattern.support] = CatalogEntry(pattern, ts_class, count, root)
        else:
            e.count += count
            if root >= 0 and (e.first_root < 0 or root < e.first_root):
                e.first_root = root

    def merge(self, other: "TsCatalog") -> "TsCatalog":
        """Union with count addition; order-independent."""
        for e in other.entries.values():
            self.add(e.pattern, e.ts_class, e.first_root, e.count)
        self.decodings += other.decodings
        self.total_iterations += other.total_iterations
        self.wall_time += other.wall_time
        return self

    def sorted_entries(self) -> list[CatalogEntry]:
        return sorted(self.entries.values(), key=lambda e: (e.ts_class.b, e.ts_class.a, e.key))

    def class_summary(self) -> list[tuple[tuple[int, int], int, int]]:
        """``((a, b), multiplicity, elementary count)`` sorted by (b, a)."""
        rows: dict[tuple[int, int], list[int]] = {}
        for e in self.entries.values():
            r = rows.setdefault((e.ts_class.a, e.ts_class.b), [0, 0])
            r[0] += 1
            r[1] += int(e.ts_class.elementary)
        return [(k, v[0], v[1]) for k, v in sorted(rows.items(), key=lambda kv: (kv[0][1], kv[0][0]))]


def _root_tree(code: TannerCode, root: int, params: SearchParams) -> NeighborTree:
    return build_neighbor_tree(code, root, depth=params.tree_depth)


def enumerate_impulses(code: TannerCode, root: int, params: SearchParams,
                       tree: NeighborTree | None = None) -> Iterator[ImpulsePattern]:
    tree = tree or _root_tree(code, root, params)
    d = len(tree.branch_checks)
    v_num = params.branches_for(d)
    if v_num > d:
        return
    seen: set[tuple[int, ...]] = set()
    for branches in itertools.combinations(range(d), v_num):
        for picks in itertools.product(*(tree.tier1_sets[i] for i in branches)):
            lower = []
            if params.tree_depth == 2:
                groups = [g for v in picks for g in tree.tier2_groups[v]]
                deep = itertools.product(*groups)
            else:
                deep = [()]
            for extra in deep:
                bits = tuple(sorted({root, *picks, *extra}))
                if bits in seen:
                    continue
                seen.add(bits)
                tier2: tuple[int, ...] = ()
                if params.epsilon2 is not None and params.tree_depth == 1:
                    lower = {w for v in picks for c in code.col_adjacency[v] if c not in tree.branch_checks
                             for w in code.row_adjacency[c]}
                    tier2 = tuple(sorted(lower.difference(bits)))
                yield ImpulsePattern(bits, tier2, code.n, root)


def impulse_to_received(pattern: ImpulsePattern, params: SearchParams, gamma: float | None = None) -> np.ndarray:
    g = params.gamma_for(1) if gamma is None else gamma
    y = np.full(pattern.n, g, dtype=float)
    if params.epsilon2 is not None and pattern.tier2_support:
        y[list(pattern.tier2_support)] = 1 - params.epsilon2
    y[list(pattern.tier01_support)] = 1 - params.epsilon1
    return y


def search_roots(code: TannerCode, params: SearchParams) -> list[int]:
    order = search_order(code)
    if params.degree_cutoff is None or code.is_regular:
        return order
    keep = sorted(code.dv_profile)[: params.degree_cutoff]
    return [v for v in order if code.var_degrees[v] in keep]


def closed_form_decodings(dv_counts: Mapping[int, int], v_num: int, dc: int) -> int:
    """``sum over degrees of count * C(dv, v_num) * (dc - 1)**v_num``: the decoding
    count for uniform check degree ``dc`` when tree branches do not overlap."""
    return sum(cnt * math.comb(dv, v_num) * (dc - 1) ** v_num for dv, cnt in dv_counts.items())


def search_cost(code: TannerCode, params: SearchParams) -> int:
    """Number of impulse decodings ``run_search`` performs before any de-duplication
    (equal to the closed-form count for uniform check degree)."""
    total = 0
    for root in search_roots(code, params):
        tree = build_neighbor_tree(code, root, depth=params.tree_depth)
        d = len(tree.branch_checks)
        v_num = params.branches_for(d)
        if v_num > d:
            continue
        for branches in itertools.combinations(range(d), v_num):
            if params.tree_depth == 1:
                total += math.prod(len(tree.tier1_sets[i]) for i in branches)
            else:
                for picks in itertools.product(*(tree.tier1_sets[i] for i in branches)):
                    total += math.prod(len(g) for v in picks for g in tree.tier2_groups[v])
    return total


def _search_chunk(code: TannerCode, roots: list[int], params: SearchParams, cfg: DecoderConfig,
                  batch_size: int) -> TsCatalog:
    t0 = time.perf_counter()
    channel = ChannelModel(params.eb_no_db, code.rate)
    cat = TsCatalog(code.n)
    for root in roots:
        gamma = params.gamma_for(int(code.var_degrees[root]))
        pats = list(enumerate_impulses(code, root, params))
        for start in range(0, len(pats), batch_size):
            chunk = pats[start:start + batch_size]
            y = np.stack([impulse_to_received(p, params, gamma) for p in chunk])
            out = decode_batch(code, y, channel, cfg)
            cat.decodings += len(chunk)
            cat.total_iterations += int(out.iterations.sum())
            for i in np.flatnonzero(out.frame_error):
                ts = out.event(int(i))
                if ts.weight == 0:
                    continue
                cat.add(ts, classify_pattern(code, ts), root)
    cat.wall_time = time.perf_counter() - t0
    return cat


def run_search(code: TannerCode, params: SearchParams, cfg: DecoderConfig | None = None,
               workers: int = 1, batch_size: int = 512, roots: list[int] | None = None) -> TsCatalog:
    cfg = cfg or DecoderConfig()
    roots = search_roots(code, params) if roots is None else list(roots)
    t0 = time.perf_counter()
    if workers <= 1 or len(roots) < 2:
        cat = _search_chunk(code, roots, params, cfg, batch_size)
    else:
        chunks = [roots[i::workers] for i in range(workers)]
        cat = TsCatalog(code.n)
        with ProcessPoolExecutor(workers) as ex:
            for part in ex.map(_search_chunk, [code] * workers, chunks, [params] * workers,
                               [cfg] * workers, [batch_size] * workers):
                cat.merge(part)
    cat.wall_time = time.perf_counter() - t0
    cat.meta = {"code": code.identity, **params.as_dict(), "algorithm": cfg.algorithm,
                "max_iters": cfg.max_iters, "roots": len(roots)}
    return cat


# --- serialization -------------------------------------------------------

def _fmt_meta(v) -> str:
    if isinstance(v, dict):
        return ",".join(f"{k}:{x}" for k, x in v.items())
    return str(v)


def write_catalog(cat: TsCatalog, path, csv_path=None) -> None:
    """Tab-separated records ``support a b elementary count first_root`` (1-based)
    after ``#`` header lines; the wall time sits alone on the last header line."""
    lines = [f"# n={cat.n}"]
    lines += [f"# {k}={_fmt_meta(v)}" for k, v in cat.meta.items()]
    lines += [f"# decodings={cat.decodings}", f"# mean_iterations={cat.mean_iterations:.4f}",
              f"# wall_time={cat.wall_time:.3f}"]
    for e in cat.sorted_entries():
        c = e.ts_class
        lines.append(f"{e.pattern.one_based()}\t{c.a}\t{c.b}\t{int(c.elementary)}\t{e.count}\t{e.first_root + 1}")
    Path(path).write_text("\n".join(lines) + "\n")
    if csv_path is not None:
        rows = ["support,a,b,elementary,count,first_root"]
        for e in cat.sorted_entries():
            c = e.ts_class
            rows.append(f"{e.pattern.one_based()},{c.a},{c.b},{int(c.elementary)},{e.count},{e.first_root + 1}")
        Path(csv_path).write_text("\n".join(rows) + "\n")


def read_catalog(path, code: TannerCode) -> TsCatalog:
    cat = TsCatalog(code.n)
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key == "decodings":
                cat.decodings = int(val)
            elif key == "wall_time":
                cat.wall_time = float(val)
            elif key and key != "n":
                cat.meta[key] = val
            continue
        fields = line.split("\t")
        if len(fields) < 5:
            raise ValueError(f"{path}:{lineno}: expected at least 5 tab-separated fields")
        support = [int(t) - 1 for t in fields[0].split()]
        pat = BitPattern(tuple(support), code.n)
        cls = classify_pattern(code, pat)
        if (cls.a, cls.b) != (int(fields[1]), int(fields[2])):
            raise ValueError(f"{path}:{lineno}: stored class ({fields[1]},{fields[2]}) does not match {cls.label}")
        root = int(fields[5]) - 1 if len(fields) > 5 else -1
        cat.add(pat, cls, root, int(fields[4]))
    return cat
