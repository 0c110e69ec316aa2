"""Parity-check code structure: alist I/O, Tanner graph queries, girth,
trapping-set classification and the local trees used by the impulse search.

Variable and check indices are 0-based everywhere except in alist files and
human-readable reports.
"""

from __future__ import annotations

import hashlib
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

ACYCLIC = 0  # girth value reported for a graph without cycles


class AlistError(ValueError):
    """Malformed alist input. ``line`` is 1-based, or None for whole-file problems."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class BitPattern:
    """Set of 1-positions of a length-``n`` binary vector, kept sorted and unique."""

    support: tuple[int, ...]
    n: int

    def __post_init__(self):
        s = tuple(sorted(set(int(i) for i in self.support)))
        if s and (s[0] < 0 or s[-1] >= self.n):
            raise ValueError(f"support index out of range for n={self.n}")
        object.__setattr__(self, "support", s)

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "BitPattern":
        bits = np.asarray(bits)
        return cls(tuple(np.flatnonzero(bits).tolist()), bits.shape[0])

    @property
    def weight(self) -> int:
        return len(self.support)

    def to_bits(self) -> np.ndarray:
        x = np.zeros(self.n, dtype=bool)
        x[list(self.support)] = True
        return x

    def one_based(self) -> str:
        return " ".join(str(i + 1) for i in self.support)

    def __len__(self):
        return len(self.support)

    def __iter__(self):
        return iter(self.support)


@dataclass(frozen=True)
class TsClass:
    a: int
    b: int
    edges: int
    checks_touched: int
    elementary: bool

    @property
    def label(self) -> str:
        return f"({self.a},{self.b})"


@dataclass(frozen=True)
class NeighborTree:
    """Breadth-first tree around ``root``.

    ``tier1_sets[i]`` holds the variables hanging off the root's i-th check.
    At depth 2, ``tier2_groups[v]`` lists, for tier-1 variable ``v``, the
    variable groups under each of v's other checks.
    """

    root: int
    branch_checks: tuple[int, ...]
    tier1_sets: tuple[tuple[int, ...], ...]
    tier2_groups: dict[int, tuple[tuple[int, ...], ...]] = field(default_factory=dict)
    tier2_variables: tuple[int, ...] = ()
    duplicates_present: bool = False

    @property
    def tier1_variables(self) -> tuple[int, ...]:
        seen: dict[int, None] = {}
        for group in self.tier1_sets:
            for v in group:
                seen.setdefault(v, None)
        return tuple(seen)


@dataclass(frozen=True, eq=False)
class TannerCode:
    n: int
    m: int
    col_adjacency: tuple[tuple[int, ...], ...]
    row_adjacency: tuple[tuple[int, ...], ...]
    k_override: int | None = None
    name: str = ""

    def __post_init__(self):
        if len(self.col_adjacency) != self.n or len(self.row_adjacency) != self.m:
            raise ValueError("adjacency sizes do not match (n, m)")
        col_edges = set()
        for v, checks in enumerate(self.col_adjacency):
            if not checks:
                raise ValueError(f"variable {v} has degree 0")
            for c in checks:
                if not 0 <= c < self.m:
                    raise ValueError(f"variable {v}: check index {c} out of range")
                if (v, c) in col_edges:
                    raise ValueError(f"duplicate edge (v{v}, c{c})")
                col_edges.add((v, c))
        row_edges = set()
        for c, vs in enumerate(self.row_adjacency):
            if not vs:
                raise ValueError(f"check {c} has degree 0")
            for v in vs:
                if not 0 <= v < self.n:
                    raise ValueError(f"check {c}: variable index {v} out of range")
                if (v, c) in row_edges:
                    raise ValueError(f"duplicate edge (v{v}, c{c})")
                row_edges.add((v, c))
        if col_edges != row_edges:
            raise ValueError("column and row adjacency describe different edge sets")

    @classmethod
    def from_dense(cls, H, name: str = "") -> "TannerCode":
        H = np.asarray(H) % 2
        m, n = H.shape
        cols = tuple(tuple(np.flatnonzero(H[:, v]).tolist()) for v in range(n))
        rows = tuple(tuple(np.flatnonzero(H[c]).tolist()) for c in range(m))
        return cls(n, m, cols, rows, name=name)

    @classmethod
    def from_columns(cls, n: int, m: int, columns: Sequence[Iterable[int]], name: str = "") -> "TannerCode":
        cols = tuple(tuple(c) for c in columns)
        rows: list[list[int]] = [[] for _ in range(m)]
        for v, checks in enumerate(cols):
            for c in checks:
                rows[c].append(v)
        return cls(n, m, cols, tuple(tuple(r) for r in rows), name=name)

    @property
    def k(self) -> int:
        return self.n - self.m if self.k_override is None else self.k_override

    @property
    def rate(self) -> float:
        return self.k / self.n

    @cached_property
    def var_degrees(self) -> np.ndarray:
        return np.array([len(c) for c in self.col_adjacency], dtype=np.int64)

    @cached_property
    def check_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.row_adjacency], dtype=np.int64)

    @property
    def dv_profile(self) -> dict[int, int]:
        return dict(sorted(Counter(self.var_degrees.tolist()).items()))

    @property
    def dc_profile(self) -> dict[int, int]:
        return dict(sorted(Counter(self.check_degrees.tolist()).items()))

    @property
    def num_edges(self) -> int:
        return int(self.var_degrees.sum())

    @property
    def is_regular(self) -> bool:
        return len(self.dv_profile) == 1 and len(self.dc_profile) == 1

    @cached_property
    def girth(self) -> int:
        return compute_girth(self)

    @cached_property
    def check_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(c) for c in self.col_adjacency)

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for v, checks in enumerate(self.col_adjacency):
            H[list(checks), v] = 1
        return H

    @cached_property
    def identity(self) -> str:
        digest = hashlib.sha1(write_alist(self).encode()).hexdigest()[:10]
        return f"{self.name or 'code'}:{self.n}x{self.m}:{digest}"

    def describe(self) -> str:
        if self.is_regular:
            (dv,), (dc,) = self.dv_profile, self.dc_profile
            return f"regular {{{dv},{dc}}}, n={self.n}"
        return f"irregular dv={self.dv_profile} dc={self.dc_profile}, n={self.n}"


def _data_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if raw.strip():
            yield lineno, raw.split()


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise AlistError(f"non-integer entry in {tokens!r}", lineno) from None


def parse_alist(text: str, name: str = "") -> TannerCode:
    """Parse alist text. Zero entries (padding) are skipped."""
    lines = list(_data_lines(text))
    if len(lines) < 4:
        raise AlistError("truncated header (need 4 header lines)")
    (ln, tok) = lines[0]
    head = _ints(tok, ln)
    if len(head) != 2 or min(head) < 1:
        raise AlistError("first line must be 'n m'", ln)
    n, m = head
    ln, tok = lines[1]
    if len(_ints(tok, ln)) != 2:
        raise AlistError("second line must be 'max_dv max_dc'", ln)
    ln, tok = lines[2]
    col_deg = _ints(tok, ln)
    if len(col_deg) != n:
        raise AlistError(f"expected {n} column degrees, got {len(col_deg)}", ln)
    ln, tok = lines[3]
    row_deg = _ints(tok, ln)
    if len(row_deg) != m:
        raise AlistError(f"expected {m} row degrees, got {len(row_deg)}", ln)
    body = lines[4:]
    if len(body) < n + m:
        raise AlistError(f"expected {n + m} adjacency lines, found {len(body)}")

    cols: list[tuple[int, ...]] = []
    for v in range(n):
        ln, tok = body[v]
        entries = [x for x in _ints(tok, ln) if x != 0]
        if len(entries) != col_deg[v]:
            raise AlistError(f"column {v + 1}: declared degree {col_deg[v]}, found {len(entries)}", ln)
        for x in entries:
            if not 1 <= x <= m:
                raise AlistError(f"column {v + 1}: check index {x} out of range 1..{m}", ln)
        if len(set(entries)) != len(entries):
            raise AlistError(f"column {v + 1}: duplicate edge", ln)
        cols.append(tuple(x - 1 for x in entries))
    rows: list[tuple[int, ...]] = []
    for c in range(m):
        ln, tok = body[n + c]
        entries = [x for x in _ints(tok, ln) if x != 0]
        if len(entries) != row_deg[c]:
            raise AlistError(f"row {c + 1}: declared degree {row_deg[c]}, found {len(entries)}", ln)
        for x in entries:
            if not 1 <= x <= n:
                raise AlistError(f"row {c + 1}: variable index {x} out of range 1..{n}", ln)
        if len(set(entries)) != len(entries):
            raise AlistError(f"row {c + 1}: duplicate edge", ln)
        rows.append(tuple(x - 1 for x in entries))

    col_edges = {(v, c) for v, cs in enumerate(cols) for c in cs}
    for c, vs in enumerate(rows):
        for v in vs:
            if (v, c) not in col_edges:
                raise AlistError(f"row {c + 1} lists variable {v + 1} but column {v + 1} omits check {c + 1}",
                                 body[n + c][0])
    if sum(col_deg) != sum(row_deg):
        raise AlistError("column and row degree totals differ")
    return TannerCode(n, m, tuple(cols), tuple(rows), name=name)


def load_alist(path) -> TannerCode:
    from pathlib import Path

    path = Path(path)
    return parse_alist(path.read_text(), name=path.stem)


def write_alist(code: TannerCode) -> str:
    """Unpadded alist text for ``code``."""
    out = [
        f"{code.n} {code.m}",
        f"{int(code.var_degrees.max())} {int(code.check_degrees.max())}",
        " ".join(map(str, code.var_degrees.tolist())),
        " ".join(map(str, code.check_degrees.tolist())),
    ]
    out += [" ".join(str(c + 1) for c in cs) for cs in code.col_adjacency]
    out += [" ".join(str(v + 1) for v in vs) for vs in code.row_adjacency]
    return "\n".join(out) + "\n"


def _check_length(code: TannerCode, x: BitPattern):
    if x.n != code.n:
        raise ValueError(f"pattern length {x.n} does not match code length {code.n}")


def check_incidence(code: TannerCode, x: BitPattern) -> Counter:
    """Number of edges from each touched check into the support."""
    _check_length(code, x)
    return Counter(c for v in x.support for c in code.col_adjacency[v])


def syndrome(code: TannerCode, x: BitPattern) -> tuple[frozenset, int]:
    counts = check_incidence(code, x)
    unsat = frozenset(c for c, k in counts.items() if k % 2)
    return unsat, len(unsat)


def classify_pattern(code: TannerCode, x: BitPattern) -> TsClass:
    counts = check_incidence(code, x)
    b = sum(1 for k in counts.values() if k % 2)
    elementary = all(k == (1 if k % 2 else 2) for k in counts.values())
    edges = int(sum(len(code.col_adjacency[v]) for v in x.support))
    return TsClass(a=x.weight, b=b, edges=edges, checks_touched=len(counts), elementary=elementary)


def compute_girth(code: TannerCode) -> int:
    """Shortest cycle length by BFS from every variable node; ``ACYCLIC`` if none.

    Every cycle passes through a variable node, and a BFS rooted on a shortest
    cycle finds it exactly, so variable roots suffice.
    """
    n = code.n
    # node ids: variables 0..n-1, checks n..n+m-1
    adj = [[n + c for c in cs] for cs in code.col_adjacency]
    adj += [list(vs) for vs in code.row_adjacency]
    best = None
    for s in range(n):
        dist = {s: 0}
        parent = {s: -1}
        q = deque([s])
        while q:
            u = q.popleft()
            du = dist[u]
            if best is not None and 2 * du + 1 >= best:
                break
            for w in adj[u]:
                if w not in dist:
                    dist[w] = du + 1
                    parent[w] = u
                    q.append(w)
                elif parent[u] != w:
                    length = du + dist[w] + 1
                    if best is None or length < best:
                        best = length
    return ACYCLIC if best is None else best


def gf2_rank(code: TannerCode) -> int:
    """Rank of H over GF(2) (rows packed into Python ints)."""
    rows = [sum(1 << v for v in vs) for vs in code.row_adjacency]
    rank = 0
    for bit in range(code.n):
        mask = 1 << bit
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & mask), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & mask:
                rows[i] ^= rows[rank]
        rank += 1
    return rank


def build_neighbor_tree(code: TannerCode, root: int, depth: int = 1) -> NeighborTree:
    if not 0 <= root < code.n:
        raise ValueError(f"root {root} out of range")
    if depth not in (1, 2):
        raise ValueError("depth must be 1 or 2")
    branch_checks = code.col_adjacency[root]
    tier1 = tuple(tuple(v for v in code.row_adjacency[c] if v != root) for c in branch_checks)
    flat = [v for group in tier1 for v in group]
    dup = len(set(flat)) != len(flat)

    tier2_groups: dict[int, tuple[tuple[int, ...], ...]] = {}
    tier2_vars: dict[int, None] = {}
    if depth == 2:
        seen_checks = set(branch_checks)
        upper = {root, *flat}
        for i, group in enumerate(tier1):
            for v in group:
                groups = []
                for c in code.col_adjacency[v]:
                    if c == branch_checks[i]:
                        continue
                    if c in seen_checks:
                        dup = True
                    seen_checks.add(c)
                    g = tuple(w for w in code.row_adjacency[c] if w != v)
                    if any(w in upper for w in g):
                        dup = True
                    groups.append(g)
                    for w in g:
                        if w not in upper:
                            if w in tier2_vars:
                                dup = True
                            tier2_vars.setdefault(w, None)
                tier2_groups[v] = tuple(groups)
    return NeighborTree(root, tuple(branch_checks), tier1, tier2_groups, tuple(tier2_vars), dup)


def search_order(code: TannerCode) -> list[int]:
    """Variables by ascending degree, index order within a degree."""
    return sorted(range(code.n), key=lambda v: (len(code.col_adjacency[v]), v))
