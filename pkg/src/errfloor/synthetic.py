"""Small code generators for tests and demo scripts.

A progressive-edge-growth style builder (large girth) and a random
4-cycle-free builder (keeps 6-cycles) for regular codes.  Real studies load
published matrices through alist files.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .code import TannerCode


def _check_depths(cols, rows, v, m):
    """BFS depth (in check tiers) of every check from variable ``v``; -1 if unreachable."""
    depth = [-1] * m
    q = deque()
    for c in cols[v]:
        depth[c] = 0
        q.append(c)
    seen_v = {v}
    while q:
        c = q.popleft()
        for w in rows[c]:
            if w in seen_v:
                continue
            seen_v.add(w)
            for c2 in cols[w]:
                if depth[c2] < 0:
                    depth[c2] = depth[c] + 1
                    q.append(c2)
    return depth


def peg_regular(n: int, dv: int, dc: int, seed: int = 0, name: str = "") -> TannerCode:
    """Regular {dv, dc} code grown edge by edge, each new edge going to a
    lowest-degree check as far as possible from the current variable."""
    if (n * dv) % dc:
        raise ValueError("n*dv must be divisible by dc")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    cols: list[list[int]] = [[] for _ in range(n)]
    rows: list[list[int]] = [[] for _ in range(m)]
    for v in range(n):
        for _ in range(dv):
            open_checks = [c for c in range(m) if len(rows[c]) < dc and c not in cols[v]]
            if not cols[v]:
                cand = open_checks
            else:
                depth = _check_depths(cols, rows, v, m)
                unreached = [c for c in open_checks if depth[c] < 0]
                if unreached:
                    cand = unreached
                else:
                    far = max(depth[c] for c in open_checks)
                    cand = [c for c in open_checks if depth[c] == far]
            low = min(len(rows[c]) for c in cand)
            cand = [c for c in cand if len(rows[c]) == low]
            c = int(cand[rng.integers(len(cand))])
            cols[v].append(c)
            rows[c].append(v)
    return TannerCode(n, m, tuple(tuple(sorted(c)) for c in cols), tuple(tuple(r) for r in rows),
                      name=name or f"peg_{n}_{dv}_{dc}_s{seed}")


def random_regular(n: int, dv: int, dc: int, seed: int = 0, min_girth: int = 0, tries: int = 200) -> TannerCode:
    """PEG code with a seeded random tie-break, retried until ``girth >= min_girth``."""
    for t in range(tries):
        code = peg_regular(n, dv, dc, seed=seed * 1000 + t)
        if not min_girth or (code.girth and code.girth >= min_girth):
            return code
    raise RuntimeError(f"no {{{dv},{dc}}} code of length {n} with girth >= {min_girth} in {tries} tries")


def random_no4cycle(n: int, dv: int, dc: int, seed: int = 0, tries: int = 100) -> TannerCode:
    """Regular {dv, dc} code with checks drawn at random (least-filled first)
    subject only to avoiding 4-cycles, so unlike PEG it keeps many 6-cycles."""
    if (n * dv) % dc:
        raise ValueError("n*dv must be divisible by dc")
    m = n * dv // dc
    rng = np.random.default_rng(seed)
    for _ in range(tries):
        cols: list[list[int]] = [[] for _ in range(n)]
        rows: list[list[int]] = [[] for _ in range(m)]
        # variables already sharing a check with the column being built
        ok = True
        for v in range(n):
            near: set[int] = set()
            for _ in range(dv):
                cand = [c for c in range(m) if len(rows[c]) < dc and c not in cols[v]
                        and near.isdisjoint(rows[c])]
                if not cand:
                    ok = False
                    break
                fill = np.array([len(rows[c]) for c in cand])
                low = [c for c, f in zip(cand, fill) if f == fill.min()]
                c = int(low[rng.integers(len(low))])
                near.update(rows[c])
                cols[v].append(c)
                rows[c].append(v)
            if not ok:
                break
        if ok:
            return TannerCode(n, m, tuple(tuple(sorted(c)) for c in cols), tuple(tuple(r) for r in rows),
                              name=f"rand_{n}_{dv}_{dc}_s{seed}")
    raise RuntimeError(f"no 4-cycle-free {{{dv},{dc}}} code of length {n} in {tries} tries")
