from pathlib import Path

import numpy as np
import pytest

from errfloor.code import TannerCode, load_alist
from errfloor.synthetic import peg_regular, random_regular

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def mackay96():
    return load_alist(DATA / "mackay_96_3_963.alist")


@pytest.fixture(scope="session")
def mackay96b():
    return load_alist(DATA / "mackay_96_33_964.alist")


@pytest.fixture(scope="session")
def small_girth6_codes():
    """Twenty {3,4} codes with n <= 24 and girth 6."""
    codes = []
    for s in range(10):
        codes.append(random_regular(20, 3, 4, seed=s, min_girth=6))
        codes.append(random_regular(24, 3, 4, seed=100 + s, min_girth=6))
    return codes


@pytest.fixture(scope="session")
def peg96():
    return peg_regular(96, 3, 6, seed=3)


@pytest.fixture
def toy():
    # edges (v0,c0) (v1,c0) (v1,c1) (v2,c1)
    return TannerCode.from_dense([[1, 1, 0], [0, 1, 1]])


def gf2_nullspace(H):
    """Basis of {x : H x = 0 mod 2} by Gaussian elimination."""
    H = np.array(H, dtype=np.uint8) % 2
    m, n = H.shape
    A = H.copy()
    pivots = []
    r = 0
    for c in range(n):
        rows = np.flatnonzero(A[r:, c]) + r if r < m else []
        if len(rows) == 0:
            continue
        p = rows[0]
        A[[r, p]] = A[[p, r]]
        for i in range(m):
            if i != r and A[i, c]:
                A[i] ^= A[r]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(n, dtype=np.uint8)
        x[f] = 1
        for i, pc in enumerate(pivots):
            x[pc] = A[i, f]
        basis.append(x)
    return np.array(basis)


def random_codeword(H, rng):
    B = gf2_nullspace(H)
    coef = rng.integers(0, 2, len(B))
    return (coef @ B) % 2
