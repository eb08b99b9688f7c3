"""Reference implementations used only by the tests."""

import math

import numpy as np
from scipy.special import digamma as scipy_digamma

# Bernoulli numbers B2..B14
_BERNOULLI = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6]


def digamma_series(n: int) -> float:
    """Digamma by upward shift to x >= 30 and the Stirling-type asymptotic series."""
    x = float(n)
    shift = 0.0
    while x < 30.0:
        shift -= 1.0 / x
        x += 1.0
    s = math.log(x) - 1.0 / (2 * x)
    for j, b in enumerate(_BERNOULLI, 1):
        s -= b / (2 * j * x ** (2 * j))
    return s + shift


def entropy_grassberger_ref(counts) -> float:
    n = np.array([c for c in counts if c > 0], dtype=float)
    N = n.sum()
    return math.log(N) - float(np.sum(n * scipy_digamma(n))) / N


def reference_profile(dataset, max_distance):
    """Unoptimized transliteration of the LDD loop.

    For each D: slice X and Y, fill an XY matrix pair by pair, derive the three
    count vectors and combine three Grassberger entropies.
    """
    L = len(dataset)
    symbols = sorted(set(dataset))
    index = {s: i for i, s in enumerate(symbols)}
    K = len(symbols)
    out = {}
    for D in max_distance if not isinstance(max_distance, int) else range(1, max_distance + 1):
        X = dataset[0 : L - D]
        Y = dataset[D:L]
        XY = [[0] * K for _ in range(K)]
        for i in range(len(X)):
            XY[index[X[i]]][index[Y[i]]] += 1
        NX = [sum(row) for row in XY]
        NY = [sum(XY[r][c] for r in range(K)) for c in range(K)]
        NXY = [v for row in XY for v in row]
        HX = entropy_grassberger_ref(NX)
        HY = entropy_grassberger_ref(NY)
        HXY = entropy_grassberger_ref(NXY)
        out[D] = (HX + HY - HXY) / math.log(2)
    return out
