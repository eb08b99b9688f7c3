"""Mutual information between symbols a fixed distance apart.

For a corpus ``c`` and distance ``D`` the pairs are ``(c[i], c[i + D])`` for
``0 <= i < len(c) - D``. Entropies are estimated in nats, either with the
plug-in formula or with Grassberger's digamma correction

    H = ln N - (1/N) * sum_i N_i * psi(N_i),

and the mutual information ``H(X) + H(Y) - H(X, Y)`` is reported in bits.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

import numpy as np

EULER_GAMMA = 0.57721566490153286060651209008240243
LN2 = math.log(2.0)
ESTIMATORS = ("grassberger", "plugin")

Counts = Union[Mapping[object, int], Iterable[int], np.ndarray]


class _HarmonicDigamma:
    """psi(n) for positive integers via psi(n) = -gamma + H(n - 1).

    A dense table covers ``n <= dense_limit``. Beyond it only block
    checkpoints are stored (extended lazily) and the remaining partial
    harmonic sum is added per lookup, so huge counts cost no big table.
    """

    def __init__(self, dense_limit: int = 10**6, block: int = 4096):
        self.dense_limit = dense_limit
        self.block = block
        self._dense: Optional[np.ndarray] = None
        self._checkpoints: list[float] = []
        self._lock = threading.RLock()

    def _build_dense(self) -> np.ndarray:
        n = self.dense_limit
        recip = 1.0 / np.arange(1, n, dtype=np.float64)
        # cumulative sums restart every block; block offsets are exact-rounded
        # via fsum so rounding error does not grow with n
        table = np.empty(n + 1, dtype=np.float64)
        table[0] = np.nan
        table[1] = -EULER_GAMMA
        offset = -EULER_GAMMA
        for lo in range(0, n - 1, self.block):
            chunk = recip[lo : lo + self.block]
            table[lo + 2 : lo + 2 + chunk.size] = offset + np.cumsum(chunk)
            offset = math.fsum([offset, math.fsum(chunk)])
            table[lo + 1 + chunk.size] = offset
        return table

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            with self._lock:
                if self._dense is None:
                    self._dense = self._build_dense()
        return self._dense

    def _checkpoint(self, idx: int) -> float:
        # checkpoint idx holds psi(dense_limit + idx * block)
        with self._lock:
            cps = self._checkpoints
            if not cps:
                cps.append(float(self.dense[self.dense_limit]))
            while len(cps) <= idx:
                lo = self.dense_limit + (len(cps) - 1) * self.block
                terms = 1.0 / np.arange(lo, lo + self.block, dtype=np.float64)
                cps.append(math.fsum([cps[-1], math.fsum(terms)]))
            return cps[idx]

    def scalar(self, n: int) -> float:
        if n < 1:
            raise ValueError("digamma is only tabulated for positive integers")
        if n <= self.dense_limit:
            return float(self.dense[n])
        idx, rem = divmod(n - self.dense_limit, self.block)
        base = self._checkpoint(idx)
        if rem == 0:
            return base
        lo = n - rem
        return math.fsum([base, math.fsum(1.0 / np.arange(lo, n, dtype=np.float64))])

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if n.size and n.min() < 1:
            raise ValueError("digamma is only tabulated for positive integers")
        if n.size == 0 or n.max() <= self.dense_limit:
            return self.dense[n]
        out = np.empty(n.shape, dtype=np.float64)
        flat_in, flat_out = n.ravel(), out.ravel()
        for i, v in enumerate(flat_in):
            flat_out[i] = self.scalar(int(v))
        return out


digamma_int = _HarmonicDigamma()


def _as_counts(c: Counts) -> np.ndarray:
    if isinstance(c, Mapping):
        c = list(c.values())
    arr = np.asarray(list(c) if not isinstance(c, np.ndarray) else c, dtype=np.int64).ravel()
    if arr.size and arr.min() < 0:
        raise ValueError("counts must be non-negative")
    arr = arr[arr > 0]
    if arr.size == 0:
        raise ValueError("entropy of an empty count vector is undefined")
    # sorted so that the result does not depend on category order
    return np.sort(arr)


def entropy_grassberger(counts: Counts) -> float:
    """Grassberger-corrected entropy in nats.

    >>> round(entropy_grassberger({"a": 5, "b": 5}), 6)
    0.796468
    """
    n = _as_counts(counts)
    N = int(n.sum())
    return math.log(N) - float(np.dot(n, digamma_int(n))) / N


def entropy_plugin(counts: Counts) -> float:
    """Maximum-likelihood (plug-in) entropy in nats."""
    n = _as_counts(counts)
    N = int(n.sum())
    p = n / N
    return float(-np.dot(p, np.log(p)))


_ENTROPY = {"grassberger": entropy_grassberger, "plugin": entropy_plugin}


def _entropy_fn(estimator: str):
    try:
        return _ENTROPY[estimator]
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}, choose from {ESTIMATORS}") from None


def _ids_and_size(corpus) -> tuple[np.ndarray, int]:
    ids = getattr(corpus, "ids", corpus)
    ids = np.asarray(ids)
    if ids.ndim != 1 or (ids.size and not np.issubdtype(ids.dtype, np.integer)):
        raise TypeError("corpus must be a 1-D sequence of integer symbol ids")
    n_symbols = getattr(corpus, "n_symbols", None)
    if n_symbols is None:
        n_symbols = int(ids.max()) + 1 if ids.size else 0
    return ids, int(n_symbols)


def joint_counts(ids: np.ndarray, distance: int, n_symbols: int) -> np.ndarray:
    """Pair-frequency matrix ``J[x, y] = #{i : ids[i] = x, ids[i + D] = y}``."""
    m = ids.size - distance
    codes = ids[:m].astype(np.intp) * n_symbols + ids[distance:]
    return np.bincount(codes, minlength=n_symbols * n_symbols).reshape(n_symbols, n_symbols)


def mi_from_joint(joint: np.ndarray, estimator: str = "grassberger") -> float:
    """Mutual information in bits from a joint count matrix."""
    H = _entropy_fn(estimator)
    hx = H(joint.sum(axis=1))
    hy = H(joint.sum(axis=0))
    hxy = H(joint)
    return (hx + hy - hxy) / LN2


def _check_corpus(size: int) -> None:
    if size < 2:
        raise ValueError(f"corpus has {size} symbols; at least 2 are needed")


def mi_at_distance(corpus, distance: int, estimator: str = "grassberger") -> float:
    """Mutual information (bits) between symbols ``distance`` positions apart."""
    ids, V = _ids_and_size(corpus)
    _check_corpus(ids.size)
    if not 1 <= distance <= ids.size - 1:
        raise ValueError(f"distance must be in 1..{ids.size - 1}, got {distance}")
    return mi_from_joint(joint_counts(ids, distance, V), estimator)


@dataclass(frozen=True)
class LddProfile:
    distances: np.ndarray
    mi_bits: np.ndarray
    estimator: str = "grassberger"
    corpus_id: str = ""
    max_distance: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "max_distance", int(self.distances[-1]) if len(self.distances) else 0)

    def __len__(self) -> int:
        return len(self.distances)

    def __iter__(self):
        return zip(self.distances.tolist(), self.mi_bits.tolist())

    def clamped(self, floor: float = 1e-6) -> np.ndarray:
        """MI values raised to ``floor`` so they can go on a log axis."""
        return np.maximum(self.mi_bits, floor)

    def to_csv(self, log_floor: Optional[float] = None) -> str:
        values = self.mi_bits if log_floor is None else self.clamped(log_floor)
        rows = ["D,mi_bits"]
        rows.extend(f"{d},{v:.17g}" for d, v in zip(self.distances.tolist(), values.tolist()))
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str, estimator: str = "grassberger") -> "LddProfile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "D,mi_bits":
            raise ValueError("expected a 'D,mi_bits' header")
        d, v = [], []
        for ln in lines[1:]:
            a, b = ln.split(",")
            d.append(int(a))
            v.append(float(b))
        return cls(np.array(d, dtype=np.int64), np.array(v), estimator)


def ldd_profile(
    corpus,
    max_distance: int,
    estimator: str = "grassberger",
    workers: int = 1,
    corpus_id: str = "",
) -> LddProfile:
    """MI at every distance ``1..max_distance``.

    Each distance is computed independently, so any ``workers`` value gives
    bit-identical output.
    """
    ids, V = _ids_and_size(corpus)
    _check_corpus(ids.size)
    if not 1 <= max_distance <= ids.size - 1:
        raise ValueError(f"max_distance must be in 1..{ids.size - 1}, got {max_distance}")
    _entropy_fn(estimator)
    n = ids.size
    scaled = ids.astype(np.intp) * V
    local = threading.local()

    def one(D: int) -> float:
        buf = getattr(local, "buf", None)
        if buf is None:
            buf = local.buf = np.empty(n, dtype=np.intp)
        m = n - D
        np.add(scaled[:m], ids[D:], out=buf[:m])
        joint = np.bincount(buf[:m], minlength=V * V).reshape(V, V)
        return mi_from_joint(joint, estimator)

    distances = np.arange(1, max_distance + 1, dtype=np.int64)
    if workers <= 1:
        values = [one(int(D)) for D in distances]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(one, distances.tolist()))
    return LddProfile(distances, np.array(values, dtype=np.float64), estimator, corpus_id)


def decay_onset(profile: LddProfile, max_length: int, factor: float = 10.0) -> int:
    """Largest D <= 2*max_length whose MI exceeds ``factor`` x the tail median.

    The tail is D in [1.5*max_length, 2*max_length], i.e. well past the
    longest string, where only cross-string pairs remain.
    """
    d = profile.distances
    lo, hi = 1.5 * max_length, 2 * max_length
    if d[-1] < hi:
        raise ValueError(f"profile stops at D={int(d[-1])}, need at least {hi:g}")
    tail = profile.mi_bits[(d >= lo) & (d <= hi)]
    threshold = factor * float(np.median(tail))
    above = np.nonzero((profile.mi_bits > threshold) & (d <= hi))[0]
    return int(d[above[-1]]) if above.size else 0
