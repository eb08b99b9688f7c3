"""Deterministic acceptors for SPk languages, exact path counting and uniform sampling.

Each state is a progress vector: for every forbidden subsequence, how many of
its leading symbols have been matched greedily so far. Completing any entry
sends the automaton to a single absorbing dead state. Length is not part of
the state graph; it is imposed by :class:`LengthCountTable` when sampling.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .grammar import SpkGrammar, Subsequence, UnknownSymbolError, Word

DEFAULT_STATE_CAP = 1_000_000


class StateCapError(RuntimeError):
    """The product state space would exceed the configured cap."""


class EmptyLanguageError(ValueError):
    """No valid string exists for a requested length."""


@dataclass(frozen=True, eq=False)
class PiecewiseDfa:
    grammar: SpkGrammar
    forbidden: tuple[Subsequence, ...]
    transition: tuple[tuple[int, ...], ...]
    progress: tuple[Optional[tuple[int, ...]], ...]
    dead_state: int
    initial: int = 0

    @property
    def state_count(self) -> int:
        return len(self.transition)

    @property
    def n_symbols(self) -> int:
        return len(self.grammar.alphabet)

    def step(self, state: int, symbol: int) -> int:
        return self.transition[state][symbol]

    def run(self, w: Word) -> int:
        ids = self.grammar.alphabet.encode(w)
        state = self.initial
        for x in ids:
            state = self.transition[state][x]
        return state

    def out_classes(self, state: int) -> list[tuple[int, tuple[int, ...]]]:
        """Outgoing edges of ``state`` grouped by target, in first-symbol order."""
        groups: dict[int, list[int]] = {}
        for sym, target in enumerate(self.transition[state]):
            groups.setdefault(target, []).append(sym)
        return [(t, tuple(syms)) for t, syms in groups.items()]

    def dump(self) -> str:
        """Adjacency listing, one ``state symbol -> state`` edge per line."""
        symbols = self.grammar.alphabet.symbols
        lines = []
        for s, row in enumerate(self.transition):
            for x, t in enumerate(row):
                lines.append(f"{s} {symbols[x]} -> {t}")
        return "\n".join(lines) + "\n"


def compile_grammar(g: SpkGrammar, state_cap: int = DEFAULT_STATE_CAP) -> PiecewiseDfa:
    """Build the complete progress-vector DFA for ``g``.

    States are numbered in breadth-first discovery order from the all-zero
    vector (state 0), exploring symbols in alphabet order.
    """
    bound = g.max_state_product
    if bound > state_cap:
        raise StateCapError(f"grammar needs up to {bound} configurations, cap is {state_cap}")
    forbidden = tuple(g.forbidden_sorted)
    V = len(g.alphabet)
    start = (0,) * len(forbidden)
    DEAD = None

    ids: dict = {start: 0}
    order: list = [start]
    queue = deque([start])
    rows: dict = {}
    while queue:
        vec = queue.popleft()
        row = []
        for sym in range(V):
            if vec is DEAD:
                nxt = DEAD
            else:
                nxt = tuple(p + 1 if f[p] == sym else p for p, f in zip(vec, forbidden))
                if any(p == len(f) for p, f in zip(nxt, forbidden)):
                    nxt = DEAD
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            row.append(ids[nxt])
        rows[vec] = tuple(row)
    transition = tuple(rows[v] for v in order)
    return PiecewiseDfa(
        grammar=g,
        forbidden=forbidden,
        transition=transition,
        progress=tuple(order),
        dead_state=ids[DEAD],
    )


def accepts(dfa: PiecewiseDfa, w: Word) -> bool:
    return dfa.run(w) != dfa.dead_state


class LengthCountTable:
    """``counts[s][r]``: number of valid continuations of length ``r`` from state ``s``.

    Counts are Python ints, so they stay exact at V**500 scale. The table grows
    on demand via :meth:`extend`; entries already computed never change.
    """

    def __init__(self, dfa: PiecewiseDfa, max_length: int = 0):
        self.dfa = dfa
        self.classes = [dfa.out_classes(s) for s in range(dfa.state_count)]
        self.counts: list[list[int]] = [
            [0 if s == dfa.dead_state else 1] for s in range(dfa.state_count)
        ]
        self.extend(max_length)

    @property
    def max_length(self) -> int:
        return len(self.counts[0]) - 1

    def extend(self, max_length: int) -> None:
        counts = self.counts
        for r in range(self.max_length + 1, max_length + 1):
            prev = [c[r - 1] for c in counts]
            for s, classes in enumerate(self.classes):
                counts[s].append(sum(len(syms) * prev[t] for t, syms in classes))

    def __getitem__(self, key: tuple[int, int]) -> int:
        state, length = key
        if length > self.max_length:
            self.extend(length)
        return self.counts[state][length]


def count_valid(dfa: PiecewiseDfa, length: int, table: Optional[LengthCountTable] = None) -> int:
    """Exact number of valid strings of exactly ``length`` symbols."""
    if length < 0:
        raise ValueError("length must be non-negative")
    if table is None:
        table = LengthCountTable(dfa, length)
    return table[dfa.initial, length]


def sample_uniform(
    dfa: PiecewiseDfa,
    length: int,
    rng: random.Random,
    table: Optional[LengthCountTable] = None,
) -> tuple[int, ...]:
    """Draw one valid string of ``length`` symbols, exactly uniformly.

    One integer ``u`` is drawn uniformly from ``[0, counts[initial][length])``
    and unranked: at each step the block of the next symbol has size
    ``counts[next][r - 1]``, and the residual ``u`` stays uniform on
    ``[0, counts[next][r - 1])``, which is the same law as choosing each
    symbol with probability ``counts[next][r-1] / counts[s][r]``.
    """
    if table is None:
        table = LengthCountTable(dfa, length)
    elif table.max_length < length:
        table.extend(length)
    counts = table.counts
    state = dfa.initial
    total = counts[state][length]
    if total == 0:
        raise EmptyLanguageError(f"no valid strings of length {length}")
    u = rng.randrange(total)
    out = []
    classes = table.classes
    for r in range(length, 0, -1):
        for target, syms in classes[state]:
            w = counts[target][r - 1]
            block = w * len(syms)
            if u < block:
                q, u = divmod(u, w)
                out.append(syms[q])
                state = target
                break
            u -= block
        else:  # pragma: no cover - counts are consistent by construction
            raise AssertionError("rank exceeded table total")
    return tuple(out)


__all__ = [
    "DEFAULT_STATE_CAP",
    "EmptyLanguageError",
    "LengthCountTable",
    "PiecewiseDfa",
    "StateCapError",
    "UnknownSymbolError",
    "accepts",
    "compile_grammar",
    "count_valid",
    "sample_uniform",
]
