"""Strictly k-piecewise grammars and the subsequence relation.

A grammar is stored by its forbidden k-subsequences; a string belongs to the
language iff none of them occurs in it as a (not necessarily contiguous)
subsequence. The helpers here are deliberately brute force: they serve as the
ground truth that the compiled automaton is checked against.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

Subsequence = tuple[int, ...]
Word = Union[str, Sequence[int]]


class GrammarError(ValueError):
    """Raised for malformed or degenerate grammars."""


class UnknownSymbolError(GrammarError):
    """Raised when a string uses a symbol outside the alphabet."""


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self) -> None:
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise GrammarError("alphabet needs at least two symbols")
        for s in symbols:
            if not isinstance(s, str) or len(s) != 1:
                raise GrammarError(f"symbols must be single characters, got {s!r}")
            if s.isspace() or s == ",":
                raise GrammarError(f"symbol {s!r} is reserved")
        if len(set(symbols)) != len(symbols):
            dup = sorted({s for s in symbols if symbols.count(s) > 1})
            raise GrammarError(f"duplicate alphabet symbols: {''.join(dup)}")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    @classmethod
    def from_string(cls, text: str) -> "Alphabet":
        return cls(tuple(text))

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._index

    def __str__(self) -> str:
        return "".join(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbolError(f"symbol {symbol!r} is not in alphabet {self}") from None

    def encode(self, word: Word) -> Subsequence:
        """Map a string (or an id sequence, which is range-checked) to ids."""
        if isinstance(word, str):
            return tuple(self.index(ch) for ch in word)
        ids = tuple(int(i) for i in word)
        for i in ids:
            if not 0 <= i < len(self.symbols):
                raise UnknownSymbolError(f"symbol id {i} outside 0..{len(self.symbols) - 1}")
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        return "".join(self.symbols[i] for i in ids)


@dataclass(frozen=True)
class SpkGrammar:
    """An SPk grammar over ``alphabet`` given by its forbidden k-subsequences.

    The permissible set is everything else in Sigma^k and is only produced on
    demand, since it grows as V**k while forbidden sets stay small.
    """

    alphabet: Alphabet
    k: int
    forbidden: frozenset[Subsequence]

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 2:
            raise GrammarError(f"k must be an integer >= 2, got {self.k!r}")
        forbidden = frozenset(tuple(f) for f in self.forbidden)
        object.__setattr__(self, "forbidden", forbidden)
        if not forbidden:
            raise GrammarError("an SPk grammar needs at least one forbidden subsequence")
        V = len(self.alphabet)
        for f in forbidden:
            if len(f) != self.k:
                raise GrammarError(
                    f"forbidden entry {self.alphabet.decode(f)!r} has length {len(f)}, expected k={self.k}"
                )
            self.alphabet.encode(f)
        if len(forbidden) >= V**self.k:
            raise GrammarError("forbidden set covers all of Sigma^k; the language would be {lambda}")

    @classmethod
    def from_strings(cls, alphabet: str, k: int, forbidden: Iterable[str]) -> "SpkGrammar":
        """Convenience constructor, e.g. ``SpkGrammar.from_strings("abcd", 2, ["ab"])``."""
        alpha = Alphabet.from_string(alphabet)
        entries = list(forbidden)
        if len(set(entries)) != len(entries):
            raise GrammarError("duplicate forbidden entries")
        return cls(alpha, k, frozenset(alpha.encode(f) for f in entries))

    @property
    def forbidden_sorted(self) -> list[Subsequence]:
        return sorted(self.forbidden)

    @property
    def max_state_product(self) -> int:
        """Upper bound on automaton configurations, prod(|f| + 1)."""
        prod = 1
        for f in self.forbidden:
            prod *= len(f) + 1
        return prod

    def permissible(self) -> Iterator[Subsequence]:
        for u in itertools.product(range(len(self.alphabet)), repeat=self.k):
            if u not in self.forbidden:
                yield u

    def serialize(self) -> str:
        entries = ",".join(self.alphabet.decode(f) for f in self.forbidden_sorted)
        return f"alphabet: {self.alphabet}\nk: {self.k}\nforbidden: {entries}\n"

    def fingerprint(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()[:16]


def parse_grammar(text: str) -> SpkGrammar:
    """Parse the line-oriented grammar format.

    ::

        # comment
        alphabet: abcd
        k: 2
        forbidden: ab,bc
    """
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in ("alphabet", "k", "forbidden"):
            raise GrammarError(f"line {lineno}: expected 'alphabet:', 'k:' or 'forbidden:', got {raw!r}")
        if key in fields:
            raise GrammarError(f"line {lineno}: '{key}' given twice")
        fields[key] = value.strip()
    missing = [key for key in ("alphabet", "k", "forbidden") if key not in fields]
    if missing:
        raise GrammarError(f"missing field(s): {', '.join(missing)}")
    try:
        k = int(fields["k"])
    except ValueError:
        raise GrammarError(f"k must be an integer, got {fields['k']!r}") from None
    entries = [e.strip() for e in fields["forbidden"].split(",")] if fields["forbidden"] else []
    if any(not e for e in entries):
        raise GrammarError("empty forbidden entry")
    return SpkGrammar.from_strings(fields["alphabet"], k, entries)


def read_grammar(path) -> SpkGrammar:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read())


def is_subsequence(v: Sequence[int], w: Sequence[int]) -> bool:
    """True iff ``v`` occurs in ``w`` in order, by greedy leftmost matching."""
    it = iter(w)
    return all(any(x == y for y in it) for x in v)


def subseq_k(w: Sequence[int], k: int) -> set[Subsequence]:
    """All distinct subsequences of ``w`` with length 1..k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    found: set[Subsequence] = set()
    for x in w:
        found |= {u + (x,) for u in found if len(u) < k}
        found.add((x,))
    return found


def oracle_is_valid(g: SpkGrammar, w: Word) -> bool:
    """Brute-force membership: no forbidden entry is a subsequence of ``w``."""
    ids = g.alphabet.encode(w)
    return not any(is_subsequence(f, ids) for f in g.forbidden)
