"""Dataset generation: uniform length bands, shuffling, splits and flat corpora."""

from __future__ import annotations

import datetime as _dt
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .automaton import (
    DEFAULT_STATE_CAP,
    EmptyLanguageError,
    LengthCountTable,
    PiecewiseDfa,
    compile_grammar,
    sample_uniform,
)
from .grammar import GrammarError, SpkGrammar

SPLIT_NAMES = ("train", "valid", "test")


@dataclass(frozen=True)
class LengthPlan:
    """``count`` strings with lengths spread round-robin over ``[min_len, max_len]``."""

    min_len: int
    max_len: int
    count: int

    def __post_init__(self) -> None:
        if not 2 <= self.min_len <= self.max_len:
            raise ValueError(f"need 2 <= min_len <= max_len, got [{self.min_len}, {self.max_len}]")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    @classmethod
    def for_size(cls, min_len: int, max_len: int, symbols: int) -> "LengthPlan":
        """Smallest plan whose total length reaches ``symbols``."""
        span = max_len - min_len + 1
        cycle = sum(range(min_len, max_len + 1))
        full = max(symbols // cycle - 1, 0)
        count, total = full * span, full * cycle
        while total < symbols:
            total += min_len + count % span
            count += 1
        return cls(min_len, max_len, max(count, 1))

    @property
    def span(self) -> int:
        return self.max_len - self.min_len + 1

    def lengths(self) -> list[int]:
        return [self.min_len + i % self.span for i in range(self.count)]

    def describe(self) -> str:
        return f"{self.min_len}..{self.max_len} x {self.count}"

    @classmethod
    def parse(cls, text: str) -> "LengthPlan":
        band, _, count = text.partition(" x ")
        lo, _, hi = band.partition("..")
        return cls(int(lo), int(hi), int(count))


@dataclass(frozen=True)
class Dataset:
    grammar: SpkGrammar
    seed: int
    plan: LengthPlan
    strings: tuple[str, ...]
    part: Optional[str] = None
    version: str = __version__
    created: str = field(default="", compare=False)

    @property
    def fingerprint(self) -> str:
        return self.grammar.fingerprint()

    @property
    def n_symbols(self) -> int:
        return sum(map(len, self.strings))

    def __len__(self) -> int:
        return len(self.strings)

    def header(self) -> list[str]:
        lines = [
            f"grammar: {self.fingerprint}",
            f"seed: {self.seed}",
            f"plan: {self.plan.describe()}",
            f"version: {self.version}",
        ]
        if self.part:
            lines.append(f"part: {self.part}")
        return lines

    def serialize(self) -> str:
        """File contents; the creation timestamp is left out so output is reproducible."""
        out = [f"# {h}" for h in self.header()]
        out.extend(self.strings)
        return "\n".join(out) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.serialize(), encoding="utf-8")
        return path


@dataclass(frozen=True)
class Corpus:
    """A dataset flattened to one id sequence (the input of the MI profiler)."""

    ids: np.ndarray
    symbols: tuple[str, ...]

    @property
    def n_symbols(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return int(self.ids.size)

    def text(self) -> str:
        return "".join(self.symbols[i] for i in self.ids.tolist())

    def reversed(self) -> "Corpus":
        return Corpus(self.ids[::-1].copy(), self.symbols)

    @classmethod
    def from_strings(
        cls,
        strings: Sequence[str],
        symbols: Optional[Sequence[str]] = None,
        separator: Optional[str] = None,
    ) -> "Corpus":
        if symbols is None:
            symbols = sorted(set().union(*map(set, strings))) if strings else []
        symbols = tuple(symbols)
        if separator is not None:
            if separator in symbols:
                raise GrammarError(f"separator {separator!r} collides with an alphabet symbol")
            symbols = symbols + (separator,)
            text = separator.join(strings)
        else:
            text = "".join(strings)
        dtype = np.uint8 if len(symbols) <= 256 else np.uint16
        lut = {s: i for i, s in enumerate(symbols)}
        if all(len(s.encode("utf-8")) == 1 for s in symbols):
            # byte lookup table; -1 marks bytes outside the alphabet
            table = np.full(256, -1, dtype=np.int32)
            for s, i in lut.items():
                table[ord(s)] = i
            mapped = table[np.frombuffer(text.encode("utf-8"), dtype=np.uint8)]
            if mapped.size and int(mapped.min()) < 0:
                bad = sorted(set(text) - set(symbols))
                raise GrammarError(f"symbols outside the alphabet: {''.join(bad)!r}")
            ids = mapped.astype(dtype)
        else:
            try:
                ids = np.fromiter((lut[ch] for ch in text), dtype=dtype, count=len(text))
            except KeyError as exc:
                raise GrammarError(f"symbol {exc.args[0]!r} outside the alphabet") from None
        return cls(ids, symbols)


def _derived_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence(seed, spawn_key=key).generate_state(2, dtype=np.uint64)
    return int(state[0]) << 64 | int(state[1])


def _sample_block(args) -> list[str]:
    dfa, table, seed, start, lengths = args
    alphabet = dfa.grammar.alphabet
    out = []
    for offset, n in enumerate(lengths):
        rng = random.Random(_derived_seed(seed, 0, start + offset))
        out.append(alphabet.decode(sample_uniform(dfa, n, rng, table)))
    return out


def generate_dataset(
    g: SpkGrammar,
    plan: LengthPlan,
    seed: int,
    workers: int = 1,
    state_cap: int = DEFAULT_STATE_CAP,
    dfa: Optional[PiecewiseDfa] = None,
) -> Dataset:
    """Sample ``plan.count`` valid strings uniformly per length, then shuffle.

    String ``i`` draws from a generator seeded by ``(seed, i)``, so the result
    is identical for any ``workers`` value.
    """
    if dfa is None:
        dfa = compile_grammar(g, state_cap)
    table = LengthCountTable(dfa, plan.max_len)
    empty = [n for n in range(plan.min_len, plan.max_len + 1) if table[dfa.initial, n] == 0]
    if empty:
        raise EmptyLanguageError(f"no valid strings of length(s) {empty[:5]} in the band")

    lengths = plan.lengths()
    if workers <= 1 or len(lengths) < 2 * workers:
        strings = _sample_block((dfa, table, seed, 0, lengths))
    else:
        step = math.ceil(len(lengths) / (workers * 4))
        jobs = [(dfa, table, seed, i, lengths[i : i + step]) for i in range(0, len(lengths), step)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            strings = [s for block in pool.map(_sample_block, jobs) for s in block]

    random.Random(_derived_seed(seed, 1)).shuffle(strings)
    return Dataset(
        grammar=g,
        seed=seed,
        plan=plan,
        strings=tuple(strings),
        created=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    )


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Floor each share; the remainder goes to the first (training) split."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("need three positive split fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split fractions must sum to 1, got {sum(fractions)!r}")
    sizes = [math.floor(n * f + 1e-9) for f in fractions]
    sizes[0] += n - sum(sizes)
    if min(sizes) == 0:
        raise ValueError(f"split {sizes} of {n} strings leaves an empty part")
    return sizes


def split_dataset(d: Dataset, fractions: Sequence[float] = (0.8, 0.1, 0.1)) -> tuple[Dataset, Dataset, Dataset]:
    sizes = split_sizes(len(d), fractions)
    parts = []
    start = 0
    for name, size in zip(SPLIT_NAMES, sizes):
        parts.append(
            Dataset(d.grammar, d.seed, d.plan, d.strings[start : start + size], name, d.version, d.created)
        )
        start += size
    return tuple(parts)


def flatten(d: Dataset, separator: Optional[str] = None) -> Corpus:
    """Concatenate the strings in dataset order, optionally with a boundary symbol."""
    return Corpus.from_strings(d.strings, d.grammar.alphabet.symbols, separator)


def read_dataset_file(path) -> tuple[dict[str, str], list[str]]:
    """Header fields (from leading ``# key: value`` lines) and the string lines."""
    header: dict[str, str] = {}
    strings: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n").rstrip("\r")
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            strings.append(line)
    return header, strings


def load_dataset(path, g: SpkGrammar) -> Dataset:
    header, strings = read_dataset_file(path)
    if "grammar" in header and header["grammar"] != g.fingerprint():
        raise GrammarError(f"{path}: dataset was generated from grammar {header['grammar']}, not {g.fingerprint()}")
    plan = LengthPlan.parse(header["plan"])
    return Dataset(
        grammar=g,
        seed=int(header.get("seed", 0)),
        plan=plan,
        strings=tuple(strings),
        part=header.get("part"),
        version=header.get("version", __version__),
    )


__all__ = [
    "Corpus",
    "Dataset",
    "LengthPlan",
    "flatten",
    "generate_dataset",
    "load_dataset",
    "read_dataset_file",
    "split_dataset",
    "split_sizes",
]
