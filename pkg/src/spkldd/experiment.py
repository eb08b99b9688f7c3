"""Declarative experiment recipes: generate -> flatten -> profile, one CSV per curve."""

from __future__ import annotations

import hashlib
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .automaton import DEFAULT_STATE_CAP
from .generator import LengthPlan, flatten, generate_dataset
from .grammar import SpkGrammar, read_grammar
from .mi import ESTIMATORS, ldd_profile

BUNDLED = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig2_stretch")


class RecipeError(ValueError):
    pass


@dataclass(frozen=True)
class Curve:
    name: str
    grammar_path: Path
    grammar: SpkGrammar
    plan: LengthPlan
    seed: int
    max_distance: int


@dataclass(frozen=True)
class ExperimentRecipe:
    name: str
    seed: int
    estimator: str
    curves: tuple[Curve, ...]
    source: Optional[Path] = None


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("spkldd") / "recipes" / f"{name}.toml"))


def resolve_recipe(ref: str) -> Path:
    """A recipe file path, or the name of a bundled recipe."""
    path = Path(ref)
    if path.exists() or path.suffix:
        return path
    if ref in BUNDLED:
        return bundled_path(ref)
    return path


def _curve_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def load_recipe(path, seed: Optional[int] = None) -> ExperimentRecipe:
    """Parse a TOML recipe; every referenced grammar file is read and validated here."""
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise RecipeError(f"{path}: {exc}") from None
    base_seed = int(data.get("seed", 0) if seed is None else seed)
    estimator = data.get("estimator", "grassberger")
    if estimator not in ESTIMATORS:
        raise RecipeError(f"{path}: unknown estimator {estimator!r}")
    raw_curves = data.get("curves") or []
    if not raw_curves:
        raise RecipeError(f"{path}: recipe defines no [[curves]]")

    grammars: dict[Path, SpkGrammar] = {}
    curves = []
    seen = set()
    for i, raw in enumerate(raw_curves):
        merged = {k: v for k, v in data.items() if k not in ("curves", "name", "description")}
        merged.update(raw)
        try:
            name = raw["name"]
            gpath = (path.parent / merged["grammar"]).resolve()
            lo, hi = int(merged["min_len"]), int(merged["max_len"])
        except KeyError as exc:
            raise RecipeError(f"{path}: curve {i} lacks {exc.args[0]!r}") from None
        if name in seen:
            raise RecipeError(f"{path}: duplicate curve name {name!r}")
        seen.add(name)
        if gpath not in grammars:
            grammars[gpath] = read_grammar(gpath)
        # size keys on the curve win over recipe-level ones; count wins over symbols
        size = raw if ("count" in raw or "symbols" in raw) else data
        if "count" in size:
            plan = LengthPlan(lo, hi, int(size["count"]))
        else:
            plan = LengthPlan.for_size(lo, hi, int(size.get("symbols", 1_000_000)))
        curve_seed = int(raw["seed"]) if "seed" in raw else _curve_seed(base_seed, i)
        max_distance = int(raw.get("max_distance", 4 * hi))
        curves.append(Curve(name, gpath, grammars[gpath], plan, curve_seed, max_distance))
    return ExperimentRecipe(data.get("name", path.stem), base_seed, estimator, tuple(curves), path)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_recipe(
    recipe: ExperimentRecipe,
    out_dir,
    workers: int = 1,
    keep_datasets: bool = False,
    state_cap: int = DEFAULT_STATE_CAP,
    log=None,
) -> list[Path]:
    """Run every curve and move the results into ``out_dir`` only once all succeed.

    Returns the written paths, manifest last.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    try:
        produced = []
        manifest = [f"# recipe: {recipe.name}", f"# seed: {recipe.seed}", f"# estimator: {recipe.estimator}"]
        for curve in recipe.curves:
            if log:
                log(f"[{recipe.name}] {curve.name}: generating {curve.plan.describe()}")
            d = generate_dataset(curve.grammar, curve.plan, curve.seed, workers=workers, state_cap=state_cap)
            corpus = flatten(d)
            if curve.max_distance > len(corpus) - 1:
                raise RecipeError(f"curve {curve.name}: max_distance {curve.max_distance} exceeds corpus length")
            if log:
                log(f"[{recipe.name}] {curve.name}: profiling {len(corpus)} symbols to D={curve.max_distance}")
            profile = ldd_profile(corpus, curve.max_distance, recipe.estimator, workers=workers, corpus_id=curve.name)
            csv_path = staging / f"{curve.name}.csv"
            csv_path.write_text(profile.to_csv(), encoding="utf-8")
            produced.append(csv_path)
            if keep_datasets:
                produced.append(d.write(staging / f"{curve.name}.txt"))
            manifest.append(
                f"# curve {curve.name}: grammar={d.fingerprint} plan={curve.plan.describe()} "
                f"seed={curve.seed} symbols={len(corpus)} max_distance={curve.max_distance}"
            )
        manifest.extend(f"{_sha256(p)}  {p.name}" for p in produced)
        manifest_path = staging / "MANIFEST.txt"
        manifest_path.write_text("\n".join(manifest) + "\n", encoding="utf-8")
        produced.append(manifest_path)

        final = []
        for p in produced:
            target = out_dir / p.name
            os.replace(p, target)
            final.append(target)
        return final
    finally:
        shutil.rmtree(staging, ignore_errors=True)
