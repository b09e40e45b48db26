"""Lossless JSON containers for trained components.

Every file is one JSON object with ``"format": "subgoal-search/model"`` and an
integer ``"version"`` (currently 1).  Floats are written by ``json`` using
their shortest round-trip representation, so a save/load cycle reproduces
the weights bit for bit.

linear::

    {"format", "version", "kind": "linear", "model_kind": "multiclass" | "regression" | "logistic",
     "dim": D, "n_outputs": C, "seed": int, "bias": [C floats],
     "weights": [[index, [C floats]], ...]}          # nonzero rows, ascending index

macro::

    {"format", "version", "kind": "macro", "k": int, "max_macros_per_key": int, "global_size": int,
     "entries": [[key, [[[a1, ..., ak], count], ...]], ...],   # keys ascending
     "global": [[[a1, ..., ak], count], ...]}

A bundle directory holds one file per component plus ``manifest.json``::

    {"format": "subgoal-search/bundle", "version": 1, "env": "rubik" | "sokoban",
     "generators": {"<k>": "generator-<k>.json", ...}, "policy": "policy.json",
     "value": "value.json", "verifier": "verifier.json" | null, "meta": {...}}
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..envs import get_model
from .base import ComponentBundle
from .features import featurizers
from .learned import LearnedPolicy, LearnedValue, LearnedVerifier
from .linear import LinearModel
from .macro import MacroGenerator, MacroParams, MacroTable

MODEL_FORMAT = "subgoal-search/model"
BUNDLE_FORMAT = "subgoal-search/bundle"
VERSION = 1


def linear_to_dict(m: LinearModel) -> dict:
    rows = np.flatnonzero(np.any(m.weights != 0.0, axis=1))
    return {
        "format": MODEL_FORMAT, "version": VERSION, "kind": "linear", "model_kind": m.kind,
        "dim": m.dim, "n_outputs": m.n_outputs, "seed": m.seed,
        "bias": [float(x) for x in m.bias],
        "weights": [[int(i), [float(x) for x in m.weights[i]]] for i in rows],
    }


def linear_from_dict(d: dict) -> LinearModel:
    _check(d, "linear")
    m = LinearModel(d["model_kind"], d["n_outputs"], d["dim"], d["seed"])
    m.bias = np.asarray(d["bias"], dtype=np.float64)
    for i, row in d["weights"]:
        m.weights[i] = row
    return m


def macro_to_dict(t: MacroTable) -> dict:
    return {
        "format": MODEL_FORMAT, "version": VERSION, "kind": "macro", "k": t.k,
        "max_macros_per_key": t.params.max_macros_per_key, "global_size": t.params.global_size,
        "entries": [[key, [[list(seq), c] for seq, c in t.entries[key]]] for key in sorted(t.entries)],
        "global": [[list(seq), c] for seq, c in t.global_list],
    }


def macro_from_dict(d: dict) -> MacroTable:
    _check(d, "macro")
    entries = {key: [(tuple(seq), c) for seq, c in lst] for key, lst in d["entries"]}
    return MacroTable(d["k"], entries, [(tuple(seq), c) for seq, c in d["global"]],
                      MacroParams(d["max_macros_per_key"], d["global_size"]))


def _check(d, kind):
    if d.get("format") != MODEL_FORMAT or d.get("version") != VERSION:
        raise ValueError(f"not a {MODEL_FORMAT} v{VERSION} file")
    if d.get("kind") != kind:
        raise ValueError(f"expected a {kind} model, got {d.get('kind')!r}")


def _dump(obj, path: Path):
    path.write_text(json.dumps(obj, separators=(",", ":")) + "\n")


def save_bundle(bundle: ComponentBundle, env: str, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"format": BUNDLE_FORMAT, "version": VERSION, "env": env, "generators": {},
                "policy": "policy.json", "value": "value.json", "verifier": None,
                "meta": {k: v for k, v in bundle.meta.items() if _jsonable(v)}}
    for k, g in sorted(bundle.generators.items()):
        name = f"generator-{k}.json"
        _dump(macro_to_dict(g.table), out / name)
        manifest["generators"][str(k)] = name
    _dump(linear_to_dict(bundle.policy.linear), out / "policy.json")
    _dump(linear_to_dict(bundle.value.linear), out / "value.json")
    if bundle.verifier is not None:
        _dump(linear_to_dict(bundle.verifier.linear), out / "verifier.json")
        manifest["verifier"] = "verifier.json"
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return out


def load_bundle(directory) -> ComponentBundle:
    root = Path(directory)
    manifest = json.loads((root / "manifest.json").read_text())
    if manifest.get("format") != BUNDLE_FORMAT or manifest.get("version") != VERSION:
        raise ValueError(f"{root}: not a {BUNDLE_FORMAT} v{VERSION} directory")
    model = get_model(manifest["env"])
    key_fn = featurizers(model.name)[2]

    def read(name):
        return json.loads((root / name).read_text())

    gens = {int(k): MacroGenerator(macro_from_dict(read(n)), model, key_fn)
            for k, n in manifest["generators"].items()}
    verifier = None
    if manifest.get("verifier"):
        verifier = LearnedVerifier(linear_from_dict(read(manifest["verifier"])), model)
    return ComponentBundle(gens, LearnedPolicy(linear_from_dict(read(manifest["policy"])), model),
                           LearnedValue(linear_from_dict(read(manifest["value"])), model), verifier,
                           dict(manifest.get("meta", {}), kind="learned"))


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
        return True
    except TypeError:
        return False
