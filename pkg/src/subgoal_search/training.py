"""End-to-end training of the learned component bundle.

Trajectories are split into D1 and D2.  Generators, policy and value are
fitted on D1; the verifier dataset is collected by running the planner with
rollout-only verification on instances derived from D2, and the verifier is
fitted on it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from . import datagen
from .components.base import ComponentBundle
from .components.features import featurizers
from .components.learned import train_policy, train_value, train_verifier
from .components.linear import LinearParams
from .components.macro import MacroGenerator, MacroParams, train_macro_generator
from .envs import get_model, sokoban
from .search import PlannerConfig

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    env: str = "rubik"
    distances: tuple = (4, 3, 2)
    seed: int = 0
    n_trajectories: int = 10_000
    scramble_len: int = 20
    corpus: list | None = None
    node_limit: int = 200_000
    split_fraction: float = 0.5
    state_fraction: float | None = None
    policy_d_max: int | None = None
    policy_cap: int | None = 100_000
    value_cap: int | None = 100_000
    macro: MacroParams = field(default_factory=MacroParams)
    policy: LinearParams = field(default_factory=LinearParams)
    value: LinearParams = field(default_factory=lambda: LinearParams(epochs=6, learning_rate=0.1))
    verifier: LinearParams = field(default_factory=lambda: LinearParams(epochs=10, learning_rate=0.1))
    train_verifier: bool = True
    verifier_instances: int = 200
    verifier_depth: int = 10
    verifier_cap_per_instance: int = 100
    verifier_planner: PlannerConfig | None = None

    def fraction(self) -> float:
        if self.state_fraction is not None:
            return self.state_fraction
        return 0.15 if self.env == "sokoban" else 1.0


@dataclass
class TrainResult:
    bundle: ComponentBundle
    d1: list
    d2: list
    verifier_samples: list
    verifier_counts: dict


def default_collection_planner(cfg: TrainConfig) -> PlannerConfig:
    ks = tuple(sorted(cfg.distances, reverse=True))
    return PlannerConfig(strategy="longest-first", generator_distances=ks, max_nodes=200,
                         t_hi=1.0, t_lo=0.0, graph_size_cap=2000)


def trajectories_for(cfg: TrainConfig) -> list:
    if cfg.env == "rubik":
        return datagen.gen_rubik_trajectories(cfg.n_trajectories, cfg.scramble_len, cfg.seed)
    if cfg.env == "sokoban":
        if cfg.corpus is None:
            raise ValueError("sokoban training needs a corpus")
        return datagen.gen_sokoban_trajectories(cfg.corpus, cfg.node_limit)
    raise ValueError(f"unknown environment {cfg.env!r}")


def verifier_instances(d2, cfg: TrainConfig) -> list:
    """Rubik: the state ``verifier_depth`` steps before the end of each D2
    trajectory.  Sokoban: the initial board of each D2 trajectory."""
    out = []
    for t in d2[:cfg.verifier_instances]:
        if cfg.env == "rubik":
            i = max(0, len(t) - cfg.verifier_depth)
            out.append((t.source, t.states[i]))
        else:
            out.append((t.source, t.states[0]))
    return out


def fit_generators(d1, cfg: TrainConfig, model) -> dict:
    key_fn = featurizers(model.name)[2]
    gens = {}
    for k in cfg.distances:
        pairs = datagen.build_subgoal_pairs(d1, k, cfg.fraction(), cfg.seed)
        gens[k] = MacroGenerator(train_macro_generator(pairs, k, cfg.macro, key_fn), model, key_fn)
    return gens


def train_bundle(cfg: TrainConfig, trajectories: list | None = None) -> TrainResult:
    model = get_model(cfg.env)
    trajs = trajectories if trajectories is not None else trajectories_for(cfg)
    d1, d2 = datagen.split_dataset(trajs, cfg.split_fraction, cfg.seed)
    log.info("%s: %d trajectories (D1 %d, D2 %d)", cfg.env, len(trajs), len(d1), len(d2))
    d_max = cfg.policy_d_max or max(cfg.distances)
    gens = fit_generators(d1, cfg, model)
    pol = datagen.build_policy_samples(d1, d_max, cfg.policy_cap, cfg.seed, cfg.fraction(), cfg.distances)
    policy = train_policy(pol, model, cfg.policy)
    val = datagen.build_value_samples(d1, cfg.value_cap, cfg.seed, cfg.fraction())
    value = train_value(val, model, cfg.value)
    meta = {"kind": "learned", "env": cfg.env, "seed": cfg.seed, "distances": list(cfg.distances),
            "policy_samples": len(pol), "value_samples": len(val)}
    bundle = ComponentBundle(gens, policy, value, None, meta)
    samples, counts = [], {"positive": 0, "negative": 0, "instances": 0}
    if cfg.train_verifier:
        planner = cfg.verifier_planner or default_collection_planner(cfg)
        samples, counts = datagen.collect_verifier_dataset(
            verifier_instances(d2, cfg), bundle, planner, model, cfg.verifier_cap_per_instance, cfg.seed)
        log.info("verifier data: %s", counts)
        bundle = bundle.with_verifier(train_verifier(samples, model, cfg.verifier))
        bundle.meta.update(verifier_samples=len(samples), verifier_positive=counts["positive"])
    return TrainResult(bundle, d1, d2, samples, counts)


def load_corpus_default() -> list:
    from importlib import resources
    text = resources.files("subgoal_search.data").joinpath("sokoban_corpus.xsb").read_text()
    return sokoban.parse_corpus(text)
