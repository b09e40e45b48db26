"""Experiment runner: instances x strategies x budgets, success curves and
per-component call tables.

Each (instance, strategy) pair is solved once at the largest budget.  The
outcome at every smaller budget in the grid is read from snapshots the
planner takes when its graph size first reaches that budget, which is exactly
what an independent run capped at that budget would return.  Success rates
are therefore monotone in the budget by construction.

``results.csv`` holds every deterministic field and is byte-identical across
reruns; wall-clock times go to ``timings.csv``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import multiprocessing as mp
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist

from .components.base import ComponentBundle
from .components.oracle import build_oracle_bundle
from .envs import get_model, rubik, sokoban
from .search import ConfigError, PlannerConfig, SearchStats, Status, solve, validate_outcome

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("instance", "strategy", "budget", "status", "solved", "graph_size", "high_level_nodes",
                  "generator_calls", "verifier_calls", "policy_calls", "value_calls", "false_positives",
                  "path_length")
CURVE_SCHEMA = "# subgoal-search/success-curve v1"
CALLS_SCHEMA = "# subgoal-search/call-counts v1"

_RUBIK_PRESETS = {
    "adasubs": dict(strategy="longest-first", generator_distances=(4, 3, 2), t_hi=0.995, t_lo=0.0005),
    "adasubs-noverifier": dict(strategy="longest-first", generator_distances=(4, 3, 2), t_hi=1.0, t_lo=0.0),
    "ksubs": dict(strategy="longest-first", generator_distances=(4,), subgoals_per_generator=3,
                  t_hi=1.0, t_lo=0.0),
    "mixsubs": dict(strategy="mixsubs", generator_distances=(4, 3), t_hi=0.995, t_lo=0.0005),
    "strongest-first": dict(strategy="strongest-first", generator_distances=(4, 3, 2), t_hi=0.995, t_lo=0.0005),
    "iterative-mixing": dict(strategy="iterative-mixing", generator_distances=(4, 3, 2), t_hi=0.995,
                             t_lo=0.0005, iteration_schedule=((0, 2), (1, 1), (2, 1))),
    "bestfs": dict(strategy="bestfs", generator_distances=(1,)),
}

_SOKOBAN_C2 = {8: 10, 4: 6, 2: 4}
_SOKOBAN_PRESETS = {
    "adasubs": dict(strategy="longest-first", generator_distances=(8, 4, 2), step_limits=_SOKOBAN_C2,
                    t_hi=0.99, t_lo=0.1),
    "adasubs-noverifier": dict(strategy="longest-first", generator_distances=(8, 4, 2),
                               step_limits=_SOKOBAN_C2, t_hi=1.0, t_lo=0.0),
    "ksubs": dict(strategy="longest-first", generator_distances=(8,), subgoals_per_generator=4,
                  step_limits={8: 10}, t_hi=1.0, t_lo=0.0),
    "mixsubs": dict(strategy="mixsubs", generator_distances=(8, 4, 2), step_limits=_SOKOBAN_C2,
                    t_hi=0.99, t_lo=0.1),
    "strongest-first": dict(strategy="strongest-first", generator_distances=(8, 4, 2),
                            step_limits=_SOKOBAN_C2, t_hi=0.99, t_lo=0.1),
    "iterative-mixing": dict(strategy="iterative-mixing", generator_distances=(8, 4, 2),
                             step_limits=_SOKOBAN_C2, t_hi=0.99, t_lo=0.1,
                             iteration_schedule=((0, 2), (1, 1), (2, 1))),
    "bestfs": dict(strategy="bestfs", generator_distances=(1,)),
}

PRESETS = {"rubik": _RUBIK_PRESETS, "sokoban": _SOKOBAN_PRESETS}


def preset(env: str, name: str, **overrides) -> PlannerConfig:
    """Planner settings used for the named method in the given domain."""
    try:
        base = dict(PRESETS[env][name])
    except KeyError:
        raise ConfigError(f"no preset {name!r} for environment {env!r}") from None
    base.setdefault("max_nodes", 5000)
    base.update(overrides)
    return PlannerConfig(**base).validate()


@dataclass
class ExperimentConfig:
    env: str = "rubik"
    strategies: list = field(default_factory=lambda: ["adasubs", "ksubs", "mixsubs", "bestfs"])
    planner: dict = field(default_factory=dict)
    strategy_overrides: dict = field(default_factory=dict)
    n_instances: int = 100
    scramble_len: int = 5
    corpus: str | None = None
    budgets: list = field(default_factory=lambda: [250, 500, 1000, 2000, 5000])
    seed: int = 0
    bundle: str = "oracle"
    oracle_depth: int = 6
    oracle_pair_depth: int = 10
    train: dict = field(default_factory=dict)
    output_dir: str = "runs/default"
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        return cls(**d)

    def validate(self) -> "ExperimentConfig":
        if self.env not in PRESETS:
            raise ConfigError(f"unknown environment {self.env!r}")
        if self.n_instances < 1:
            raise ConfigError("n_instances must be >= 1")
        b = list(self.budgets)
        if not b or any(x <= 0 for x in b) or any(y <= x for x, y in zip(b, b[1:])):
            raise ConfigError(f"budget grid must be positive and strictly increasing, got {b}")
        if not self.strategies or len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("strategies must be a non-empty list of distinct names")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        configs = [self.planner_config(name) for name in self.strategies]
        if self.env == "rubik" and self.bundle == "oracle":
            # best-first also evaluates successors one move beyond the start
            reach = self.scramble_len + any(c.strategy == "bestfs" for c in configs)
            if reach > self.oracle_depth:
                raise ConfigError(f"the depth-{self.oracle_depth} cube oracle cannot score states {reach} moves "
                                  f"from solved; lower scramble_len or use a learned bundle")
        return self

    def planner_config(self, name: str) -> PlannerConfig:
        over = dict(self.strategy_overrides.get(name, {}))
        base = over.pop("preset", name)
        merged = {**self.planner, **over}
        for key in ("generator_distances", "iteration_schedule"):
            if merged.get(key) is not None:
                merged[key] = tuple(tuple(x) if isinstance(x, list) else x for x in merged[key])
        if "step_limits" in merged and merged["step_limits"] is not None:
            merged["step_limits"] = {int(k): int(v) for k, v in merged["step_limits"].items()}
        if isinstance(merged.get("subgoals_per_generator"), dict):
            merged["subgoals_per_generator"] = {int(k): int(v) for k, v in merged["subgoals_per_generator"].items()}
        try:
            cfg = preset(self.env, base, **merged)
        except TypeError as e:
            raise ConfigError(f"strategy {name!r}: {e}") from None
        return cfg.replace(graph_size_cap=max(self.budgets))

    def identity(self) -> dict:
        """Fields that determine the results (used to guard resumed runs)."""
        d = asdict(self)
        d.pop("workers")
        d.pop("output_dir")
        return d


@dataclass
class RunRecord:
    instance: str
    strategy: str
    budget: int
    status: str
    stats: SearchStats
    path_length: int = 0
    wall_time: float = 0.0

    @property
    def solved(self) -> bool:
        return self.status == Status.SOLVED.value

    def row(self) -> list:
        s = self.stats
        return [self.instance, self.strategy, self.budget, self.status, int(self.solved), s.graph_size,
                s.high_level_nodes, s.generator_calls, s.verifier_calls, s.policy_calls, s.value_calls,
                s.false_positives, self.path_length]

    @classmethod
    def from_row(cls, r: dict) -> "RunRecord":
        stats = SearchStats(int(r["generator_calls"]), int(r["verifier_calls"]), int(r["policy_calls"]),
                            int(r["value_calls"]), int(r["high_level_nodes"]), int(r["graph_size"]),
                            int(r["false_positives"]))
        return cls(r["instance"], r["strategy"], int(r["budget"]), r["status"], stats, int(r["path_length"]))


# -- instances and bundles ---------------------------------------------------------

def make_instances(cfg: ExperimentConfig) -> list:
    if cfg.env == "rubik":
        out = []
        for i in range(cfg.n_instances):
            state, _ = rubik.scramble(cfg.scramble_len, random.Random(f"{cfg.seed}:{cfg.scramble_len}:{i}"))
            out.append((f"r{cfg.scramble_len}-{i:04d}", state))
        return out
    if cfg.corpus:
        boards = sokoban.load_corpus(cfg.corpus)
    else:
        from .training import load_corpus_default
        boards = load_corpus_default()
    if cfg.n_instances > len(boards):
        raise ConfigError(f"corpus has {len(boards)} boards, {cfg.n_instances} requested")
    return [(f"s-{i:04d}", b) for i, b in enumerate(boards[:cfg.n_instances])]


def make_bundle(cfg: ExperimentConfig) -> ComponentBundle:
    model = get_model(cfg.env)
    if cfg.bundle == "oracle":
        ks = set()
        limit = 1
        for name in cfg.strategies:
            pc = cfg.planner_config(name)
            if pc.strategy != "bestfs":
                ks.update(pc.generator_distances)
                limit = max(limit, *(pc.step_limit(k) for k in pc.generator_distances))
        ks = sorted(ks or {1}, reverse=True)
        depth = cfg.oracle_depth if cfg.env == "rubik" else 200
        pair = min(limit, cfg.oracle_depth) if cfg.env == "rubik" else max(limit, cfg.oracle_pair_depth)
        return build_oracle_bundle(model, depth, ks, verifier_step_limit=pair, pair_depth=pair)
    if cfg.bundle == "train":
        from .training import TrainConfig, train_bundle
        tc = TrainConfig(env=cfg.env, **cfg.train)
        return train_bundle(tc).bundle
    from .components.persistence import load_bundle
    path = Path(cfg.bundle)
    if not (path / "manifest.json").exists():
        raise ConfigError(f"bundle directory {path} has no manifest.json")
    return load_bundle(path)


# -- running -------------------------------------------------------------------------

def solve_instance(iid: str, state, bundle: ComponentBundle, cfg: ExperimentConfig, model) -> tuple[list, list]:
    records, timings = [], []
    for name in cfg.strategies:
        pc = cfg.planner_config(name)
        b = bundle if pc.strategy == "bestfs" else bundle.with_generators(pc.generator_distances)
        t0 = time.perf_counter()
        out = solve(state, b, pc, model, budgets=cfg.budgets)
        wall = time.perf_counter() - t0
        if out.solved and not validate_outcome(out, state, model):
            raise RuntimeError(f"{iid}/{name}: solved outcome failed replay validation")
        for budget in cfg.budgets:
            status, stats = out.at_budget(budget)
            plen = len(out.action_path) if status is Status.SOLVED else 0
            records.append(RunRecord(iid, name, budget, status.value, stats.copy(), plen, wall))
        timings.append((iid, name, wall))
    return records, timings


_WORKER: dict = {}


def _init_worker(bundle, cfg):
    _WORKER.update(bundle=bundle, cfg=cfg, model=get_model(cfg.env))


def _work(item):
    iid, state = item
    return solve_instance(iid, state, _WORKER["bundle"], _WORKER["cfg"], _WORKER["model"])


def _read_results(path: Path) -> list:
    with open(path, newline="") as fh:
        return [RunRecord.from_row(r) for r in csv.DictReader(fh)]


def write_results(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in records:
            w.writerow(r.row())


def run_experiment(cfg: ExperimentConfig, bundle: ComponentBundle | None = None,
                   output_dir=None) -> list[RunRecord]:
    """Run or resume the experiment; writes ``results.csv``, ``timings.csv``
    and ``config.json`` into the output directory."""
    cfg.validate()
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = get_model(cfg.env)
    results, timings_path, cfg_path = out / "results.csv", out / "timings.csv", out / "config.json"
    ident = json.dumps(cfg.identity(), sort_keys=True, indent=1)
    done: list = []
    if results.exists():
        if not cfg_path.exists() or cfg_path.read_text() != ident + "\n":
            raise ConfigError(f"{out} holds results of a different configuration")
        want = len(cfg.budgets)
        groups: dict = {}
        for r in _read_results(results):
            groups.setdefault((r.instance, r.strategy), []).append(r)
        done = [r for g in groups.values() if len(g) == want for r in g]
    cfg_path.write_text(ident + "\n")
    instances = make_instances(cfg)
    pairs = {(r.instance, r.strategy) for r in done}
    done_ids = {r.instance for r in done if all((r.instance, s) in pairs for s in cfg.strategies)}
    keep = [r for r in done if r.instance in done_ids]
    write_results(results, keep)
    if not timings_path.exists():
        timings_path.write_text("instance,strategy,wall_time_s\n")
    todo = [(iid, s) for iid, s in instances if iid not in done_ids]
    if todo and bundle is None:
        bundle = make_bundle(cfg)
    records = list(keep)
    with open(results, "a", newline="") as fr, open(timings_path, "a", newline="") as ft:
        wr = csv.writer(fr, lineterminator="\n")
        wt = csv.writer(ft, lineterminator="\n")
        if cfg.workers > 1 and len(todo) > 1:
            ctx = mp.get_context("fork")
            with ctx.Pool(cfg.workers, initializer=_init_worker, initargs=(bundle, cfg)) as pool:
                stream = pool.imap(_work, todo)
                _drain(stream, records, wr, wt, fr, ft)
        else:
            stream = (solve_instance(iid, s, bundle, cfg, model) for iid, s in todo)
            _drain(stream, records, wr, wt, fr, ft)
    order = {iid: i for i, (iid, _) in enumerate(instances)}
    spos = {s: i for i, s in enumerate(cfg.strategies)}
    records.sort(key=lambda r: (order[r.instance], spos[r.strategy], r.budget))
    return records


def _drain(stream, records, wr, wt, fr, ft):
    for recs, times in stream:
        for r in recs:
            wr.writerow(r.row())
        for iid, name, wall in times:
            wt.writerow([iid, name, f"{wall:.6f}"])
        fr.flush()
        ft.flush()
        records.extend(recs)


# -- reporting -----------------------------------------------------------------------

_Z95 = NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("n must be positive")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def compute_success_curve(records, strategy: str) -> list[tuple[int, float, float, float]]:
    """``(budget, rate, ci_lo, ci_hi)`` per budget with 95% Wilson intervals."""
    by_budget: dict = {}
    for r in records:
        if r.strategy == strategy:
            by_budget.setdefault(r.budget, []).append(r.solved)
    out = []
    for b in sorted(by_budget):
        flags = by_budget[b]
        k, n = sum(flags), len(flags)
        lo, hi = wilson_interval(k, n)
        out.append((b, k / n, lo, hi))
    return out


CALL_ROWS = ("Generator calls", "Verifier calls", "Policy calls", "Value calls", "Total calls")


def call_count_table(records, per_episodes: int = 1000, budget: int | None = None) -> dict:
    """Per-strategy component calls normalised to ``per_episodes`` episodes.

    Uses each strategy's records at ``budget`` (default: the largest one).
    Returns ``{row label: {strategy: value}}`` with a ``Total calls`` row.
    """
    strategies: list = []
    sums: dict = {}
    counts: dict = {}
    if budget is None and records:
        budget = max(r.budget for r in records)
    for r in records:
        if r.budget != budget:
            continue
        if r.strategy not in sums:
            strategies.append(r.strategy)
            sums[r.strategy] = [0, 0, 0, 0]
            counts[r.strategy] = 0
        s = r.stats
        acc = sums[r.strategy]
        acc[0] += s.generator_calls
        acc[1] += s.verifier_calls
        acc[2] += s.policy_calls
        acc[3] += s.value_calls
        counts[r.strategy] += 1
    table = {label: {} for label in CALL_ROWS}
    for name in strategies:
        scale = per_episodes / counts[name]
        vals = [v * scale for v in sums[name]]
        for label, v in zip(CALL_ROWS, vals + [sum(vals)]):
            table[label][name] = v
    return table


def _num(x) -> str:
    return repr(float(x))


def emit_plot_data(curves: dict, path) -> Path:
    """One CSV with columns strategy, budget, rate, ci_lo, ci_hi."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(CURVE_SCHEMA + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "budget", "rate", "ci_lo", "ci_hi"])
        for name in curves:
            for b, rate, lo, hi in curves[name]:
                w.writerow([name, b, _num(rate), _num(lo), _num(hi)])
    return path


def write_call_table(table: dict, path) -> Path:
    path = Path(path)
    strategies = list(next(iter(table.values())).keys()) if table else []
    with open(path, "w", newline="") as fh:
        fh.write(CALLS_SCHEMA + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["calls"] + strategies)
        for label, row in table.items():
            w.writerow([label] + [_num(row[s]) for s in strategies])
    return path


def load_results(path) -> list[RunRecord]:
    return _read_results(Path(path))
