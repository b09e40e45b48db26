"""Offline training data: trajectories, subgoal/policy/value samples and the
rollout-labelled verifier dataset.

File formats (JSON lines, first line is a header object):

``trajectories`` v1
    header ``{"format": "subgoal-search/trajectories", "version": 1, "env": ...}``;
    one record per trajectory ``{"id", "states": [encoded...], "actions": [...]}``.
``verifier-samples`` v1
    header ``{"format": "subgoal-search/verifier-samples", "version": 1, "env": ...}``;
    one record per sample ``{"instance", "start", "candidate", "label", "k", "step_limit"}``.

States are encoded with the environment model (cube facelet string, XSB text).
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .envs import rubik, sokoban
from .search import PlannerConfig, run_cllp, solve

log = logging.getLogger(__name__)

TRAJECTORY_FORMAT = "subgoal-search/trajectories"
VERIFIER_FORMAT = "subgoal-search/verifier-samples"
FORMAT_VERSION = 1


@dataclass
class Trajectory:
    states: list
    actions: list
    source: str = ""

    def __len__(self):
        return len(self.actions)

    def is_consistent(self, model) -> bool:
        if len(self.states) != len(self.actions) + 1:
            return False
        for s, a, t in zip(self.states, self.actions, self.states[1:]):
            if not model.is_legal_action(s, a) or model.next_state(s, a) != t:
                return False
        return model.solved(self.states[-1])


@dataclass
class VerifierSample:
    start: object
    candidate: object
    label: bool
    source_instance: str
    k: int
    step_limit: int


def gen_rubik_trajectories(n: int, scramble_len: int = 20, seed=0) -> list[Trajectory]:
    """Reversed random walks: from the scrambled cube back to solved."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    out = []
    for i in range(n):
        _, moves = rubik.scramble(scramble_len, rng)
        walk = [rubik.SOLVED]
        for m in moves:
            walk.append(rubik.next_state(walk[-1], m))
        states = walk[::-1]
        actions = [rubik.inverse_move(m) for m in reversed(moves)]
        out.append(Trajectory(states, actions, f"rubik-{seed}-{i}"))
    return out


def gen_sokoban_trajectories(corpus, node_limit: int = 200_000) -> list[Trajectory]:
    """One shortest-path trajectory per solvable board; others are skipped."""
    out = []
    for i, board in enumerate(corpus):
        res = sokoban.exhaustive_solve(board, node_limit)
        if res.status != "solved":
            log.info("skipping corpus board %d: %s", i, res.status)
            continue
        if not res.path:
            log.info("skipping corpus board %d: solved at start", i)
            continue
        states = [board]
        for a in res.path:
            states.append(sokoban.next_state(states[-1], a))
        out.append(Trajectory(states, list(res.path), f"sokoban-{i}"))
    return out


def _start_indices(traj: Trajectory, last: int, state_fraction: float, seed, tag: str) -> list[int]:
    idx = list(range(last + 1))
    if state_fraction >= 1.0 or not idx:
        return idx
    rng = random.Random(f"{seed}:{tag}:{traj.source}")
    m = max(1, round(state_fraction * len(idx)))
    return sorted(rng.sample(idx, m))


def build_subgoal_pairs(trajs, k: int, state_fraction: float = 1.0, seed=0) -> list:
    """``(s_i, (a_i, ..., a_{i+k-1}))`` for every ``i <= n - k``."""
    out = []
    for t in trajs:
        n = len(t)
        if n < k:
            continue
        for i in _start_indices(t, n - k, state_fraction, seed, f"sub{k}"):
            out.append((t.states[i], tuple(t.actions[i:i + k])))
    return out


def build_policy_samples(trajs, d_max: int, cap: int | None = None, seed=0,
                         state_fraction: float = 1.0, generator_distances=None) -> list:
    """``((s_i, s_{i+d}), a_i)`` for every ``1 <= d <= d_max``; seeded uniform
    subsample when more than ``cap`` samples exist."""
    if generator_distances and d_max < max(generator_distances):
        raise ValueError(f"d_max={d_max} is below the largest generator distance {max(generator_distances)}")
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    out = []
    for t in trajs:
        n = len(t)
        for i in _start_indices(t, n - 1, state_fraction, seed, "pol"):
            for d in range(1, min(d_max, n - i) + 1):
                out.append(((t.states[i], t.states[i + d]), t.actions[i]))
    return _cap(out, cap, seed)


def build_value_samples(trajs, cap: int | None = None, seed=0, state_fraction: float = 1.0) -> list:
    """``(s_i, i - n)``: minus the number of steps left in the trajectory."""
    out = []
    for t in trajs:
        n = len(t)
        for i in _start_indices(t, n, state_fraction, seed, "val"):
            out.append((t.states[i], float(i - n)))
    return _cap(out, cap, seed)


def _cap(samples: list, cap, seed) -> list:
    if cap is None or len(samples) <= cap:
        return samples
    rng = random.Random(f"{seed}:cap")
    keep = sorted(rng.sample(range(len(samples)), cap))
    return [samples[i] for i in keep]


def split_dataset(items, fraction: float, seed=0) -> tuple[list, list]:
    """Seeded split into two disjoint parts; items keep their original order.

    Pass whole trajectories (or groups) as items so nothing straddles parts.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    items = list(items)
    rng = random.Random(seed)
    order = list(range(len(items)))
    rng.shuffle(order)
    first = set(order[:round(fraction * len(items))])
    part1 = [x for i, x in enumerate(items) if i in first]
    part2 = [x for i, x in enumerate(items) if i not in first]
    return part1, part2


def collect_verifier_dataset(instances, bundle, config: PlannerConfig, model,
                             cap_per_instance: int = 100, seed=0) -> tuple[list, dict]:
    """Run the planner on each ``(instance_id, state)`` with rollout-only
    verification and label every rollout-checked candidate by its outcome.

    Returns the samples (ordered by instance id) and class counts.
    """
    if config.verification_mode != "rollout":
        raise ValueError("verifier data needs t_hi=1 and t_lo=0 so every candidate is rolled out")
    by_instance = []
    for iid, state in instances:
        got = []

        def record(s, c, k, ok, _got=got):
            _got.append((s, c, k, ok))

        if not model.solved(state):
            solve(state, bundle, config, model, on_rollout_check=record)
        if len(got) > cap_per_instance:
            rng = random.Random(f"{seed}:{iid}")
            keep = sorted(rng.sample(range(len(got)), cap_per_instance))
            got = [got[i] for i in keep]
        samples = [VerifierSample(s, c, bool(ok), str(iid), k, config.step_limit(k)) for s, c, k, ok in got]
        by_instance.append((str(iid), samples))
    by_instance.sort(key=lambda x: x[0])
    out = [s for _, group in by_instance for s in group]
    pos = sum(s.label for s in out)
    return out, {"positive": pos, "negative": len(out) - pos, "instances": len(by_instance)}


def relabel(sample: VerifierSample, policy, model) -> bool:
    """Re-run the rollout behind a verifier label."""
    return run_cllp(sample.start, sample.candidate, policy, model, sample.step_limit) is not None


# -- files -------------------------------------------------------------------------

def write_trajectories(path, trajs, model) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"format": TRAJECTORY_FORMAT, "version": FORMAT_VERSION, "env": model.name}) + "\n")
        for t in trajs:
            rec = {"id": t.source, "states": [model.encode(s) for s in t.states], "actions": list(t.actions)}
            fh.write(json.dumps(rec) + "\n")


def read_trajectories(path, model) -> list[Trajectory]:
    lines = Path(path).read_text().splitlines()
    _check_header(lines, TRAJECTORY_FORMAT, model, path)
    out = []
    for line in lines[1:]:
        rec = json.loads(line)
        out.append(Trajectory([model.decode(s) for s in rec["states"]], list(rec["actions"]), rec["id"]))
    return out


def write_verifier_samples(path, samples, model) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"format": VERIFIER_FORMAT, "version": FORMAT_VERSION, "env": model.name}) + "\n")
        for s in samples:
            rec = {"instance": s.source_instance, "start": model.encode(s.start),
                   "candidate": model.encode(s.candidate), "label": s.label, "k": s.k,
                   "step_limit": s.step_limit}
            fh.write(json.dumps(rec) + "\n")


def read_verifier_samples(path, model) -> list[VerifierSample]:
    lines = Path(path).read_text().splitlines()
    _check_header(lines, VERIFIER_FORMAT, model, path)
    out = []
    for line in lines[1:]:
        r = json.loads(line)
        out.append(VerifierSample(model.decode(r["start"]), model.decode(r["candidate"]), bool(r["label"]),
                                  r["instance"], int(r["k"]), int(r["step_limit"])))
    return out


def _check_header(lines, fmt, model, path):
    if not lines:
        raise ValueError(f"{path}: empty dataset file")
    head = json.loads(lines[0])
    if head.get("format") != fmt or head.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: expected {fmt} v{FORMAT_VERSION}, got {head}")
    if head.get("env") != model.name:
        raise ValueError(f"{path}: dataset is for {head.get('env')!r}, not {model.name!r}")
