"""Hierarchical best-first subgoal search.

One engine runs five planner strategies over a ``ComponentBundle``:

``longest-first``
    Every node is queued once per generator distance with key ``(k, value)``
    in lexicographic order, and an entry with key ``(k, v)`` is expanded by
    the ``k``-generator only.  Long subgoals are tried first and shorter ones
    only when the long ones stop producing valid nodes.
``mixsubs``
    Key is the value alone; an extracted node is expanded by all generators.
``strongest-first``
    Key is the value alone; the node is expanded by its longest generator not
    used yet and re-queued while unused generators remain.
``iterative-mixing``
    One value-ordered queue per generator; a round-robin schedule of
    ``(generator_index, iterations)`` blocks picks the queue to pop.
``bestfs``
    The generator returns all one-step successors, which are valid by
    construction, so verification is skipped.

Budget accounting: every component call increments exactly one of the four
call counters and ``graph_size`` once, so ``graph_size`` counts evaluation
events (a state evaluated twice counts twice).  ``max_nodes`` bounds accepted
nodes, root included; ``graph_size_cap`` is checked before each extraction.
"""

from __future__ import annotations

import heapq
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from itertools import count as _counter
from typing import Callable, Mapping

from .components.base import ComponentBundle

STRATEGIES = ("longest-first", "strongest-first", "mixsubs", "iterative-mixing", "bestfs")


class ConfigError(ValueError):
    pass


class Status(str, Enum):
    SOLVED = "Solved"
    BUDGET_EXHAUSTED = "BudgetExhausted"
    QUEUE_EMPTY = "QueueEmpty"
    VERIFIER_FALSE_POSITIVE = "VerifierFalsePositive"

    def __str__(self):
        return self.value


@dataclass
class PlannerConfig:
    """Planner settings.

    ``max_nodes`` is the cap on accepted subgoal nodes and ``step_limits``
    maps each distance to its low-level rollout limit (defaults to ``k``).
    ``t_hi``/``t_lo`` gate the verifier: ``(0, 1)`` disables it (every
    candidate is checked by rollout) and ``t_hi == 0`` accepts every
    candidate without a check.
    """

    strategy: str = "longest-first"
    generator_distances: tuple[int, ...] = (4, 3, 2)
    subgoals_per_generator: int | Mapping[int, int] = 1
    max_nodes: int = 5000
    step_limits: Mapping[int, int] | None = None
    t_hi: float = 1.0
    t_lo: float = 0.0
    iteration_schedule: tuple[tuple[int, int], ...] | None = None
    graph_size_cap: int | None = None
    record_trace: bool = False

    def __post_init__(self):
        self.generator_distances = tuple(self.generator_distances)
        if self.iteration_schedule is not None:
            self.iteration_schedule = tuple(tuple(x) for x in self.iteration_schedule)

    def validate(self) -> "PlannerConfig":
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        ks = self.generator_distances
        if not ks or any(not isinstance(k, int) or k < 1 for k in ks):
            raise ConfigError("generator distances must be positive integers")
        if list(ks) != sorted(set(ks), reverse=True):
            raise ConfigError(f"generator distances must be strictly descending, got {ks}")
        if self.strategy == "bestfs" and ks != (1,):
            raise ConfigError("bestfs uses the one-step successor generator; set generator_distances=(1,)")
        if not (0.0 <= self.t_lo <= self.t_hi <= 1.0):
            raise ConfigError(f"need 0 <= t_lo <= t_hi <= 1, got t_lo={self.t_lo}, t_hi={self.t_hi}")
        for k in ks:
            if self.step_limit(k) < k:
                raise ConfigError(f"step limit for k={k} is {self.step_limit(k)} < k")
            if self.count(k) < 1:
                raise ConfigError(f"subgoal count for k={k} must be >= 1")
        if self.max_nodes < 1:
            raise ConfigError("max_nodes must be >= 1")
        if self.graph_size_cap is not None and self.graph_size_cap < 0:
            raise ConfigError("graph_size_cap must be non-negative")
        if (self.strategy == "iterative-mixing") != (self.iteration_schedule is not None):
            raise ConfigError("iteration_schedule is required exactly for strategy iterative-mixing")
        if self.iteration_schedule is not None:
            if not self.iteration_schedule:
                raise ConfigError("iteration_schedule must not be empty")
            for gi, n in self.iteration_schedule:
                if not 0 <= gi < len(ks) or n < 1:
                    raise ConfigError(f"bad iteration_schedule block {(gi, n)}")
        return self

    def step_limit(self, k: int) -> int:
        if self.step_limits is None:
            return k
        return int(self.step_limits.get(k, k))

    def count(self, k: int) -> int:
        if isinstance(self.subgoals_per_generator, Mapping):
            return int(self.subgoals_per_generator.get(k, 1))
        return int(self.subgoals_per_generator)

    @property
    def verification_mode(self) -> str:
        """``"rollout"`` (verifier unused), ``"accept"`` (verifier skipped,
        everything accepted) or ``"gated"``."""
        if self.strategy == "bestfs":
            return "successor"
        if self.t_lo <= 0.0 and self.t_hi >= 1.0:
            return "rollout"
        if self.t_hi <= 0.0:
            return "accept"
        return "gated"

    def replace(self, **kw) -> "PlannerConfig":
        return replace(self, **kw)


@dataclass
class SearchStats:
    generator_calls: int = 0
    verifier_calls: int = 0
    policy_calls: int = 0
    value_calls: int = 0
    high_level_nodes: int = 0
    graph_size: int = 0
    false_positives: int = 0
    expansions: int = 0
    reconstruction_policy_calls: int = 0

    @property
    def total_calls(self) -> int:
        return self.generator_calls + self.verifier_calls + self.policy_calls + self.value_calls

    def copy(self) -> "SearchStats":
        return replace(self)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveOutcome:
    status: Status
    action_path: list = field(default_factory=list)
    subgoal_chain: list = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats)
    stop_reason: str = ""
    trace: list | None = None
    budget_snapshots: dict = field(default_factory=dict)
    node_states: set | None = None

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED

    def at_budget(self, budget: int) -> tuple[Status, SearchStats]:
        """Status and stats a run capped at ``graph_size_cap=budget`` returns.

        Only budgets passed to ``solve(..., budgets=...)`` are tracked."""
        snap = self.budget_snapshots.get(budget)
        if snap is not None:
            return snap
        return self.status, self.stats


# -- low-level primitives --------------------------------------------------------

def run_cllp(s0, subgoal, policy, model, step_limit: int, stats: SearchStats | None = None):
    """Goal-conditioned rollout from ``s0`` towards ``subgoal``.

    Returns the action list on reaching ``subgoal`` (``[]`` if ``s0`` already
    is the subgoal) and ``None`` when the limit runs out or the policy
    proposes an illegal action.
    """
    if step_limit < 1:
        raise ValueError("step_limit must be >= 1")
    if s0 == subgoal:
        return []
    s = s0
    path = []
    for _ in range(step_limit):
        a = policy.predict(s, subgoal)
        if stats is not None:
            stats.policy_calls += 1
            stats.graph_size += 1
        if not model.is_legal_action(s, a):
            return None
        s = model.next_state(s, a)
        path.append(a)
        if s == subgoal:
            return path
    return None


def _gate(s, s_prime, components, config: PlannerConfig, stats: SearchStats, k: int, model):
    """Returns ``(accepted, rollout_path_or_None, decided_by_rollout)``."""
    mode = config.verification_mode
    if mode == "accept":
        return True, None, False
    if mode == "gated":
        score = components.verifier.score(s, s_prime)
        stats.verifier_calls += 1
        stats.graph_size += 1
        if score > config.t_hi:
            return True, None, False
        if score < config.t_lo:
            return False, None, False
    path = run_cllp(s, s_prime, components.policy, model, config.step_limit(k), stats)
    return path is not None, path, True


def verify_subgoal(s, s_prime, components: ComponentBundle, config: PlannerConfig,
                   stats: SearchStats, k: int, model) -> bool:
    """Verifier gating with rollout fallback for a candidate from the ``k``-generator."""
    return _gate(s, s_prime, components, config, stats, k, model)[0]


class ParentCycleError(RuntimeError):
    pass


def _walk_links(goal_state, parents: Mapping):
    links = []
    s = goal_state
    visited = {s}
    while s in parents:
        p = parents[s]
        if p in visited:
            raise ParentCycleError("cycle in parents mapping")
        visited.add(p)
        links.append((p, s))
        s = p
    return links


def reconstruct_low_level_path(goal_state, parents: Mapping, policy, model, config: PlannerConfig,
                               stats: SearchStats | None = None, link_distance: Mapping | None = None,
                               known_paths: Mapping | None = None):
    """Fill the subgoal chain ending at ``goal_state`` with low-level actions.

    Links are rolled out goal to root; segments already known from the
    search (``known_paths[child]``) are reused.  Returns ``None`` as soon as a
    link cannot be rolled out, i.e. the verifier accepted an unreachable
    subgoal.
    """
    path, _ = _reconstruct(goal_state, parents, policy, model, config, stats, link_distance, known_paths)
    return path


def _reconstruct(goal_state, parents, policy, model, config, stats, link_distance, known_paths):
    segments = []
    for parent, child in _walk_links(goal_state, parents):
        seg = known_paths.get(child) if known_paths is not None else None
        if seg is None:
            k = link_distance[child] if link_distance is not None else max(config.generator_distances)
            before = stats.policy_calls if stats is not None else 0
            seg = run_cllp(parent, child, policy, model, config.step_limit(k), stats)
            if stats is not None:
                stats.reconstruction_policy_calls += stats.policy_calls - before
            if seg is None:
                return None, child
            if known_paths is not None:
                known_paths[child] = seg
        segments.append(seg)
    out = []
    for seg in reversed(segments):
        out.extend(seg)
    return out, None


# -- planner ------------------------------------------------------------------------

class _Node:
    __slots__ = ("state", "parent", "k", "value", "children", "alive", "next_gen")

    def __init__(self, state, parent, k, value):
        self.state = state
        self.parent = parent
        self.k = k
        self.value = value
        self.children = []
        self.alive = True
        self.next_gen = 0


class _Search:
    def __init__(self, s0, components, config, model, budgets, on_rollout_check):
        self.components = components
        self.config = config
        self.model = model
        self.ks = config.generator_distances
        self.stats = SearchStats()
        self.trace = [] if config.record_trace else None
        self.budgets = sorted(set(budgets))
        self.snapshots: dict = {}
        self.on_rollout_check = on_rollout_check
        self.tick = _counter()
        self.parents: dict = {}
        self.link_k: dict = {}
        self.paths: dict = {}
        self.seen: dict = {}
        self.broken: set = set()
        n_heaps = len(self.ks) if config.strategy == "iterative-mixing" else 1
        self.heaps = [[] for _ in range(n_heaps)]
        self.block = 0
        self.block_used = 0
        self.root = self._add_node(s0, None, None)

    # bookkeeping

    def _value(self, state) -> float:
        self.stats.value_calls += 1
        self.stats.graph_size += 1
        return float(self.components.value.value(state))

    def _push(self, heap_id, key, node):
        tick = next(self.tick)
        neg = tuple(-x for x in key) + (-tick,)
        heapq.heappush(self.heaps[heap_id], (neg, node))
        if self.trace is not None:
            self.trace.append(("push", heap_id, key + (tick,), node.state))

    def _pop(self, heap_id):
        neg, node = heapq.heappop(self.heaps[heap_id])
        key = tuple(-x for x in neg)
        if self.trace is not None:
            self.trace.append(("pop", heap_id, key, node.state))
        return key, node

    def _add_node(self, state, parent, k, path=None):
        v = None
        node = _Node(state, parent, k, None)
        self.seen[state] = node
        self.stats.high_level_nodes += 1
        if parent is not None:
            parent.children.append(node)
            self.parents[state] = parent.state
            self.link_k[state] = k
            if path is not None:
                self.paths[state] = path
        v = self._value(state)
        node.value = v
        strategy = self.config.strategy
        if strategy == "longest-first":
            for kk in self.ks:
                self._push(0, (kk, v), node)
        elif strategy == "iterative-mixing":
            for gi in range(len(self.ks)):
                self._push(gi, (v,), node)
        else:
            self._push(0, (v,), node)
        return node

    def _kill_subtree(self, node):
        stack = [node]
        while stack:
            n = stack.pop()
            n.alive = False
            if self.seen.get(n.state) is n:
                del self.seen[n.state]
                self.parents.pop(n.state, None)
                self.link_k.pop(n.state, None)
                self.paths.pop(n.state, None)
            stack.extend(n.children)
        if node.parent is not None:
            node.parent.children.remove(node)

    def _snapshot_budgets(self):
        g = self.stats.graph_size
        while self.budgets and self.budgets[0] <= g:
            b = self.budgets.pop(0)
            self.snapshots[b] = (self._stopped_status(Status.BUDGET_EXHAUSTED), self.stats.copy())

    def _stopped_status(self, status):
        if self.stats.false_positives:
            return Status.VERIFIER_FALSE_POSITIVE
        return status

    # selection

    def _select(self):
        """Next (node, generator distances) to expand, or None when out of queue."""
        strategy = self.config.strategy
        if strategy == "iterative-mixing":
            return self._select_iterative()
        heap = self.heaps[0]
        while heap:
            key, node = self._pop(0)
            if not node.alive:
                continue
            if strategy == "longest-first":
                return node, (key[0],)
            if strategy == "mixsubs":
                return node, self.ks
            if strategy == "bestfs":
                return node, (1,)
            # strongest-first
            k = self.ks[node.next_gen]
            node.next_gen += 1
            if node.next_gen < len(self.ks):
                self._push(0, (node.value,), node)
            return node, (k,)
        return None

    def _select_iterative(self):
        schedule = self.config.iteration_schedule
        for _ in range(len(schedule)):
            gi, n_iter = schedule[self.block]
            heap = self.heaps[gi]
            while heap:
                _, node = self._pop(gi)
                if node.alive:
                    self.block_used += 1
                    if self.block_used >= n_iter:
                        self.block = (self.block + 1) % len(schedule)
                        self.block_used = 0
                    return node, (self.ks[gi],)
            self.block = (self.block + 1) % len(schedule)
            self.block_used = 0
        return None

    # expansion

    def _candidates(self, node, ks):
        stats = self.stats
        out = []
        if self.config.strategy == "bestfs":
            stats.generator_calls += 1
            stats.graph_size += 1
            s = node.state
            for a in self.model.legal_actions(s):
                out.append((self.model.next_state(s, a), 1, [a]))
            return out
        for k in ks:
            gen = self.components.generators[k]
            cands = gen.generate(node.state, self.config.count(k))
            stats.generator_calls += 1
            stats.graph_size += 1
            out.extend((c, k, None) for c in cands)
        return out

    def _expand(self, node, ks):
        """Returns a SolveOutcome-ready (path, chain) on success, "stop" when the
        node cap is hit, else None."""
        stats = self.stats
        stats.expansions += 1
        s = node.state
        bestfs = self.config.strategy == "bestfs"
        for cand, k, known in self._candidates(node, ks):
            if cand == s or cand in self.seen or (s, cand) in self.broken:
                continue
            if stats.high_level_nodes >= self.config.max_nodes:
                return "stop"
            if bestfs:
                path = known
            else:
                ok, path, by_rollout = _gate(s, cand, self.components, self.config, stats, k, self.model)
                if by_rollout and self.on_rollout_check is not None:
                    self.on_rollout_check(s, cand, k, ok)
                if not ok:
                    continue
            child = self._add_node(cand, node, k, path)
            if self.model.solved(cand):
                result = self._finish(child)
                if result is not None:
                    return result
                if not node.alive:
                    return None
        return None

    def _finish(self, goal_node):
        path, failed = _reconstruct(goal_node.state, self.parents, self.components.policy, self.model,
                                    self.config, self.stats, self.link_k, self.paths)
        if path is not None:
            chain = []
            n = goal_node
            while n is not None:
                chain.append(n.state)
                n = n.parent
            chain.reverse()
            return path, chain
        self.stats.false_positives += 1
        bad = self.seen[failed]
        self.broken.add((bad.parent.state, bad.state))
        self._kill_subtree(bad)
        return None

    def run(self) -> SolveOutcome:
        cfg = self.config
        stats = self.stats
        while True:
            if stats.high_level_nodes >= cfg.max_nodes:
                return self._outcome(Status.BUDGET_EXHAUSTED, "max_nodes")
            self._snapshot_budgets()
            if cfg.graph_size_cap is not None and stats.graph_size >= cfg.graph_size_cap:
                return self._outcome(Status.BUDGET_EXHAUSTED, "graph_size_cap")
            picked = self._select()
            if picked is None:
                return self._outcome(Status.QUEUE_EMPTY, "queue_empty")
            result = self._expand(*picked)
            if result == "stop":
                return self._outcome(Status.BUDGET_EXHAUSTED, "max_nodes")
            if result is not None:
                path, chain = result
                return self._outcome(Status.SOLVED, "solved", path, chain)

    def _outcome(self, status, reason, path=None, chain=None):
        if status is not Status.SOLVED:
            status = self._stopped_status(status)
        return SolveOutcome(
            status=status,
            action_path=path or [],
            subgoal_chain=chain or [],
            stats=self.stats,
            stop_reason=reason,
            trace=self.trace,
            budget_snapshots=self.snapshots,
            node_states=set(self.seen) if self.trace is not None else None,
        )


def solve(initial_state, components: ComponentBundle, config: PlannerConfig, model, *,
          budgets=(), on_rollout_check: Callable | None = None) -> SolveOutcome:
    """Search from ``initial_state`` until solved or out of budget.

    ``budgets`` lists graph-size caps whose capped-run outcome should be
    recorded on the way (see ``SolveOutcome.at_budget``).
    ``on_rollout_check(state, candidate, k, reachable)`` is called for every
    candidate decided by a low-level rollout.

    When the final path cannot be rebuilt (an accepted subgoal turns out to be
    unreachable), the broken subtree is dropped and the search continues; the
    event is counted in ``stats.false_positives``.
    """
    config.validate()
    if config.strategy != "bestfs":
        missing = set(config.generator_distances) - set(components.generators)
        if missing:
            raise ConfigError(f"bundle has no generator for distances {sorted(missing)}")
    if config.verification_mode == "gated" and components.verifier is None:
        raise ConfigError("verifier thresholds are active but the bundle has no verifier")
    if not model.is_legal_state(initial_state):
        raise ValueError("initial state is not a legal environment state")
    if model.solved(initial_state):
        return SolveOutcome(Status.SOLVED, [], [initial_state], SearchStats(), "solved_at_entry",
                            [] if config.record_trace else None, {},
                            {initial_state} if config.record_trace else None)
    return _Search(initial_state, components, config, model, budgets, on_rollout_check).run()


def validate_outcome(outcome: SolveOutcome, initial_state, model) -> bool:
    """Replay check: the path reaches a solved state and passes every subgoal in order."""
    if not outcome.solved:
        return not outcome.action_path
    chain = list(outcome.subgoal_chain)
    if not chain or chain[0] != initial_state:
        return False
    s = initial_state
    idx = 1
    for a in outcome.action_path:
        if not model.is_legal_action(s, a):
            return False
        s = model.next_state(s, a)
        if idx < len(chain) and s == chain[idx]:
            idx += 1
    return model.solved(s) and idx == len(chain)
