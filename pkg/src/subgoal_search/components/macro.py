"""Macro-table subgoal generators mined from fixed-length action sequences."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field


@dataclass
class MacroParams:
    max_macros_per_key: int = 8
    global_size: int = 64


@dataclass
class MacroTable:
    k: int
    entries: dict = field(default_factory=dict)      # key -> [(seq, count), ...]
    global_list: list = field(default_factory=list)  # [(seq, count), ...]
    params: MacroParams = field(default_factory=MacroParams)

    def ranked(self, key) -> list:
        return self.entries.get(key, [])

    def distinct_macros(self) -> set:
        out = {seq for seq, _ in self.global_list}
        for lst in self.entries.values():
            out.update(seq for seq, _ in lst)
        return out


def _rank(counter: Counter, cap: int) -> list:
    items = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
    return items[:cap]


def train_macro_generator(dataset, k: int, params: MacroParams | None = None, key_fn=None) -> MacroTable:
    """Count the length-``k`` action sequences seen from each feature key.

    ``dataset`` holds ``(state, sequence)`` pairs; ``key_fn`` maps a state to
    its table key (default: the state itself).  Lists are ranked by
    descending count, ties by the sequence in lexicographic order.
    """
    params = params or MacroParams()
    key_fn = key_fn or (lambda s: s)
    per_key: dict = defaultdict(Counter)
    total: Counter = Counter()
    for state, seq in dataset:
        seq = tuple(seq)
        if len(seq) != k:
            raise ValueError(f"macro sequence of length {len(seq)} in a k={k} dataset")
        per_key[key_fn(state)][seq] += 1
        total[seq] += 1
    entries = {key: _rank(c, params.max_macros_per_key) for key, c in per_key.items()}
    return MacroTable(k, entries, _rank(total, params.global_size), params)


class MacroGenerator:
    """Applies ranked macros for the state's key, then the global list, and
    returns the first ``count`` distinct resulting states."""

    def __init__(self, table: MacroTable, model, key_fn=None):
        self.table = table
        self.k = table.k
        self.model = model
        self.key_fn = key_fn or (lambda s: s)

    def generate(self, state, count: int) -> list:
        out: list = []
        seen = {state}
        model = self.model
        for seq, _ in self.table.ranked(self.key_fn(state)) + self.table.global_list:
            if len(out) >= count:
                break
            s = state
            for a in seq:
                if not model.is_legal_action(s, a):
                    s = None
                    break
                s = model.next_state(s, a)
            if s is None or s in seen:
                continue
            seen.add(s)
            out.append(s)
        return out
