"""Component interfaces consumed by the planner.

Any object with the right methods works; these protocols only document the
contract.  ``ComponentBundle`` groups one generator per subgoal distance with
the policy, value function and (optional) verifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Protocol


class Generator(Protocol):
    k: int

    def generate(self, state, count: int) -> list: ...


class Policy(Protocol):
    def predict(self, state, goal) -> int: ...


class ValueFunction(Protocol):
    def value(self, state) -> float: ...


class Verifier(Protocol):
    def score(self, state, candidate) -> float: ...


@dataclass
class ComponentBundle:
    generators: Mapping[int, Generator]
    policy: Policy
    value: ValueFunction
    verifier: Verifier | None = None
    meta: dict = field(default_factory=dict)

    def with_verifier(self, verifier: Verifier | None) -> "ComponentBundle":
        return ComponentBundle(dict(self.generators), self.policy, self.value, verifier, dict(self.meta))

    def with_generators(self, distances) -> "ComponentBundle":
        return ComponentBundle({k: self.generators[k] for k in distances}, self.policy,
                               self.value, self.verifier, dict(self.meta))


def generate_subgoals(g: Generator, s, count: int) -> list:
    return g.generate(s, count)


def predict_action(p: Policy, s, goal) -> int:
    return p.predict(s, goal)


def predict_value(v: ValueFunction, s) -> float:
    return v.value(s)


def predict_reachability(ver: Verifier, s, s_prime) -> float:
    return ver.score(s, s_prime)


class ConstantVerifier:
    """Returns the same score for every pair; handy for forcing verifier behavior."""

    def __init__(self, score: float):
        self._score = float(score)

    def score(self, state, candidate) -> float:
        return self._score


def distinct_candidates(state, states, count: int) -> list:
    """Drop duplicates and the input state, keep first-seen order, cap at ``count``."""
    out: list = []
    seen: set[Hashable] = {state}
    for s in states:
        if s in seen:
            continue
        seen.add(s)
        out.append(s)
        if len(out) >= count:
            break
    return out
