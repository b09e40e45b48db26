"""Environment model protocol shared by the puzzle domains."""

from __future__ import annotations

from typing import Hashable, Protocol, Sequence, TypeVar

State = TypeVar("State", bound=Hashable)


class IllegalActionError(ValueError):
    pass


class EnvironmentModel(Protocol[State]):
    """Deterministic transition model used by the planner and the components.

    States are hashable values; equality of two states is equality of their
    canonical encodings.  Actions are small non-negative integers whose order
    is the deterministic tie-break order used everywhere.
    """

    name: str
    action_names: Sequence[str]

    def legal_actions(self, state: State) -> Sequence[int]: ...

    def is_legal_action(self, state: State, action: int) -> bool: ...

    def next_state(self, state: State, action: int) -> State: ...

    def solved(self, state: State) -> bool: ...

    def is_legal_state(self, state: State) -> bool: ...

    def encode(self, state: State) -> str: ...

    def decode(self, text: str) -> State: ...


def replay(model: EnvironmentModel, state, actions):
    """Fold ``actions`` through ``model.next_state``; illegal steps raise."""
    for a in actions:
        if not model.is_legal_action(state, a):
            raise IllegalActionError(f"action {model.action_names[a]} is illegal")
        state = model.next_state(state, a)
    return state
