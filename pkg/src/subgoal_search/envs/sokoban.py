"""Sokoban boards in XSB text form, push dynamics and an exhaustive solver.

Cells are integers ``row * width + col``.  A ``Level`` holds the static part
of a board (walls, targets, geometry); a ``Board`` adds the agent and box
positions.  Boards sharing a level compare and hash on (agent, boxes) only,
which is equivalent to comparing their canonical XSB text.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .base import IllegalActionError

UP, DOWN, LEFT, RIGHT = range(4)
ACTIONS = ("Up", "Down", "Left", "Right")
LURD = "udlr"
_OPPOSITE = (DOWN, UP, RIGHT, LEFT)
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

WALL, FLOOR, TARGET, BOX, BOX_ON_TARGET, AGENT, AGENT_ON_TARGET = "# .$*@+"
_XSB_CHARS = set("# .$*@+")
_ALIASES = {"-": " ", "_": " ", "p": "@", "P": "+", "b": "$", "B": "*"}


class SokobanParseError(ValueError):
    pass


class Level:
    """Static board layout.  Instances are interned, so equal layouts are one object."""

    _interned: dict = {}

    __slots__ = ("width", "height", "walls", "targets", "neighbors", "dead_corners", "floor", "_key")

    def __new__(cls, width: int, height: int, walls: frozenset, targets: frozenset):
        key = (width, height, frozenset(walls), frozenset(targets))
        level = cls._interned.get(key)
        if level is not None:
            return level
        level = super().__new__(cls)
        level.width, level.height, level.walls, level.targets = key
        level._key = key
        level.floor = frozenset(c for c in range(width * height) if c not in level.walls)
        nbrs = []
        for c in range(width * height):
            r, col = divmod(c, width)
            row = []
            for dr, dc in _DELTAS:
                rr, cc = r + dr, col + dc
                n = rr * width + cc
                ok = 0 <= rr < height and 0 <= cc < width and n not in level.walls
                row.append(n if ok else -1)
            nbrs.append(tuple(row))
        level.neighbors = tuple(nbrs)
        dead = set()
        for c in level.floor:
            if c in level.targets:
                continue
            n = level.neighbors[c]
            vertical = n[UP] < 0 or n[DOWN] < 0
            horizontal = n[LEFT] < 0 or n[RIGHT] < 0
            if vertical and horizontal:
                dead.add(c)
        level.dead_corners = frozenset(dead)
        cls._interned[key] = level
        return level

    def __reduce__(self):
        return (Level, (self.width, self.height, self.walls, self.targets))

    def cell(self, row: int, col: int) -> int:
        return row * self.width + col

    def rc(self, cell: int) -> tuple[int, int]:
        return divmod(cell, self.width)


class Board:
    __slots__ = ("level", "agent", "boxes", "_hash")

    def __init__(self, level: Level, agent: int, boxes: frozenset):
        self.level = level
        self.agent = agent
        self.boxes = boxes
        self._hash = hash((agent, boxes))

    @property
    def width(self):
        return self.level.width

    @property
    def height(self):
        return self.level.height

    @property
    def walls(self):
        return self.level.walls

    @property
    def targets(self):
        return self.level.targets

    def __eq__(self, other):
        if not isinstance(other, Board):
            return NotImplemented
        return (self.agent == other.agent and self.boxes == other.boxes
                and self.level is other.level)

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return serialize_xsb(self) < serialize_xsb(other)

    def __reduce__(self):
        return (Board, (self.level, self.agent, self.boxes))

    def __repr__(self):
        return f"Board({serialize_xsb(self)!r})"

    def with_state(self, agent: int, boxes: frozenset) -> "Board":
        return Board(self.level, agent, boxes)


# -- XSB text -----------------------------------------------------------------

def parse_xsb(text: str) -> Board:
    lines = [ln.rstrip() for ln in text.split("\n")]
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise SokobanParseError("empty board")
    height = len(lines)
    width = max(len(ln) for ln in lines)
    walls, targets, boxes, agents = set(), set(), set(), []
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            ch = _ALIASES.get(ch, ch)
            if ch not in _XSB_CHARS:
                raise SokobanParseError(f"unknown character {ch!r} at line {r + 1}, column {c + 1}")
            cell = r * width + c
            if ch == WALL:
                walls.add(cell)
            if ch in ".*+":
                targets.add(cell)
            if ch in "$*":
                boxes.add(cell)
            if ch in "@+":
                agents.append((cell, r, c))
    if len(agents) != 1:
        where = ", ".join(f"line {r + 1}, column {c + 1}" for _, r, c in agents)
        raise SokobanParseError(f"expected exactly one agent, found {len(agents)} ({where})")
    if len(boxes) != len(targets):
        raise SokobanParseError(f"{len(boxes)} boxes but {len(targets)} targets")
    level = Level(width, height, frozenset(walls), frozenset(targets))
    return Board(level, agents[0][0], frozenset(boxes))


def serialize_xsb(b: Board) -> str:
    lv = b.level
    rows = []
    for r in range(lv.height):
        chars = []
        for c in range(lv.width):
            cell = r * lv.width + c
            if cell in lv.walls:
                ch = WALL
            elif cell in b.boxes:
                ch = BOX_ON_TARGET if cell in lv.targets else BOX
            elif cell == b.agent:
                ch = AGENT_ON_TARGET if cell in lv.targets else AGENT
            else:
                ch = TARGET if cell in lv.targets else FLOOR
            chars.append(ch)
        rows.append("".join(chars).rstrip())
    return "\n".join(rows)


def load_corpus(path) -> list[Board]:
    """Boards separated by ``---`` lines; lines starting with ``;`` are comments."""
    return parse_corpus(Path(path).read_text())


def parse_corpus(text: str) -> list[Board]:
    boards, chunk = [], []
    for line in text.split("\n") + ["---"]:
        if line.startswith(";"):
            continue
        if line.strip() == "---":
            if any(ln.strip() for ln in chunk):
                boards.append(parse_xsb("\n".join(chunk)))
            chunk = []
        else:
            chunk.append(line)
    return boards


def dump_corpus(boards: Iterable[Board], header: Iterable[str] = ()) -> str:
    parts = [f"; {h}" for h in header]
    body = "\n---\n".join(serialize_xsb(b) for b in boards)
    return "\n".join(parts + [body]) + "\n"


# -- dynamics -----------------------------------------------------------------

def legal_actions(b: Board) -> list[int]:
    nbrs = b.level.neighbors
    row = nbrs[b.agent]
    boxes = b.boxes
    out = []
    for d in range(4):
        n = row[d]
        if n < 0:
            continue
        if n in boxes:
            n2 = nbrs[n][d]
            if n2 < 0 or n2 in boxes:
                continue
        out.append(d)
    return out


def is_legal_action(b: Board, a: int) -> bool:
    if not 0 <= a < 4:
        return False
    nbrs = b.level.neighbors
    n = nbrs[b.agent][a]
    if n < 0:
        return False
    if n in b.boxes:
        n2 = nbrs[n][a]
        return n2 >= 0 and n2 not in b.boxes
    return True


def next_state(b: Board, a: int) -> Board:
    nbrs = b.level.neighbors
    n = nbrs[b.agent][a] if 0 <= a < 4 else -1
    if n < 0:
        raise IllegalActionError(f"{ACTIONS[a] if 0 <= a < 4 else a} walks into a wall")
    boxes = b.boxes
    if n in boxes:
        n2 = nbrs[n][a]
        if n2 < 0 or n2 in boxes:
            raise IllegalActionError(f"push {ACTIONS[a]} is blocked")
        boxes = (boxes - {n}) | {n2}
    return Board(b.level, n, boxes)


def predecessors(b: Board) -> Iterator[tuple[Board, int]]:
    """All ``(prev, a)`` with ``next_state(prev, a) == b``."""
    nbrs = b.level.neighbors
    for a in range(4):
        prev = nbrs[b.agent][_OPPOSITE[a]]
        if prev < 0 or prev in b.boxes:
            continue
        yield Board(b.level, prev, b.boxes), a
        front = nbrs[b.agent][a]
        if front >= 0 and front in b.boxes:
            boxes = (b.boxes - {front}) | {b.agent}
            yield Board(b.level, prev, boxes), a


def solved(b: Board) -> bool:
    return b.boxes == b.level.targets


def is_legal_state(b) -> bool:
    if not isinstance(b, Board):
        return False
    lv = b.level
    return (len(b.boxes) == len(lv.targets)
            and b.agent in lv.floor and b.agent not in b.boxes
            and all(x in lv.floor for x in b.boxes))


def has_corner_deadlock(b: Board) -> bool:
    return not b.boxes.isdisjoint(b.level.dead_corners)


# -- exhaustive solver -----------------------------------------------------------

@dataclass
class ExhaustiveResult:
    path: list[int] | None
    status: str  # "solved" | "unsolvable" | "limit"
    expanded: int = 0


def exhaustive_solve(b: Board, node_limit: int = 200_000, prune_corners: bool = True) -> ExhaustiveResult:
    """Breadth-first search over (agent, boxes); returns a shortest action path.

    With ``prune_corners`` a push that leaves a box in a non-target corner is
    discarded (such a box can never move again).
    """
    if solved(b):
        return ExhaustiveResult([], "solved", 0)
    level = b.level
    dead = level.dead_corners if prune_corners else frozenset()
    if not b.boxes.isdisjoint(dead):
        return ExhaustiveResult(None, "unsolvable", 0)
    nbrs = level.neighbors
    targets = level.targets
    start = (b.agent, b.boxes)
    parent = {start: None}
    queue = deque([start])
    expanded = 0
    while queue:
        if expanded >= node_limit:
            return ExhaustiveResult(None, "limit", expanded)
        key = queue.popleft()
        expanded += 1
        agent, boxes = key
        row = nbrs[agent]
        for a in range(4):
            n = row[a]
            if n < 0:
                continue
            nboxes = boxes
            if n in boxes:
                n2 = nbrs[n][a]
                if n2 < 0 or n2 in boxes or n2 in dead:
                    continue
                nboxes = (boxes - {n}) | {n2}
            child = (n, nboxes)
            if child in parent:
                continue
            parent[child] = (key, a)
            if nboxes == targets:
                path = []
                cur = child
                while parent[cur] is not None:
                    cur, act = parent[cur]
                    path.append(act)
                path.reverse()
                return ExhaustiveResult(path, "solved", expanded)
            queue.append(child)
    return ExhaustiveResult(None, "unsolvable", expanded)


def format_actions(actions) -> str:
    return "".join(LURD[a] for a in actions)


def parse_actions(text: str) -> list[int]:
    return [LURD.index(ch.lower()) for ch in text.strip()]


class SokobanModel:
    name = "sokoban"
    action_names = ACTIONS

    def legal_actions(self, state):
        return legal_actions(state)

    def is_legal_action(self, state, action):
        return is_legal_action(state, action)

    def next_state(self, state, action):
        return next_state(state, action)

    def solved(self, state):
        return state.boxes == state.level.targets

    def is_legal_state(self, state):
        return is_legal_state(state)

    def encode(self, state):
        return serialize_xsb(state)

    def decode(self, text):
        return parse_xsb(text)

    def __eq__(self, other):
        return isinstance(other, SokobanModel)

    def __hash__(self):
        return hash(self.name)
