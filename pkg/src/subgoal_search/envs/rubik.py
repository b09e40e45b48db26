"""Rubik's Cube in the quarter-turn metric.

A cube state is the 54-character facelet string itself: faces in U, R, F, D,
L, B order, nine facelets per face in row-major order (the usual "URFDLB"
layout), one face letter per facelet as its color.  Strings are hashable and
canonical, so they double as seen-set keys.

Moves are integers 0..11 in the order ``MOVES``; ``m ^ 1`` is the inverse of
``m`` and ``m // 2`` identifies the face.
"""

from __future__ import annotations

import random
from collections import Counter
from functools import lru_cache
from operator import itemgetter

FACES = "URFDLB"
MOVES = ("U", "U'", "D", "D'", "L", "L'", "R", "R'", "F", "F'", "B", "B'")
SOLVED = "".join(f * 9 for f in FACES)
CENTER_INDICES = tuple(9 * i + 4 for i in range(6))
MAX_BFS_DEPTH = 6

_NORMALS = {
    "U": (0, 1, 0), "D": (0, -1, 0),
    "R": (1, 0, 0), "L": (-1, 0, 0),
    "F": (0, 0, 1), "B": (0, 0, -1),
}


class CubeParseError(ValueError):
    pass


def _facelet_position(face: str, row: int, col: int) -> tuple[int, int, int]:
    if face == "U":
        return (col - 1, 1, row - 1)
    if face == "R":
        return (1, 1 - row, 1 - col)
    if face == "F":
        return (col - 1, 1 - row, 1)
    if face == "D":
        return (col - 1, -1, 1 - row)
    if face == "L":
        return (-1, 1 - row, col - 1)
    return (1 - col, 1 - row, -1)  # B


def _geometry():
    geo = []
    for face in FACES:
        for r in range(3):
            for c in range(3):
                geo.append((_facelet_position(face, r, c), _NORMALS[face]))
    return geo


_GEOMETRY = _geometry()


def _rotate_clockwise(axis, v):
    # -90 degrees about the outward axis (clockwise seen from outside the face).
    ax, ay, az = axis
    vx, vy, vz = v
    cross = (ay * vz - az * vy, az * vx - ax * vz, ax * vy - ay * vx)
    dot = ax * vx + ay * vy + az * vz
    return tuple(-cross[i] + axis[i] * dot for i in range(3))


def _face_turn_permutation(face: str) -> tuple[int, ...]:
    axis = _NORMALS[face]
    index_of = {g: i for i, g in enumerate(_GEOMETRY)}
    perm = list(range(54))
    for i, (pos, normal) in enumerate(_GEOMETRY):
        if sum(p * a for p, a in zip(pos, axis)) != 1:
            continue
        dest = index_of[(_rotate_clockwise(axis, pos), _rotate_clockwise(axis, normal))]
        perm[dest] = i
    return tuple(perm)


def _build_move_permutations() -> tuple[tuple[int, ...], ...]:
    perms = []
    for name in MOVES[::2]:
        cw = _face_turn_permutation(name)
        ccw = tuple(cw[cw[cw[i]]] for i in range(54))
        perms.extend([cw, ccw])
    return tuple(perms)


MOVE_PERMUTATIONS = _build_move_permutations()
_GETTERS = tuple(itemgetter(*p) for p in MOVE_PERMUTATIONS)
_join = "".join


def move_face(m: int) -> int:
    return m >> 1


def inverse_move(m: int) -> int:
    return m ^ 1


def next_state(s: str, m: int) -> str:
    return _join(_GETTERS[m](s))


def apply_moves(s: str, moves) -> str:
    for m in moves:
        s = _join(_GETTERS[m](s))
    return s


def solved(s: str) -> bool:
    return s == SOLVED


def parse_moves(text: str) -> list[int]:
    """Parse move notation such as ``"U R' F"``; ``’`` and ``′`` work as primes."""
    out = []
    for tok in text.replace("’", "'").replace("′", "'").split():
        try:
            out.append(MOVES.index(tok))
        except ValueError:
            raise ValueError(f"unknown move {tok!r}") from None
    return out


def format_moves(moves) -> str:
    return " ".join(MOVES[m] for m in moves)


def serialize(s: str) -> str:
    return s


def parse(text: str) -> str:
    text = text.strip()
    if len(text) != 54:
        raise CubeParseError(f"expected 54 facelets, got {len(text)}")
    counts = Counter(text)
    if set(counts) != set(FACES) or any(v != 9 for v in counts.values()):
        raise CubeParseError(f"bad color multiset {dict(counts)}")
    for face, idx in zip(FACES, CENTER_INDICES):
        if text[idx] != face:
            raise CubeParseError(f"center of face {face} is {text[idx]}")
    return text


def scramble(length: int, rng_seed=None) -> tuple[str, list[int]]:
    """Random walk of ``length`` quarter turns from solved.

    Consecutive moves never turn the same face, so a move is never directly
    undone or merged into a half turn.
    """
    if length < 0:
        raise ValueError("scramble length must be non-negative")
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    moves: list[int] = []
    last_face = -1
    for _ in range(length):
        choices = [m for m in range(12) if m >> 1 != last_face]
        m = rng.choice(choices)
        moves.append(m)
        last_face = m >> 1
    return apply_moves(SOLVED, moves), moves


# -- cubie bookkeeping -------------------------------------------------------

def _cubie_groups() -> tuple[tuple[int, ...], ...]:
    by_pos: dict = {}
    for i, (pos, _) in enumerate(_GEOMETRY):
        by_pos.setdefault(pos, []).append(i)
    return tuple(tuple(v) for v in by_pos.values())


CUBIES = _cubie_groups()
_CUBIE_OF = [None] * 54
for _group in CUBIES:
    for _i in _group:
        _CUBIE_OF[_i] = _group
del _group, _i


def _build_cubie_lookup() -> dict:
    # Colors read off any slot, in slot order -> solved index of each sticker.
    from itertools import permutations
    table = {}
    for group in CUBIES:
        by_color = {SOLVED[j]: j for j in group}
        for perm in permutations(by_color):
            table["".join(perm)] = tuple(by_color[c] for c in perm)
    return table


_CUBIE_LOOKUP = _build_cubie_lookup()
_SLOT_READERS = tuple((g, itemgetter(*g) if len(g) > 1 else (lambda s, i=g[0]: (s[i],))) for g in CUBIES)


def sticker_permutation(s: str) -> tuple[int, ...]:
    """``sigma`` with ``s[i] == SOLVED[sigma[i]]`` (which solved sticker sits at i)."""
    sigma = [0] * 54
    lookup = _CUBIE_LOOKUP
    try:
        for group, read in _SLOT_READERS:
            for i, j in zip(group, lookup[_join(read(s))]):
                sigma[i] = j
    except KeyError:
        raise CubeParseError("facelet string is not a physical cube") from None
    return tuple(sigma)


@lru_cache(maxsize=4096)
def _inverse_labels(goal: str) -> tuple[str, ...]:
    # labels[j] = SOLVED[inv_sigma_goal[j]]
    sig_g = sticker_permutation(goal)
    labels = [""] * 54
    for i, j in enumerate(sig_g):
        labels[j] = SOLVED[i]
    return tuple(labels)


def relative_state(s: str, goal: str) -> str:
    """State ``r`` such that the move sequences taking ``s`` to ``goal`` are
    exactly those taking ``r`` to solved."""
    if goal == SOLVED:
        return s
    labels = _inverse_labels(goal)
    return _join([labels[j] for j in sticker_permutation(s)])


def is_legal_state(s) -> bool:
    if not isinstance(s, str):
        return False
    try:
        parse(s)
        sigma = sticker_permutation(s)
    except CubeParseError:
        return False
    return len(set(sigma)) == 54


# -- bounded breadth-first distances ----------------------------------------

class DistanceTable:
    """Exact distance-to-solved for every state within ``depth`` quarter turns."""

    def __init__(self, depth: int = 5):
        self.depth = depth
        dist = {SOLVED: 0}
        frontier = [SOLVED]
        for d in range(1, depth + 1):
            nxt = []
            for s in frontier:
                for g in _GETTERS:
                    t = _join(g(s))
                    if t not in dist:
                        dist[t] = d
                        nxt.append(t)
            frontier = nxt
        self.dist = dist

    def __len__(self):
        return len(self.dist)

    def distance(self, s: str, max_depth: int) -> int | None:
        """Exact distance if at most ``max_depth``; beyond the table this
        searches forward from ``s`` until it meets the table."""
        d = self.dist.get(s)
        if d is not None:
            return d if d <= max_depth else None
        extra = max_depth - self.depth
        if extra <= 0:
            return None
        best = None
        layer = {s}
        seen = {s}
        for j in range(1, extra + 1):
            nxt = set()
            for x in layer:
                for g in _GETTERS:
                    y = _join(g(x))
                    if y in seen:
                        continue
                    seen.add(y)
                    t = self.dist.get(y)
                    if t is not None and (best is None or j + t < best):
                        best = j + t
                    nxt.add(y)
            if best is not None:
                return best if best <= max_depth else None
            layer = nxt
        return None


@lru_cache(maxsize=None)
def distance_table(depth: int = 5) -> DistanceTable:
    return DistanceTable(depth)


def bfs_distance(s: str, max_depth: int = MAX_BFS_DEPTH) -> int | None:
    """Quarter-turn distance from ``s`` to solved, or None beyond ``max_depth``."""
    if max_depth > MAX_BFS_DEPTH:
        raise ValueError(f"max_depth {max_depth} exceeds the supported bound {MAX_BFS_DEPTH}")
    return distance_table(min(5, max_depth)).distance(s, max_depth)


class RubikModel:
    """Environment-model facade over the module functions."""

    name = "rubik"
    action_names = MOVES
    _ALL = tuple(range(12))

    def legal_actions(self, state):
        return self._ALL

    def is_legal_action(self, state, action):
        return 0 <= action < 12

    def next_state(self, state, action):
        return _join(_GETTERS[action](state))

    def solved(self, state):
        return state == SOLVED

    def is_legal_state(self, state):
        return is_legal_state(state)

    def encode(self, state):
        return state

    def decode(self, text):
        return parse(text)

    def __eq__(self, other):
        return isinstance(other, RubikModel)

    def __hash__(self):
        return hash(self.name)
