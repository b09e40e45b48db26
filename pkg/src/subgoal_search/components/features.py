"""Hashed sparse features for the linear models and macro-table keys.

Every feature is a (namespace, parts...) tuple joined with ``\\x1f`` and hashed
with CRC-32 into ``DIM = 2**18`` buckets, so indices are identical across
processes and Python versions.  A feature vector is a ``SparseFeatures`` pair
of index tuple and value tuple (``None`` means all ones).

Cube
    value: one feature per cubie slot naming the cubie and orientation found
    there.  pair (policy/verifier): the same cubie features computed on the
    relative state ``r`` (moves solving ``r`` are the moves taking ``s`` to
    the goal), plus ``(position, color_s, color_goal)`` for every facelet where
    the two states differ and a bucket of the number of differing facelets.
Sokoban
    value: count of boxes off target, per-box bucketed distance to the nearest
    target, a dead-corner flag and agent-to-box distance.  pair: agent
    displacement, positions of boxes that move relative to the agent, the
    agent's 3x3 neighborhood and the number of moved boxes.
"""

from __future__ import annotations

import zlib
from operator import itemgetter
from typing import NamedTuple

from ..envs import rubik, sokoban

DIM = 1 << 18


def feature_index(namespace: str, *parts) -> int:
    key = "\x1f".join((namespace,) + tuple(str(p) for p in parts))
    return zlib.crc32(key.encode("utf-8")) & (DIM - 1)


class SparseFeatures(NamedTuple):
    indices: tuple
    values: tuple | None = None


# -- cube ----------------------------------------------------------------------

_SLOTS = tuple(g for g in rubik.CUBIES if len(g) > 1)
_SLOT_GETTERS = tuple(itemgetter(*g) for g in _SLOTS)


class _Memo(dict):
    def __init__(self, namespace):
        super().__init__()
        self.namespace = namespace

    def __missing__(self, key):
        v = feature_index(self.namespace, *key)
        self[key] = v
        return v


_CUBIE_MEMO = {ns: _Memo(ns) for ns in ("cube.cubie", "cube.rel")}
_XOR_MEMO = _Memo("cube.xor")
_NDIFF = tuple(feature_index("cube.ndiff", i) for i in range(55))


def _cubie_indices(s: str, namespace: str) -> list:
    memo = _CUBIE_MEMO[namespace]
    return [memo[(slot, "".join(get(s)))] for slot, get in enumerate(_SLOT_GETTERS)]


def cube_state_features(s: str) -> SparseFeatures:
    return SparseFeatures(tuple(_cubie_indices(s, "cube.cubie")))


def cube_pair_features(s: str, goal: str) -> SparseFeatures:
    r = rubik.relative_state(s, goal)
    idx = _cubie_indices(r, "cube.rel")
    ndiff = 0
    for p in range(54):
        a, b = s[p], goal[p]
        if a != b:
            ndiff += 1
            idx.append(_XOR_MEMO[(p, a, b)])
    idx.append(_NDIFF[ndiff])
    return SparseFeatures(tuple(idx))


def cube_macro_key(s: str) -> str:
    return s


# -- sokoban ---------------------------------------------------------------------

def _clip(x: int, lo: int = -3, hi: int = 3) -> int:
    return lo if x < lo else hi if x > hi else x


def _target_distances(level: sokoban.Level) -> dict:
    cache = _TARGET_DIST.get(level)
    if cache is None:
        ts = [level.rc(t) for t in level.targets]
        cache = {}
        for c in level.floor:
            r, col = level.rc(c)
            cache[c] = min((abs(r - tr) + abs(col - tc) for tr, tc in ts), default=0)
        _TARGET_DIST[level] = cache
    return cache


_TARGET_DIST: dict = {}


def sokoban_state_features(b: sokoban.Board) -> SparseFeatures:
    level = b.level
    tdist = _target_distances(level)
    idx, val = [], []
    off = [x for x in b.boxes if x not in level.targets]
    idx.append(feature_index("sk.off", len(off)))
    val.append(1.0)
    for x in off:
        idx.append(feature_index("sk.boxdist", min(tdist[x], 8)))
        val.append(1.0)
    if not b.boxes.isdisjoint(level.dead_corners):
        idx.append(feature_index("sk.dead"))
        val.append(1.0)
    if off:
        ar, ac = level.rc(b.agent)
        near = min(abs(ar - r) + abs(ac - c) for r, c in map(level.rc, off))
        idx.append(feature_index("sk.agentbox", min(near, 8)))
        val.append(1.0)
    idx.append(feature_index("sk.totaldist"))
    val.append(float(sum(tdist[x] for x in off)))
    return SparseFeatures(tuple(idx), tuple(val))


def _cell_code(b: sokoban.Board, cell: int) -> str:
    lv = b.level
    if cell < 0 or cell in lv.walls:
        return "#"
    if cell in b.boxes:
        return "*" if cell in lv.targets else "$"
    return "." if cell in lv.targets else " "


def _window(b: sokoban.Board, radius: int) -> list:
    lv = b.level
    ar, ac = lv.rc(b.agent)
    out = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            r, c = ar + dr, ac + dc
            inside = 0 <= r < lv.height and 0 <= c < lv.width
            out.append(_cell_code(b, r * lv.width + c) if inside else "#")
    return out


def sokoban_pair_features(s: sokoban.Board, goal: sokoban.Board) -> SparseFeatures:
    lv = s.level
    ar, ac = lv.rc(s.agent)
    gr, gc = lv.rc(goal.agent)
    dr, dc = gr - ar, gc - ac
    idx = [
        feature_index("sk.ad", _clip(dr), _clip(dc)),
        feature_index("sk.adr", (dr > 0) - (dr < 0)),
        feature_index("sk.adc", (dc > 0) - (dc < 0)),
    ]
    src = s.boxes - goal.boxes
    dst = goal.boxes - s.boxes
    idx.append(feature_index("sk.nmoved", len(src)))
    for x in src:
        r, c = lv.rc(x)
        idx.append(feature_index("sk.bsrc", _clip(r - ar), _clip(c - ac)))
    for x in dst:
        r, c = lv.rc(x)
        idx.append(feature_index("sk.bdst", _clip(r - ar), _clip(c - ac)))
    for i, ch in enumerate(_window(s, 1)):
        idx.append(feature_index("sk.win", i, ch))
    idx.append(feature_index("sk.manh", min(abs(dr) + abs(dc), 12)))
    return SparseFeatures(tuple(idx))


def sokoban_macro_key(b: sokoban.Board) -> str:
    """Agent-centred 5x5 window (XSB-like codes, ``#`` outside the board)."""
    return "".join(_window(b, 2))


FEATURIZERS = {
    "rubik": (cube_state_features, cube_pair_features, cube_macro_key),
    "sokoban": (sokoban_state_features, sokoban_pair_features, sokoban_macro_key),
}


def featurizers(env_name: str):
    try:
        return FEATURIZERS[env_name]
    except KeyError:
        raise ValueError(f"no feature map for environment {env_name!r}") from None
