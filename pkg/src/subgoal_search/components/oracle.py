"""Ground-truth components backed by exact breadth-first distances.

These are correctness instruments: every answer is derived from exact
distances, and a query outside the precomputed range raises
``OracleRangeError`` instead of guessing.
"""

from __future__ import annotations

from collections import OrderedDict, deque

from ..envs import rubik, sokoban
from .base import ComponentBundle


class OracleRangeError(LookupError):
    pass


class CubeDistances:
    def __init__(self, max_depth: int = 6):
        if max_depth > rubik.MAX_BFS_DEPTH:
            raise ValueError(f"cube oracle supports max_depth <= {rubik.MAX_BFS_DEPTH}")
        self.max_depth = max_depth
        self.pair_depth = max_depth
        self._table = rubik.distance_table(min(5, max_depth))
        self._memo: dict[str, int | None] = {}

    def to_solved(self, s: str) -> int:
        d = self._table.dist.get(s)
        if d is None:
            if s in self._memo:
                d = self._memo[s]
            else:
                d = self._table.distance(s, self.max_depth)
                self._memo[s] = d
        if d is None or d > self.max_depth:
            raise OracleRangeError(f"state is farther than {self.max_depth} moves from solved")
        return d

    def try_to_solved(self, s: str) -> int | None:
        try:
            return self.to_solved(s)
        except OracleRangeError:
            return None

    def between(self, s: str, goal: str, limit: int) -> int | None:
        if s == goal:
            return 0
        if limit > self.max_depth:
            raise OracleRangeError(f"pair limit {limit} exceeds oracle depth {self.max_depth}")
        r = rubik.relative_state(s, goal)
        d = self.try_to_solved(r)
        if d is None or d > limit:
            return None
        return d

    def action_distances(self, s: str, goal: str) -> list[int | None]:
        r = rubik.relative_state(s, goal)
        return [self.try_to_solved(rubik.next_state(r, m)) for m in range(12)]

    def key(self, s: str) -> str:
        return s


class SokobanDistances:
    """Distances on Sokoban levels, computed lazily per level.

    ``to_solved`` uses a backward search from every solved configuration of
    the level; ``between`` uses a backward search from the goal board bounded
    by ``pair_depth``.  Both are memoized.  When the backward search completes
    without hitting ``max_depth``, a board missing from it is provably dead and
    gets distance ``DEAD``; otherwise a missing board is out of range.
    """

    DEAD = 10**6

    def __init__(self, max_depth: int = 200, pair_depth: int = 12, cache_size: int = 4096):
        self.max_depth = max_depth
        self.pair_depth = pair_depth
        self._levels: dict = {}
        self._truncated: dict = {}
        self._balls: OrderedDict = OrderedDict()
        self._cache_size = cache_size

    def _level_table(self, level: sokoban.Level) -> dict:
        table = self._levels.get(level)
        if table is not None:
            return table
        table = {}
        queue = deque()
        truncated = False
        boxes = level.targets
        for cell in sorted(level.floor):
            if cell in boxes:
                continue
            b = sokoban.Board(level, cell, boxes)
            table[b] = 0
            queue.append(b)
        while queue:
            b = queue.popleft()
            d = table[b]
            if d >= self.max_depth:
                truncated = True
                continue
            for prev, _ in sokoban.predecessors(b):
                if prev not in table:
                    table[prev] = d + 1
                    queue.append(prev)
        self._levels[level] = table
        self._truncated[level] = truncated
        return table

    def to_solved(self, b: sokoban.Board) -> int:
        d = self._level_table(b.level).get(b)
        if d is None:
            if self._truncated[b.level]:
                raise OracleRangeError(f"board is farther than {self.max_depth} steps or unsolvable")
            return self.DEAD
        return d

    def try_to_solved(self, b) -> int | None:
        d = self._level_table(b.level).get(b)
        if d is None and not self._truncated[b.level]:
            return self.DEAD
        return d

    def _ball(self, goal: sokoban.Board) -> dict:
        ball = self._balls.get(goal)
        if ball is not None:
            self._balls.move_to_end(goal)
            return ball
        ball = {goal: 0}
        frontier = [goal]
        for d in range(1, self.pair_depth + 1):
            nxt = []
            for b in frontier:
                for prev, _ in sokoban.predecessors(b):
                    if prev not in ball:
                        ball[prev] = d
                        nxt.append(prev)
            frontier = nxt
        self._balls[goal] = ball
        if len(self._balls) > self._cache_size:
            self._balls.popitem(last=False)
        return ball

    def between(self, s, goal, limit: int) -> int | None:
        if s == goal:
            return 0
        if limit > self.pair_depth:
            raise OracleRangeError(f"pair limit {limit} exceeds oracle pair depth {self.pair_depth}")
        d = self._ball(goal).get(s)
        return d if d is not None and d <= limit else None

    def action_distances(self, s, goal) -> list[int | None]:
        ball = self._ball(goal)
        out: list[int | None] = [None] * 4
        for a in sokoban.legal_actions(s):
            out[a] = ball.get(sokoban.next_state(s, a))
        return out

    def key(self, b) -> str:
        return sokoban.serialize_xsb(b)


class OracleValue:
    def __init__(self, distances):
        self.distances = distances

    def value(self, state) -> float:
        return float(-self.distances.to_solved(state))


class OracleGenerator:
    """Every state exactly ``k`` steps closer to solved along shortest paths
    (or the solved states themselves when fewer than ``k`` steps remain),
    truncated in canonical-encoding order."""

    def __init__(self, model, distances, k: int):
        self.model = model
        self.distances = distances
        self.k = k

    def generate(self, state, count: int) -> list:
        if count <= 0:
            return []
        dist = self.distances
        d = dist.to_solved(state)
        if d >= getattr(dist, "DEAD", float("inf")):
            return []
        steps = min(self.k, d)
        layer = {state}
        for level in range(steps):
            want = d - level - 1
            nxt = set()
            for x in layer:
                for a in self.model.legal_actions(x):
                    y = self.model.next_state(x, a)
                    if y not in nxt and dist.try_to_solved(y) == want:
                        nxt.add(y)
            layer = nxt
        layer.discard(state)
        return sorted(layer, key=dist.key)[:count]


class OraclePolicy:
    """Legal action minimizing the exact distance to the goal; ties go to the
    lowest action index."""

    def __init__(self, model, distances):
        self.model = model
        self.distances = distances

    def predict(self, state, goal) -> int:
        dists = self.distances.action_distances(state, goal)
        best, best_d = None, None
        for a in self.model.legal_actions(state):
            d = dists[a]
            if d is not None and (best_d is None or d < best_d):
                best, best_d = a, d
        if best is None:
            raise OracleRangeError("goal is outside the oracle's pair range")
        return best


class OracleVerifier:
    """1.0 when the oracle policy reaches the candidate within ``step_limit``.

    The oracle policy descends the exact distance every step, so it
    succeeds exactly when the pair distance is at most the limit.
    """

    def __init__(self, distances, step_limit: int):
        self.distances = distances
        self.step_limit = step_limit

    def score(self, state, candidate) -> float:
        return 1.0 if self.distances.between(state, candidate, self.step_limit) is not None else 0.0


def distances_for(model, max_depth: int, pair_depth: int | None = None):
    if model.name == "rubik":
        return CubeDistances(max_depth)
    if model.name == "sokoban":
        return SokobanDistances(max_depth, pair_depth or 12)
    raise ValueError(f"no oracle for environment {model.name!r}")


def build_oracle_bundle(model, max_depth: int, distances, verifier_step_limit: int | None = None,
                        pair_depth: int | None = None) -> ComponentBundle:
    distances = list(distances)
    backend = distances_for(model, max_depth, pair_depth or max(max(distances), verifier_step_limit or 0))
    limit = verifier_step_limit if verifier_step_limit is not None else max(distances)
    return ComponentBundle(
        generators={k: OracleGenerator(model, backend, k) for k in distances},
        policy=OraclePolicy(model, backend),
        value=OracleValue(backend),
        verifier=OracleVerifier(backend, limit),
        meta={"kind": "oracle", "backend": backend},
    )
