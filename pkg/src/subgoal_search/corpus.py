"""Generate small Sokoban boards by playing backwards from a solved position.

A room is a walled rectangle with a few random interior walls; targets and a
solved box layout are placed on floor, then the agent walks and pulls boxes
at random.  Every kept board is checked with the exhaustive solver, so the
corpus only contains solvable boards, and its shortest solution length is
recorded.

    python -m subgoal_search.corpus --count 200 --seed 7 -o corpus.xsb
"""

from __future__ import annotations

import argparse
import random
import sys
from collections import deque
from dataclasses import dataclass

from .envs import sokoban


@dataclass
class CorpusParams:
    count: int = 200
    seed: int = 7
    min_size: int = 6
    max_size: int = 8
    max_boxes: int = 3
    wall_prob: float = 0.12
    reverse_steps: int = 200
    min_solution: int = 12
    node_limit: int = 200_000

    def header(self) -> list[str]:
        return [f"{k}={v}" for k, v in vars(self).items()]


def _room(rng: random.Random, h: int, w: int, wall_prob: float):
    walls = set()
    for r in range(h):
        for c in range(w):
            if r in (0, h - 1) or c in (0, w - 1) or rng.random() < wall_prob:
                walls.add(r * w + c)
    floor = [x for x in range(h * w) if x not in walls]
    if not floor:
        return None
    # keep the largest 4-connected floor component
    left = set(floor)
    best = []
    while left:
        start = left.pop()
        comp, queue = [start], deque([start])
        while queue:
            x = queue.popleft()
            r, c = divmod(x, w)
            for y, ok in ((x - w, r > 0), (x + w, r < h - 1), (x - 1, c > 0), (x + 1, c < w - 1)):
                if ok and y in left:
                    left.discard(y)
                    comp.append(y)
                    queue.append(y)
        if len(comp) > len(best):
            best = comp
    walls |= set(floor) - set(best)
    return frozenset(walls), sorted(best)


def _reverse_play(rng: random.Random, board: sokoban.Board, steps: int) -> sokoban.Board:
    b = board
    for _ in range(steps):
        options = list(sokoban.predecessors(b))
        if not options:
            break
        pulls = [p for p, _ in options if p.boxes != b.boxes]
        if pulls and rng.random() < 0.6:
            b = rng.choice(pulls)
        else:
            b = rng.choice(options)[0]
    return b


def generate_corpus(params: CorpusParams) -> list[tuple[sokoban.Board, int]]:
    rng = random.Random(params.seed)
    out, seen = [], set()
    while len(out) < params.count:
        h = rng.randint(params.min_size, params.max_size)
        w = rng.randint(params.min_size, params.max_size)
        room = _room(rng, h, w, params.wall_prob)
        if room is None:
            continue
        walls, floor = room
        n_boxes = rng.randint(1, params.max_boxes)
        if len(floor) < n_boxes + 4:
            continue
        targets = frozenset(rng.sample(floor, n_boxes))
        level = sokoban.Level(w, h, walls, targets)
        agent = rng.choice([x for x in floor if x not in targets])
        start = _reverse_play(rng, sokoban.Board(level, agent, targets), params.reverse_steps)
        if sokoban.solved(start) or sokoban.has_corner_deadlock(start):
            continue
        text = sokoban.serialize_xsb(start)
        if text in seen:
            continue
        res = sokoban.exhaustive_solve(start, params.node_limit)
        if res.status != "solved" or len(res.path) < params.min_solution:
            continue
        seen.add(text)
        out.append((start, len(res.path)))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    defaults = CorpusParams()
    for name, value in vars(defaults).items():
        ap.add_argument("--" + name.replace("_", "-"), type=type(value), default=value)
    ap.add_argument("-o", "--output", default="-")
    args = ap.parse_args(argv)
    params = CorpusParams(**{k: getattr(args, k) for k in vars(defaults)})
    boards = generate_corpus(params)
    header = ["Sokoban corpus generated by subgoal_search.corpus"] + params.header()
    text = sokoban.dump_corpus([b for b, _ in boards], header)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
