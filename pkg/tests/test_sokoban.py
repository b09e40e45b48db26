import random
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subgoal_search.envs import sokoban as sk
from subgoal_search.envs.base import IllegalActionError, replay

ONE_PUSH = """\
#######
#     #
# @$. #
#     #
#######"""

CORNER = """\
#####
#$  #
#  .#
# @ #
#####"""


def test_parse_tiny_and_symbols():
    b = sk.parse_xsb("###\n#@#\n###")
    assert b.agent == b.level.cell(1, 1) and not b.boxes and sk.solved(b)
    b = sk.parse_xsb("#####\n#@*.#\n#$  #\n#####")
    c = b.level.cell(1, 2)
    assert c in b.boxes and c in b.targets


@pytest.mark.parametrize("text, fragment", [
    ("####\n#@@#\n####", "exactly one agent"),
    ("####\n#  #\n####", "exactly one agent"),
    ("#####\n#@$ #\n#####", "1 boxes but 0 targets"),
    ("####\n#@x#\n####", "line 2, column 3"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(sk.SokobanParseError, match=fragment):
        sk.parse_xsb(text)


def test_round_trip_corpus(corpus):
    for b in corpus:
        text = sk.serialize_xsb(b)
        assert sk.serialize_xsb(sk.parse_xsb(text)) == text
        assert sk.parse_xsb(text) == b


def test_corpus_shape(corpus):
    assert len(corpus) == 200
    for b in corpus:
        assert b.width <= 8 and b.height <= 8 and 1 <= len(b.boxes) <= 3
        assert sk.is_legal_state(b)


def test_moves_and_pushes():
    b = sk.parse_xsb(ONE_PUSH)
    up = sk.next_state(b, sk.UP)
    assert up.boxes == b.boxes and up.agent == b.agent - b.width
    pushed = sk.next_state(b, sk.RIGHT)
    assert pushed.agent == b.agent + 1 and pushed.boxes == frozenset({b.agent + 2})
    assert sk.solved(pushed)


def test_legal_actions_examples():
    assert sk.legal_actions(sk.parse_xsb("#####\n## ##\n##@##\n#####")) == [sk.UP]
    blocked = sk.parse_xsb("#####\n#@$##\n#  .#\n#####")
    assert sk.RIGHT not in sk.legal_actions(blocked)
    with pytest.raises(IllegalActionError):
        sk.next_state(blocked, sk.RIGHT)
    with pytest.raises(IllegalActionError):
        sk.next_state(blocked, sk.UP)
    assert sk.legal_actions(sk.parse_xsb("#####\n#   #\n# @ #\n#   #\n#####")) == [0, 1, 2, 3]


def test_solved_predicate():
    assert sk.solved(sk.parse_xsb("####\n#@*#\n####"))
    assert not sk.solved(sk.parse_xsb(ONE_PUSH))


def test_exhaustive_examples():
    done = sk.parse_xsb("####\n#@*#\n####")
    assert sk.exhaustive_solve(done).path == []
    # box one push from its target, agent already behind it: walk 0 + 1 push
    res = sk.exhaustive_solve(sk.parse_xsb(ONE_PUSH))
    assert res.status == "solved" and res.path == [sk.RIGHT]
    # agent must walk around: up, left x2, down, then push right twice
    b = sk.parse_xsb("#######\n#     #\n# $@. #\n#     #\n#######")
    res = sk.exhaustive_solve(b)
    assert sk.format_actions(res.path) == "ulldrr"
    assert sk.solved(replay(sk.SokobanModel(), b, res.path))
    res = sk.exhaustive_solve(sk.parse_xsb(CORNER))
    assert res.path is None and res.status == "unsolvable"


def test_first_corpus_board_replays_to_solved(corpus):
    b = corpus[0]
    res = sk.exhaustive_solve(b)
    states = [b]
    for a in res.path:
        states.append(sk.next_state(states[-1], a))
    assert sk.solved(states[-1]) and not any(sk.solved(s) for s in states[:-1])


def _plain_bfs(b, limit=100_000):
    if sk.solved(b):
        return []
    prev = {b: None}
    q = deque([b])
    while q:
        s = q.popleft()
        for a in sk.legal_actions(s):
            t = sk.next_state(s, a)
            if t in prev:
                continue
            prev[t] = (s, a)
            if sk.solved(t):
                path = []
                while prev[t] is not None:
                    t, a = prev[t]
                    path.append(a)
                return path[::-1]
            q.append(t)
            if len(prev) > limit:
                raise RuntimeError("tiny board too large")
    return None


def _tiny_boards(n, seed=0):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        h, w = rng.randint(4, 5), rng.randint(4, 6)
        walls = {r * w + c for r in range(h) for c in range(w) if r in (0, h - 1) or c in (0, w - 1)}
        inner = [x for x in range(h * w) if x not in walls]
        walls |= {x for x in inner if rng.random() < 0.15}
        floor = [x for x in range(h * w) if x not in walls]
        k = rng.randint(1, 2)
        if len(floor) < 2 * k + 1:
            continue
        picks = rng.sample(floor, 2 * k + 1)
        level = sk.Level(w, h, frozenset(walls), frozenset(picks[:k]))
        out.append(sk.Board(level, picks[-1], frozenset(picks[k:2 * k])))
    return out


def test_solver_optimal_and_pruning_safe():
    for b in _tiny_boards(150):
        ref = _plain_bfs(b)
        pruned = sk.exhaustive_solve(b, prune_corners=True)
        plain = sk.exhaustive_solve(b, prune_corners=False)
        assert (pruned.path is None) == (ref is None) == (plain.path is None)
        if ref is not None:
            assert len(pruned.path) == len(ref) == len(plain.path)
            assert sk.solved(replay(sk.SokobanModel(), b, pruned.path))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 199), st.lists(st.integers(0, 3), max_size=30))
def test_conservation_and_reversible_walks(corpus, idx, actions):
    b = corpus[idx]
    for a in actions:
        if not sk.is_legal_action(b, a):
            continue
        t = sk.next_state(b, a)
        assert len(t.boxes) == len(b.boxes) and t.walls == b.walls and t.targets == b.targets
        assert sk.is_legal_state(t)
        if t.boxes == b.boxes:
            back = sk._OPPOSITE[a]
            assert sk.next_state(t, back) == b
        b = t


def test_predecessors_invert_next_state(corpus):
    for b in corpus[:30]:
        for prev, a in sk.predecessors(b):
            assert sk.next_state(prev, a) == b


def test_corpus_io(tmp_path, corpus):
    text = sk.dump_corpus(corpus[:3], ["demo header"])
    assert text.startswith("; demo header")
    p = tmp_path / "c.xsb"
    p.write_text(text)
    assert sk.load_corpus(p) == corpus[:3]


def test_action_notation():
    assert sk.parse_actions("UdLr") == [0, 1, 2, 3]
    assert sk.format_actions([0, 1, 2, 3]) == "udlr"
