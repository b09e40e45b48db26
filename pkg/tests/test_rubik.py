import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subgoal_search.envs import rubik
from subgoal_search.envs.rubik import SOLVED, apply_moves, next_state, parse_moves

# Facelet strings produced by an independent cubie-level cube implementation
# (corner/edge permutation and orientation tables), frozen here.
GOLDEN = {
    "U": "UUUUUUUUUBBBRRRRRRRRRFFFFFFDDDDDDDDDFFFLLLLLLLLLBBBBBB",
    "U'": "UUUUUUUUUFFFRRRRRRLLLFFFFFFDDDDDDDDDBBBLLLLLLRRRBBBBBB",
    "R": "UUFUUFUUFRRRRRRRRRFFDFFDFFDDDBDDBDDBLLLLLLLLLUBBUBBUBB",
    "R'": "UUBUUBUUBRRRRRRRRRFFUFFUFFUDDFDDFDDFLLLLLLLLLDBBDBBDBB",
    "F": "UUUUUULLLURRURRURRFFFFFFFFFRRRDDDDDDLLDLLDLLDBBBBBBBBB",
    "F'": "UUUUUURRRDRRDRRDRRFFFFFFFFFLLLDDDDDDLLULLULLUBBBBBBBBB",
    "D": "UUUUUUUUURRRRRRFFFFFFFFFLLLDDDDDDDDDLLLLLLBBBBBBBBBRRR",
    "D'": "UUUUUUUUURRRRRRBBBFFFFFFRRRDDDDDDDDDLLLLLLFFFBBBBBBLLL",
    "L": "BUUBUUBUURRRRRRRRRUFFUFFUFFFDDFDDFDDLLLLLLLLLBBDBBDBBD",
    "L'": "FUUFUUFUURRRRRRRRRDFFDFFDFFBDDBDDBDDLLLLLLLLLBBUBBUBBU",
    "B": "RRRUUUUUURRDRRDRRDFFFFFFFFFDDDDDDLLLULLULLULLBBBBBBBBB",
    "B'": "LLLUUUUUURRURRURRUFFFFFFFFFDDDDDDRRRDLLDLLDLLBBBBBBBBB",
    "U R F": "UURUUFLLFURBURBFRBFFRFFRDDDRRRDDBDDLFFDLLDLLBULLUBBUBB",
    "R U R' U'": "UULUUFUUFRRUBRRURRFFDFFUFFFDDRDDDDDDBLLLLLLLLBRRBBBBBB",
    "F B' L D' R U'": "FFULULBBBLFRBRRRUUDDDUFRURFRDDRDBFFBLBRLLLLFFBUUUBDLDD",
}

states = st.lists(st.integers(0, 11), max_size=25).map(lambda ms: apply_moves(SOLVED, ms))
moves = st.integers(0, 11)


@pytest.mark.parametrize("seq", sorted(GOLDEN))
def test_move_goldens(seq):
    assert apply_moves(SOLVED, parse_moves(seq)) == GOLDEN[seq]


def test_solved_string_layout():
    assert SOLVED == "U" * 9 + "R" * 9 + "F" * 9 + "D" * 9 + "L" * 9 + "B" * 9
    assert rubik.solved(SOLVED)
    assert not rubik.solved(next_state(SOLVED, 0))
    assert rubik.solved(apply_moves(SOLVED, [0, 0, 0, 0]))


@pytest.mark.parametrize("m", range(12))
def test_each_move_is_a_bijection_of_order_four(m):
    perm = rubik.MOVE_PERMUTATIONS[m]
    assert sorted(perm) == list(range(54))
    inv = rubik.MOVE_PERMUTATIONS[m ^ 1]
    assert all(perm[inv[i]] == i for i in range(54))
    s = SOLVED
    for _ in range(4):
        s = next_state(s, m)
    assert s == SOLVED


@settings(max_examples=200)
@given(states, moves)
def test_inverse_undoes_move(s, m):
    assert next_state(next_state(s, m), m ^ 1) == s


@settings(max_examples=200)
@given(states, moves)
def test_colors_and_centers_are_conserved(s, m):
    t = next_state(s, m)
    assert Counter(t) == Counter(SOLVED)
    assert all(t[i] == SOLVED[i] for i in rubik.CENTER_INDICES)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 11), max_size=5), moves)
def test_distance_changes_by_one(ms, m):
    s = apply_moves(SOLVED, ms)
    d1, d2 = rubik.bfs_distance(s), rubik.bfs_distance(next_state(s, m))
    if d1 is not None and d2 is not None:
        assert abs(d1 - d2) == 1


def test_bfs_distance_examples():
    assert rubik.bfs_distance(SOLVED) == 0
    assert rubik.bfs_distance(next_state(SOLVED, 0)) == 1
    s = apply_moves(SOLVED, parse_moves("U R F"))
    # nothing within two moves reaches it
    near = {SOLVED}
    for _ in range(2):
        near |= {next_state(x, m) for x in near for m in range(12)}
    assert s not in near
    assert rubik.bfs_distance(s) == 3


def test_bfs_distance_out_of_range_and_bound():
    far = apply_moves(SOLVED, parse_moves("R U F L D B R U"))
    assert rubik.bfs_distance(far, 6) is None
    with pytest.raises(ValueError):
        rubik.bfs_distance(SOLVED, 7)


def test_scramble():
    s, ms = rubik.scramble(0, 1)
    assert s == SOLVED and ms == []
    s, ms = rubik.scramble(20, 5)
    assert len(ms) == 20 and apply_moves(SOLVED, ms) == s
    assert all(a >> 1 != b >> 1 for a, b in zip(ms, ms[1:]))
    assert rubik.scramble(20, 5) == (s, ms)
    with pytest.raises(ValueError):
        rubik.scramble(-1)


def test_parse_serialize_round_trip():
    rng = random.Random(3)
    for _ in range(100):
        s, _ = rubik.scramble(rng.randint(0, 30), rng)
        assert rubik.parse(rubik.serialize(s)) == s
    with pytest.raises(rubik.CubeParseError):
        rubik.parse(SOLVED[:53])
    with pytest.raises(rubik.CubeParseError):
        rubik.parse("U" * 54)
    with pytest.raises(rubik.CubeParseError):
        rubik.parse(SOLVED[9:18] + SOLVED[:9] + SOLVED[18:])  # centers out of place


def test_move_notation():
    assert rubik.format_moves(parse_moves("U R' F")) == "U R' F"
    assert parse_moves("R’ U′") == [7, 1]
    with pytest.raises(ValueError):
        parse_moves("X")


@settings(max_examples=100, deadline=None)
@given(states, st.lists(moves, min_size=1, max_size=4))
def test_relative_state_transfers_solutions(s, ms):
    goal = apply_moves(s, ms)
    r = rubik.relative_state(s, goal)
    assert apply_moves(r, ms) == SOLVED
    assert rubik.relative_state(s, s) == SOLVED


def test_legality():
    assert rubik.is_legal_state(SOLVED)
    assert not rubik.is_legal_state("U" * 54)
    assert not rubik.is_legal_state(42)
