import pytest

from subgoal_search.components.oracle import build_oracle_bundle
from subgoal_search.envs import rubik, sokoban
from subgoal_search.training import TrainConfig, load_corpus_default, train_bundle


@pytest.fixture(scope="session")
def cube():
    return rubik.RubikModel()


@pytest.fixture(scope="session")
def soko():
    return sokoban.SokobanModel()


@pytest.fixture(scope="session")
def cube_oracle(cube):
    return build_oracle_bundle(cube, 6, [4, 3, 2, 1])


@pytest.fixture(scope="session")
def corpus():
    return load_corpus_default()


@pytest.fixture(scope="session")
def rubik_training():
    """Learned cube bundle; the slowest fixture (roughly half a minute)."""
    return train_bundle(TrainConfig(env="rubik", n_trajectories=10_000, seed=0))


@pytest.fixture(scope="session")
def rubik_learned(rubik_training):
    return rubik_training.bundle


@pytest.fixture(scope="session")
def sokoban_training():
    from subgoal_search.corpus import CorpusParams, generate_corpus
    boards = [b for b, _ in generate_corpus(CorpusParams(count=1000, seed=1000))]
    return train_bundle(TrainConfig(env="sokoban", distances=(8, 4, 2), corpus=boards, seed=0))


@pytest.fixture(scope="session")
def sokoban_learned(sokoban_training):
    return sokoban_training.bundle
