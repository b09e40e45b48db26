"""Verifier and adaptivity trends at a scramble length the linear components
can partly solve, so success rates are informative rather than all zero."""

import pytest

from subgoal_search import bench

pytestmark = pytest.mark.slow

BUDGETS = [100, 250, 1000, 5000]


@pytest.fixture(scope="module")
def short_runs(tmp_path_factory, rubik_learned):
    cfg = bench.ExperimentConfig(env="rubik", strategies=["adasubs", "adasubs-noverifier", "ksubs", "mixsubs"],
                                 n_instances=100, scramble_len=4, budgets=BUDGETS, seed=4,
                                 bundle="learned-fixture")
    return bench.run_experiment(cfg, bundle=rubik_learned, output_dir=tmp_path_factory.mktemp("len4"))


def _rates(records, strategy):
    return {b: r for b, r, _, _ in bench.compute_success_curve(records, strategy)}


def test_short_scramble_summary(short_runs, capsys):
    table = bench.call_count_table(short_runs, per_episodes=100, budget=BUDGETS[-1])
    with capsys.disabled():
        print()
        for name in ("adasubs", "adasubs-noverifier", "ksubs", "mixsubs"):
            rates = " ".join(f"{r:.2f}" for r in _rates(short_runs, name).values())
            print(f"length 4 {name:>19}: success {rates}  policy calls {table['Policy calls'][name]:.0f}")
    assert all(r.stats.verifier_calls == 0 for r in short_runs if r.strategy in ("ksubs", "adasubs-noverifier"))


def test_verifier_saves_policy_calls(short_runs):
    table = bench.call_count_table(short_runs, per_episodes=100, budget=BUDGETS[-1])["Policy calls"]
    assert table["adasubs"] < table["adasubs-noverifier"]


def test_success_curves_are_monotone(short_runs):
    for name in ("adasubs", "adasubs-noverifier", "ksubs", "mixsubs"):
        rates = list(_rates(short_runs, name).values())
        assert rates == sorted(rates)
