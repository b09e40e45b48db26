import csv
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st
from statsmodels.stats.proportion import proportion_confint

from subgoal_search import ConfigError, SearchStats, bench, cli
from subgoal_search.bench import RunRecord


def _rec(strategy, budget, solved, calls=(0, 0, 0, 0), instance="i"):
    g, v, p, val = calls
    stats = SearchStats(generator_calls=g, verifier_calls=v, policy_calls=p, value_calls=val)
    return RunRecord(instance, strategy, budget, "Solved" if solved else "BudgetExhausted", stats)


# -- statistics ----------------------------------------------------------------------

def test_wilson_examples():
    assert bench.wilson_interval(0, 10)[0] == 0.0
    assert bench.wilson_interval(10, 10)[1] == 1.0
    lo, hi = bench.wilson_interval(5, 10)
    assert lo == pytest.approx(0.23659309, abs=1e-6) and hi == pytest.approx(0.76340691, abs=1e-6)
    with pytest.raises(ValueError):
        bench.wilson_interval(0, 0)


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_wilson_matches_statsmodels(kn):
    k, n = kn
    lo, hi = bench.wilson_interval(k, n)
    ref = proportion_confint(k, n, alpha=0.05, method="wilson")
    assert lo == pytest.approx(ref[0], abs=1e-9) and hi == pytest.approx(ref[1], abs=1e-9)


def test_success_curve():
    recs = [_rec("a", b, s, instance=f"i{i}") for i, flags in enumerate([(0, 1), (0, 0), (1, 1)])
            for b, s in zip((10, 20), flags)]
    curve = bench.compute_success_curve(recs, "a")
    assert [(b, r) for b, r, _, _ in curve] == [(10, 1 / 3), (20, 2 / 3)]
    assert bench.compute_success_curve(recs, "missing") == []


def test_call_table():
    table = bench.call_count_table([_rec("k", 5, True, (3, 1, 7, 2))], per_episodes=1)
    assert {label: row["k"] for label, row in table.items()} == {
        "Generator calls": 3, "Verifier calls": 1, "Policy calls": 7, "Value calls": 2, "Total calls": 13}
    recs = [_rec("k", 5, True, (2, 0, 4, 6)), _rec("k", 5, False, (4, 0, 8, 2)), _rec("k", 1, True, (99,) * 4)]
    t = bench.call_count_table(recs, per_episodes=1000)
    assert t["Generator calls"]["k"] == 3000 and t["Verifier calls"]["k"] == 0
    assert t["Total calls"]["k"] == sum(t[r]["k"] for r in bench.CALL_ROWS[:4])
    assert bench.call_count_table(recs, 1, budget=1)["Policy calls"]["k"] == 99


def test_emit_plot_data(tmp_path):
    p = bench.emit_plot_data({}, tmp_path / "empty.csv")
    assert p.read_text().splitlines() == [bench.CURVE_SCHEMA, "strategy,budget,rate,ci_lo,ci_hi"]
    curves = {s: [(b, 0.5, 0.2, 0.8) for b in (1, 2, 3)] for s in ("a", "b")}
    text = bench.emit_plot_data(curves, tmp_path / "c.csv").read_text()
    assert len(text.splitlines()) == 2 + 6
    assert bench.emit_plot_data(curves, tmp_path / "d.csv").read_text() == text


# -- experiments ----------------------------------------------------------------------

def _cfg(tmp_path, **kw):
    base = dict(env="rubik", strategies=["adasubs", "ksubs"], n_instances=4, scramble_len=4,
                budgets=[50, 200, 1000], seed=1, output_dir=str(tmp_path / "run"))
    base.update(kw)
    return bench.ExperimentConfig.from_dict(base)


def test_presets():
    p = bench.preset("sokoban", "adasubs")
    assert p.generator_distances == (8, 4, 2) and (p.t_hi, p.t_lo) == (0.99, 0.1)
    p = bench.preset("rubik", "adasubs")
    assert p.generator_distances == (4, 3, 2) and (p.t_hi, p.t_lo) == (0.995, 0.0005)
    assert p.max_nodes == 5000
    assert bench.preset("rubik", "ksubs").verification_mode == "rollout"
    with pytest.raises(ConfigError):
        bench.preset("rubik", "astar")


@pytest.mark.parametrize("kw", [
    dict(budgets=[100, 50]), dict(budgets=[]), dict(n_instances=0), dict(strategies=["ksubs", "ksubs"]),
    dict(env="chess"), dict(strategies=["nope"]), dict(workers=0),
    dict(strategy_overrides={"ksubs": {"generator_distances": [2, 4]}}),
    dict(scramble_len=7), dict(scramble_len=6, strategies=["bestfs"]),
])
def test_experiment_config_validation(tmp_path, kw):
    with pytest.raises(ConfigError):
        _cfg(tmp_path, **kw).validate()
    with pytest.raises(ConfigError):
        bench.ExperimentConfig.from_dict({"colour": 1})


def test_oracle_range_check(tmp_path):
    _cfg(tmp_path, scramble_len=6, strategies=["adasubs"]).validate()
    _cfg(tmp_path, scramble_len=5, strategies=["bestfs"]).validate()
    _cfg(tmp_path, scramble_len=9, bundle="some/dir").validate()
    assert bench.ExperimentConfig().validate().scramble_len == 5


def test_single_cell(tmp_path):
    cfg = _cfg(tmp_path, strategies=["bestfs"], n_instances=1, budgets=[100])
    recs = bench.run_experiment(cfg)
    assert len(recs) == 1
    rows = list(csv.reader(open(tmp_path / "run" / "results.csv")))
    assert rows[0] == list(bench.RESULT_COLUMNS) and len(rows) == 2


def test_run_records_and_monotone_curves(tmp_path):
    cfg = _cfg(tmp_path, strategies=["adasubs-noverifier", "ksubs", "mixsubs"])
    recs = bench.run_experiment(cfg)
    assert len(recs) == 4 * 3 * 3
    assert len({(r.instance, r.strategy, r.budget) for r in recs}) == len(recs)
    for name in cfg.strategies:
        rates = [r for _, r, _, _ in bench.compute_success_curve(recs, name)]
        assert rates == sorted(rates)
    assert all(r.stats.verifier_calls == 0 for r in recs if r.strategy == "ksubs")
    timings = (tmp_path / "run" / "timings.csv").read_text().splitlines()
    assert timings[0] == "instance,strategy,wall_time_s" and len(timings) == 1 + 4 * 3


def test_resume_and_config_guard(tmp_path):
    cfg = _cfg(tmp_path)
    bench.run_experiment(cfg)
    path = tmp_path / "run" / "results.csv"
    full = path.read_text()
    lines = full.splitlines(keepends=True)
    # drop the last instance and half of another one's rows, as a crash would
    path.write_text("".join(lines[:1 + 2 * 6 + 3]))
    bench.run_experiment(cfg)
    assert path.read_text() == full
    with pytest.raises(ConfigError, match="different configuration"):
        bench.run_experiment(_cfg(tmp_path, seed=2))


def test_instances_are_seeded(tmp_path):
    a = bench.make_instances(_cfg(tmp_path, n_instances=3))
    b = bench.make_instances(_cfg(tmp_path, n_instances=5))
    assert a == b[:3] and [i for i, _ in a] == ["r4-0000", "r4-0001", "r4-0002"]
    soko = bench.make_instances(_cfg(tmp_path, env="sokoban", n_instances=2))
    assert [i for i, _ in soko] == ["s-0000", "s-0001"]
    with pytest.raises(ConfigError):
        bench.make_instances(_cfg(tmp_path, env="sokoban", n_instances=201))


def test_round_trip_records(tmp_path):
    recs = bench.run_experiment(_cfg(tmp_path, n_instances=2))
    back = bench.load_results(tmp_path / "run" / "results.csv")
    assert [r.row() for r in back] == [r.row() for r in recs]


# -- command line -----------------------------------------------------------------------

def test_cli_run_report_and_determinism(tmp_path, capsys):
    args = ["run", "--env", "rubik", "--strategies", "adasubs-noverifier,bestfs", "--n-instances", "3",
            "--scramble-len", "3", "--budgets", "100,1000"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = (tmp_path / "a" / "results.csv").read_bytes(), (tmp_path / "b" / "results.csv").read_bytes()
    assert a == b
    assert cli.main(["report", str(tmp_path / "a"), "--per-episodes", "10"]) == 0
    out = capsys.readouterr().out
    assert "Total calls" in out
    assert (tmp_path / "a" / "curves.csv").read_text().startswith(bench.CURVE_SCHEMA)
    assert (tmp_path / "a" / "calls.csv").read_text().startswith(bench.CALLS_SCHEMA)


def test_cli_config_file_and_output_root(tmp_path, monkeypatch):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"env": "rubik", "strategies": ["bestfs"], "n_instances": 1,
                                "scramble_len": 2, "budgets": [100]}))
    monkeypatch.setenv("SUBGOAL_SEARCH_OUT", str(tmp_path / "root"))
    assert cli.main(["run", "--config", str(conf), "--out", "rel", "--n-instances", "2"]) == 0
    rows = (tmp_path / "root" / "rel" / "results.csv").read_text().splitlines()
    assert len(rows) == 3


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["run", "--budgets", "5,1", "--out", str(tmp_path / "x")]) == 1
    assert cli.main(["report", str(tmp_path / "missing")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "y")]) == 1

    def boom(*a, **k):
        raise RuntimeError("solver crashed")

    monkeypatch.setattr(bench, "run_experiment", boom)
    assert cli.main(["run", "--n-instances", "1", "--out", str(tmp_path / "z")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_cli_datagen_and_train(tmp_path):
    out = tmp_path / "t.jsonl"
    assert cli.main(["datagen", "trajectories", "--n", "5", "--scramble-len", "6", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 6
    assert cli.main(["datagen", "verifier", "--out", str(tmp_path / "v.jsonl")]) == 1
    bundle = tmp_path / "bundle"
    assert cli.main(["train", "--env", "rubik", "--n-trajectories", "200", "--verifier-instances", "5",
                     "--out", str(bundle)]) == 0
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert manifest["verifier"] == "verifier.json" and sorted(manifest["generators"]) == ["2", "3", "4"]
    v = tmp_path / "v.jsonl"
    assert cli.main(["datagen", "verifier", "--bundle", str(bundle), "--n", "3", "--scramble-len", "6",
                     "--out", str(v)]) == 0
    assert v.read_text().startswith('{"format": "subgoal-search/verifier-samples"')
    assert cli.main(["run", "--bundle", str(bundle), "--strategies", "adasubs", "--n-instances", "2",
                     "--scramble-len", "3", "--budgets", "500", "--out", str(tmp_path / "r")]) == 0
