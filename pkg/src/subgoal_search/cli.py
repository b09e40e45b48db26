"""Command-line entry point: ``subgoal-search {train,datagen,run,report}``.

Options may come from a JSON config file (``--config``); flags given on the
command line override it.  Relative output paths are resolved under
``$SUBGOAL_SEARCH_OUT`` when that variable is set.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import bench, datagen
from .search import ConfigError

OUT_ENV = "SUBGOAL_SEARCH_OUT"


def _out_path(p) -> Path:
    p = Path(p)
    root = os.environ.get(OUT_ENV)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def _merge(base: dict, args, names) -> dict:
    out = dict(base)
    for name in names:
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    return out


# -- train -----------------------------------------------------------------------------

def cmd_train(args) -> int:
    from .components.linear import LinearParams
    from .components.macro import MacroParams
    from .components.persistence import save_bundle
    from .corpus import CorpusParams, generate_corpus
    from .envs import sokoban
    from .training import TrainConfig, train_bundle

    conf = _merge(_load_config(args.config), args, ["env", "seed", "n_trajectories", "scramble_len",
                                                   "state_fraction", "verifier_instances", "verifier_depth"])
    if args.distances is not None:
        conf["distances"] = args.distances
    if args.no_verifier:
        conf["train_verifier"] = False
    train_boards = conf.pop("train_boards", args.train_boards)
    corpus_path = conf.pop("corpus", args.corpus)
    for key, cls in (("macro", MacroParams), ("policy", LinearParams), ("value", LinearParams),
                     ("verifier", LinearParams)):
        if isinstance(conf.get(key), dict):
            conf[key] = cls(**conf[key])
    conf.setdefault("env", "rubik")
    if conf["env"] == "sokoban":
        conf.setdefault("distances", [8, 4, 2])
        if corpus_path:
            conf["corpus"] = sokoban.load_corpus(corpus_path)
        else:
            params = CorpusParams(count=train_boards, seed=conf.get("seed", 0) + 1000)
            conf["corpus"] = [b for b, _ in generate_corpus(params)]
    conf["distances"] = tuple(conf.get("distances", (4, 3, 2)))
    try:
        cfg = TrainConfig(**conf)
    except TypeError as e:
        raise ConfigError(str(e)) from None
    res = train_bundle(cfg)
    out = save_bundle(res.bundle, cfg.env, _out_path(args.out))
    print(f"saved {cfg.env} bundle to {out} ({json.dumps(res.verifier_counts)})")
    return 0


# -- datagen ---------------------------------------------------------------------------

def cmd_datagen(args) -> int:
    from .envs import get_model, sokoban
    from .training import load_corpus_default

    model = get_model(args.env)
    out = _out_path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "trajectories":
        if args.env == "rubik":
            trajs = datagen.gen_rubik_trajectories(args.n, args.scramble_len, args.seed)
        else:
            boards = sokoban.load_corpus(args.corpus) if args.corpus else load_corpus_default()
            trajs = datagen.gen_sokoban_trajectories(boards[:args.n])
        datagen.write_trajectories(out, trajs, model)
        print(f"wrote {len(trajs)} trajectories to {out}")
        return 0
    if not args.bundle:
        raise ConfigError("verifier data needs --bundle (a trained bundle directory)")
    from .components.persistence import load_bundle
    bundle = load_bundle(args.bundle)
    cfg = bench.ExperimentConfig(env=args.env, n_instances=args.n, scramble_len=args.scramble_len,
                                 corpus=args.corpus, seed=args.seed, strategies=["adasubs-noverifier"])
    planner = cfg.planner_config("adasubs-noverifier").replace(max_nodes=args.max_nodes,
                                                                graph_size_cap=args.graph_size_cap)
    instances = bench.make_instances(cfg)
    samples, counts = datagen.collect_verifier_dataset(
        instances, bundle.with_generators(planner.generator_distances), planner, model, args.cap, args.seed)
    datagen.write_verifier_samples(out, samples, model)
    print(f"wrote {len(samples)} verifier samples to {out} ({json.dumps(counts)})")
    return 0


# -- run / report ----------------------------------------------------------------------

_RUN_FIELDS = ["env", "strategies", "n_instances", "scramble_len", "corpus", "budgets", "seed", "bundle",
               "oracle_depth", "workers"]


def cmd_run(args) -> int:
    conf = _merge(_load_config(args.config), args, _RUN_FIELDS)
    if args.max_nodes is not None:
        conf.setdefault("planner", {})["max_nodes"] = args.max_nodes
    out = _out_path(args.out or conf.get("output_dir", "runs/default"))
    conf["output_dir"] = str(out)
    cfg = bench.ExperimentConfig.from_dict(conf).validate()
    records = bench.run_experiment(cfg, output_dir=out)
    for name in cfg.strategies:
        curve = bench.compute_success_curve(records, name)
        pts = "  ".join(f"{b}:{rate:.3f}" for b, rate, _, _ in curve)
        print(f"{name:>20}  {pts}")
    print(f"results in {out / 'results.csv'}")
    return 0


def cmd_report(args) -> int:
    results = Path(args.results)
    if results.is_dir():
        results = results / "results.csv"
    if not results.exists():
        raise ConfigError(f"no results file at {results}")
    records = bench.load_results(results)
    out = _out_path(args.out) if args.out else results.parent
    out.mkdir(parents=True, exist_ok=True)
    strategies = list(dict.fromkeys(r.strategy for r in records))
    curves = {s: bench.compute_success_curve(records, s) for s in strategies}
    bench.emit_plot_data(curves, out / "curves.csv")
    table = bench.call_count_table(records, args.per_episodes)
    bench.write_call_table(table, out / "calls.csv")
    for s, curve in curves.items():
        for b, rate, lo, hi in curve:
            print(f"{s:>20} budget={b:<7} rate={rate:.3f} ci=[{lo:.3f}, {hi:.3f}]")
    print(f"\ncalls per {args.per_episodes} episodes")
    print(f"{'':>16}" + "".join(f"{s:>20}" for s in strategies))
    for label, row in table.items():
        print(f"{label:>16}" + "".join(f"{row[s]:>20.1f}" for s in strategies))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subgoal-search", description="Subgoal search experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a learned component bundle")
    p.add_argument("--config")
    p.add_argument("--env", choices=["rubik", "sokoban"])
    p.add_argument("--out", required=True, help="bundle directory to write")
    p.add_argument("--seed", type=int)
    p.add_argument("--distances", type=_ints)
    p.add_argument("--n-trajectories", type=int)
    p.add_argument("--scramble-len", type=int)
    p.add_argument("--state-fraction", type=float)
    p.add_argument("--verifier-instances", type=int)
    p.add_argument("--verifier-depth", type=int)
    p.add_argument("--corpus", help="Sokoban training corpus (default: freshly generated boards)")
    p.add_argument("--train-boards", type=int, default=1000)
    p.add_argument("--no-verifier", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("datagen", help="write trajectory or verifier datasets")
    p.add_argument("kind", choices=["trajectories", "verifier"])
    p.add_argument("--env", choices=["rubik", "sokoban"], default="rubik")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--scramble-len", type=int, default=20)
    p.add_argument("--corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bundle")
    p.add_argument("--cap", type=int, default=100)
    p.add_argument("--max-nodes", type=int, default=200)
    p.add_argument("--graph-size-cap", type=int, default=2000)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("run", help="run an experiment grid")
    p.add_argument("--config")
    p.add_argument("--env", choices=["rubik", "sokoban"])
    p.add_argument("--strategies", type=_strs)
    p.add_argument("--n-instances", type=int)
    p.add_argument("--scramble-len", type=int)
    p.add_argument("--corpus")
    p.add_argument("--budgets", type=_ints)
    p.add_argument("--seed", type=int)
    p.add_argument("--bundle", help="'oracle', 'train' or a bundle directory")
    p.add_argument("--oracle-depth", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="success curves and call tables from results.csv")
    p.add_argument("results")
    p.add_argument("--per-episodes", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - reported as a runtime failure
        logging.getLogger(__name__).debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
