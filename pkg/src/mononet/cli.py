"""``mononet`` command line interface.

Every subcommand is deterministic given ``--seed`` (falling back to the
``MONONET_SEED`` environment variable, then 0).  Options may also come from
a JSON file passed with ``--config``; explicit flags win over the file.

Exit codes: 0 success, 1 usage, data or verification failure, 2 numerical
failure during training.
"""
import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import DataError, DatasetDescriptor, builtin_descriptor, load_csv, split_80_20
from .experiments import cubic_fit_demo, dataset_protocol, synthetic_experiment, task_setup
from .network import HiddenSpec, ModelFormatError, NetworkSpec, load_model, network_forward, param_count, save_model
from .training import SearchSpace, TrainConfig, TrainingDivergedError, evaluate, grid_search, repeated_runs
from .verification import check_gradient_sign, check_pairwise_monotonicity, sampling_box


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# option plumbing: argparse defaults are None so config values can fill gaps
# ---------------------------------------------------------------------------

DEFAULTS: dict = {}


def _opt(p, cmd, flag, default, **kw):
    dest = flag.lstrip("-").replace("-", "_")
    DEFAULTS.setdefault(cmd, {})[dest] = default
    if default is not None and "help" in kw:
        kw["help"] += f" (default: {default})"
    p.add_argument(flag, default=None, **kw)


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _env_seed():
    raw = os.environ.get("MONONET_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"MONONET_SEED must be an integer, got {raw!r}") from None


def _resolve(args):
    cmd = args.command
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - set(DEFAULTS[cmd]) - {"seed"})
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {unknown}")
    for key, default in DEFAULTS[cmd].items():
        if getattr(args, key) is None:
            setattr(args, key, cfg.get(key, default))
    if args.seed is None:
        args.seed = int(cfg["seed"]) if "seed" in cfg else _env_seed()
    return args


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")


def write_table(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([str(v) if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])


def _descriptor(args) -> DatasetDescriptor:
    if args.descriptor:
        return DatasetDescriptor.load(args.descriptor)
    if args.dataset:
        return builtin_descriptor(args.dataset)
    raise UsageError("one of --dataset or --descriptor is required")


def _dataset(args):
    if not args.csv:
        raise UsageError("--csv is required")
    return load_csv(args.csv, _descriptor(args))


def _train_config(args, loss):
    return TrainConfig(loss=loss, optimizer=args.optimizer, lr=float(args.lr), batch_size=int(args.batch_size),
                       epochs=int(args.epochs), seed=int(args.seed))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_train(args):
    data = _dataset(args)
    loss, head, n_out = task_setup(data)
    config = _train_config(args, loss)
    runs = int(args.runs)
    best = int(args.best) if args.best is not None else runs
    hidden = [HiddenSpec(w, args.kind, args.selector) for w in _int_list(args.width)]
    spec = NetworkSpec(data.indicator, hidden, architecture=args.arch, kind=args.kind, final_activation=head,
                       n_outputs=n_out, first_layer_gain=float(args.gain))
    train_part, test_part = split_80_20(data, seed=int(args.split_seed))
    summary, reports = repeated_runs((train_part.X, train_part.y), (test_part.X, test_part.y), spec, config,
                                     runs=runs, best=best)
    top_report, top_net = reports[summary["best_seeds"][0] - config.seed]
    save_model(top_net, args.out_model)
    out = {
        "command": "train",
        "dataset": data.descriptor.name,
        "rows": len(data),
        "dropped_rows": data.dropped,
        "split_seed": int(args.split_seed),
        "architecture": args.arch,
        "widths": _int_list(args.width),
        "kind": args.kind,
        "selector": args.selector,
        "param_count": param_count(top_net),
        "metric": summary["metric"],
        "test_metric": top_report.test_metric,
        "summary": summary,
        "runs": [rep.to_dict() for rep, _ in reports],
    }
    write_json(args.out_report, out)
    if args.curve:
        write_table(args.curve, ["epoch", "loss"], [np.arange(1, len(top_report.history) + 1), top_report.history])
    print(f"test {summary['metric']}: {top_report.test_metric:.6g} (seed {top_report.seed})")
    if runs > 1:
        print(f"best {best} of {runs}: {summary['mean']:.6g} +/- {summary['std']:.6g}")
    return 0


def cmd_eval(args):
    net = load_model(args.model)
    data = _dataset(args)
    if data.X.shape[1] != net.n_inputs:
        raise DataError(f"model expects {net.n_inputs} inputs, dataset has {data.X.shape[1]}")
    if args.split == "all":
        part = data
    else:
        train_part, test_part = split_80_20(data, seed=int(args.split_seed))
        part = test_part if args.split == "test" else train_part
    metrics = ["mse", "rmse"] if data.descriptor.task == "regression" else ["accuracy"]
    out = {"command": "eval", "model": str(args.model), "split": args.split, "rows": len(part),
           "metrics": {m: evaluate(net, part, m) for m in metrics}}
    if args.out_report:
        write_json(args.out_report, out)
    for m, v in out["metrics"].items():
        print(f"{m}: {v:.6g}")
    return 0


def _print_table(rows):
    print(f"{'check':<10} {'feature':>7} {'dir':>4} {'tested':>7} {'viol':>6}  result")
    for r in rows:
        print(f"{r['check']:<10} {r['feature']:>7} {r['direction']:>4} {r['tested']:>7} {r['violations']:>6}  "
              f"{'PASS' if r['passed'] else 'FAIL'}")


def cmd_verify(args):
    net = load_model(args.model)
    indicator = None
    box = None
    if args.dataset or args.descriptor:
        indicator = _descriptor(args).encoded_indicator()
    if args.csv:
        data = _dataset(args)
        box = sampling_box(data.X)
    seed = int(args.seed)
    mono = check_pairwise_monotonicity(net, indicator, int(args.pairs), seed, box)
    grad = check_gradient_sign(net, indicator, int(args.points), seed, box)
    rows = [{"check": "pairwise", "feature": r.feature, "direction": r.direction, "tested": r.pairs,
             "violations": r.violations, "worst": r.worst, "passed": r.passed} for r in mono]
    rows += [{"check": "grad-sign", "feature": r.feature, "direction": r.direction, "tested": r.points,
              "violations": r.violations, "worst": r.worst, "passed": r.passed} for r in grad]
    passed = all(r["passed"] for r in rows)
    write_json(args.out_report, {"command": "verify", "model": str(args.model), "seed": seed,
                                 "passed": passed, "checks": rows})
    _print_table(rows)
    if not rows:
        print("no monotone features declared")
    return 0 if passed else 1


def cmd_fit_demo(args):
    widths = _int_list(args.widths)
    res = cubic_fit_demo(widths=widths, kind=args.kind, seed=int(args.seed), epochs=int(args.epochs),
                         lr=float(args.lr), n_train=int(args.points), noise_std=float(args.noise))
    out_dir = Path(args.out_dir)
    summary = []
    for (variant, w), r in res.items():
        write_table(out_dir / f"cubic_{variant}_w{w}.csv", ["x", "y_true", "y_pred"], [r["x"], r["y_true"], r["y_pred"]])
        summary.append({"variant": variant, "width": w, "mse": r["mse"], "mse_left": r["mse_left"],
                        "mse_right": r["mse_right"]})
        print(f"{variant:<14} w={w:<3} mse={r['mse']:.3e}  [-1,0]={r['mse_left']:.3e}  [0,1]={r['mse_right']:.3e}")
    write_json(out_dir / "fit_demo.json", {"command": "fit-demo", "kind": args.kind, "seed": int(args.seed),
                                           "results": summary})
    return 0


def cmd_synth(args):
    seeds = tuple(range(int(args.seed), int(args.seed) + int(args.n_seeds)))
    report, grid, surfaces = synthetic_experiment(
        seeds=seeds, n_points=int(args.points), noise_std=float(args.noise), depth=int(args.depth),
        width=int(args.width), epochs=int(args.epochs), lr=float(args.lr), n_pairs=int(args.pairs),
        grid_n=int(args.grid))
    out_dir = Path(args.out_dir)
    for name, pred in surfaces.items():
        write_table(out_dir / f"surface_{name}.csv", ["x", "y", "f_true", "f_pred"],
                    [grid.X[:, 0], grid.X[:, 1], grid.y, pred])
    write_json(out_dir / "synth_report.json", {"command": "synth", "seeds": list(seeds), **report})
    for name, s in report["summary"].items():
        print(f"{name:<14} grid mse={s['mean_grid_mse']:.4g}  x-violations={s['total_violations']}")
    return 0


def cmd_grid(args):
    data = _dataset(args)
    loss, head, n_out = task_setup(data)
    config = _train_config(args, loss)
    space = SearchSpace(tuple(_int_list(args.widths)), tuple(_int_list(args.depths)), tuple(_str_list(args.kinds)))
    runs = int(args.runs)
    if runs > 0:
        result, net = dataset_protocol(data, config, space, split_seed=int(args.split_seed), runs=runs,
                                       best=int(args.best), architecture=args.arch)
        if args.out_model:
            save_model(net, args.out_model)
    else:
        train_part, _ = split_80_20(data, seed=int(args.split_seed))
        _, board = grid_search((train_part.X, train_part.y), data.indicator, space, config,
                               architecture=args.arch, final_activation=head, n_outputs=n_out)
        result = {"split_seed": int(args.split_seed),
                  "leaderboard": [{k: v for k, v in r.items() if k != "report"} for r in board],
                  "selected": {k: board[0][k] for k in ("depth", "width", "kind")}}
    write_json(args.out_report, {"command": "grid", "dataset": data.descriptor.name, "config": asdict(config),
                                 **result})
    for r in result["leaderboard"][:5]:
        print(f"#{r['rank']} depth={r['depth']} width={r['width']} kind={r['kind']} val {config.metric_name}="
              f"{r['val_metric']:.6g} params={r['param_count']}")
    if runs > 0:
        s = result["summary"]
        print(f"test {s['metric']} best {s['best']} of {s['runs']}: {s['mean']:.6g} +/- {s['std']:.6g}")
    return 0


def cmd_export_curve(args):
    if bool(args.model) == bool(args.report):
        raise UsageError("give exactly one of --model or --report")
    if args.report:
        try:
            rep = json.loads(Path(args.report).read_text(encoding="utf-8"))
            runs = rep.get("runs") or [rep]
            history = runs[int(args.run)]["history"]
        except (OSError, json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise DataError(f"{args.report}: no training history ({exc})") from None
        write_table(args.out, ["epoch", "loss"], [np.arange(1, len(history) + 1), history])
        return 0
    net = load_model(args.model)
    i = int(args.feature)
    if not 0 <= i < net.n_inputs:
        raise UsageError(f"--feature must be in [0, {net.n_inputs})")
    norm = net.input_normalization
    mean = np.asarray(norm["mean"]) if norm else np.zeros(net.n_inputs)
    std = np.asarray(norm["std"]) if norm else np.ones(net.n_inputs)
    at = np.asarray(_float_list(args.at)) if args.at else mean.copy()
    if at.shape != (net.n_inputs,):
        raise UsageError(f"--at needs {net.n_inputs} values")
    low = float(args.low) if args.low is not None else mean[i] - 3 * std[i]
    high = float(args.high) if args.high is not None else mean[i] + 3 * std[i]
    xs = np.linspace(low, high, int(args.points))
    X = np.tile(at, (xs.size, 1))
    X[:, i] = xs
    Y = network_forward(net, X)
    names = ["y"] if Y.shape[1] == 1 else [f"y{j}" for j in range(Y.shape[1])]
    write_table(args.out, [f"x{i}"] + names, [xs] + [Y[:, j] for j in range(Y.shape[1])])
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _data_opts(p, cmd):
    _opt(p, cmd, "--dataset", None, help="built-in dataset name")
    _opt(p, cmd, "--descriptor", None, help="dataset descriptor JSON")
    _opt(p, cmd, "--csv", None, help="CSV file with a header row")


def _train_opts(p, cmd, epochs=100, lr=1e-3):
    _opt(p, cmd, "--epochs", epochs, type=int, help="training epochs")
    _opt(p, cmd, "--lr", lr, type=float, help="learning rate")
    _opt(p, cmd, "--batch-size", 32, type=int, help="mini-batch size")
    _opt(p, cmd, "--optimizer", "adam", choices=("adam", "sgd"), help="optimizer")


def build_parser():
    parser = _Parser(prog="mononet", description="Monotone constrained neural networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=None, help="random seed (default: $MONONET_SEED or 0)")
        p.add_argument("--config", default=None, help="JSON file of option values; flags override it")
        return p

    p = add("train", "Train a monotone network on an 80/20 split and save model and report.")
    _data_opts(p, "train")
    _opt(p, "train", "--arch", "type1", choices=("type1", "type2"), help="architecture")
    _opt(p, "train", "--width", "32", help="hidden widths, comma separated")
    _opt(p, "train", "--kind", "relu", choices=("relu", "elu", "selu"), help="activation kind")
    _opt(p, "train", "--selector", None, help="convex,concave,saturated counts or a single family name")
    _opt(p, "train", "--gain", 1.0, type=float, help="init gain of input-fed layers")
    _train_opts(p, "train")
    _opt(p, "train", "--runs", 1, type=int, help="independent seeds")
    _opt(p, "train", "--best", None, type=int, help="aggregate the best N runs (default: all)")
    _opt(p, "train", "--split-seed", 0, type=int, help="seed of the 80/20 split")
    _opt(p, "train", "--out-model", "model.json", help="model output path")
    _opt(p, "train", "--out-report", "report.json", help="report output path")
    _opt(p, "train", "--curve", None, help="write the training loss curve CSV here")
    p.set_defaults(func=cmd_train)

    p = add("eval", "Evaluate a saved model on a dataset split.")
    _opt(p, "eval", "--model", None, help="model JSON")
    _data_opts(p, "eval")
    _opt(p, "eval", "--split", "test", choices=("test", "train", "all"), help="rows to evaluate")
    _opt(p, "eval", "--split-seed", 0, type=int, help="seed of the 80/20 split")
    _opt(p, "eval", "--out-report", None, help="report output path")
    p.set_defaults(func=cmd_eval)

    p = add("verify", "Audit a saved model for monotonicity; exit 1 on any violation.")
    _opt(p, "verify", "--model", None, help="model JSON")
    _data_opts(p, "verify")
    _opt(p, "verify", "--pairs", 10_000, type=int, help="ordering pairs per monotone feature")
    _opt(p, "verify", "--points", 1000, type=int, help="finite-difference points per monotone feature")
    _opt(p, "verify", "--out-report", "verify.json", help="report output path")
    p.set_defaults(func=cmd_verify)

    p = add("fit-demo", "Fit x^3 on [-1, 1] with unconstrained, convex-only and three-activation nets.")
    _opt(p, "fit-demo", "--out-dir", "fit_demo", help="output directory")
    _opt(p, "fit-demo", "--kind", "relu", choices=("relu", "elu", "selu"), help="activation kind")
    _opt(p, "fit-demo", "--widths", "2,32", help="hidden widths")
    _opt(p, "fit-demo", "--points", 200, type=int, help="training points")
    _opt(p, "fit-demo", "--noise", 0.0, type=float, help="target noise std")
    _opt(p, "fit-demo", "--epochs", 1000, type=int, help="training epochs")
    _opt(p, "fit-demo", "--lr", 1e-2, type=float, help="learning rate")
    p.set_defaults(func=cmd_fit_demo)

    p = add("synth", "Compare the three variants on the noisy two-input synthetic task.")
    _opt(p, "synth", "--out-dir", "synth", help="output directory")
    _opt(p, "synth", "--n-seeds", 1, type=int, help="number of consecutive seeds to average")
    _opt(p, "synth", "--points", 100, type=int, help="training points")
    _opt(p, "synth", "--noise", 0.2, type=float, help="target noise std")
    _opt(p, "synth", "--depth", 2, type=int, help="hidden layers")
    _opt(p, "synth", "--width", 32, type=int, help="hidden width")
    _opt(p, "synth", "--epochs", 500, type=int, help="training epochs")
    _opt(p, "synth", "--lr", 1e-2, type=float, help="learning rate")
    _opt(p, "synth", "--pairs", 10_000, type=int, help="audit pairs")
    _opt(p, "synth", "--grid", 51, type=int, help="evaluation grid points per axis")
    p.set_defaults(func=cmd_synth)

    p = add("grid", "Grid search on the training part; optionally rerun the winner on the test part.")
    _data_opts(p, "grid")
    _opt(p, "grid", "--arch", "type1", choices=("type1", "type2"), help="architecture")
    _opt(p, "grid", "--widths", "4,8,16,32,64", help="hidden widths to try")
    _opt(p, "grid", "--depths", "1,2", help="hidden depths to try")
    _opt(p, "grid", "--kinds", "elu,relu", help="activation kinds to try")
    _train_opts(p, "grid")
    _opt(p, "grid", "--split-seed", 0, type=int, help="seed of the 80/20 split")
    _opt(p, "grid", "--runs", 0, type=int, help="repeated test runs of the winning cell (0 = skip)")
    _opt(p, "grid", "--best", 5, type=int, help="aggregate the best N runs")
    _opt(p, "grid", "--out-report", "grid.json", help="report output path")
    _opt(p, "grid", "--out-model", None, help="save the best rerun model here")
    p.set_defaults(func=cmd_grid)

    p = add("export-curve", "Export a 1-D model response or a training loss curve as CSV.")
    _opt(p, "export-curve", "--model", None, help="model JSON")
    _opt(p, "export-curve", "--report", None, help="train report JSON (loss curve mode)")
    _opt(p, "export-curve", "--run", 0, type=int, help="run index inside the report")
    _opt(p, "export-curve", "--feature", 0, type=int, help="input feature to sweep")
    _opt(p, "export-curve", "--at", None, help="base point for the other inputs (default: training mean)")
    _opt(p, "export-curve", "--low", None, type=float, help="sweep start")
    _opt(p, "export-curve", "--high", None, type=float, help="sweep end")
    _opt(p, "export-curve", "--points", 201, type=int, help="sweep points")
    _opt(p, "export-curve", "--out", "curve.csv", help="CSV output path")
    p.set_defaults(func=cmd_export_curve)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = _resolve(parser.parse_args(argv))
        if getattr(args, "model", "") is None and args.command in ("eval", "verify"):
            raise UsageError("--model is required")
        return args.func(args)
    except UsageError as exc:
        print(f"mononet: error: {exc}", file=sys.stderr)
        return 1
    except TrainingDivergedError as exc:
        print(f"mononet: {exc}", file=sys.stderr)
        return 2
    except (DataError, ModelFormatError, OSError, ValueError) as exc:
        print(f"mononet: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
