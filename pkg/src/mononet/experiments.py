"""Reproducible experiment drivers shared by the CLI and the acceptance suite."""
import numpy as np

from .data import TabularDataset, generate_synthetic, split_80_20, synthetic_grid
from .network import HiddenSpec, NetworkSpec, build_type1, network_forward
from .training import SearchSpace, TrainConfig, grid_search, make_spec, repeated_runs, train
from .verification import check_pairwise_monotonicity, sampling_box

# variant name -> (indicator value of the constrained input, selector)
VARIANTS = {
    "unconstrained": (0, None),
    "convex": (1, "convex"),
    "three": (1, None),
}


def _grid_mse(pred, truth, mask=None):
    r = (pred - truth) if mask is None else (pred - truth)[mask]
    return float(np.mean(r * r))


def cubic_fit_demo(widths=(2, 32), kind="relu", seed=0, epochs=1000, lr=1e-2, n_train=200,
                   noise_std=0.0, n_grid=201):
    """Fit ``x**3`` on ``[-1, 1]`` with each variant and width.

    Returns ``{(variant, width): result}`` where each result carries the
    evaluation grid, predictions and MSE overall and on each half.
    """
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n_train, 1))
    y = X[:, 0] ** 3
    if noise_std > 0:
        y = y + rng.normal(0.0, noise_std, size=n_train)
    grid = np.linspace(-1.0, 1.0, n_grid)
    truth = grid ** 3
    out = {}
    for name, (t, selector) in VARIANTS.items():
        for w in widths:
            spec = NetworkSpec([t], [HiddenSpec(w, selector=selector)], kind=kind)
            net = build_type1(spec, seed=seed)
            train(net, (X, y), None, TrainConfig(lr=lr, epochs=epochs, seed=seed))
            pred = network_forward(net, grid[:, None])[:, 0]
            out[(name, w)] = {
                "x": grid, "y_true": truth, "y_pred": pred, "net": net,
                "mse": _grid_mse(pred, truth),
                "mse_left": _grid_mse(pred, truth, grid <= 0),
                "mse_right": _grid_mse(pred, truth, grid >= 0),
            }
    return out


def synthetic_experiment(seeds=(0,), n_points=100, noise_std=0.2, depth=2, width=32, epochs=500,
                         lr=1e-2, n_pairs=10_000, grid_n=51, kind="elu"):
    """Train the three variants on noisy ``sign(a) x**3 + b sin(c y)`` samples.

    Monotonicity in ``x`` is audited for every variant, including the
    unconstrained one, over the training sampling box.
    """
    grid = synthetic_grid(grid_n)
    per_seed, surfaces = [], {}
    for seed in seeds:
        data = generate_synthetic(n_points, noise_std, seed=seed)
        box = sampling_box(data.X)
        row = {"seed": int(seed)}
        for name, (t, selector) in VARIANTS.items():
            spec = NetworkSpec([t, 0], [HiddenSpec(width, kind, selector) for _ in range(depth)], kind=kind)
            net = build_type1(spec, seed=seed)
            rep = train(net, (data.X, data.y), (grid.X, grid.y), TrainConfig(lr=lr, epochs=epochs, seed=seed))
            audit = check_pairwise_monotonicity(net, [1, 0], n_pairs, seed, box)[0]
            row[name] = {"grid_mse": rep.test_metric, "violations": audit.violations, "worst": audit.worst}
            if seed == seeds[0]:
                surfaces[name] = network_forward(net, grid.X)[:, 0]
        per_seed.append(row)
    summary = {
        name: {
            "mean_grid_mse": float(np.mean([r[name]["grid_mse"] for r in per_seed])),
            "total_violations": int(sum(r[name]["violations"] for r in per_seed)),
        }
        for name in VARIANTS
    }
    return {"summary": summary, "per_seed": per_seed, "pairs": n_pairs}, grid, surfaces


def task_setup(dataset: TabularDataset):
    d = dataset.descriptor
    loss = "mse" if d.task == "regression" else "cross_entropy"
    return loss, d.head, d.n_outputs


def dataset_protocol(dataset: TabularDataset, config: TrainConfig, space=None, split_seed=0,
                     runs=10, best=5, architecture="type1"):
    """Grid search on the 80% part, then repeated runs of the winner on the 20% test part."""
    space = space or SearchSpace()
    train_part, test_part = split_80_20(dataset, seed=split_seed)
    _, head, n_out = task_setup(dataset)
    _, board = grid_search((train_part.X, train_part.y), dataset.indicator, space, config,
                           architecture=architecture, final_activation=head, n_outputs=n_out)
    top = board[0]
    spec = make_spec(dataset.indicator, top["depth"], top["width"], top["kind"], architecture, head, n_out)
    summary, reports = repeated_runs((train_part.X, train_part.y), (test_part.X, test_part.y),
                                     spec, config, runs=runs, best=best)
    leaderboard = [{k: v for k, v in r.items() if k != "report"} for r in board]
    best_net = reports[summary["best_seeds"][0] - config.seed][1]
    return {"split_seed": split_seed, "leaderboard": leaderboard,
            "selected": {k: top[k] for k in ("depth", "width", "kind")},
            "summary": summary}, best_net

