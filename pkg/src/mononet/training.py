"""Losses, optimisers, the training loop and grid search."""
import itertools
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import HiddenSpec, Network, NetworkSpec, build_network, network_backward, network_forward, param_count


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch, message):
        super().__init__(f"training diverged at epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    loss: str = "mse"  # "mse" | "cross_entropy"
    optimizer: str = "adam"  # "adam" | "sgd"
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0
    metric: str | None = None  # defaults: mse for regression, accuracy for classification
    standardize_target: bool = True
    standardize_inputs: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if self.loss not in ("mse", "cross_entropy"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def metric_name(self) -> str:
        if self.metric:
            return self.metric
        return "mse" if self.loss == "mse" else "accuracy"


@dataclass
class SearchSpace:
    widths: tuple = (4, 8, 16, 32, 64)
    depths: tuple = (1, 2)
    kinds: tuple = ("elu", "relu")

    def cells(self):
        return list(itertools.product(self.depths, self.widths, self.kinds))


@dataclass
class TrainReport:
    history: list
    test_metric: float
    metric: str
    param_count: int
    seed: int
    elapsed_seconds: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self, include_timing=False) -> dict:
        d = asdict(self)
        if not include_timing:
            d.pop("elapsed_seconds")
        return d


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


def mse_loss(pred, target):
    """Mean squared error over all entries and its gradient w.r.t. ``pred``."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64).reshape(pred.shape)
    if pred.size == 0:
        raise ValueError("mse_loss of an empty batch")
    r = pred - target
    return float(np.mean(r * r)), 2.0 * r / r.size


PROB_CLIP = 1e-12


def cross_entropy_loss(probs, target):
    """Mean negative log-likelihood of class indices under head probabilities.

    ``probs`` is ``(batch, 1)`` for a sigmoid head (probability of class 1)
    or ``(batch, k)`` for softmax.  The returned gradient is w.r.t. the
    pre-head logits, ``p - onehot``, averaged over the batch.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    y = np.asarray(target).reshape(-1)
    if y.shape[0] != p.shape[0] or y.size == 0:
        raise ValueError(f"target length {y.shape[0]} does not match batch {p.shape[0]}")
    if not np.all(np.equal(np.mod(y, 1), 0)):
        raise ValueError("class targets must be integers")
    y = y.astype(np.int64)
    k = 2 if p.shape[1] == 1 else p.shape[1]
    if y.min() < 0 or y.max() >= k:
        raise ValueError(f"class index out of range [0, {k})")
    n = p.shape[0]
    if p.shape[1] == 1:
        q = np.clip(p[:, 0], PROB_CLIP, 1 - PROB_CLIP)
        value = -np.mean(np.where(y == 1, np.log(q), np.log1p(-q)))
        grad = (p[:, 0] - y)[:, None] / n
    else:
        q = np.clip(p[np.arange(n), y], PROB_CLIP, 1 - PROB_CLIP)
        value = -np.mean(np.log(q))
        grad = p.copy()
        grad[np.arange(n), y] -= 1.0
        grad /= n
    return float(value), grad


# ---------------------------------------------------------------------------
# optimisers
# ---------------------------------------------------------------------------


def init_optimizer_state(params):
    return {"t": 0, "m": [np.zeros_like(p) for p in params], "v": [np.zeros_like(p) for p in params]}


def optimizer_step(params, grads, state, config: TrainConfig):
    """Update ``params`` in place; returns ``(params, state)``."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"param shape {p.shape} does not match grad shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    if config.optimizer == "sgd":
        for p, g in zip(params, grads):
            p -= config.lr * g
        return params, state
    state["t"] += 1
    t = state["t"]
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1 ** t
    corr2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state["m"], state["v"]):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= config.lr * (m / corr1) / (np.sqrt(v / corr2) + config.eps)
    return params, state


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _xy(data):
    if hasattr(data, "X"):
        return np.asarray(data.X, dtype=np.float64), np.asarray(data.y)
    X, y = data
    return np.asarray(X, dtype=np.float64), np.asarray(y)


def _params(net):
    out = []
    for layer in net.layers():
        out.extend((layer.weights, layer.bias))
    return out


def evaluate(net: Network, data, metric: str) -> float:
    X, y = _xy(data)
    out = network_forward(net, X)
    if metric in ("mse", "rmse"):
        mse = float(np.mean((out - np.asarray(y, dtype=np.float64).reshape(out.shape)) ** 2))
        return mse if metric == "mse" else float(np.sqrt(mse))
    if metric == "accuracy":
        labels = (out[:, 0] >= 0.5).astype(np.int64) if out.shape[1] == 1 else np.argmax(out, axis=1)
        return float(np.mean(labels == np.asarray(y).reshape(-1).astype(np.int64)))
    raise ValueError(f"unknown metric {metric!r}")


def input_stats(X):
    """Per-column z-score statistics; constant columns get std 1."""
    X = np.asarray(X, dtype=np.float64)
    std = X.std(axis=0)
    return {"mean": [float(v) for v in X.mean(axis=0)],
            "std": [float(v) if v > 0 else 1.0 for v in std]}


def higher_is_better(metric: str) -> bool:
    return metric == "accuracy"


def train(net: Network, train_data, test_data, config: TrainConfig) -> TrainReport:
    """Fit ``net`` in place with mini-batch gradient descent.

    Regression targets are standardised during fitting (``standardize_target``)
    and the scale is folded back into the output layer afterwards, so the
    trained network predicts in original units.
    """
    start = time.perf_counter()
    X, y = _xy(train_data)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    regression = config.loss == "mse"
    if config.standardize_inputs and net.input_normalization is None:
        net.input_normalization = input_stats(X)
    if regression:
        Y = y.astype(np.float64).reshape(X.shape[0], -1)
        if Y.shape[1] != net.n_outputs:
            raise ValueError(f"target width {Y.shape[1]} does not match network outputs {net.n_outputs}")
        mu = Y.mean(axis=0) if config.standardize_target else np.zeros(Y.shape[1])
        sd = Y.std(axis=0) if config.standardize_target else np.ones(Y.shape[1])
        sd = np.where(sd > 0, sd, 1.0)
        Y = (Y - mu) / sd
    else:
        Y = y.reshape(-1)
        if net.final_activation == "linear":
            raise ValueError("cross-entropy needs a sigmoid or softmax head")

    rng = np.random.default_rng(config.seed)
    params = _params(net)
    state = init_optimizer_state(params)
    n = X.shape[0]
    history = []
    # divergence is detected explicitly below, so overflow warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            order = rng.permutation(n)
            total = 0.0
            for lo in range(0, n, config.batch_size):
                idx = order[lo:lo + config.batch_size]
                out, cache = network_forward(net, X[idx], return_cache=True)
                if regression:
                    value, grad = mse_loss(out, Y[idx])
                    # mse_loss averages over all entries, logits gradient is the same
                else:
                    value, grad = cross_entropy_loss(out, Y[idx])
                if not np.isfinite(value):
                    raise TrainingDivergedError(epoch, "loss is not finite")
                total += value * idx.size
                grads, _ = network_backward(net, cache, grad)
                flat = [g for pair in grads for g in pair]
                try:
                    optimizer_step(params, flat, state, config)
                except FloatingPointError as exc:
                    raise TrainingDivergedError(epoch, str(exc)) from exc
            epoch_loss = total / n
            if regression:
                epoch_loss *= float(np.mean(sd ** 2))
            history.append(epoch_loss)

    if regression:
        out_layer = net.trunk[-1]
        out_layer.weights *= sd[None, :]
        out_layer.bias[:] = out_layer.bias * sd + mu

    metric = config.metric_name
    test_metric = evaluate(net, test_data, metric) if test_data is not None else float("nan")
    return TrainReport(
        history=[float(v) for v in history],
        test_metric=test_metric,
        metric=metric,
        param_count=param_count(net),
        seed=config.seed,
        elapsed_seconds=time.perf_counter() - start,
        config=asdict(config),
    )


# ---------------------------------------------------------------------------
# grid search and repeated runs
# ---------------------------------------------------------------------------


def make_spec(indicator, depth, width, kind, architecture="type1", final_activation="linear", n_outputs=1):
    """Grid cell -> network spec: ``depth`` hidden layers of ``width`` units."""
    hidden = [HiddenSpec(width, kind) for _ in range(depth)]
    return NetworkSpec(indicator, hidden, architecture=architecture, kind=kind,
                       final_activation=final_activation, n_outputs=n_outputs)


def validation_split(n, fraction, seed):
    order = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(round(fraction * n)))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def grid_search(train_data, indicator, space: SearchSpace, config: TrainConfig,
                architecture="type1", final_activation="linear", n_outputs=1, val_fraction=0.2):
    """Exhaustive search over ``space`` on a fixed validation split.

    Returns ``(best_report, leaderboard)``; the leaderboard is ordered by the
    validation metric, then parameter count, then enumeration order.
    """
    cells = space.cells()
    if not cells:
        raise ValueError("empty search space")
    X, y = _xy(train_data)
    fit_idx, val_idx = validation_split(X.shape[0], val_fraction, config.seed)
    fit, val = (X[fit_idx], y[fit_idx]), (X[val_idx], y[val_idx])
    rows = []
    for order, (depth, width, kind) in enumerate(cells):
        spec = make_spec(indicator, depth, width, kind, architecture, final_activation, n_outputs)
        net = build_network(spec, seed=config.seed)
        report = train(net, fit, val, config)
        rows.append({
            "rank": None, "order": order, "depth": depth, "width": width, "kind": kind,
            "val_metric": report.test_metric, "param_count": report.param_count, "report": report,
        })
    sign = -1.0 if higher_is_better(config.metric_name) else 1.0
    rows.sort(key=lambda r: (sign * _nan_last(r["val_metric"], sign), r["param_count"], r["order"]))
    for rank, r in enumerate(rows):
        r["rank"] = rank
    return rows[0]["report"], rows


def _nan_last(v, sign):
    return v if np.isfinite(v) else sign * np.inf


def repeated_runs(train_data, test_data, spec: NetworkSpec, config: TrainConfig, runs=10, best=5):
    """Train ``runs`` seeds of one spec and aggregate the ``best`` test scores."""
    if not 1 <= best <= runs:
        raise ValueError(f"need 1 <= best <= runs, got best={best}, runs={runs}")
    reports = []
    for r in range(runs):
        cfg = TrainConfig(**{**asdict(config), "seed": config.seed + r})
        net = build_network(spec, seed=cfg.seed)
        reports.append((train(net, train_data, test_data, cfg), net))
    scores = np.array([rep.test_metric for rep, _ in reports])
    order = np.argsort(-scores if higher_is_better(config.metric_name) else scores, kind="stable")
    top = scores[order[:best]]
    summary = {
        "metric": config.metric_name,
        "runs": runs,
        "best": best,
        "mean": float(top.mean()),
        "std": float(top.std()),
        "scores": [float(s) for s in scores],
        "best_seeds": [int(config.seed + i) for i in order[:best]],
    }
    return summary, reports
