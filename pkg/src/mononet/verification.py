"""Executable monotonicity, convexity and approximation checks.

Monotonicity is audited in integrated form: for random ``x`` in a sampling
box and a positive step ``d`` along a monotone feature, the network output
at ``x + d e_i`` must not fall below (``t_i = 1``) or rise above
(``t_i = -1``) the output at ``x``.  For softmax heads the logits are
audited, since class probabilities of a multi-class head are coupled.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from .activations import ActivationKind, base, reflected
from .network import HiddenSpec, Network, NetworkSpec, build_type1, network_forward
from .numeric import FD_STEP
from .training import TrainConfig, train

ORDER_SLACK = 1e-12


@dataclass
class MonotonicityReport:
    feature: int
    direction: int
    pairs: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


@dataclass
class GradientSignReport:
    feature: int
    direction: int
    points: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


@dataclass
class ConvexityReport:
    mode: str
    triples: int
    violations: int
    worst: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


def sampling_box(X, expand=0.1):
    """Per-feature ``[min, max]`` of ``X`` widened by ``expand`` of the range."""
    X = np.asarray(X, dtype=np.float64)
    lo, hi = X.min(axis=0), X.max(axis=0)
    pad = expand * np.where(hi > lo, hi - lo, 1.0)
    return lo - pad, hi + pad


def default_box(net: Network):
    if net.input_normalization is not None:
        mean = np.asarray(net.input_normalization["mean"])
        std = np.asarray(net.input_normalization["std"])
        return mean - 3 * std, mean + 3 * std
    return -np.ones(net.n_inputs) * 3, np.ones(net.n_inputs) * 3


def _scores(net, X):
    if net.final_activation == "softmax":
        return network_forward(net, X, return_cache=True)[1]["logits"]
    return network_forward(net, X)


def _resolve(net, indicator, box):
    t = net.input_indicator() if indicator is None else np.asarray(indicator)
    if t.shape != (net.n_inputs,):
        raise ValueError(f"indicator length {t.shape} does not match network inputs {net.n_inputs}")
    lo, hi = default_box(net) if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
    return t, lo, hi


def check_pairwise_monotonicity(net: Network, indicator=None, n_pairs=10_000, seed=0, box=None):
    """One :class:`MonotonicityReport` per feature with a non-zero indicator."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    t, lo, hi = _resolve(net, indicator, box)
    rng = np.random.default_rng(seed)
    reports = []
    for i in np.flatnonzero(t):
        X = rng.uniform(lo, hi, size=(n_pairs, net.n_inputs))
        step = (1.0 - rng.random(n_pairs)) * (hi[i] - lo[i])
        X2 = X.copy()
        X2[:, i] += step
        y1, y2 = _scores(net, X), _scores(net, X2)
        drop = (y1 - y2) if t[i] > 0 else (y2 - y1)
        slack = ORDER_SLACK * np.maximum(1.0, np.maximum(np.abs(y1), np.abs(y2)))
        bad = np.any(drop > slack, axis=1)
        worst = float(max(0.0, np.max(drop)))
        reports.append(MonotonicityReport(int(i), int(t[i]), n_pairs, int(bad.sum()), worst))
    return reports


def check_gradient_sign(net: Network, indicator=None, n_points=1000, seed=0, box=None,
                        step=FD_STEP, slack=1e-8):
    """Central-difference partials along each monotone feature carry the declared sign."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    t, lo, hi = _resolve(net, indicator, box)
    rng = np.random.default_rng(seed)
    reports = []
    for i in np.flatnonzero(t):
        X = rng.uniform(lo, hi, size=(n_points, net.n_inputs))
        up, down = X.copy(), X.copy()
        up[:, i] += step
        down[:, i] -= step
        d = (_scores(net, up) - _scores(net, down)) / (2 * step)
        signed = t[i] * d
        bad = np.any(signed < -slack, axis=1)
        reports.append(GradientSignReport(int(i), int(t[i]), n_points, int(bad.sum()),
                                          float(max(0.0, -np.min(signed)))))
    return reports


def _convexity_claim(net: Network, mode):
    if net.final_activation != "linear":
        raise ValueError("convexity claims need a linear head")
    key = "convex" if mode == "convex" else "concave"
    fed_by_input = {id(br.layers[0]) for br in net.branches} if net.branches else {id(net.trunk[0])}
    for layer in net.layers():
        if not layer.output_is_linear and getattr(layer.selector, key) != layer.n_out:
            raise ValueError(f"{mode} claim needs an all-{key} selector, found {tuple(layer.selector)}")
        if id(layer) not in fed_by_input and np.any(layer.indicator != 1):
            raise ValueError(f"{mode} claim needs t = 1 on every layer after the input layer")


def check_convexity(target, mode="convex", n_triples=10_000, seed=0, box=None, slack=1e-10):
    """Midpoint test ``f((a + b) / 2) <= (f(a) + f(b)) / 2`` (``>=`` for concave).

    ``target`` is a :class:`Network` (its selectors must support the claim),
    an activation kind (base for convex, reflected for concave) or a callable
    on ``(k, d)`` arrays.
    """
    if mode not in ("convex", "concave"):
        raise ValueError(f"mode must be convex or concave, got {mode!r}")
    rng = np.random.default_rng(seed)
    if isinstance(target, Network):
        _convexity_claim(target, mode)
        lo, hi = default_box(target) if box is None else box
        f = lambda X: network_forward(target, X)  # noqa: E731
        dim = target.n_inputs
    elif callable(target):
        lo, hi = (-5.0, 5.0) if box is None else box
        f, dim = target, np.size(lo) if np.ndim(lo) else 1
    else:
        kind = ActivationKind.parse(target)
        fn = base if mode == "convex" else reflected
        lo, hi = (-5.0, 5.0) if box is None else box
        f = lambda X: fn(kind, X)  # noqa: E731
        dim = 1
    a = rng.uniform(lo, hi, size=(n_triples, dim))
    b = rng.uniform(lo, hi, size=(n_triples, dim))
    if not isinstance(target, Network) and dim == 1:
        a, b = a[:, 0], b[:, 0]
    fa, fb, fm = (np.asarray(f(z), dtype=np.float64).reshape(n_triples, -1) for z in (a, b, (a + b) / 2))
    gap = fm - (fa + fb) / 2
    if mode == "concave":
        gap = -gap
    tol = slack * np.maximum(1.0, np.maximum(np.abs(fa), np.abs(fb)))
    bad = np.any(gap > tol, axis=1)
    return ConvexityReport(mode, n_triples, int(bad.sum()), float(max(0.0, np.max(gap))))


# ---------------------------------------------------------------------------
# approximation battery
# ---------------------------------------------------------------------------


def _sigmoid5(x):
    return 1.0 / (1.0 + np.exp(-5.0 * x))


# name -> (function, interval, selector, expectation)
BATTERY = {
    "convex": (np.expm1, (0.0, 2.0), "convex", "fit"),
    "concave": (np.log1p, (0.0, 3.0), "concave", "fit"),
    "sigmoidal": (_sigmoid5, (-2.0, 2.0), "saturated", "fit"),
    "cubic": (lambda x: x ** 3, (-1.0, 1.0), "bipolar", "fit"),
    "sigmoidal-convex-only": (_sigmoid5, (-2.0, 2.0), "convex", "fail"),
}
FIT_MSE = 1e-3
FAIL_MSE = 1e-2


@dataclass
class BatteryReport:
    kind: str
    seed: int
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e["passed"] for e in self.entries)

    def to_dict(self):
        return {"kind": self.kind, "seed": self.seed, "passed": self.passed, "entries": self.entries}


def fit_1d(f, interval, selector, kind, seed=0, width=32, epochs=800, lr=1e-2, n_train=256, gain=4.0):
    """Train a one-hidden-layer monotone net on ``f`` over ``interval``.

    Returns ``(net, grid_mse)`` with the error on a 401-point grid.
    """
    a, b = interval
    rng = np.random.default_rng(seed)
    X = rng.uniform(a, b, size=(n_train, 1))
    grid = np.linspace(a, b, 401)[:, None]
    if selector == "bipolar":
        selector = (width // 2, width - width // 2, 0)
    spec = NetworkSpec([1], [HiddenSpec(width, selector=selector)], kind=kind, first_layer_gain=gain)
    net = build_type1(spec, seed=seed)
    report = train(net, (X, f(X[:, 0])), (grid, f(grid[:, 0])),
                   TrainConfig(lr=lr, epochs=epochs, batch_size=32, seed=seed))
    return net, report.test_metric


def universal_fit_battery(kind, seed=0, width=32, epochs=800, targets=None):
    """Fit monotone 1-D targets; each entry records whether its expectation held.

    ``fit`` entries must reach grid MSE below 1e-3; the convex-only sigmoid
    entry is a negative control that must stay above 1e-2.
    """
    kind = ActivationKind.parse(kind)
    report = BatteryReport(kind.value, seed)
    for name in targets or BATTERY:
        f, interval, selector, expect = BATTERY[name]
        _, mse = fit_1d(f, interval, selector, kind, seed=seed, width=width, epochs=epochs)
        ok = mse < FIT_MSE if expect == "fit" else mse > FAIL_MSE
        report.entries.append({"target": name, "selector": selector, "expect": expect,
                               "mse": float(mse), "passed": bool(ok)})
    return report
