"""Monotone constrained dense layer.

Stored weights are free parameters.  At every forward pass the effective
weights are rebuilt through the sign operator ``|.|_t``: columns of inputs
declared increasing (``t = 1``) use ``|w|``, decreasing ones (``t = -1``)
use ``-|w|`` and free inputs (``t = 0``) use ``w`` unchanged.  Monotonicity
therefore never depends on what the optimiser does to the raw weights.
"""
from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind, ActivationSelector, combined, combined_derivative
from .numeric import affine_backward, affine_forward


def as_indicator(t, n=None):
    t = np.asarray(t)
    if t.ndim != 1:
        raise ValueError(f"indicator must be 1-D, got shape {t.shape}")
    if not np.all(np.isin(t, (-1, 0, 1))):
        raise ValueError(f"indicator entries must be in {{-1, 0, 1}}, got {t.tolist()}")
    if n is not None and t.shape[0] != n:
        raise ValueError(f"indicator length {t.shape[0]} does not match input width {n}")
    return t.astype(np.int8)


def apply_indicator(M, t):
    """Sign operator on an ``(m, n)`` matrix; ``t`` indexes its columns."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    t = as_indicator(t, M.shape[1])
    mag = np.abs(M)
    return np.where(t == 1, mag, np.where(t == -1, -mag, M))


@dataclass(eq=False)
class MonotoneDenseLayer:
    weights: np.ndarray  # (n, m), unconstrained storage
    bias: np.ndarray  # (m,)
    indicator: np.ndarray  # (n,) in {-1, 0, 1}
    selector: ActivationSelector
    kind: ActivationKind = ActivationKind.RELU
    output_is_linear: bool = False

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        n, m = self.weights.shape
        if self.bias.shape != (m,):
            raise ValueError(f"bias length {self.bias.shape[0]} does not match width {m}")
        self.indicator = as_indicator(self.indicator, n)
        self.selector = ActivationSelector(*self.selector).validate(m)
        self.kind = ActivationKind.parse(self.kind)
        self.output_is_linear = bool(self.output_is_linear)

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.weights.shape[1]

    def effective_weights(self):
        """Constrained weights in ``(n, m)`` layout."""
        return apply_indicator(self.weights.T, self.indicator).T

    def copy(self) -> "MonotoneDenseLayer":
        return MonotoneDenseLayer(
            self.weights.copy(), self.bias.copy(), self.indicator.copy(),
            self.selector, self.kind, self.output_is_linear,
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n_in,
            "m": self.n_out,
            "kind": self.kind.value,
            "t": [int(v) for v in self.indicator],
            "s": list(self.selector),
            "W": [float(v) for v in self.weights.ravel()],
            "b": [float(v) for v in self.bias],
            "output_is_linear": self.output_is_linear,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonotoneDenseLayer":
        n, m = int(d["n"]), int(d["m"])
        W = np.asarray(d["W"], dtype=np.float64)
        if W.size != n * m:
            raise ValueError(f"layer W has {W.size} entries, expected {n}x{m}")
        return cls(W.reshape(n, m), d["b"], d["t"], tuple(d["s"]), d["kind"], d["output_is_linear"])


def init_layer(n, m, indicator=None, selector=None, kind="relu", output_is_linear=False, rng=None, gain=1.0):
    """Glorot-uniform weights (limit scaled by ``gain``) on the free parameters, zero bias."""
    if n < 0 or m < 1:
        raise ValueError(f"invalid layer shape ({n}, {m})")
    rng = np.random.default_rng(rng)
    limit = gain * np.sqrt(6.0 / (n + m))
    W = rng.uniform(-limit, limit, size=(n, m))
    t = np.ones(n, dtype=np.int8) if indicator is None else indicator
    sel = ActivationSelector.parse(selector, m)
    return MonotoneDenseLayer(W, np.zeros(m), t, sel, kind, output_is_linear)


def layer_forward(layer, x, backend=None):
    """Return ``(y, h)`` where ``h`` is the pre-activation cache."""
    h = affine_forward(layer.effective_weights(), x, layer.bias)
    if layer.output_is_linear:
        return h, h
    return combined(layer.selector, layer.kind, h, backend=backend), h


def layer_backward(layer, x, h, grad_y, backend=None):
    """Gradients w.r.t. stored weights, bias and input.

    The sign operator contributes ``t_i * sign(w)`` per constrained entry
    (``sign(0) = 0``) and 1 for free inputs.
    """
    grad_y = np.asarray(grad_y, dtype=np.float64)
    if grad_y.shape != np.shape(h):
        raise ValueError(f"grad_y shape {grad_y.shape} does not match cache {np.shape(h)}")
    if layer.output_is_linear:
        grad_h = grad_y
    else:
        grad_h = grad_y * combined_derivative(layer.selector, layer.kind, h, backend=backend)
    grad_eff, grad_b, grad_x = affine_backward(layer.effective_weights(), x, grad_h)
    t = layer.indicator[:, None].astype(np.float64)
    factor = np.where(t == 0, 1.0, t * np.sign(layer.weights))
    return grad_eff * factor, grad_b, grad_x


def param_count(layer) -> int:
    return layer.n_in * layer.n_out + layer.n_out
