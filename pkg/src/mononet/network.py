"""Composing monotone dense layers into trainable networks.

Two layouts are supported:

``type1``
    An MLP over the concatenated input.  The first layer carries the
    per-feature monotonicity indicator, every later layer uses ``t = 1``.
``type2``
    Every monotone feature gets its own monotone dense unit; the free
    features go through an unconstrained dense extractor.  The branch
    outputs are concatenated and fed to a ``t = 1`` monotone trunk.

A :class:`Network` holds optional ``branches`` (type2 only) and a ``trunk``
whose last layer is linear; the task head (linear, sigmoid or softmax) is
applied on top of the trunk output.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .activations import ActivationKind, ActivationSelector
from .layer import MonotoneDenseLayer, as_indicator, init_layer, layer_backward, layer_forward
from .layer import param_count as layer_param_count

FORMAT_VERSION = 1
HEADS = ("linear", "sigmoid", "softmax")
ARCHITECTURES = ("type1", "type2")


class ModelFormatError(ValueError):
    """A model file could not be parsed into a network."""


@dataclass
class HiddenSpec:
    width: int
    kind: str | None = None
    selector: object = None  # tuple, "convex"/"concave"/"saturated", or None for the default split


@dataclass
class FeatureUnitSpec:
    width: int = 8
    selector: object = None
    kind: str | None = None


@dataclass
class NetworkSpec:
    indicator: list
    hidden_layers: list = field(default_factory=list)
    architecture: str = "type1"
    kind: str = "relu"
    final_activation: str = "linear"
    n_outputs: int = 1
    # type2 only: a spec applied to every monotone feature, or {feature index: spec}
    per_feature_units: object = None
    free_extractor: list = field(default_factory=list)
    free_selector: object = "convex"
    # scales the init range of layers fed by raw inputs; >1 spreads unit thresholds
    first_layer_gain: float = 1.0

    def __post_init__(self):
        self.indicator = [int(v) for v in as_indicator(self.indicator)]
        self.hidden_layers = [h if isinstance(h, HiddenSpec) else HiddenSpec(int(h)) for h in self.hidden_layers]
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}, got {self.architecture!r}")
        if self.final_activation not in HEADS:
            raise ValueError(f"final activation must be one of {HEADS}, got {self.final_activation!r}")
        for h in self.hidden_layers:
            if h.width < 1:
                raise ValueError(f"hidden widths must be >= 1, got {h.width}")
        if any(w < 1 for w in self.free_extractor):
            raise ValueError(f"extractor widths must be >= 1, got {self.free_extractor}")
        if self.final_activation == "sigmoid" and self.n_outputs != 1:
            raise ValueError("sigmoid head requires a single output")
        if self.final_activation == "softmax" and self.n_outputs < 2:
            raise ValueError("softmax head requires at least two outputs")


@dataclass
class Branch:
    inputs: list
    layers: list


@dataclass(eq=False)
class Network:
    n_inputs: int
    trunk: list
    architecture: str = "type1"
    final_activation: str = "linear"
    branches: list = field(default_factory=list)
    input_normalization: dict | None = None

    def layers(self):
        """All layers in parameter order: branch layers, then the trunk."""
        out = [layer for br in self.branches for layer in br.layers]
        return out + list(self.trunk)

    @property
    def n_outputs(self) -> int:
        return self.trunk[-1].n_out

    def copy(self) -> "Network":
        return Network(
            self.n_inputs,
            [layer.copy() for layer in self.trunk],
            self.architecture,
            self.final_activation,
            [Branch(list(b.inputs), [layer.copy() for layer in b.layers]) for b in self.branches],
            None if self.input_normalization is None else json.loads(json.dumps(self.input_normalization)),
        )

    def input_indicator(self):
        """Effective per-input monotonicity declared by the first layers."""
        if not self.branches:
            return np.asarray(self.trunk[0].indicator, dtype=np.int8)
        t = np.zeros(self.n_inputs, dtype=np.int8)
        for br in self.branches:
            if len(br.inputs) == 1 and br.layers[0].indicator[0] != 0:
                t[br.inputs[0]] = br.layers[0].indicator[0]
        return t

    def predict(self, x, backend=None):
        return network_forward(self, x, backend=backend)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _output_layer(n_in, spec, rng, indicator=None):
    return init_layer(
        n_in, spec.n_outputs, indicator=indicator, selector=(spec.n_outputs, 0, 0),
        kind=spec.kind, output_is_linear=True, rng=rng,
    )


def _trunk(n_in, spec, rng, first_indicator=None):
    layers = []
    for k, h in enumerate(spec.hidden_layers):
        first = k == 0 and first_indicator is not None
        t = first_indicator if first else None
        layers.append(init_layer(n_in, h.width, indicator=t, selector=h.selector,
                                 kind=h.kind or spec.kind, rng=rng,
                                 gain=spec.first_layer_gain if first else 1.0))
        n_in = h.width
    t = first_indicator if not layers else None
    layers.append(_output_layer(n_in, spec, rng, indicator=t))
    return layers


def build_type1(spec: NetworkSpec, seed=0) -> Network:
    if spec.architecture != "type1":
        raise ValueError(f"expected a type1 spec, got {spec.architecture!r}")
    rng = np.random.default_rng(seed)
    n = len(spec.indicator)
    trunk = _trunk(n, spec, rng, first_indicator=np.asarray(spec.indicator, dtype=np.int8))
    return Network(n, trunk, "type1", spec.final_activation)


def _unit_spec(spec, i):
    units = spec.per_feature_units
    if isinstance(units, dict):
        units = units.get(i)
    if units is None:
        width = spec.hidden_layers[0].width if spec.hidden_layers else 8
        return FeatureUnitSpec(width)
    return units if isinstance(units, FeatureUnitSpec) else FeatureUnitSpec(int(units))


def build_type2(spec: NetworkSpec, seed=0) -> Network:
    if spec.architecture != "type2":
        raise ValueError(f"expected a type2 spec, got {spec.architecture!r}")
    n = len(spec.indicator)
    if n < 1:
        raise ValueError("type2 networks need at least one input feature")
    rng = np.random.default_rng(seed)
    branches = []
    width = 0
    for i, t in enumerate(spec.indicator):
        if t == 0:
            continue
        u = _unit_spec(spec, i)
        if u.width < 1:
            raise ValueError(f"feature unit width must be >= 1, got {u.width}")
        layer = init_layer(1, u.width, indicator=[t], selector=u.selector,
                           kind=u.kind or spec.kind, rng=rng, gain=spec.first_layer_gain)
        branches.append(Branch([i], [layer]))
        width += u.width
    free = [i for i, t in enumerate(spec.indicator) if t == 0]
    if free:
        widths = spec.free_extractor or [_unit_spec(spec, None).width]
        layers, n_in = [], len(free)
        for w in widths:
            layers.append(init_layer(n_in, w, indicator=np.zeros(n_in, dtype=np.int8),
                                     selector=ActivationSelector.parse(spec.free_selector, w),
                                     kind=spec.kind, rng=rng,
                                     gain=1.0 if layers else spec.first_layer_gain))
            n_in = w
        branches.append(Branch(free, layers))
        width += n_in
    return Network(n, _trunk(width, spec, rng), "type2", spec.final_activation, branches)


def build_network(spec: NetworkSpec, seed=0) -> Network:
    if spec.architecture == "type1":
        return build_type1(spec, seed)
    return build_type2(spec, seed)


def param_count(net: Network) -> int:
    return sum(layer_param_count(layer) for layer in net.layers())


# ---------------------------------------------------------------------------
# forward / backward
# ---------------------------------------------------------------------------


def _head(z, kind):
    if kind == "linear":
        return z
    if kind == "sigmoid":
        # split by sign to stay overflow-free
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _run(layers, z, cache, affine, backend):
    for layer in layers:
        y, h = layer_forward(layer, z, backend=backend)
        cache.append((z, h))
        if affine is not None and not layer.output_is_linear:
            y = affine[0] * y + affine[1]
        z = y
    return z


def network_forward(net: Network, x, activation_affine=None, return_cache=False, backend=None):
    """Evaluate the network on ``x`` (a vector or a ``(batch, n_inputs)`` array).

    ``activation_affine=(a, b)`` replaces every hidden activation ``r`` with
    ``a * r + b``.  With ``return_cache`` the result is ``(out, cache)`` where
    the cache also carries the pre-head logits under ``"logits"``.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.n_inputs:
        raise ValueError(f"input shape {x.shape} does not match network input width {net.n_inputs}")
    if net.input_normalization is not None:
        mean, std = _norm_stats(net)
        x = (x - mean) / std
    layer_cache = []
    if net.branches:
        parts = [_run(br.layers, x[:, br.inputs], layer_cache, activation_affine, backend)
                 for br in net.branches]
        z = np.concatenate(parts, axis=1)
    else:
        z = x
    logits = _run(net.trunk, z, layer_cache, activation_affine, backend)
    out = _head(logits, net.final_activation)
    if squeeze:
        out = out[0]
    if return_cache:
        return out, {"x": x, "layers": layer_cache, "logits": logits}
    return out


def network_backward(net: Network, cache, grad_logits, backend=None):
    """Backpropagate a gradient w.r.t. the pre-head logits.

    Returns ``(grads, grad_x)`` with ``grads`` a list of ``(dW, db)`` pairs
    aligned with :meth:`Network.layers`.
    """
    layers = net.layers()
    entries = cache["layers"]
    grads = [None] * len(layers)
    g = np.asarray(grad_logits, dtype=np.float64)
    n_branch = len(layers) - len(net.trunk)
    for k in range(len(layers) - 1, n_branch - 1, -1):
        z, h = entries[k]
        gw, gb, g = layer_backward(layers[k], z, h, g, backend=backend)
        grads[k] = (gw, gb)
    x = cache["x"]
    scale = 1.0 if net.input_normalization is None else _norm_stats(net)[1]
    if not net.branches:
        return grads, g / scale
    grad_x = np.zeros_like(x)
    k_end = n_branch
    offsets = np.cumsum([0] + [br.layers[-1].n_out for br in net.branches])
    for b_idx in range(len(net.branches) - 1, -1, -1):
        br = net.branches[b_idx]
        gb_out = g[:, offsets[b_idx]:offsets[b_idx + 1]]
        k_start = k_end - len(br.layers)
        for k in range(k_end - 1, k_start - 1, -1):
            z, h = entries[k]
            gw, gbias, gb_out = layer_backward(layers[k], z, h, gb_out, backend=backend)
            grads[k] = (gw, gbias)
        grad_x[:, br.inputs] += gb_out
        k_end = k_start
    return grads, grad_x / scale


def _norm_stats(net):
    mean = np.asarray(net.input_normalization["mean"], dtype=np.float64)
    std = np.asarray(net.input_normalization["std"], dtype=np.float64)
    if mean.shape != (net.n_inputs,) or std.shape != (net.n_inputs,) or np.any(std <= 0):
        raise ValueError("input normalization must hold n_inputs means and positive stds")
    return mean, std


# ---------------------------------------------------------------------------
# affine rescaling of saturated networks
# ---------------------------------------------------------------------------


def _rescale_layer(layer, alpha, beta):
    out = layer.copy()
    shift = layer.effective_weights().sum(axis=0)
    out.weights = alpha * layer.weights
    out.bias = beta * shift + layer.bias
    return out


def rescale_equivalent(net: Network, alpha: float, beta: float) -> Network:
    """Network with plain saturated activations equal to ``net`` run with
    activation ``alpha * saturated + beta``.

    Every layer fed by hidden activations gets ``W' = alpha * W`` and
    ``b' = beta * |W|_t @ 1 + b``; layers fed by raw inputs are unchanged.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    for layer in net.layers():
        if not layer.output_is_linear and (layer.selector.convex or layer.selector.concave):
            raise ValueError(f"rescaling needs saturated-only hidden layers, found selector {tuple(layer.selector)}")
    out = net.copy()
    for br in out.branches:
        br.layers[1:] = [_rescale_layer(layer, alpha, beta) for layer in br.layers[1:]]
    first = 0 if out.branches else 1
    out.trunk[first:] = [_rescale_layer(layer, alpha, beta) for layer in out.trunk[first:]]
    return out


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def network_to_dict(net: Network) -> dict:
    d = {
        "format_version": FORMAT_VERSION,
        "architecture": net.architecture,
        "final_activation": net.final_activation,
        "n_inputs": net.n_inputs,
        "layers": [layer.to_dict() for layer in net.trunk],
    }
    if net.branches:
        d["branches"] = [{"inputs": list(map(int, b.inputs)), "layers": [layer.to_dict() for layer in b.layers]}
                         for b in net.branches]
    if net.input_normalization is not None:
        d["input_normalization"] = net.input_normalization
    return d


def network_from_dict(d: dict) -> Network:
    if not isinstance(d, dict):
        raise ModelFormatError("model file must contain a JSON object")
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format_version {version!r} (this build reads {FORMAT_VERSION})")
    try:
        trunk = [MonotoneDenseLayer.from_dict(layer) for layer in d["layers"]]
        branches = [Branch([int(i) for i in b["inputs"]], [MonotoneDenseLayer.from_dict(x) for x in b["layers"]])
                    for b in d.get("branches", [])]
        net = Network(int(d["n_inputs"]), trunk, d["architecture"], d["final_activation"],
                      branches, d.get("input_normalization"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model: {exc!r}") from exc
    _check_wiring(net)
    return net


def _check_wiring(net):
    if net.architecture not in ARCHITECTURES or net.final_activation not in HEADS:
        raise ModelFormatError(f"unknown architecture/head {net.architecture!r}/{net.final_activation!r}")
    if not net.trunk or not net.trunk[-1].output_is_linear:
        raise ModelFormatError("trunk must end with a linear output layer")
    chains = [(len(b.inputs), b.layers) for b in net.branches]
    width = sum(b.layers[-1].n_out for b in net.branches) if net.branches else net.n_inputs
    chains.append((width, net.trunk))
    for n_in, layers in chains:
        for layer in layers:
            if layer.n_in != n_in:
                raise ModelFormatError(f"layer input width {layer.n_in} does not match upstream width {n_in}")
            n_in = layer.n_out


def save_model(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> Network:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return network_from_dict(d)


__all__ = [
    "ActivationKind", "Branch", "FeatureUnitSpec", "HiddenSpec", "ModelFormatError", "Network",
    "NetworkSpec", "build_network", "build_type1", "build_type2", "load_model", "network_backward",
    "network_forward", "param_count", "rescale_equivalent", "save_model",
]
