"""Random network generators and a finite-difference oracle shared by tests."""
import numpy as np

from mononet.network import FeatureUnitSpec, HiddenSpec, NetworkSpec, build_network, network_forward
from mononet.numeric import FD_STEP

KINKS = (0.0, 1.0, -1.0)


def random_selector(rng, m):
    a = int(rng.integers(0, m + 1))
    b = int(rng.integers(0, m - a + 1))
    return (a, b, m - a - b)


def random_spec(rng, architecture, kind, n_inputs=None, saturated_only=False):
    n = int(n_inputs or rng.integers(2, 6))
    t = rng.choice([-1, 0, 1], size=n)
    if not np.any(t):
        t[0] = 1
    widths = rng.integers(2, 9, size=int(rng.integers(1, 3)))

    def sel(m):
        return "saturated" if saturated_only else random_selector(rng, int(m))

    hidden = [HiddenSpec(int(w), selector=sel(w)) for w in widths]
    units = {i: FeatureUnitSpec(int(w), selector=sel(w))
             for i, w in enumerate(rng.integers(1, 6, size=n))}
    extractor = [int(w) for w in rng.integers(2, 6, size=int(rng.integers(1, 3)))]
    return NetworkSpec(t.tolist(), hidden, architecture=architecture, kind=kind, per_feature_units=units,
                       free_extractor=extractor, free_selector="saturated" if saturated_only else "convex")


def random_network(rng, architecture, kind, **kw):
    return build_network(random_spec(rng, architecture, kind, **kw), seed=int(rng.integers(2**31)))


def near_kink(net, X, margin=1e-3):
    """True if any pre-activation or constrained weight sits within ``margin`` of a kink."""
    _, cache = network_forward(net, X, return_cache=True)
    for layer, (_, h) in zip(net.layers(), cache["layers"]):
        if np.any((layer.indicator != 0)[:, None] & (np.abs(layer.weights) < margin)):
            return True
        if layer.output_is_linear:
            continue
        if any(np.any(np.abs(h - k) < margin) for k in KINKS):
            return True
    return False


def fd_param_grads(net, X, G, step=FD_STEP):
    """Central differences of ``sum(logits * G)`` w.r.t. every stored parameter."""
    def loss():
        return float(np.sum(network_forward(net, X, return_cache=True)[1]["logits"] * G))

    out = []
    for layer in net.layers():
        pair = []
        for p in (layer.weights, layer.bias):
            g = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + step
                up = loss()
                p[idx] = old - step
                down = loss()
                p[idx] = old
                g[idx] = (up - down) / (2 * step)
            pair.append(g)
        out.append(tuple(pair))
    return out


def fd_input_grad(net, X, G, step=FD_STEP):
    g = np.zeros_like(X)
    for idx in np.ndindex(X.shape):
        up, down = X.copy(), X.copy()
        up[idx] += step
        down[idx] -= step
        lu = np.sum(network_forward(net, up, return_cache=True)[1]["logits"] * G)
        ld = np.sum(network_forward(net, down, return_cache=True)[1]["logits"] * G)
        g[idx] = (lu - ld) / (2 * step)
    return g
