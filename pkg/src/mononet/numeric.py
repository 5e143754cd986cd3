"""Affine forward/backward passes and a central-difference gradient oracle.

Weights follow the ``(n_in, n_out)`` layout, so ``affine_forward`` computes
``x @ W + b``.  Inputs may be a single vector or a ``(batch, n_in)`` array.
"""
import numpy as np

FD_STEP = 1e-5


def _matrix(W, name="W"):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ValueError(f"{name} contains non-finite entries")
    return W


def affine_forward(W, x, b):
    """Return ``x @ W + b``; rows of a batched ``x`` are independent."""
    W = _matrix(W)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = W.shape
    if x.shape[-1:] != (n,) or x.ndim > 2:
        raise ValueError(f"input shape {x.shape} does not match weight rows {n}")
    if b.shape != (m,):
        raise ValueError(f"bias shape {b.shape} does not match weight columns {m}")
    return x @ W + b


def affine_backward(W, x, grad_out):
    """Gradients of the affine map w.r.t. ``W``, ``b`` and ``x``.

    For batched input the weight and bias gradients are summed over rows.
    """
    W = _matrix(W)
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(grad_out, dtype=np.float64)
    n, m = W.shape
    if x.shape[-1:] != (n,) or g.shape[-1:] != (m,) or x.ndim != g.ndim:
        raise ValueError(f"shape mismatch: W {W.shape}, x {x.shape}, grad_out {g.shape}")
    if x.ndim == 1:
        grad_w = np.outer(x, g)
        grad_b = g.copy()
    else:
        if x.shape[0] != g.shape[0]:
            raise ValueError(f"batch mismatch: x {x.shape}, grad_out {g.shape}")
        grad_w = x.T @ g
        grad_b = g.sum(axis=0)
    return grad_w, grad_b, g @ W.T


def finite_difference_gradient(f, x, step=FD_STEP):
    """Central-difference gradient of scalar ``f`` at ``x`` (any shape)."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x = np.array(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = float(f(x))
        flat[i] = orig - step
        down = float(f(x))
        flat[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise ValueError(f"non-finite function value while differencing coordinate {i}")
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def relative_error(a, b, floor=1e-12):
    """Norm-wise relative error ``||a - b|| / max(||a||, ||b||)``."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return float(np.linalg.norm(a - b) / denom)
