"""Elementwise activation kernels.

Two interchangeable backends compute the combined activation and its
derivative over a ``(batch, units)`` pre-activation array: a numba
``@njit`` loop kernel and a vectorised numpy path.  The numba path is used
when numba imports cleanly and ``MONONET_NUMBA`` is not set to ``0``.

Kind codes: 0 = relu, 1 = elu (alpha=1), 2 = selu.
"""
import math
import os

import numpy as np

SELU_LAMBDA = 1.0507009873554804934193349852946
SELU_ALPHA = 1.6732632423543772848170429916717

RELU, ELU, SELU = 0, 1, 2

_flag = os.environ.get("MONONET_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "no", "off")

try:
    if not _want_numba:
        raise ImportError("numba disabled by MONONET_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


# ---------------------------------------------------------------------------
# scalar building blocks (compiled when numba is present)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _base(kind, x):
    if kind == RELU:
        return x if x >= 0.0 else 0.0
    if kind == ELU:
        return x if x >= 0.0 else math.expm1(x)
    return SELU_LAMBDA * x if x >= 0.0 else SELU_LAMBDA * SELU_ALPHA * math.expm1(x)


@njit(cache=True)
def _base_grad(kind, x):
    # right derivative at 0
    if x >= 0.0:
        return SELU_LAMBDA if kind == SELU else 1.0
    if kind == RELU:
        return 0.0
    if kind == ELU:
        return math.exp(x)
    return SELU_LAMBDA * SELU_ALPHA * math.exp(x)


@njit(cache=True)
def _reflected_grad(kind, x):
    # d/dx of -base(-x) = base'(-x), right derivative at 0
    if x >= 0.0:
        if kind == RELU:
            return 0.0
        if kind == ELU:
            return math.exp(-x)
        return SELU_LAMBDA * SELU_ALPHA * math.exp(-x)
    return SELU_LAMBDA if kind == SELU else 1.0


@njit(cache=True)
def _saturated(kind, x):
    one = _base(kind, 1.0)
    if x < 0.0:
        return _base(kind, x + 1.0) - one
    return -_base(kind, 1.0 - x) + one


@njit(cache=True)
def _saturated_grad(kind, x):
    if x < 0.0:
        return _base_grad(kind, x + 1.0)
    return _reflected_grad(kind, x - 1.0)


@njit(cache=True)
def _combined_nb(h, kind, n_convex, n_concave, out):
    rows, cols = h.shape
    lim = n_convex + n_concave
    for r in range(rows):
        for j in range(cols):
            v = h[r, j]
            if j < n_convex:
                out[r, j] = _base(kind, v)
            elif j < lim:
                out[r, j] = -_base(kind, -v)
            else:
                out[r, j] = _saturated(kind, v)
    return out


@njit(cache=True)
def _combined_grad_nb(h, kind, n_convex, n_concave, out):
    rows, cols = h.shape
    lim = n_convex + n_concave
    for r in range(rows):
        for j in range(cols):
            v = h[r, j]
            if j < n_convex:
                out[r, j] = _base_grad(kind, v)
            elif j < lim:
                out[r, j] = _reflected_grad(kind, v)
            else:
                out[r, j] = _saturated_grad(kind, v)
    return out


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def base_np(kind, x):
    x = np.asarray(x, dtype=np.float64)
    if kind == RELU:
        return np.where(x >= 0.0, x, 0.0)
    neg = np.expm1(np.minimum(x, 0.0))
    if kind == ELU:
        return np.where(x >= 0.0, x, neg)
    return np.where(x >= 0.0, SELU_LAMBDA * x, SELU_LAMBDA * SELU_ALPHA * neg)


def base_grad_np(kind, x):
    x = np.asarray(x, dtype=np.float64)
    lin = SELU_LAMBDA if kind == SELU else 1.0
    if kind == RELU:
        return np.where(x >= 0.0, lin, 0.0)
    scale = SELU_LAMBDA * SELU_ALPHA if kind == SELU else 1.0
    return np.where(x >= 0.0, lin, scale * np.exp(np.minimum(x, 0.0)))


def reflected_np(kind, x):
    return -base_np(kind, -np.asarray(x, dtype=np.float64))


def reflected_grad_np(kind, x):
    x = np.asarray(x, dtype=np.float64)
    lin = SELU_LAMBDA if kind == SELU else 1.0
    if kind == RELU:
        return np.where(x >= 0.0, 0.0, lin)
    scale = SELU_LAMBDA * SELU_ALPHA if kind == SELU else 1.0
    return np.where(x >= 0.0, scale * np.exp(-np.maximum(x, 0.0)), lin)


def saturated_np(kind, x):
    x = np.asarray(x, dtype=np.float64)
    one = float(base_np(kind, 1.0))
    left = base_np(kind, np.minimum(x, 0.0) + 1.0) - one
    right = -base_np(kind, 1.0 - np.maximum(x, 0.0)) + one
    return np.where(x < 0.0, left, right)


def saturated_grad_np(kind, x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0.0, base_grad_np(kind, x + 1.0), reflected_grad_np(kind, x - 1.0))


def _combined_np(h, kind, n_convex, n_concave):
    lim = n_convex + n_concave
    out = np.empty_like(h)
    out[:, :n_convex] = base_np(kind, h[:, :n_convex])
    out[:, n_convex:lim] = reflected_np(kind, h[:, n_convex:lim])
    out[:, lim:] = saturated_np(kind, h[:, lim:])
    return out


def _combined_grad_np(h, kind, n_convex, n_concave):
    lim = n_convex + n_concave
    out = np.empty_like(h)
    out[:, :n_convex] = base_grad_np(kind, h[:, :n_convex])
    out[:, n_convex:lim] = reflected_grad_np(kind, h[:, n_convex:lim])
    out[:, lim:] = saturated_grad_np(kind, h[:, lim:])
    return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def combined_kernel(h, kind, n_convex, n_concave, backend=None):
    """Apply the partitioned activation to a 2-D array ``h``."""
    h = np.ascontiguousarray(h, dtype=np.float64)
    if _use_numba(backend):
        return _combined_nb(h, kind, n_convex, n_concave, np.empty_like(h))
    return _combined_np(h, kind, n_convex, n_concave)


def combined_grad_kernel(h, kind, n_convex, n_concave, backend=None):
    h = np.ascontiguousarray(h, dtype=np.float64)
    if _use_numba(backend):
        return _combined_grad_nb(h, kind, n_convex, n_concave, np.empty_like(h))
    return _combined_grad_np(h, kind, n_convex, n_concave)


def _use_numba(backend):
    if backend is None:
        return HAVE_NUMBA
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend requested but numba is unavailable")
        return True
    if backend == "numpy":
        return False
    raise ValueError(f"unknown backend {backend!r}")


def active_backend():
    return "numba" if HAVE_NUMBA else "numpy"
