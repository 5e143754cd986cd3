"""Convex, concave and saturated activations built from one base function.

The base family holds zero-centred, increasing, convex, lower-bounded
functions (ReLU, ELU with alpha=1, SELU).  From a base ``f`` we derive

* ``reflected(x) = -f(-x)``: concave, increasing, upper-bounded;
* ``saturated(x)``: ``f(x + 1) - f(1)`` for ``x < 0`` and
  ``reflected(x - 1) + f(1)`` otherwise; bounded on both sides.

A layer of width ``m`` partitions its units with an
:class:`ActivationSelector` ``(convex, concave, saturated)``.
"""
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from ._kernels import SELU_ALPHA, SELU_LAMBDA


class ActivationKind(str, Enum):
    RELU = "relu"
    ELU = "elu"
    SELU = "selu"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, value) -> "ActivationKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown activation kind {value!r}; expected one of {names}") from None


_CODES = {ActivationKind.RELU: K.RELU, ActivationKind.ELU: K.ELU, ActivationKind.SELU: K.SELU}


class ActivationSelector(NamedTuple):
    """Unit counts per branch; units are laid out convex, concave, saturated."""

    convex: int
    concave: int
    saturated: int

    @property
    def width(self) -> int:
        return self.convex + self.concave + self.saturated

    def validate(self, m: int | None = None) -> "ActivationSelector":
        if min(self) < 0:
            raise ValueError(f"selector counts must be non-negative, got {tuple(self)}")
        if m is not None and self.width != m:
            raise ValueError(f"selector {tuple(self)} sums to {self.width}, layer width is {m}")
        return self

    @classmethod
    def default(cls, m: int) -> "ActivationSelector":
        """Roughly even split that keeps all three branches once ``m >= 3``."""
        k = m // 3 + (1 if m % 3 == 2 else 0)
        return cls(k, k, m - 2 * k)

    @classmethod
    def parse(cls, value, m: int | None = None) -> "ActivationSelector":
        if value is None:
            if m is None:
                raise ValueError("width required for default selector")
            return cls.default(m)
        if isinstance(value, str):
            name = value.strip().lower()
            if m is not None and name in ("convex", "concave", "saturated", "default"):
                return {
                    "convex": cls(m, 0, 0),
                    "concave": cls(0, m, 0),
                    "saturated": cls(0, 0, m),
                    "default": cls.default(m),
                }[name]
            value = [int(v) for v in name.replace(":", ",").split(",")]
        sel = cls(*(int(v) for v in value))
        return sel.validate(m)


def base(kind, x):
    """Base convex activation (ReLU, ELU or SELU)."""
    return _scalarize(K.base_np(ActivationKind.parse(kind).code, x), x)


def base_derivative(kind, x):
    return _scalarize(K.base_grad_np(ActivationKind.parse(kind).code, x), x)


def reflected(kind, x):
    """Point reflection of the base activation, ``-base(-x)``."""
    return _scalarize(K.reflected_np(ActivationKind.parse(kind).code, x), x)


def saturated(kind, x):
    return _scalarize(K.saturated_np(ActivationKind.parse(kind).code, x), x)


def lower_bound(kind) -> float:
    """``lim base(x)`` as ``x -> -inf``."""
    kind = ActivationKind.parse(kind)
    return {
        ActivationKind.RELU: 0.0,
        ActivationKind.ELU: -1.0,
        ActivationKind.SELU: -SELU_LAMBDA * SELU_ALPHA,
    }[kind]


def saturation_level(kind) -> float:
    """Bound of ``|saturated(x)|``: ``base(1) - lower_bound``."""
    return float(base(kind, 1.0)) - lower_bound(kind)


def combined(selector, kind, h, backend=None):
    """Apply the partitioned activation along the last axis of ``h``.

    ``h`` may be a vector of length ``m`` or a ``(batch, m)`` array.
    """
    h, squeeze = _as_batch(h)
    sel = ActivationSelector(*selector).validate(h.shape[1])
    code = ActivationKind.parse(kind).code
    out = K.combined_kernel(h, code, sel.convex, sel.concave, backend=backend)
    return out[0] if squeeze else out


def combined_derivative(selector, kind, h, backend=None):
    """Elementwise derivative of :func:`combined`; right derivative at kinks."""
    h, squeeze = _as_batch(h)
    sel = ActivationSelector(*selector).validate(h.shape[1])
    code = ActivationKind.parse(kind).code
    out = K.combined_grad_kernel(h, code, sel.convex, sel.concave, backend=backend)
    return out[0] if squeeze else out


def heavyside_approximant(kind, x, a):
    """Saturated activation rescaled into ``[0, 1]`` and evaluated at ``a * x``.

    Tends to the unit step as ``a`` grows; equals 0.5 at ``x = 0``.
    """
    if not a > 0:
        raise ValueError(f"scale a must be positive, got {a}")
    c = lower_bound(kind)
    top = float(base(kind, 1.0))
    x = np.asarray(x, dtype=np.float64)
    return _scalarize((saturated(kind, a * x) - c + top) / (2.0 * (top - c)), x)


def _as_batch(h):
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        return h[None, :], True
    if h.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D pre-activations, got shape {h.shape}")
    return h, False


def _scalarize(out, x):
    return float(out) if np.ndim(x) == 0 else out
