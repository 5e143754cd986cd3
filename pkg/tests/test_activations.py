import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mononet.activations import (ActivationKind, ActivationSelector, base, base_derivative, combined,
                                 combined_derivative, heavyside_approximant, lower_bound, reflected, saturated,
                                 saturation_level)
from mononet.numeric import FD_STEP

LAM = 1.0507009873554804934193349852946
ALPHA = 1.6732632423543772848170429916717
KINDS = ["relu", "elu", "selu"]


# scalar oracles written straight from the textbook definitions
def o_base(kind, x):
    if kind == "relu":
        return max(x, 0.0)
    if kind == "elu":
        return x if x > 0 else math.expm1(x)
    return LAM * x if x > 0 else LAM * ALPHA * math.expm1(x)


def o_reflected(kind, x):
    return -o_base(kind, -x)


def o_saturated(kind, x):
    one = o_base(kind, 1.0)
    if x < 0:
        return o_base(kind, x + 1.0) - one
    return o_reflected(kind, x - 1.0) + one


finite = st.floats(-30, 30, allow_nan=False)


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=200, deadline=None)
@given(x=finite)
def test_variants_match_oracles(kind, x):
    assert base(kind, x) == pytest.approx(o_base(kind, x), rel=1e-14, abs=1e-14)
    assert reflected(kind, x) == pytest.approx(o_reflected(kind, x), rel=1e-14, abs=1e-14)
    assert saturated(kind, x) == pytest.approx(o_saturated(kind, x), rel=1e-13, abs=1e-13)


def test_frozen_values():
    assert base("relu", -2.0) == 0.0
    assert base("elu", 0.0) == 0.0
    assert base("elu", -1.0) == pytest.approx(-0.6321205588285577, abs=1e-15)
    assert reflected("relu", 2.0) == 0.0
    assert reflected("relu", -2.0) == -2.0
    assert reflected("elu", 1.0) == pytest.approx(0.6321205588285577, abs=1e-15)
    assert saturated("relu", -0.5) == -0.5
    assert saturated("relu", 2.0) == 1.0
    assert saturated("elu", -2.0) == pytest.approx(-1.6321205588285577, abs=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_zero_centred(kind):
    assert base(kind, 0.0) == 0.0
    assert reflected(kind, 0.0) == 0.0
    assert saturated(kind, 0.0) == 0.0


@pytest.mark.parametrize("kind", KINDS)
def test_point_reflection_identity(kind, rng):
    x = rng.normal(scale=5, size=10_000)
    np.testing.assert_allclose(reflected(kind, x), -base(kind, -x), atol=1e-15, rtol=0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("fn", [base, reflected, saturated])
def test_monotone_on_random_pairs(kind, fn, rng):
    a, b = rng.uniform(-20, 20, size=(2, 100_000))
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert np.all(fn(kind, lo) <= fn(kind, hi))


@pytest.mark.parametrize("kind", ["relu", "elu"])
def test_base_convex_reflected_concave(kind, rng):
    a, b = rng.uniform(-5, 5, size=(2, 10_000))
    m = (a + b) / 2
    assert np.all(base(kind, m) <= (base(kind, a) + base(kind, b)) / 2 + 1e-12)
    assert np.all(reflected(kind, m) >= (reflected(kind, a) + reflected(kind, b)) / 2 - 1e-12)


def test_selu_is_not_convex():
    # slope drops from lambda*alpha to lambda at the origin
    assert base_derivative("selu", -1e-9) > base_derivative("selu", 0.0)
    a, b = -0.5, 0.5
    assert base("selu", 0.0) > (base("selu", a) + base("selu", b)) / 2


@pytest.mark.parametrize("kind", KINDS)
def test_saturated_bounded(kind, rng):
    x = rng.uniform(-200, 200, size=10_000)
    bound = saturation_level(kind)
    assert np.all(np.abs(saturated(kind, x)) <= bound + 1e-12)
    assert saturation_level("elu") == 2.0


@pytest.mark.parametrize("kind", KINDS)
def test_saturated_continuous_at_origin(kind):
    eps = 1e-9
    assert abs(saturated(kind, eps) - saturated(kind, -eps)) < 1e-8


def test_selector_default_split():
    assert ActivationSelector.default(32) == (11, 11, 10)
    assert ActivationSelector.default(16) == (5, 5, 6)
    assert ActivationSelector.default(3) == (1, 1, 1)
    assert ActivationSelector.default(2) == (1, 1, 0)
    assert ActivationSelector.default(1) == (0, 0, 1)
    for m in range(1, 70):
        s = ActivationSelector.default(m)
        assert s.width == m and min(s) >= 0
        if m >= 3:
            assert min(s) >= 1


def test_selector_parse():
    assert ActivationSelector.parse("16,16,0", 32) == (16, 16, 0)
    assert ActivationSelector.parse("convex", 4) == (4, 0, 0)
    assert ActivationSelector.parse("concave", 4) == (0, 4, 0)
    assert ActivationSelector.parse("saturated", 4) == (0, 0, 4)
    assert ActivationSelector.parse(None, 32) == (11, 11, 10)
    with pytest.raises(ValueError):
        ActivationSelector.parse("1,1,1", 4)
    with pytest.raises(ValueError):
        ActivationSelector.parse((-1, 2, 1), 2)


def test_kind_parse():
    assert ActivationKind.parse("ELU") is ActivationKind.ELU
    with pytest.raises(ValueError, match="relu"):
        ActivationKind.parse("tanh")


def test_combined_examples():
    np.testing.assert_array_equal(combined((1, 1, 1), "relu", [2.0, 2.0, 2.0]), [2.0, 0.0, 1.0])
    h = np.linspace(-3, 3, 7)
    np.testing.assert_array_equal(combined((7, 0, 0), "elu", h, backend="numpy"), base("elu", h))
    np.testing.assert_array_equal(combined((0, 7, 0), "elu", h, backend="numpy"), reflected("elu", h))
    np.testing.assert_array_equal(combined((0, 0, 7), "elu", h, backend="numpy"), saturated("elu", h))
    with pytest.raises(ValueError):
        combined((1, 1, 0), "relu", [1.0, 2.0, 3.0])


@pytest.mark.parametrize("kind", KINDS)
def test_combined_partition_batch(kind, rng):
    h = rng.normal(scale=3, size=(8, 9))
    out = combined((2, 3, 4), kind, h)
    # numba and numpy may differ in the last ulp of exp
    close = dict(rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(out[:, :2], base(kind, h[:, :2]), **close)
    np.testing.assert_allclose(out[:, 2:5], reflected(kind, h[:, 2:5]), **close)
    np.testing.assert_allclose(out[:, 5:], saturated(kind, h[:, 5:]), **close)


def test_combined_derivative_examples():
    assert not combined_derivative((4, 0, 0), "relu", -np.ones(4)).any()
    assert combined_derivative((0, 0, 1), "relu", [0.0])[0] == 1.0
    assert combined_derivative((1, 0, 0), "relu", [0.0])[0] == 1.0


@pytest.mark.parametrize("kind", KINDS)
def test_combined_derivative_matches_fd(kind, rng):
    sel = (3, 3, 3)
    h = rng.uniform(-4, 4, size=(200, 9))
    # stay clear of the kinks at 0 and +-1
    h = np.where(np.abs(h) < 1e-3, 0.5, h)
    h = np.where(np.abs(np.abs(h) - 1) < 1e-3, 1.5, h)
    fd = (combined(sel, kind, h + FD_STEP) - combined(sel, kind, h - FD_STEP)) / (2 * FD_STEP)
    an = combined_derivative(sel, kind, h)
    np.testing.assert_allclose(an, fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("kind", KINDS)
def test_derivatives_nonnegative(kind, rng):
    h = rng.uniform(-10, 10, size=(100, 9))
    assert np.all(combined_derivative((3, 3, 3), kind, h) >= 0)


def test_heavyside_constants():
    assert lower_bound("relu") == 0.0
    assert lower_bound("elu") == -1.0
    assert lower_bound("selu") == pytest.approx(-LAM * ALPHA)
    x = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(heavyside_approximant("elu", x, 1.0), (saturated("elu", x) + 2) / 4, atol=1e-15)
    np.testing.assert_allclose(heavyside_approximant("relu", x, 1.0), (np.clip(x, -1, 1) + 1) / 2, atol=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_heavyside_midpoint_and_limits(kind):
    for a in (0.5, 1.0, 10.0, 1000.0):
        assert heavyside_approximant(kind, 0.0, a) == 0.5
    assert abs(heavyside_approximant(kind, 10.0, 100.0) - 1.0) < 1e-6
    assert abs(heavyside_approximant(kind, -10.0, 100.0)) < 1e-6
    with pytest.raises(ValueError):
        heavyside_approximant(kind, 1.0, 0.0)


@pytest.mark.parametrize("kind", KINDS)
def test_heavyside_sharpens_with_scale(kind):
    # the smallest |x| that lands within 1e-3 of the step shrinks as a grows
    xs = np.linspace(1e-4, 10, 100_001)

    def delta(a):
        err = np.maximum(np.abs(heavyside_approximant(kind, xs, a) - 1), np.abs(heavyside_approximant(kind, -xs, a)))
        return xs[np.argmax(err < 1e-3)]

    d = [delta(a) for a in (1.0, 10.0, 100.0)]
    assert d[0] > d[1] > d[2]
    x = np.linspace(-5, 5, 1001)
    vals = heavyside_approximant(kind, x, 3.0)
    assert np.all(np.diff(vals) >= 0) and vals.min() >= 0 and vals.max() <= 1
