import numpy as np
import pytest

from igeb import IgebError
from igeb.weights import (
    ConstantWeight,
    ExponentialWeight,
    PolynomialWeight,
    ShiftedWeight,
    TranslatedWeight,
    exp_weight,
    poly_weight,
    weight_from_hypers,
)


def _finite_derivative(weight, x, eps=1e-6):
    return (weight(x + eps) - weight(x - eps)) / (2 * eps)


def test_exponential_weights():
    x = np.linspace(0.01, 0.99, 17)

    positive = ExponentialWeight(a=0.0, b=1.0, eta=5.0, length=1.0, sign="positive")
    assert positive(np.array([0.0]))[0] == 0.0
    assert positive(np.array([1.0]))[0] == pytest.approx(1.0)
    np.testing.assert_allclose(
        positive.derivative(x), _finite_derivative(positive, x), rtol=1e-6
    )
    assert np.all(np.diff(positive(x)) > 0)
    assert positive.differential_margin() > 0

    negative = ExponentialWeight(a=-1.0, b=0.0, eta=5.0, length=1.0, sign="negative")
    assert negative(np.array([0.0]))[0] == pytest.approx(-1.0)
    assert negative(np.array([1.0]))[0] == 0.0
    np.testing.assert_allclose(
        negative.derivative(x), _finite_derivative(negative, x), rtol=1e-6
    )
    assert np.all(np.diff(negative(x)) > 0)
    assert negative.differential_margin() > 0


def test_polynomial_weights():
    x = np.linspace(0.01, 0.99, 17)
    for sign in ["positive", "negative"]:
        weight = PolynomialWeight(n=12, eta=5.0, length=1.0, sign=sign)
        np.testing.assert_allclose(
            weight.derivative(x), _finite_derivative(weight, x), rtol=1e-6
        )
        assert np.all(weight.derivative(x) > 0)
        assert weight.differential_margin() > 0

    negative = poly_weight(4, 1.0, 1.0, "negative")
    assert negative(np.array([0.0]))[0] == pytest.approx(-(0.5**4))

    positive = poly_weight(4, 1.0, 1.0, "positive")
    assert positive(np.array([1.0]))[0] == pytest.approx(2 * 0.5**4)


def test_shifted_and_translated():
    base = exp_weight(-1.0, 0.0, 5.0, 1.0, "negative")
    x = np.linspace(0, 1, 11)

    start = ShiftedWeight(base, anchor="start", length=1.0)
    assert start(np.array([0.0]))[0] == 0.0
    np.testing.assert_allclose(start(x), base(x) + 1.0)
    np.testing.assert_equal(start.derivative(x), base.derivative(x))

    end = ShiftedWeight(base, anchor="end", length=1.0)
    assert end(np.array([1.0]))[0] == 0.0

    total = exp_weight(0.0, 1.0, 5.0, 2.0, "positive")
    second = TranslatedWeight(total, offset=1.0)
    np.testing.assert_allclose(second(x), total(x + 1.0))
    np.testing.assert_allclose(second.derivative(x), total.derivative(x + 1.0))

    constant = ConstantWeight(value=0.3)
    np.testing.assert_equal(constant(x), 0.3)
    np.testing.assert_equal(constant.derivative(x), 0.0)


def test_hypers():
    x = np.linspace(0, 1, 5)
    weights = [
        ConstantWeight(value=-0.5),
        exp_weight(0.0, 0.5, 5.0, 1.0, "positive"),
        poly_weight(8, 2.0, 1.0, "negative"),
        ShiftedWeight(
            exp_weight(0.0, 1.0, 5.0, 1.0, "positive"), anchor="end", length=1.0
        ),
        TranslatedWeight(exp_weight(0.0, 1.0, 5.0, 3.0, "positive"), offset=2.0),
    ]
    for weight in weights:
        copy = weight_from_hypers(weight.get_hypers())
        assert type(copy) is type(weight)
        np.testing.assert_equal(copy(x), weight(x))

    with pytest.raises(IgebError, match="unknown weight type 'gaussian'"):
        weight_from_hypers({"type": "gaussian"})

    with pytest.raises(IgebError, match="invalid parameters for 'constant' weight"):
        weight_from_hypers({"type": "constant", "sigma": 3})


def test_errors():
    with pytest.raises(IgebError, match="positive exponential weights require"):
        ExponentialWeight(a=1.0, b=0.5, eta=1.0, length=1.0, sign="positive")

    with pytest.raises(IgebError, match="negative exponential weights require"):
        ExponentialWeight(a=-1.0, b=0.5, eta=1.0, length=1.0, sign="negative")

    with pytest.raises(IgebError, match="`eta` must be strictly positive"):
        ExponentialWeight(a=0.0, b=1.0, eta=0.0, length=1.0, sign="positive")

    with pytest.raises(IgebError, match="`sign` must be 'positive' or 'negative'"):
        PolynomialWeight(n=4, eta=1.0, length=1.0, sign="both")

    with pytest.raises(IgebError, match="polynomial weights require 2\\*eta\\*length"):
        PolynomialWeight(n=4, eta=5.0, length=1.0, sign="positive")

    with pytest.raises(IgebError, match="`anchor` must be 'start' or 'end'"):
        ShiftedWeight(ConstantWeight(), anchor="middle", length=1.0)
