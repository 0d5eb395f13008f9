"""
Scalar weights :math:`w(x)` of the quadratic Lyapunov functionals, together with
their derivatives. Stability requires :math:`w(0) \\geq 0` at the clamped end, and
the exponential families are the ones used to design a weight compatible with a
given feedback.
"""

import abc

import numpy as np

from .status import IGEB_INVALID_PARAMETER, IgebError


class WeightFunction(metaclass=abc.ABCMeta):
    """
    Base class representing the scalar weight :math:`w(x)` of a quadratic Lyapunov
    functional along a beam.

    You can inherit from this class to define new weights, implementing
    :py:meth:`compute` accordingly, and :py:meth:`get_hypers` if the weight can be
    described in a configuration file.
    """

    def get_hypers(self):
        """Return the configuration corresponding to this weight"""
        raise NotImplementedError(
            f"this weight ({self.__class__.__name__}) can not be described in "
            "configuration files"
        )

    @abc.abstractmethod
    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        """
        Compute the weight (or its derivative) at the given ``positions``.

        :param positions: positions along the beam where to evaluate the weight
        :param derivative: should this function return the values or the
            derivatives of the weight?
        :returns: evaluated weight function
        """

    def __call__(self, positions) -> np.ndarray:
        return self.compute(np.asarray(positions, dtype=np.float64), derivative=False)

    def derivative(self, positions) -> np.ndarray:
        return self.compute(np.asarray(positions, dtype=np.float64), derivative=True)


class ConstantWeight(WeightFunction):
    """Constant weight, :math:`w(x) = c`"""

    def __init__(self, *, value: float = 0.0):
        self.value = float(value)

    def get_hypers(self):
        return {"type": "constant", "value": self.value}

    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.float64)
        if derivative:
            return np.zeros_like(positions)
        return np.full_like(positions, self.value)


class _IncreasingWeight(WeightFunction):
    """
    Strictly increasing weights :math:`q` such that :math:`q' > \\eta (q - q(0))`
    (``positive`` family) or :math:`q' > \\eta (q(\\ell) - q)` (``negative``
    family) on the whole beam.
    """

    def __init__(self, *, eta: float, length: float, sign: str):
        self.eta = float(eta)
        self.length = float(length)
        self.sign = str(sign)

        if self.sign not in ["positive", "negative"]:
            raise IgebError(
                f"`sign` must be 'positive' or 'negative', got '{self.sign}'",
                IGEB_INVALID_PARAMETER,
            )

        if not self.eta > 0:
            raise IgebError(
                f"`eta` must be strictly positive, got {self.eta}",
                IGEB_INVALID_PARAMETER,
            )

        if not self.length > 0:
            raise IgebError(
                f"`length` must be strictly positive, got {self.length}",
                IGEB_INVALID_PARAMETER,
            )

    def differential_margin(self, n_points: int = 1000) -> float:
        """
        Smallest value of :math:`q' - \\eta (q - q(0))` (positive family) or
        :math:`q' - \\eta (q(\\ell) - q)` (negative family) on a uniform grid of
        ``n_points`` points.
        """
        x = np.linspace(0.0, self.length, n_points)
        values = self(x)
        derivatives = self.derivative(x)
        if self.sign == "positive":
            margin = derivatives - self.eta * (values - values[0])
        else:
            margin = derivatives - self.eta * (values[-1] - values)
        return float(np.min(margin))


class ExponentialWeight(_IncreasingWeight):
    r"""
    Exponential weights going from :math:`a` at :math:`x = 0` to :math:`b` at
    :math:`x = \ell`. The ``positive`` family (:math:`0 \leq a < b`) is

    .. math::

        q(x) = a + e^{-\eta (\ell - x)} \frac{x}{\ell} (b - a)

    and the ``negative`` family (:math:`a < b \leq 0`) is

    .. math::

        q(x) = b - e^{-\eta x} \left(1 - \frac{x}{\ell}\right) (b - a)
    """

    def __init__(self, *, a: float, b: float, eta: float, length: float, sign: str):
        super().__init__(eta=eta, length=length, sign=sign)
        self.a = float(a)
        self.b = float(b)

        if self.sign == "positive" and not 0 <= self.a < self.b:
            raise IgebError(
                f"positive exponential weights require 0 <= a < b, got a={self.a} "
                f"and b={self.b}",
                IGEB_INVALID_PARAMETER,
            )

        if self.sign == "negative" and not self.a < self.b <= 0:
            raise IgebError(
                f"negative exponential weights require a < b <= 0, got a={self.a} "
                f"and b={self.b}",
                IGEB_INVALID_PARAMETER,
            )

    def get_hypers(self):
        return {
            "type": "exponential",
            "a": self.a,
            "b": self.b,
            "eta": self.eta,
            "length": self.length,
            "sign": self.sign,
        }

    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        x = np.asarray(positions, dtype=np.float64)
        span = self.b - self.a
        ell = self.length
        if self.sign == "positive":
            exponential = np.exp(-self.eta * (ell - x))
            if derivative:
                return span * exponential * (self.eta * x / ell + 1.0 / ell)
            return self.a + exponential * (x / ell) * span
        else:
            exponential = np.exp(-self.eta * x)
            if derivative:
                return span * exponential * (self.eta * (1.0 - x / ell) + 1.0 / ell)
            return self.b - exponential * (1.0 - x / ell) * span


class PolynomialWeight(_IncreasingWeight):
    r"""
    Polynomial weights of degree :math:`n`, defined for :math:`2 \eta \ell < n` by

    .. math::

        p_n^-(x) = -\left(\frac12 - \frac{\eta x}{n}\right)^n, \qquad
        p_n^+(x) = 2^{-n} + \left(\frac12 + \frac{\eta (x - \ell)}{n}\right)^n

    for the ``negative`` and ``positive`` families respectively.
    """

    def __init__(self, *, n: int, eta: float, length: float, sign: str):
        super().__init__(eta=eta, length=length, sign=sign)
        self.n = int(n)

        if not 2 * self.eta * self.length < self.n:
            raise IgebError(
                "polynomial weights require 2*eta*length < n, got "
                f"2*{self.eta}*{self.length} >= {self.n}",
                IGEB_INVALID_PARAMETER,
            )

    def get_hypers(self):
        return {
            "type": "polynomial",
            "n": self.n,
            "eta": self.eta,
            "length": self.length,
            "sign": self.sign,
        }

    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        x = np.asarray(positions, dtype=np.float64)
        n = self.n
        if self.sign == "negative":
            base = 0.5 - self.eta * x / n
            if derivative:
                return self.eta * base ** (n - 1)
            return -(base**n)
        else:
            base = 0.5 + self.eta * (x - self.length) / n
            if derivative:
                return self.eta * base ** (n - 1)
            return 2.0 ** (-n) + base**n


class ShiftedWeight(WeightFunction):
    """
    Weight shifted to vanish at one end of the beam, :math:`w = q - q(0)`
    (``anchor="start"``) or :math:`w = q - q(\\ell)` (``anchor="end"``).
    """

    def __init__(self, weight: WeightFunction, *, anchor: str, length: float):
        self.weight = weight
        self.anchor = str(anchor)
        self.length = float(length)

        if self.anchor not in ["start", "end"]:
            raise IgebError(
                f"`anchor` must be 'start' or 'end', got '{self.anchor}'",
                IGEB_INVALID_PARAMETER,
            )

        position = 0.0 if self.anchor == "start" else self.length
        self._offset = float(self.weight(np.array([position]))[0])

    def get_hypers(self):
        return {
            "type": "shifted",
            "anchor": self.anchor,
            "length": self.length,
            "weight": self.weight.get_hypers(),
        }

    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        values = self.weight.compute(positions, derivative=derivative)
        if derivative:
            return values
        return values - self._offset


class TranslatedWeight(WeightFunction):
    """
    Weight evaluated at translated positions, :math:`w(x) = q(x + \\text{offset})`.
    This is used to distribute a single weight over a chain of beams.
    """

    def __init__(self, weight: WeightFunction, *, offset: float):
        self.weight = weight
        self.offset = float(offset)

    def get_hypers(self):
        return {
            "type": "translated",
            "offset": self.offset,
            "weight": self.weight.get_hypers(),
        }

    def compute(self, positions: np.ndarray, *, derivative: bool) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.float64)
        return self.weight.compute(positions + self.offset, derivative=derivative)


def exp_weight(a: float, b: float, eta: float, length: float, sign: str):
    """Create an :py:class:`ExponentialWeight`"""
    return ExponentialWeight(a=a, b=b, eta=eta, length=length, sign=sign)


def poly_weight(n: int, eta: float, length: float, sign: str):
    """Create a :py:class:`PolynomialWeight`"""
    return PolynomialWeight(n=n, eta=eta, length=length, sign=sign)


def weight_from_hypers(hypers) -> WeightFunction:
    """Create a weight from the output of :py:meth:`WeightFunction.get_hypers`"""
    hypers = dict(hypers)
    kind = hypers.pop("type", None)
    try:
        if kind == "constant":
            return ConstantWeight(**hypers)
        elif kind == "exponential":
            return ExponentialWeight(**hypers)
        elif kind == "polynomial":
            return PolynomialWeight(**hypers)
        elif kind == "shifted":
            weight = weight_from_hypers(hypers.pop("weight"))
            return ShiftedWeight(weight, **hypers)
        elif kind == "translated":
            weight = weight_from_hypers(hypers.pop("weight"))
            return TranslatedWeight(weight, **hypers)
    except TypeError as e:
        raise IgebError(
            f"invalid parameters for '{kind}' weight: {e}", IGEB_INVALID_PARAMETER
        )

    raise IgebError(f"unknown weight type '{kind}'", IGEB_INVALID_PARAMETER)
