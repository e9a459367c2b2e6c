"""Slowly varying factors and regular-variation specifications.

A slowly varying factor is either a member of the log-power family
``ell(y) = C (log y)**beta`` or an opaque vectorized callable.  The family is
closed (to leading order) under every transform the asymptotic formulas need:
powers, argument powers, the integral transforms producing ``ell_1`` and
``ell_0``, and de Bruijn conjugation.
"""
from dataclasses import dataclass
import math
from typing import Callable, Optional

import numpy as np

from .errors import ParameterDomainError, UnsupportedSpecError


@dataclass(frozen=True)
class SlowVariation:
    """``ell(y) = C * (log y)**beta`` for ``y >= y_min``, or an opaque callable.

    When ``func`` is given it is used as-is and ``C``/``beta`` are ignored;
    such factors support evaluation and numeric inversion only.
    """

    C: float = 1.0
    beta: float = 0.0
    y_min: float = math.e
    func: Optional[Callable] = None

    def __post_init__(self):
        if self.func is None and not self.C > 0:
            raise ParameterDomainError(f"slowly varying constant must be positive, got {self.C}")
        if not self.y_min > 1:
            raise ParameterDomainError("y_min must exceed 1")

    @property
    def is_log_power(self):
        return self.func is None

    @property
    def is_constant(self):
        return self.func is None and self.beta == 0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(y), dtype=float)
        if self.beta == 0:
            return np.full_like(y, self.C) if y.ndim else float(self.C)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = self.C * np.log(y) ** self.beta
        return out if out.ndim else float(out)

    def _require_family(self, what):
        if self.func is not None:
            raise UnsupportedSpecError(f"{what} is not derivable for an opaque slowly varying function")

    def power(self, p):
        """``ell(y)**p``."""
        self._require_family("a power")
        return SlowVariation(self.C ** p, self.beta * p, self.y_min)

    def scale(self, k):
        """``k * ell(y)``."""
        self._require_family("a rescaling")
        return SlowVariation(self.C * k, self.beta, self.y_min)

    def argument_power(self, a):
        """``ell(y**a) = C a**beta (log y)**beta``."""
        self._require_family("an argument power")
        return SlowVariation(self.C * a ** self.beta, self.beta, self.y_min)

    def conjugate(self):
        """De Bruijn conjugate, ``(C (log y)**b)^# ~ C**-1 (log y)**-b``."""
        self._require_family("a de Bruijn conjugate")
        return SlowVariation(1.0 / self.C, -self.beta, self.y_min)

    def ratio(self, c, y):
        """``ell(c y) / ell(y)``; tends to 1 for a slowly varying function."""
        y = np.asarray(y, dtype=float)
        return self(c * y) / self(y)


@dataclass(frozen=True)
class RegularVariationSpec:
    """Index ``alpha`` in [0, 1] and slowly varying factor ``ell``.

    Encodes the tail relation ``nu_bar(x) ~ ell(1/x) x**-alpha`` as ``x -> 0``.
    """

    alpha: float
    ell: SlowVariation = SlowVariation()

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterDomainError(f"index must lie in [0, 1], got {self.alpha}")

    @property
    def regime(self):
        if self.alpha == 0:
            return "slow"
        if self.alpha == 1:
            return "rapid"
        return "proper"

    @property
    def ell_1(self):
        """``ell_1(y) = int_y^inf ell(u)/u du`` (rapid variation)."""
        ell = self.ell
        ell._require_family("ell_1")
        if not ell.beta < -1:
            raise UnsupportedSpecError("ell_1 diverges unless beta < -1")
        return SlowVariation(ell.C / (-ell.beta - 1.0), ell.beta + 1.0, ell.y_min)

    @property
    def ell_0(self):
        """Factor with ``ell(y) = int_1^y ell_0(u)/u du`` (slow variation)."""
        ell = self.ell
        ell._require_family("ell_0")
        if not ell.beta > 0:
            raise UnsupportedSpecError("ell_0 needs beta > 0 in the log-power family")
        return SlowVariation(ell.C * ell.beta, ell.beta - 1.0, ell.y_min)

    def ell_star_closed(self):
        """Closed-form leading-order ``ell*`` for log-power factors.

        ``ell*(y) = 1 / {ell**(1/a)(y**(1/a))}^#``, which for
        ``ell = C (log y)**b`` is ``C**(1/a) a**(-b/a) (log y)**(b/a)``.
        """
        if self.regime != "proper":
            raise UnsupportedSpecError("ell* is defined for 0 < alpha < 1")
        inner = self.ell.power(1.0 / self.alpha).argument_power(1.0 / self.alpha)
        return inner.conjugate().power(-1.0)
