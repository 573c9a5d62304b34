# Copyright (c) 2026 The cavcool developers
#
# This file is part of cavcool.
#
# cavcool is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# cavcool is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with cavcool.  If not, see <https://www.gnu.org/licenses/>.

"""
The :mod:`cavcool.exc` module defines the various exceptions used in the
application:

.. autoexception:: InvalidConfiguration

.. autoexception:: NoCoolingLasers

.. autoexception:: UndefinedRatio

.. autoexception:: NonFiniteState

.. autoexception:: StepSizeUnderflow

.. autoexception:: InvariantViolation

.. autoexception:: CutoffExceeded

.. autoexception:: DimensionError

.. autoexception:: FitError

.. autoexception:: ImaginaryResidue
"""

import gettext

_ = gettext.gettext


class InvalidConfiguration(ValueError):
    """
    Error raised when a scenario configuration fails to validate. All
    :exc:`ValueError` exceptions raised during validation are available from
    the :attr:`errors` attribute which maps dotted field names (e.g.
    ``params.rabi``) to the :exc:`ValueError` raised.
    """
    def __init__(self, errors):
        self.errors = errors
        super().__init__(str(self))

    def __str__(self):
        return _(
            "Configuration failed to validate with {count} error(s)").format(
                count=len(self.errors))


class NoCoolingLasers(ValueError):
    """
    Error raised when couplings are requested for parameters with an empty
    list of addressed vibrational modes.
    """
    def __init__(self):
        super().__init__(str(self))

    def __str__(self):
        return _("rabi: no cooling lasers configured (empty mode list)")


class UndefinedRatio(ValueError):
    """
    Error raised when a quantity involving the ratio x/y is requested while
    the collective cavity coupling y is zero.
    """
    def __init__(self, quantity):
        self.quantity = quantity
        super().__init__(str(self))

    def __str__(self):
        return _(
            "{quantity} is undefined when the cavity coupling y is zero"
        ).format(quantity=self.quantity)


class NonFiniteState(ValueError):
    """
    Error raised when a vector field is evaluated at a state containing NaN
    or infinite entries. The offending entries are available from
    :attr:`values`.
    """
    def __init__(self, values):
        self.values = values
        super().__init__(str(self))

    def __str__(self):
        return _("state contains non-finite entries: {values}").format(
            values=self.values)


class StepSizeUnderflow(ArithmeticError):
    """
    Error raised by the integrator when the adaptive step size collapses
    below the resolution of the time variable. The :attr:`time` attribute
    holds the time of failure.
    """
    def __init__(self, time, step):
        self.time = time
        self.step = step
        super().__init__(str(self))

    def __str__(self):
        return _(
            "step size underflow at t={time!r} (step {step!r})").format(
                time=self.time, step=self.step)


class InvariantViolation(ArithmeticError):
    """
    Error raised when a propagated quantum state violates one of its
    invariants (trace, Hermiticity, positivity, purity) by more than the
    permitted slack.
    """
    def __init__(self, invariant, time, value, limit):
        self.invariant = invariant
        self.time = time
        self.value = value
        self.limit = limit
        super().__init__(str(self))

    def __str__(self):
        return _(
            "{invariant} violated at t={time!r}: {value!r} exceeds "
            "{limit!r}").format(
                invariant=self.invariant, time=self.time, value=self.value,
                limit=self.limit)


class CutoffExceeded(ValueError):
    """
    Error raised when the population of the highest retained Fock level of a
    bosonic mode exceeds the truncation threshold.
    """
    def __init__(self, mode, population, time):
        self.mode = mode
        self.population = population
        self.time = time
        super().__init__(str(self))

    def __str__(self):
        return _(
            "top Fock level of the {mode} mode holds population "
            "{population:.3g} at t={time!r}; raise cutoff").format(
                mode=self.mode, population=self.population, time=self.time)


class DimensionError(ValueError):
    """
    Error raised when operator dimensions do not conform, or when a
    requested Hilbert space exceeds the dimension budget.
    """


class FitError(ValueError):
    """
    Error raised when an exponential rate cannot be fitted (too few points,
    or non-positive values inside the fit window).
    """


class ImaginaryResidue(ArithmeticError):
    """
    Error raised when expectation values which must be real carry an
    imaginary part larger than the permitted residue.
    """
    def __init__(self, residue, limit):
        self.residue = residue
        self.limit = limit
        super().__init__(str(self))

    def __str__(self):
        return _(
            "imaginary residue {residue:.3g} of real expectation values "
            "exceeds {limit:.3g}").format(
                residue=self.residue, limit=self.limit)
