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
The :mod:`cavcool.analysis` module extracts exponential cooling rates from
trajectories and compares them against the predicted rates.

.. autoclass:: RateFit

.. autoclass:: ComparisonReport
    :members:

.. autofunction:: fit_exponential_rate

.. autofunction:: default_fit_window

.. autofunction:: measure_transient

.. autofunction:: predict_rate

.. autofunction:: compare_to_analytic
"""

import math
import gettext
from collections import namedtuple

import numpy as np

from .exc import FitError, UndefinedRatio
from .moments import (
    analytic_rate_common,
    analytic_rate_individual,
    adiabatic_rate,
    linear_rate,
)

_ = gettext.gettext


MIN_FIT_POINTS = 8
REFERENCES = ('closed-form', 'adiabatic', 'linear')


class RateFit(namedtuple('RateFit', (
    'rate',
    'intercept',
    'fit_window',
    'residual_rms',
    'n_points',
    'column',
))):
    """
    The result of :func:`fit_exponential_rate`: the decay *rate* (minus the
    slope of ln(value) against time), the *intercept* of ln(value) at t = 0,
    the first and last fitted times *fit_window*, the root mean square of the
    log residuals, and the number of fitted points.
    """
    __slots__ = ()

    def as_dict(self):
        return {
            'column': self.column,
            'rate': self.rate,
            'intercept': self.intercept,
            'fit_window': list(self.fit_window),
            'residual_rms': self.residual_rms,
            'n_points': self.n_points,
        }


def _json_number(value):
    if value is None or not math.isfinite(value):
        return None
    return value


class ComparisonReport(namedtuple('ComparisonReport', (
    'scenario',
    'fit',
    'reference',
    'analytic_rate',
    'relative_error',
    'tolerance',
    'passed',
    'transient_time',
    'predictions',
    'relative_errors',
    'note',
))):
    """
    The outcome of :func:`compare_to_analytic`. *analytic_rate* is the
    prediction selected by *reference* and *passed* tells whether the fitted
    rate lies within *tolerance* (relative) of it. *predictions* and
    *relative_errors* map every available reference to its rate and the
    fitted rate's relative error.
    """
    __slots__ = ()

    def as_dict(self):
        "Returns the report as a :class:`dict` suitable for JSON output."
        return {
            'scenario': self.scenario,
            'fit': self.fit.as_dict(),
            'reference': self.reference,
            'analytic_rate': self.analytic_rate,
            'relative_error': _json_number(self.relative_error),
            'tolerance': self.tolerance,
            'passed': self.passed,
            'transient_time': self.transient_time,
            'predictions': dict(self.predictions),
            'relative_errors': {
                key: _json_number(value)
                for key, value in self.relative_errors.items()
            },
            'note': self.note,
        }


def fit_exponential_rate(traj, column='m', window=None):
    """
    Fit ln(value) = intercept − rate·t by ordinary least squares to the
    points of *column* in *traj* (a :class:`~cavcool.integrator.Trajectory`)
    whose times lie within *window* (t_lo, t_hi), or all points if *window*
    is :data:`None`. Returns a :class:`RateFit`.

    Raises :exc:`~cavcool.exc.FitError` if fewer than 8 points fall in the
    window, or if any of them is not strictly positive.
    """
    times = np.asarray(traj.times, dtype=float)
    values = np.asarray(traj.column(column), dtype=float)
    if window is not None:
        t_lo, t_hi = window
        if not t_hi > t_lo:
            raise FitError(_(
                'fit window must satisfy t_hi > t_lo, not {window!r}').format(
                    window=tuple(window)))
        inside = (times >= t_lo) & (times <= t_hi)
        times, values = times[inside], values[inside]
    if len(times) < MIN_FIT_POINTS:
        raise FitError(_(
            'at least {count} points are required in the fit window, found '
            '{found}').format(count=MIN_FIT_POINTS, found=len(times)))
    if not np.all(values > 0):
        raise FitError(_(
            '{column} must be strictly positive inside the fit window'
        ).format(column=column))
    logs = np.log(values)
    t_mean = times.mean()
    log_mean = logs.mean()
    centred = times - t_mean
    slope = float(np.dot(centred, logs - log_mean) / np.dot(centred, centred))
    intercept = float(log_mean - slope * t_mean)
    residuals = logs - (intercept + slope * times)
    return RateFit(
        rate=0.0 - slope,
        intercept=intercept,
        fit_window=(float(times[0]), float(times[-1])),
        residual_rms=float(np.sqrt(np.mean(residuals ** 2))),
        n_points=len(times),
        column=column)


def default_fit_window(traj, c, column='m'):
    """
    Returns the conventional fit window for *traj*: it opens at
    t_lo = 10/min(x, y) for the couplings *c* (after the transient), or at
    the start of the trajectory if that is later or min(x, y) is zero, and
    closes where *column* has dropped by a factor e³ below its value at
    t_lo, before it turns non-positive, or at the end of the trajectory.
    """
    times = np.asarray(traj.times, dtype=float)
    values = np.asarray(traj.column(column), dtype=float)
    start = float(times[0])
    slowest = min(c.x, c.y)
    t_lo = 10 / slowest if slowest > 0 else start
    if t_lo < start or t_lo >= times[-1]:
        t_lo = start
    first = int(np.searchsorted(times, t_lo))
    threshold = values[first] * math.exp(-3)
    t_hi = float(times[-1])
    for index in range(first + 1, len(times)):
        if values[index] <= 0:
            t_hi = float(times[index - 1])
            break
        if values[index] <= threshold:
            t_hi = float(times[index])
            break
    return (float(t_lo), t_hi)


def measure_transient(traj, fit, tol):
    """
    Returns the first recorded time of *traj* from which the instantaneous
    decay rate −v̇/v of the fitted column stays within *tol* (relative) of
    the rate of *fit* until the end of the fit window, or :data:`None` if it
    never settles.
    """
    times = np.asarray(traj.times, dtype=float)
    values = np.asarray(traj.column(fit.column), dtype=float)
    if traj.derivatives is not None:
        slopes = np.asarray(traj.derivative(fit.column), dtype=float)
    elif len(times) > 1:
        slopes = np.gradient(values, times)
    else:
        return None
    band = tol * abs(fit.rate)
    if band == 0:
        return None
    inside = times <= fit.fit_window[1]
    times, values, slopes = times[inside], values[inside], slopes[inside]
    with np.errstate(divide='ignore', invalid='ignore'):
        rates = -slopes / values
    settled = (values > 0) & (np.abs(rates - fit.rate) <= band)
    if not settled.size or not settled[-1]:
        return None
    unsettled = np.flatnonzero(~settled)
    first = 0 if unsettled.size == 0 else unsettled[-1] + 1
    return float(times[first])


def _relative_error(fitted, predicted):
    if predicted == 0:
        return 0.0 if abs(fitted) <= 1e-15 else math.inf
    return abs(fitted - predicted) / abs(predicted)


def _predictions(c, kappa, scenario, params):
    closed_form = {
        'common': analytic_rate_common,
        'individual': analytic_rate_individual,
    }[scenario.tag]
    yield 'closed-form', lambda: closed_form(c, kappa)
    if params is not None:
        if scenario.tag == 'common':
            yield 'adiabatic', lambda: adiabatic_rate(c, kappa, scenario)
        yield 'linear', lambda: linear_rate(c, params, scenario)


def _unavailable(reference, scenario):
    if reference == 'adiabatic' and scenario.tag != 'common':
        return ValueError(_(
            'the adiabatic reference only applies to the common mode'))
    return ValueError(_(
        'the {reference} reference needs the physical parameters'
    ).format(reference=reference))


def predict_rate(c, kappa, scenario, reference='closed-form', params=None):
    """
    Returns the cooling rate that *reference* predicts for the couplings
    *c*, cavity decay *kappa* and *scenario*, as used by
    :func:`compare_to_analytic`. Raises :exc:`~cavcool.exc.UndefinedRatio`
    when y is zero.
    """
    if reference not in REFERENCES:
        raise ValueError(_(
            'unknown reference {reference!r}; expected one of {choices}'
        ).format(reference=reference, choices=', '.join(REFERENCES)))
    for name, predict in _predictions(c, kappa, scenario, params):
        if name == reference:
            return predict()
    raise _unavailable(reference, scenario)


def compare_to_analytic(fit, c, kappa, scenario, tol,
                        reference='closed-form', params=None, traj=None):
    """
    Compare the fitted rate of *fit* with the rates predicted for the
    couplings *c*, cavity decay *kappa* and *scenario* (a
    :class:`~cavcool.moments.ScenarioKind`) and return a
    :class:`ComparisonReport`.

    *reference* selects the prediction the verdict uses: "closed-form" (the
    closed-form cooling law of the scenario), "adiabatic" (common mode only)
    or "linear" (both of which need the
    :class:`~cavcool.model.PhysicalParams` *params*). The
    comparison passes when the relative error is at most *tol*. A zero
    prediction passes only if the fitted rate is zero as well. When *traj*
    is given the transient time is measured from it.
    """
    if reference not in REFERENCES:
        raise ValueError(_(
            'unknown reference {reference!r}; expected one of {choices}'
        ).format(reference=reference, choices=', '.join(REFERENCES)))
    if not (math.isfinite(tol) and tol >= 0):
        raise ValueError(_('tolerance must be finite and >= 0'))
    predictions = {}
    for name, predict in _predictions(c, kappa, scenario, params):
        try:
            predictions[name] = predict()
        except UndefinedRatio:
            if name == reference:
                raise
    if reference not in predictions:
        raise _unavailable(reference, scenario)
    relative_errors = {
        name: _relative_error(fit.rate, rate)
        for name, rate in predictions.items()
    }
    analytic = predictions[reference]
    error = relative_errors[reference]
    passed = error <= tol
    note = None
    if analytic == 0 and not passed:
        note = _(
            'predicted rate is zero but the fitted rate is {rate:.6g}'
        ).format(rate=fit.rate)
    transient = None if traj is None else measure_transient(traj, fit, tol)
    return ComparisonReport(
        scenario=scenario.tag,
        fit=fit,
        reference=reference,
        analytic_rate=analytic,
        relative_error=error,
        tolerance=tol,
        passed=passed,
        transient_time=transient,
        predictions=predictions,
        relative_errors=relative_errors,
        note=note)
