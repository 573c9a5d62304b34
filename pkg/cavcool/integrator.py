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
The :mod:`cavcool.integrator` module provides adaptive explicit Runge-Kutta
integration of real first-order systems (:func:`integrate`) with the
Dormand-Prince 5(4) pair, dense output on a regular recording grid, and a
steady-state test on recorded trajectories (:func:`detect_steady`).

For example, exponential decay over one time unit::

    >>> from cavcool.integrator import integrate
    >>> traj = integrate(lambda t, y: -y, [1.0], (0.0, 1.0))
    >>> traj.times[-1], traj.states[-1]
    (1.0, array([0.36787944]))

.. autoclass:: IntegratorConfig

.. autoclass:: Trajectory
    :members:

.. autoclass:: DormandPrince
    :members:

.. autofunction:: integrate

.. autofunction:: detect_steady
"""

import math
import gettext
from collections import namedtuple

import numpy as np

from .exc import NonFiniteState, StepSizeUnderflow

_ = gettext.gettext


class IntegratorConfig(namedtuple('IntegratorConfig', (
    'rel_tol',
    'abs_tol',
    'max_step',
    'initial_step',
    'max_steps',
    'record_stride',
    'steady_threshold',
    'record_derivatives',
))):
    """
    Controls :func:`integrate`. The local error of every accepted step is
    kept below *abs_tol* + *rel_tol*·|y| componentwise. *record_stride*
    selects a regular output grid (every accepted step is recorded when it
    is :data:`None`). When *steady_threshold* is set, integration stops as
    soon as the derivative max-norm falls below that fraction of the largest
    norm seen so far.
    """
    __slots__ = ()

    def __new__(cls, rel_tol=1e-9, abs_tol=1e-12, max_step=math.inf,
                initial_step=None, max_steps=1000000, record_stride=None,
                steady_threshold=None, record_derivatives=True):
        if max_step is None:
            max_step = math.inf
        self = super().__new__(
            cls, float(rel_tol), float(abs_tol), float(max_step),
            None if initial_step is None else float(initial_step),
            int(max_steps),
            None if record_stride is None else float(record_stride),
            None if steady_threshold is None else float(steady_threshold),
            bool(record_derivatives))
        errors = self.validate()
        if errors:
            raise next(iter(errors.values()))
        return self

    def validate(self):
        """
        Returns a :class:`dict` mapping field names to the :exc:`ValueError`
        describing why that field is invalid.
        """
        errors = {}
        for name in ('rel_tol', 'abs_tol', 'max_step'):
            if not getattr(self, name) > 0:
                errors[name] = ValueError(_(
                    '{name}: must be > 0').format(name=name))
        for name in ('initial_step', 'record_stride', 'steady_threshold'):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                errors[name] = ValueError(_(
                    '{name}: must be finite and > 0').format(name=name))
        if self.max_steps < 1:
            errors['max_steps'] = ValueError(_('max_steps: must be > 0'))
        return errors


class Trajectory:
    """
    The result of :func:`integrate`: the recorded *times* (strictly
    increasing), the *states* at those times (one row per time), the reason
    integration stopped (*terminated_by* is "t_end", "steady_state" or
    "step_limit"), optionally the *derivatives* at the recorded times, and
    optionally the *columns* naming each state component.
    """
    terminations = ('t_end', 'steady_state', 'step_limit')

    def __init__(self, times, states, terminated_by, derivatives=None,
                 columns=None):
        if terminated_by not in self.terminations:
            raise ValueError(_(
                'invalid termination {value!r}').format(value=terminated_by))
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states)
        self.terminated_by = terminated_by
        self.derivatives = (
            None if derivatives is None else np.asarray(derivatives))
        self.columns = None if columns is None else tuple(columns)

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return (
            '<Trajectory points={points} t=[{start!r}, {end!r}] '
            'terminated_by={self.terminated_by}>'.format(
                self=self, points=len(self), start=float(self.times[0]),
                end=float(self.times[-1])))

    def _index(self, column):
        if isinstance(column, str):
            if self.columns is None or column not in self.columns:
                raise KeyError(column)
            return self.columns.index(column)
        return column

    def column(self, column):
        """
        Returns the recorded values of *column*, given by name (when the
        trajectory has :attr:`columns`) or index.
        """
        return self.states[:, self._index(column)]

    def derivative(self, column):
        """
        Returns the recorded derivatives of *column*.
        """
        if self.derivatives is None:
            raise ValueError(_('trajectory has no recorded derivatives'))
        return self.derivatives[:, self._index(column)]


class DormandPrince:
    """
    One step of the Dormand-Prince 5(4) embedded pair for the vector field
    *rhs*. The last stage is evaluated at the propagated solution, so the
    derivative at the end of an accepted step is reused as the first stage
    of the next.
    """
    order = 5

    c = (0.0, 1/5, 3/10, 4/5, 8/9, 1.0, 1.0)

    a = (
        (),
        (1/5,),
        (3/40, 9/40),
        (44/45, -56/15, 32/9),
        (19372/6561, -25360/2187, 64448/6561, -212/729),
        (9017/3168, -355/33, 46732/5247, 49/176, -5103/18656),
        (35/384, 0, 500/1113, 125/192, -2187/6784, 11/84),
    )

    # difference between the fifth and fourth order weights
    e = (
        35/384 - 5179/57600,
        0,
        500/1113 - 7571/16695,
        125/192 - 393/640,
        -2187/6784 + 92097/339200,
        11/84 - 187/2100,
        -1/40,
    )

    def __init__(self, rhs):
        self.rhs = rhs

    def step(self, t, y, f, h):
        """
        Advance *y* (with derivative *f*) at time *t* by *h*. Returns the
        tuple (y_new, f_new, error) where *error* is the embedded estimate of
        the local error.
        """
        k = [f]
        for stage in range(1, 7):
            dy = sum(a_j * k_j for a_j, k_j in zip(self.a[stage], k) if a_j)
            y_stage = y + h * dy
            k.append(np.asarray(
                self.rhs(t + self.c[stage] * h, y_stage), dtype=float))
        # the last stage is evaluated at the propagated solution
        y_new = y_stage
        error = h * sum(e_j * k_j for e_j, k_j in zip(self.e, k) if e_j)
        return y_new, k[6], error


def _hermite(theta, h, y0, f0, y1, f1):
    theta2 = theta * theta
    theta3 = theta2 * theta
    value = (
        (2 * theta3 - 3 * theta2 + 1) * y0 +
        (theta3 - 2 * theta2 + theta) * h * f0 +
        (-2 * theta3 + 3 * theta2) * y1 +
        (theta3 - theta2) * h * f1)
    slope = (
        (6 * theta2 - 6 * theta) * y0 +
        (3 * theta2 - 4 * theta + 1) * h * f0 +
        (-6 * theta2 + 6 * theta) * y1 +
        (3 * theta2 - 2 * theta) * h * f1) / h
    return value, slope


def _rms(v):
    return math.sqrt(float(np.mean(v * v))) if v.size else 0.0


def _initial_step(rhs, t0, y0, f0, config, span):
    # Hairer, Norsett & Wanner's starting step heuristic
    scale = config.abs_tol + config.rel_tol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, span, config.max_step)
    f1 = np.asarray(rhs(t0 + h0, y0 + h0 * f0), dtype=float)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / DormandPrince.order)
    return min(100 * h0, h1, span, config.max_step)


class _Recorder:
    def __init__(self, t0, t1, config):
        self.t0 = t0
        self.t1 = t1
        self.stride = config.record_stride
        self.keep_derivatives = config.record_derivatives
        self.times = []
        self.states = []
        self.derivatives = []
        self.index = 1

    def add(self, t, y, f):
        self.times.append(t)
        self.states.append(np.array(y, copy=True))
        if self.keep_derivatives:
            self.derivatives.append(np.array(f, copy=True))

    def step(self, t, y, f, t_new, y_new, f_new):
        h = t_new - t
        if self.stride is not None:
            # grid points too close to t1 are represented by t1 itself
            limit = self.t1 - 1e-9 * self.stride
            while True:
                tau = self.t0 + self.index * self.stride
                if tau > t_new or tau >= limit:
                    break
                if tau > t:
                    value, slope = _hermite(
                        (tau - t) / h, h, y, f, y_new, f_new)
                    self.add(tau, value, slope)
                self.index += 1
            if t_new == self.t1:
                self.add(t_new, y_new, f_new)
        else:
            self.add(t_new, y_new, f_new)

    def finish(self, t, y, f):
        if self.times[-1] < t:
            self.add(t, y, f)

    def trajectory(self, terminated_by, columns):
        derivatives = (
            np.array(self.derivatives) if self.keep_derivatives else None)
        return Trajectory(
            np.array(self.times), np.array(self.states), terminated_by,
            derivatives, columns)


def integrate(rhs, y0, t_span, config=None, columns=None):
    """
    Integrate ẏ = *rhs*\\ (t, y) from *y0* over *t_span* (t0, t1) and return
    the recorded :class:`Trajectory`. *config* is an
    :class:`IntegratorConfig` (the defaults are used when omitted), and
    *columns* optionally names the state components.

    Raises :exc:`~cavcool.exc.StepSizeUnderflow` if the step size collapses.
    If *config* ``.max_steps`` step attempts do not reach t1 the trajectory
    recorded so far is returned with :attr:`~Trajectory.terminated_by` set to
    "step_limit".
    """
    if config is None:
        config = IntegratorConfig()
    t0, t1 = (float(t) for t in t_span)
    if not t1 > t0:
        raise ValueError(_(
            'expected t1 > t0 in the time span, found {t_span!r}').format(
                t_span=t_span))
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(y.tolist())
    f = np.asarray(rhs(t0, y), dtype=float)
    stepper = DormandPrince(rhs)
    recorder = _Recorder(t0, t1, config)
    recorder.add(t0, y, f)
    if config.initial_step is not None:
        h = min(config.initial_step, t1 - t0, config.max_step)
    else:
        h = _initial_step(rhs, t0, y, f, config, t1 - t0)
    peak = float(np.max(np.abs(f))) if f.size else 0.0
    t = t0
    attempts = 0
    terminated_by = 't_end'
    while t < t1:
        if attempts >= config.max_steps:
            terminated_by = 'step_limit'
            break
        attempts += 1
        h = min(h, config.max_step)
        last = h >= (t1 - t) - 64 * np.finfo(float).eps * max(abs(t1), 1.0)
        if last:
            h = t1 - t
        if h <= 16 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StepSizeUnderflow(t, h)
        y_new, f_new, error = stepper.step(t, y, f, h)
        scale = config.abs_tol + config.rel_tol * np.maximum(
            np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(error) / scale)) if error.size else 0.0
        if not math.isfinite(err):
            h *= 0.2
            continue
        if err <= 1.0:
            t_new = t1 if last else t + h
            recorder.step(t, y, f, t_new, y_new, f_new)
            t, y, f = t_new, y_new, f_new
            norm = float(np.max(np.abs(f))) if f.size else 0.0
            peak = max(peak, norm)
            if (
                    config.steady_threshold is not None and t < t1 and
                    norm <= config.steady_threshold * peak):
                terminated_by = 'steady_state'
                break
            factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h *= factor
    recorder.finish(t, y, f)
    return recorder.trajectory(terminated_by, columns)


def detect_steady(traj, threshold):
    """
    Returns the first recorded time of *traj* after which the max-norm of the
    recorded derivative stays at or below *threshold* times its maximum over
    the trajectory, or :data:`None` if the trajectory never settles. A
    trajectory whose derivative vanishes throughout is steady from its first
    point.
    """
    if len(traj) == 0:
        raise ValueError(_('empty trajectory'))
    if traj.derivatives is None:
        raise ValueError(_('trajectory has no recorded derivatives'))
    derivatives = traj.derivatives.reshape(len(traj), -1)
    norms = np.max(np.abs(derivatives), axis=1)
    peak = norms.max()
    below = norms <= threshold * peak
    if not below[-1]:
        return None
    # index of the first point of the final run of settled points
    unsettled = np.flatnonzero(~below)
    first = 0 if unsettled.size == 0 else unsettled[-1] + 1
    return float(traj.times[first])
