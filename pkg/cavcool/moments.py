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
The :mod:`cavcool.moments` module implements the semiclassical moment
equations of collective cavity cooling for particles sharing one common
vibrational mode (:func:`rhs_common`) and for particles each with their own
vibrational modes (:func:`rhs_individual`), together with the conserved
quantity, the adiabatic fixed point, and the cooling laws derived from them.

The six real variables are the phonon number m, the photon number n, the
collective inversion s3, the real coherences u1 = i·k1 and u2 = i·k2 (k1
and k2 are anti-Hermitian expectations, hence purely imaginary) and the
phonon-photon correlation k3. In the individual scenario the same names
hold the summed quantities m̃, ñ, s̃3, ũ1, ũ2 and k̃3.

.. data:: MOMENT_COLUMNS

    The names of the moment variables in state-vector order.

.. autoclass:: MomentState
    :members:

.. autoclass:: ScenarioKind

.. autofunction:: initial_state

.. autofunction:: rhs_common

.. autofunction:: rhs_individual

.. autofunction:: moment_field

.. autofunction:: conserved_q

.. autofunction:: adiabatic_fixed_point

.. autofunction:: analytic_rate_common

.. autofunction:: analytic_rate_individual

.. autofunction:: adiabatic_rate

.. autofunction:: linear_rate

.. autofunction:: analytic_m
"""

import gettext
from collections import namedtuple

import numpy as np

from .exc import NonFiniteState, UndefinedRatio

_ = gettext.gettext


MOMENT_COLUMNS = ('m', 'n', 's3', 'u1', 'u2', 'k3')


class MomentState(namedtuple('MomentState', ('t',) + MOMENT_COLUMNS)):
    """
    The moment variables at time *t*.
    """
    __slots__ = ()

    @classmethod
    def from_vector(cls, t, vector):
        """
        Construct an instance from time *t* and a sequence of the six moment
        variables in :data:`MOMENT_COLUMNS` order.
        """
        return cls(t, *(float(v) for v in vector))

    @property
    def vector(self):
        "The six moment variables as a :class:`numpy.ndarray`."
        return np.array(self[1:], dtype=float)


class ScenarioKind(namedtuple('ScenarioKind', (
    'tag',
    'clamp_s3',
    'clamp_cavity',
    'retain_spin_population',
))):
    """
    Selects the vector field and its variants. *tag* is "common" or
    "individual". With *clamp_s3* the s3 coefficient of the coherence
    equations is frozen at −N/2, which makes the equations linear (s3 is
    still integrated). With *clamp_cavity* the photon number and its
    coherence u2 are held at zero. With *retain_spin_population* the
    ⟨S⁺S⁻⟩ ≈ s3 + N/2 contribution dropped by the large-N closure is kept in
    the coherence equations.
    """
    __slots__ = ()
    tags = ('common', 'individual')

    def __new__(cls, tag, clamp_s3=False, clamp_cavity=False,
                retain_spin_population=False):
        if tag not in cls.tags:
            raise ValueError(_(
                'unknown scenario kind {tag!r}; expected one of {tags}'
            ).format(tag=tag, tags=', '.join(cls.tags)))
        return super().__new__(
            cls, tag, bool(clamp_s3), bool(clamp_cavity),
            bool(retain_spin_population))


def initial_state(m0, n_particles, t=0.0, **overrides):
    """
    Returns the :class:`MomentState` with all particles in their ground state
    (s3 = −N/2), *m0* phonons and no photons or coherences, with any of the
    moment variables replaced by keyword *overrides*.
    """
    values = dict(zip(MOMENT_COLUMNS, (m0, 0.0, -n_particles / 2, 0.0, 0.0,
                                       0.0)))
    for key, value in overrides.items():
        if key not in values:
            raise ValueError(_(
                'unknown moment variable {key!r}').format(key=key))
        if value is not None:
            values[key] = value
    return MomentState(t, *(float(values[k]) for k in MOMENT_COLUMNS))


def _as_array(state):
    if isinstance(state, MomentState):
        y = state.vector
    else:
        y = np.asarray(state, dtype=float)
    if y.shape[0] != len(MOMENT_COLUMNS):
        raise ValueError(_(
            'expected {count} moment variables, found {found}').format(
                count=len(MOMENT_COLUMNS), found=y.shape[0]))
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(y.tolist())
    return y


def _field(y, x, yc, kappa, n, prefactor, weight, kind):
    # prefactor is N for the common mode and N**2 for individual modes;
    # weight is 1 and N respectively
    m, nc, s3, u1, u2, k3 = y
    s = -n / 2 if kind.clamp_s3 else s3
    dm = x * u1
    dn = yc * u2 - kappa * nc
    ds3 = -(x * u1 + yc * u2)
    du1 = (2 * (2 * x * m + yc * k3) * s) / prefactor
    du2 = (2 * (2 * weight * yc * nc + x * k3) * s) / prefactor
    if kind.retain_spin_population:
        excited = (s3 + n / 2) / weight
        du1 = du1 + 2 * x * excited
        du2 = du2 + 2 * yc * excited
    du2 = du2 - kappa / 2 * u2
    dk3 = yc * u1 + x * u2 - kappa / 2 * k3
    if kind.clamp_cavity:
        dn = np.zeros_like(dn)
        du2 = np.zeros_like(du2)
    return np.array([dm, dn, ds3, du1, du2, dk3], dtype=float)


def rhs_common(state, c, params, kind=None):
    """
    Evaluate the moment equations for particles sharing a common vibrational
    mode. *state* is a :class:`MomentState`, a vector of the six moment
    variables, or a (6, k) array of k states; *c* the
    :class:`~cavcool.model.DerivedCouplings` and *params* the
    :class:`~cavcool.model.PhysicalParams` (for N and κ). Returns the
    derivatives in :data:`MOMENT_COLUMNS` order with the shape of *state*.

    For example, phonons alone only drive the phonon coherence::

        >>> p = PhysicalParams(10**6, g=1e-3, kappa=1.0, eta=0.5,
        ...                    rabi=[1e-3], trap_freqs=[10.0])
        >>> rhs_common(initial_state(1e3, p.n_particles),
        ...            derive_couplings(p), p)
        array([   0.,    0.,   -0., -500.,    0.,    0.])
    """
    if kind is None:
        kind = ScenarioKind('common')
    n = params.n_particles
    return _field(_as_array(state), c.x, c.y, params.kappa, n, n, 1, kind)


def rhs_individual(state, c, params, kind=None):
    """
    Evaluate the moment equations for particles each coupled to their own
    vibrational modes. The arguments are as for :func:`rhs_common`; the state
    holds the summed variables (m̃, ñ, s̃3, ũ1, ũ2, k̃3).
    """
    if kind is None:
        kind = ScenarioKind('individual')
    n = params.n_particles
    return _field(
        _as_array(state), c.x, c.y, params.kappa, n, n ** 2, n, kind)


def moment_field(c, params, kind):
    """
    Returns the callable ``f(t, y)`` evaluating the vector field selected by
    *kind* (a :class:`ScenarioKind`), suitable for
    :func:`~cavcool.integrator.integrate`.
    """
    rhs = {'common': rhs_common, 'individual': rhs_individual}[kind.tag]

    def field(t, y):
        return rhs(y, c, params, kind)
    return field


def conserved_q(state, c):
    """
    Returns Q = m + (x²/y²)·n − (x/y)·k3, which the moment equations conserve
    in the absence of cavity decay. Raises
    :exc:`~cavcool.exc.UndefinedRatio` when y is zero.
    """
    if c.y == 0:
        raise UndefinedRatio('Q')
    if isinstance(state, MomentState):
        m, n, k3 = state.m, state.n, state.k3
    else:
        y = np.asarray(state, dtype=float)
        m, n, k3 = y[0], y[1], y[5]
    ratio = c.x / c.y
    return m + ratio ** 2 * n - ratio * k3


def adiabatic_fixed_point(m, c, n_particles, t=0.0):
    """
    Returns the stationary :class:`MomentState` reached (for negligible κ)
    from phonon number *m*: n = (x²/y²)·m, k3 = −(2x/y)·m, no coherences and
    all particles in their ground state.
    """
    if c.y == 0:
        raise UndefinedRatio(_('the adiabatic fixed point'))
    if m < 0:
        raise ValueError(_('m must be >= 0, not {m!r}').format(m=m))
    ratio = c.x / c.y
    return MomentState(
        t, float(m), ratio ** 2 * m, -n_particles / 2, 0.0, 0.0,
        -2 * ratio * m)


def analytic_rate_common(c, kappa):
    """
    Returns the closed-form cooling rate x²(x² + y²)/y⁴·κ of the common-mode
    scenario, the decay rate of m(t) = m₀·exp(−R·t).
    """
    if c.y == 0:
        raise UndefinedRatio(_('the common-mode cooling rate'))
    return c.x ** 2 * (c.x ** 2 + c.y ** 2) / c.y ** 4 * kappa


def analytic_rate_individual(c, kappa):
    """
    Returns the closed-form cooling rate (x²/y²)·κ of the individual-mode
    scenario.
    """
    if c.y == 0:
        raise UndefinedRatio(_('the individual-mode cooling rate'))
    return c.x ** 2 / c.y ** 2 * kappa


def adiabatic_rate(c, kappa, kind):
    """
    Returns the cooling rate of the common mode obtained by adiabatic
    elimination at the fixed point of :func:`adiabatic_fixed_point` while
    keeping the photon and correlation feedback (ṅ and k̇3 follow ṁ along the
    fixed point): x²κ/(x² + y²).

    The summed individual-mode variables exchange excitations through the
    per-particle couplings x/√N and y/√N, so for large N they are not slaved
    to m and no elimination applies. Other scenarios raise
    :exc:`ValueError`; :func:`linear_rate` covers them.
    """
    if kind.tag != 'common':
        raise ValueError(_(
            'no adiabatic cooling rate for {tag!r} scenarios; use the '
            'linear rate').format(tag=kind.tag))
    if c.y == 0:
        raise UndefinedRatio(_('the adiabatic cooling rate'))
    return c.x ** 2 * kappa / (c.x ** 2 + c.y ** 2)


def _linear_matrix(c, params, kind):
    x, y, kappa = c.x, c.y, params.kappa
    n = params.n_particles
    if kind.tag == 'common':
        a, b = 1.0, 1.0
    else:
        a, b = 1 / n, 1.0
    # rows and columns: m, n, e (= s3 + N/2), u1, u2, k3; coherence rows
    # linearised at s3 = -N/2
    e = 1.0 if kind.retain_spin_population else 0.0
    matrix = np.array([
        [0,          0,            0,      x,  0,          0],
        [0,          -kappa,       0,      0,  y,          0],
        [0,          0,            0,      -x, -y,         0],
        [-2 * x * a, 0,          2 * x * e * a, 0, 0,       -y * a],
        [0,          -2 * y * b, 2 * y * e * a, 0, -kappa / 2, -x * a],
        [0,          0,            0,      y,  x,          -kappa / 2],
    ], dtype=float)
    keep = [0, 1, 3, 4, 5]
    if kind.retain_spin_population:
        keep.insert(2, 2)
    if kind.clamp_cavity:
        keep = [i for i in keep if i not in (1, 4)]
    return matrix[np.ix_(keep, keep)]


def linear_rate(c, params, kind):
    """
    Returns the slowest decay rate (minus the largest real part of the
    eigenvalues) of the moment equations selected by *kind*, linearised
    about s3 = −N/2. This is the asymptotic decay rate of m predicted
    without any adiabatic elimination.
    """
    eigenvalues = np.linalg.eigvals(_linear_matrix(c, params, kind))
    return float(-np.max(eigenvalues.real))


def analytic_m(t, m0, rate):
    """
    Returns m₀·exp(−*rate*·*t*) for scalar or array *t*.
    """
    if m0 < 0 or rate < 0:
        raise ValueError(_('m0 and rate must be >= 0'))
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValueError(_('t must be >= 0'))
    result = m0 * np.exp(-rate * times)
    if result.ndim == 0:
        return float(result)
    return result
