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
The :mod:`cavcool.model` module holds the physical parameters of a cooling
setup (:class:`PhysicalParams`), derives the collective couplings x and y
from them (:func:`derive_couplings`), and checks the operating regime in
which the moment equations are meaningful (:func:`check_regime`).

All frequencies are plain numbers in one unit declared by the scenario
configuration (by default, units of the cavity decay rate κ).

.. autoclass:: PhysicalParams
    :members:

.. autoclass:: DerivedCouplings
    :members:

.. autoclass:: RegimeReport
    :members:

.. autofunction:: derive_couplings

.. autofunction:: check_regime
"""

import math
import gettext
from collections import namedtuple

from .exc import NoCoolingLasers

_ = gettext.gettext


class PhysicalParams(namedtuple('PhysicalParams', (
    'n_particles',
    'g',
    'kappa',
    'gamma',
    'eta',
    'rabi',
    'trap_freqs',
))):
    """
    The raw experimental knobs: number of particles *n_particles* (N),
    single-particle cavity coupling *g*, cavity decay rate *kappa* (κ),
    spontaneous decay rate *gamma* (Γ, used only for regime reporting),
    Lamb-Dicke parameter *eta* (η), and the per-mode Rabi frequencies *rabi*
    (Ω_ν) and trap frequencies *trap_freqs* (ν), which are stored as tuples
    of floats.

    Construction never fails; call :meth:`validate` to find out which fields
    violate their constraints.
    """
    __slots__ = ()

    def __new__(cls, n_particles, g, kappa, gamma=0.0, eta=1.0, rabi=(),
                trap_freqs=()):
        return super().__new__(
            cls, n_particles, float(g), float(kappa), float(gamma),
            float(eta), tuple(float(r) for r in rabi),
            tuple(float(f) for f in trap_freqs))

    def validate(self):
        """
        Returns a :class:`dict` mapping field names to the :exc:`ValueError`
        describing why that field is invalid. An empty result means the
        parameters are usable.
        """
        errors = {}
        if isinstance(self.n_particles, bool) or not isinstance(
                self.n_particles, int) or self.n_particles < 1:
            errors['n_particles'] = ValueError(_(
                'n_particles: must be a positive integer, not {value!r}'
            ).format(value=self.n_particles))
        for name in ('g', 'kappa', 'gamma', 'eta'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                errors[name] = ValueError(_(
                    '{name}: must be finite and >= 0, not {value!r}'
                ).format(name=name, value=value))
        if not self.rabi:
            errors['rabi'] = NoCoolingLasers()
        elif not all(math.isfinite(r) and r >= 0 for r in self.rabi):
            errors['rabi'] = ValueError(_(
                'rabi: frequencies must be finite and >= 0'))
        if len(self.trap_freqs) != len(self.rabi):
            errors['trap_freqs'] = ValueError(_(
                'trap_freqs: expected {expected} mode(s) to match rabi, '
                'found {found}').format(
                    expected=len(self.rabi), found=len(self.trap_freqs)))
        elif not all(math.isfinite(f) and f > 0 for f in self.trap_freqs):
            errors['trap_freqs'] = ValueError(_(
                'trap_freqs: frequencies must be finite and > 0'))
        return errors

    def scaled(self, factor):
        """
        Returns a copy with every frequency multiplied by *factor*.
        """
        return self._replace(
            g=self.g * factor, kappa=self.kappa * factor,
            gamma=self.gamma * factor,
            rabi=tuple(r * factor for r in self.rabi),
            trap_freqs=tuple(f * factor for f in self.trap_freqs))


class DerivedCouplings(namedtuple('DerivedCouplings', (
    'x_per_mode',
    'x',
    'y',
    'omega_eff',
))):
    """
    The collective couplings: *x_per_mode* (x_ν = ½√N η Ω_ν), their
    quadrature sum *x*, the collective cavity coupling *y* (√N g), and the
    effective Rabi frequency *omega_eff* (Ω, quadrature sum of the Ω_ν).
    """
    __slots__ = ()

    @property
    def splitting(self):
        "The collective normal-mode splitting √(x² + y²)."
        return math.hypot(self.x, self.y)


class RegimeReport(namedtuple('RegimeReport', (
    'dominance',
    'cavity_ratio',
    'cavity_ok',
    'emission_margin',
    'emission_ok',
    'lamb_dicke_margins',
    'lamb_dicke_ok',
    'sideband_margins',
    'sideband_ok',
))):
    """
    The outcome of :func:`check_regime`. The strong damping regime requires
    both *cavity_ok* (κ/y within [1/d, d] for dominance factor d) and
    *emission_ok* (x/Γ at least d). The per-mode tuples give the Lamb-Dicke
    margins ν²/(½ηΩ_ν)² and resolved sideband margins ν/Ω_ν with their
    verdicts.
    """
    __slots__ = ()

    @property
    def strong_damping_ok(self):
        return self.cavity_ok and self.emission_ok

    @property
    def margins(self):
        "All dimensionless ratios the verdicts are based upon."
        return (
            [self.cavity_ratio, self.emission_margin] +
            list(self.lamb_dicke_margins) + list(self.sideband_margins))

    @property
    def ok(self):
        return (
            self.strong_damping_ok and all(self.lamb_dicke_ok) and
            all(self.sideband_ok))

    def warnings(self):
        """
        Yields a translated line for every inequality that does not hold.
        """
        if not self.cavity_ok:
            yield _(
                'kappa is not comparable to sqrt(N)*g (ratio {ratio:.3g})'
            ).format(ratio=self.cavity_ratio)
        if not self.emission_ok:
            yield _(
                'spontaneous emission is not negligible against the '
                'collective laser coupling (margin {margin:.3g})'
            ).format(margin=self.emission_margin)
        for mode, (ok, margin) in enumerate(
                zip(self.lamb_dicke_ok, self.lamb_dicke_margins)):
            if not ok:
                yield _(
                    'mode {mode} is outside the Lamb-Dicke limit '
                    '(margin {margin:.3g})').format(mode=mode, margin=margin)
        for mode, (ok, margin) in enumerate(
                zip(self.sideband_ok, self.sideband_margins)):
            if not ok:
                yield _(
                    'mode {mode} does not resolve the sideband '
                    '(margin {margin:.3g})').format(mode=mode, margin=margin)

    def as_dict(self):
        return {
            'dominance': self.dominance,
            'cavity_ratio': self.cavity_ratio,
            'cavity_ok': self.cavity_ok,
            'emission_margin': self.emission_margin,
            'emission_ok': self.emission_ok,
            'strong_damping_ok': self.strong_damping_ok,
            'lamb_dicke_margins': list(self.lamb_dicke_margins),
            'lamb_dicke_ok': list(self.lamb_dicke_ok),
            'sideband_margins': list(self.sideband_margins),
            'sideband_ok': list(self.sideband_ok),
            'ok': self.ok,
        }


def derive_couplings(params):
    """
    Calculate the :class:`DerivedCouplings` for *params*, a
    :class:`PhysicalParams` instance. Raises :exc:`~cavcool.exc.NoCoolingLasers`
    if no modes are addressed.

    For example, with the parameters of the reference cooling runs::

        >>> p = PhysicalParams(10**6, g=1e-3, kappa=1.0, eta=0.5,
        ...                    rabi=[1e-3], trap_freqs=[10.0])
        >>> c = derive_couplings(p)
        >>> c.x, c.y
        (0.25, 1.0)
    """
    if not params.rabi:
        raise NoCoolingLasers()
    root_n = math.sqrt(params.n_particles)
    x_per_mode = tuple(0.5 * root_n * params.eta * r for r in params.rabi)
    return DerivedCouplings(
        x_per_mode=x_per_mode,
        x=math.sqrt(math.fsum(x_nu ** 2 for x_nu in x_per_mode)),
        y=root_n * params.g,
        omega_eff=math.sqrt(math.fsum(r ** 2 for r in params.rabi)))


def _ratio(num, den):
    if den == 0:
        return math.inf if num > 0 else math.nan
    return num / den


def _dominates(ratio, dominance):
    # NaN compares false, so 0/0 is never ok
    return ratio >= dominance


def check_regime(params, dominance=10.0):
    """
    Check the inequalities which define the operating regime of the cooling
    scheme for *params* and return a :class:`RegimeReport`. Each "much
    greater than" holds when the larger side is at least *dominance* times
    the smaller; "comparable" holds when the ratio lies within
    [1/*dominance*, *dominance*].
    """
    if not (math.isfinite(dominance) and dominance > 1):
        raise ValueError(_(
            'dominance factor must be finite and > 1, not {value!r}'
        ).format(value=dominance))
    root_n = math.sqrt(params.n_particles)
    y = root_n * params.g
    omega = math.sqrt(math.fsum(r ** 2 for r in params.rabi))
    x = 0.5 * root_n * params.eta * omega
    cavity_ratio = _ratio(params.kappa, y)
    emission_margin = _ratio(x, params.gamma)
    lamb_dicke = tuple(
        _ratio(nu ** 2, (0.5 * params.eta * r) ** 2)
        for r, nu in zip(params.rabi, params.trap_freqs))
    sideband = tuple(
        _ratio(nu, r) for r, nu in zip(params.rabi, params.trap_freqs))
    return RegimeReport(
        dominance=dominance,
        cavity_ratio=cavity_ratio,
        cavity_ok=1 / dominance <= cavity_ratio <= dominance,
        emission_margin=emission_margin,
        emission_ok=_dominates(emission_margin, dominance),
        lamb_dicke_margins=lamb_dicke,
        lamb_dicke_ok=tuple(_dominates(m, dominance) for m in lamb_dicke),
        sideband_margins=sideband,
        sideband_ok=tuple(_dominates(m, dominance) for m in sideband))
