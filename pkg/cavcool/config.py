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
The :mod:`cavcool.config` module parses and validates scenario
configurations (:class:`ScenarioConfig`) and sweep specifications
(:class:`SweepSpec`). Configurations are JSON files (YAML is accepted for
files ending in ``.yaml`` or ``.yml``), or one of the compiled-in
:data:`PRESETS` whose values the keys of a file override::

    >>> from cavcool.config import parse_config
    >>> config = parse_config({'preset': 'fig2a', 't_end': 50.0})
    >>> config.scenario, config.params.n_particles, config.t_end
    ('common', 1000000, 50.0)

Validation collects every problem before failing; the
:exc:`~cavcool.exc.InvalidConfiguration` raised maps dotted field names
(e.g. ``params.rabi``) to the :exc:`ValueError` describing each.

.. data:: PRESETS

    Maps preset names to raw configurations.

.. autoclass:: ScenarioConfig
    :members:

.. autoclass:: SweepSpec
    :members:

.. autofunction:: load_file

.. autofunction:: parse_config

.. autofunction:: parse_sweep

.. autofunction:: merge
"""

import json
import math
import gettext
import itertools
from pathlib import Path
from collections import namedtuple

import yaml

from .exc import InvalidConfiguration, DimensionError
from .model import PhysicalParams
from .moments import MOMENT_COLUMNS, ScenarioKind, initial_state
from .integrator import IntegratorConfig
from .quantum import ProductBasis
from .analysis import REFERENCES

_ = gettext.gettext


SCENARIOS = ('common', 'individual', 'dicke-exact', 'bosonic-oracle')
SWEEPABLE = (
    'n_particles', 'g', 'kappa', 'gamma', 'eta', 'rabi', 'm0', 't_end')
PHONON_STATES = ('fock', 'thermal')

PRESETS = {
    'fig2a': {
        'scenario': 'common',
        'units': 'kappa',
        'params': {
            'n_particles': 1000000, 'g': 1e-3, 'kappa': 1.0, 'gamma': 0.0,
            'eta': 0.5, 'rabi': [1e-3], 'trap_freqs': [10.0],
        },
        'initial': {'m0': 1000.0},
        't_end': 150.0,
        'integrator': {'record_stride': 0.5},
        'fit': {'reference': 'closed-form'},
    },
    'fig2b': {
        'scenario': 'individual',
        'units': 'kappa',
        'params': {
            'n_particles': 1000000, 'g': 1e-3, 'kappa': 1.0, 'gamma': 0.0,
            'eta': 0.5, 'rabi': [1e-3], 'trap_freqs': [10.0],
        },
        'initial': {'m0': 1e9},
        'clamp_s3': True,
        'clamp_cavity': True,
        't_end': 200.0,
        'integrator': {'record_stride': 0.5},
        'fit': {'reference': 'closed-form'},
    },
    # the fig2a couplings (x = 0.25, y = 1) for four particles, with three
    # phonons so the top Fock levels stay empty
    'exact4': {
        'scenario': 'dicke-exact',
        'units': 'kappa',
        'params': {
            'n_particles': 4, 'g': 0.5, 'kappa': 1.0, 'gamma': 0.0,
            'eta': 0.5, 'rabi': [0.5], 'trap_freqs': [10.0],
        },
        'initial': {'m0': 3},
        'cutoffs': {'phonon': 6, 'photon': 6},
        'layout': 'common',
        't_end': 30.0,
        'integrator': {'record_stride': 0.5},
        'fit': {'reference': 'closed-form'},
    },
}

TOP_LEVEL_KEYS = {
    'preset', 'scenario', 'units', 'params', 'initial', 'cutoffs', 'layout',
    'clamp_s3', 'clamp_cavity', 'retain_spin_population', 't_end',
    'integrator', 'fit', 'dominance', 'output',
}


class ScenarioConfig(namedtuple('ScenarioConfig', (
    'scenario',
    'units',
    'params',
    'initial',
    'phonon_state',
    'cutoffs',
    'layout',
    'clamp_s3',
    'clamp_cavity',
    'retain_spin_population',
    't_end',
    'integrator',
    'tolerance',
    'reference',
    'window',
    'dominance',
    'output',
))):
    """
    A validated scenario. *params* is a
    :class:`~cavcool.model.PhysicalParams`, *initial* the initial
    :class:`~cavcool.moments.MomentState`, *cutoffs* a (phonon, photon) pair
    for exact runs (:data:`None` otherwise), *integrator* an
    :class:`~cavcool.integrator.IntegratorConfig`, *window* an optional fit
    window and *output* a mapping of artifact names ("trajectory", "report")
    to file names.
    """
    __slots__ = ()

    @property
    def kind(self):
        """
        The :class:`~cavcool.moments.ScenarioKind` the results are compared
        against. The covariance oracle is the clamped common-mode system
        including the spin population terms; exact runs follow their layout.
        """
        if self.scenario == 'bosonic-oracle':
            return ScenarioKind(
                'common', clamp_s3=True, retain_spin_population=True)
        elif self.scenario == 'dicke-exact':
            return ScenarioKind(self.layout)
        else:
            return ScenarioKind(
                self.scenario, clamp_s3=self.clamp_s3,
                clamp_cavity=self.clamp_cavity,
                retain_spin_population=self.retain_spin_population)

    @property
    def basis(self):
        "The :class:`~cavcool.quantum.ProductBasis` of an exact run."
        if self.cutoffs is None:
            return None
        phonon, photon = self.cutoffs
        return ProductBasis(
            self.params.n_particles, phonon, photon, self.layout)

    def swept(self, name, value):
        """
        Returns a copy of the configuration with the sweepable quantity
        *name* set to *value*. Setting "rabi" sets every mode.
        """
        if name not in SWEEPABLE:
            raise ValueError(_(
                'sweep: {name!r} cannot be swept; expected one of '
                '{choices}').format(name=name, choices=', '.join(SWEEPABLE)))
        errors = {}
        path = 'sweep.{name}'.format(name=name)
        if name == 'n_particles':
            value = _integer(value, path, errors)
        else:
            value = _number(value, path, errors)
        if errors:
            raise InvalidConfiguration(errors)
        if name == 'm0':
            result = self._replace(initial=self.initial._replace(m=value))
        elif name == 't_end':
            result = self._replace(t_end=value)
        elif name == 'rabi':
            result = self._replace(params=self.params._replace(
                rabi=tuple(value for r in self.params.rabi)))
        else:
            result = self._replace(params=self.params._replace(
                **{name: value}))
        ground = -self.params.n_particles / 2
        if name == 'n_particles' and self.initial.s3 == ground:
            # the ground state follows N
            result = result._replace(
                initial=result.initial._replace(s3=-value / 2))
        errors = {
            'params.' + key: error
            for key, error in result.params.validate().items()
        }
        if not (math.isfinite(result.t_end) and result.t_end > 0):
            errors['t_end'] = ValueError(_('t_end: must be finite and > 0'))
        if not (math.isfinite(result.initial.m) and result.initial.m >= 0):
            errors['initial.m0'] = ValueError(_(
                'initial.m0: must be finite and >= 0'))
        if result.cutoffs is not None and not errors:
            _check_exact(result, errors)
        if errors:
            raise InvalidConfiguration(errors)
        return result


class SweepSpec(namedtuple('SweepSpec', ('base', 'names', 'values', 'jobs'))):
    """
    A validated sweep: the *base* :class:`ScenarioConfig`, the one or two
    swept *names*, their value lists *values*, and the requested degree of
    parallelism *jobs*.
    """
    __slots__ = ()

    def grid(self):
        """
        Yields the tuples of swept values in lexicographic order (the first
        name varies slowest).
        """
        return itertools.product(*self.values)


def merge(base, overrides):
    """
    Returns a copy of the raw configuration *base* with *overrides* applied.
    Nested mappings are merged key by key; everything else is replaced.
    """
    result = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = merge(result[key], value)
        else:
            result[key] = value
    return result


def load_file(path):
    """
    Load the raw configuration in *path*, parsed as YAML if its suffix is
    ``.yaml`` or ``.yml``, and as JSON otherwise.
    """
    path = Path(path)
    with path.open('r', encoding='utf-8') as f:
        if path.suffix in ('.yaml', '.yml'):
            raw = yaml.safe_load(f)
        else:
            raw = json.load(f)
    if not isinstance(raw, dict):
        raise InvalidConfiguration({
            str(path): ValueError(_(
                '{path}: expected a mapping at the top level').format(
                    path=path))})
    return raw


def _number(value, name, errors, minimum=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors[name] = ValueError(_(
            '{name}: expected a number, not {value!r}').format(
                name=name, value=value))
        return None
    value = float(value)
    if not math.isfinite(value):
        errors[name] = ValueError(_('{name}: must be finite').format(
            name=name))
    elif minimum is not None and (
            value <= minimum if strict else value < minimum):
        errors[name] = ValueError(_(
            '{name}: must be {op} {minimum}, not {value!r}').format(
                name=name, op='>' if strict else '>=', minimum=minimum,
                value=value))
    return value


def _integer(value, name, errors, minimum=None):
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        errors[name] = ValueError(_(
            '{name}: expected an integer, not {value!r}').format(
                name=name, value=value))
        return None
    if minimum is not None and value < minimum:
        errors[name] = ValueError(_(
            '{name}: must be >= {minimum}, not {value!r}').format(
                name=name, minimum=minimum, value=value))
    return value


def _boolean(value, name, errors):
    if not isinstance(value, bool):
        errors[name] = ValueError(_(
            '{name}: expected true or false, not {value!r}').format(
                name=name, value=value))
        return False
    return value


def _choice(value, name, choices, errors):
    if value not in choices:
        errors[name] = ValueError(_(
            '{name}: expected one of {choices}, not {value!r}').format(
                name=name, choices=', '.join(choices), value=value))
    return value


def _section(raw, name, keys, errors):
    section = raw.get(name, {})
    if section is None:
        return {}
    if not isinstance(section, dict):
        errors[name] = ValueError(_('{name}: expected a mapping').format(
            name=name))
        return {}
    for key in section:
        if key not in keys:
            errors['{name}.{key}'.format(name=name, key=key)] = ValueError(_(
                '{name}.{key}: unknown key').format(name=name, key=key))
    return section


def _numbers(value, name, errors):
    if not isinstance(value, (list, tuple)):
        errors[name] = ValueError(_(
            '{name}: expected a list of numbers').format(name=name))
        return ()
    return tuple(
        _number(item, '{name}[{index}]'.format(name=name, index=index), errors)
        for index, item in enumerate(value))


def _parse_params(raw, errors):
    if 'params' not in raw:
        errors['params'] = ValueError(_('params: missing required section'))
        return None
    keys = ('n_particles', 'g', 'kappa', 'gamma', 'eta', 'rabi', 'trap_freqs')
    section = _section(raw, 'params', keys, errors)
    required = ('n_particles', 'g', 'kappa', 'rabi', 'trap_freqs')
    for key in required:
        if key not in section:
            errors['params.' + key] = ValueError(_(
                'params.{key}: missing required value').format(key=key))
    if any(key.startswith('params') for key in errors):
        return None
    local = {}
    n_particles = _integer(
        section['n_particles'], 'params.n_particles', local, minimum=1)
    values = {
        key: _number(section.get(key, default), 'params.' + key, local)
        for key, default in (
            ('g', None), ('kappa', None), ('gamma', 0.0), ('eta', 1.0))
    }
    rabi = _numbers(section['rabi'], 'params.rabi', local)
    trap_freqs = _numbers(section['trap_freqs'], 'params.trap_freqs', local)
    if local:
        errors.update(local)
        return None
    params = PhysicalParams(
        n_particles, rabi=rabi, trap_freqs=trap_freqs, **values)
    for key, error in params.validate().items():
        errors['params.' + key] = error
    return params


def _parse_initial(raw, n_particles, errors):
    keys = ('m0', 'phonon_state') + MOMENT_COLUMNS[1:]
    section = _section(raw, 'initial', keys, errors)
    m0 = _number(section.get('m0', 0.0), 'initial.m0', errors, minimum=0)
    overrides = {}
    for key in MOMENT_COLUMNS[1:]:
        value = section.get(key)
        if value is not None:
            overrides[key] = _number(value, 'initial.' + key, errors)
    if key_errors(errors, 'initial') or n_particles is None:
        return None, 'fock'
    phonon_state = _choice(
        section.get('phonon_state', 'fock'), 'initial.phonon_state',
        PHONON_STATES, errors)
    return initial_state(m0, n_particles, **overrides), phonon_state


def key_errors(errors, prefix):
    "Returns :data:`True` if *errors* holds an entry under *prefix*."
    return any(
        key == prefix or key.startswith(prefix + '.') or
        key.startswith(prefix + '[')
        for key in errors)


def _parse_integrator(raw, errors):
    keys = IntegratorConfig._fields[:-1]
    section = _section(raw, 'integrator', keys, errors)
    if key_errors(errors, 'integrator'):
        return None
    local = {}
    values = {}
    for key, value in section.items():
        name = 'integrator.' + key
        if value is None:
            if key in ('rel_tol', 'abs_tol', 'max_steps'):
                local[name] = ValueError(_('{name}: must not be null').format(
                    name=name))
            # an unbounded step is spelled null
            values[key] = math.inf if key == 'max_step' else None
        elif key == 'max_steps':
            values[key] = _integer(value, name, local)
        else:
            values[key] = _number(value, name, local)
    if local:
        errors.update(local)
        return None
    candidate = IntegratorConfig()._replace(**values)
    for key, error in candidate.validate().items():
        errors['integrator.' + key] = error
    if key_errors(errors, 'integrator'):
        return None
    return IntegratorConfig(*candidate)


def _parse_fit(raw, tolerance, errors):
    section = _section(raw, 'fit', ('tolerance', 'reference', 'window'),
                       errors)
    tolerance = _number(
        section.get('tolerance', tolerance), 'fit.tolerance', errors,
        minimum=0)
    reference = _choice(
        section.get('reference', 'closed-form'), 'fit.reference', REFERENCES,
        errors)
    window = section.get('window')
    if window is not None:
        bounds = _numbers(window, 'fit.window', errors)
        if len(bounds) != 2:
            errors['fit.window'] = ValueError(_(
                'fit.window: expected [t_lo, t_hi]'))
            window = None
        elif None not in bounds and not bounds[1] > bounds[0]:
            errors['fit.window'] = ValueError(_(
                'fit.window: t_hi must exceed t_lo'))
            window = None
        else:
            window = bounds
    return tolerance, reference, window


def parse_config(raw, tolerance=0.05, dominance=10.0):
    """
    Validate the raw configuration mapping *raw* and return a
    :class:`ScenarioConfig`. A ``preset`` key names one of :data:`PRESETS`
    which the remaining keys override. *tolerance* and *dominance* supply
    the defaults for the fit tolerance and the regime dominance factor.

    Raises :exc:`~cavcool.exc.InvalidConfiguration` listing every invalid
    field.
    """
    errors = {}
    if 'preset' in raw:
        name = raw['preset']
        if name not in PRESETS:
            raise InvalidConfiguration({'preset': ValueError(_(
                'preset: unknown preset {name!r}; expected one of {choices}'
            ).format(name=name, choices=', '.join(sorted(PRESETS))))})
        raw = merge(PRESETS[name], {
            key: value for key, value in raw.items() if key != 'preset'})
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            errors[key] = ValueError(_('{key}: unknown key').format(key=key))
    scenario = _choice(
        raw.get('scenario', 'common'), 'scenario', SCENARIOS, errors)
    units = raw.get('units', 'kappa')
    if not isinstance(units, str):
        errors['units'] = ValueError(_('units: expected a unit name'))
    params = _parse_params(raw, errors)
    initial, phonon_state = _parse_initial(
        raw, None if params is None else params.n_particles, errors)

    cutoffs = None
    layout = raw.get('layout')
    if scenario == 'dicke-exact':
        section = _section(raw, 'cutoffs', ('phonon', 'photon'), errors)
        if 'cutoffs' not in raw:
            errors['cutoffs'] = ValueError(_(
                'cutoffs: required for dicke-exact runs'))
        else:
            cutoffs = tuple(
                _integer(
                    section.get(key), 'cutoffs.' + key, errors, minimum=2)
                for key in ('phonon', 'photon'))
        layout = _choice(
            'common' if layout is None else layout, 'layout',
            ProductBasis.layouts, errors)
    else:
        if 'cutoffs' in raw:
            errors['cutoffs'] = ValueError(_(
                'cutoffs: only allowed for dicke-exact runs'))
        if layout is not None:
            errors['layout'] = ValueError(_(
                'layout: only allowed for dicke-exact runs'))
        layout = scenario if scenario in ScenarioKind.tags else 'common'

    flags = {
        key: _boolean(raw.get(key, False), key, errors)
        for key in ('clamp_s3', 'clamp_cavity', 'retain_spin_population')
    }
    t_end = _number(raw.get('t_end', 100.0), 't_end', errors, minimum=0,
                    strict=True)
    integrator = _parse_integrator(raw, errors)
    tolerance, reference, window = _parse_fit(raw, tolerance, errors)
    if reference == 'adiabatic' and layout == 'individual':
        errors['fit.reference'] = ValueError(_(
            'fit.reference: the adiabatic reference only applies to the '
            'common mode'))
    dominance = _number(
        raw.get('dominance', dominance), 'dominance', errors, minimum=1,
        strict=True)
    section = _section(raw, 'output', ('trajectory', 'report'), errors)
    output = {
        'trajectory': section.get('trajectory', 'trajectory.csv'),
        'report': section.get('report', 'report.json'),
    }
    for key, value in output.items():
        if not isinstance(value, str) or not value:
            errors['output.' + key] = ValueError(_(
                'output.{key}: expected a file name').format(key=key))
    if errors:
        raise InvalidConfiguration(errors)

    config = ScenarioConfig(
        scenario=scenario, units=units, params=params, initial=initial,
        phonon_state=phonon_state, cutoffs=cutoffs, layout=layout,
        t_end=t_end, integrator=integrator, tolerance=tolerance,
        reference=reference, window=window, dominance=dominance,
        output=output, **flags)
    if cutoffs is not None:
        _check_exact(config, errors)
        if errors:
            raise InvalidConfiguration(errors)
    return config


def _check_exact(config, errors):
    # the basis must fit the budget and hold the initial Fock states
    try:
        basis = config.basis
    except (ValueError, DimensionError) as exc:
        errors['cutoffs'] = exc
        return
    per_mode = config.initial.m
    if basis.layout == 'individual':
        per_mode /= basis.n_particles
    if config.phonon_state == 'fock':
        if not float(per_mode).is_integer():
            errors['initial.m0'] = ValueError(_(
                'initial.m0: a Fock state needs an integer number of phonons '
                'per mode, not {value!r}').format(value=per_mode))
        elif per_mode >= basis.phonon_cutoff - 1:
            errors['initial.m0'] = ValueError(_(
                'initial.m0: {value!r} phonons per mode leave the top Fock '
                'level occupied; raise cutoff').format(value=per_mode))
    if not float(config.initial.n).is_integer():
        errors['initial.n'] = ValueError(_(
            'initial.n: exact runs need an integer photon number'))
    elif not 0 <= config.initial.n < basis.photon_cutoff - 1:
        errors['initial.n'] = ValueError(_(
            'initial.n: {value!r} photons leave the top Fock level occupied; '
            'raise cutoff').format(value=config.initial.n))


def parse_sweep(raw, tolerance=0.05, dominance=10.0):
    """
    Validate the raw sweep specification *raw*, a mapping with keys "base"
    (a raw scenario configuration), "sweep" (one or two sweepable names
    mapped to lists of values) and optionally "jobs", and return a
    :class:`SweepSpec`.
    """
    errors = {}
    for key in raw:
        if key not in ('base', 'sweep', 'jobs'):
            errors[key] = ValueError(_('{key}: unknown key').format(key=key))
    base = None
    if not isinstance(raw.get('base'), dict):
        errors['base'] = ValueError(_('base: expected a scenario mapping'))
    else:
        try:
            base = parse_config(raw['base'], tolerance, dominance)
        except InvalidConfiguration as exc:
            for key, error in exc.errors.items():
                errors['base.' + key] = error
    sweep = raw.get('sweep')
    names, values = (), ()
    if not isinstance(sweep, dict) or not 1 <= len(sweep) <= 2:
        errors['sweep'] = ValueError(_(
            'sweep: expected a mapping of one or two names to value lists'))
    else:
        names = tuple(sweep)
        for name in names:
            if name not in SWEEPABLE:
                errors['sweep.' + name] = ValueError(_(
                    'sweep.{name}: cannot be swept; expected one of '
                    '{choices}').format(
                        name=name, choices=', '.join(SWEEPABLE)))
            elif not isinstance(sweep[name], list) or not sweep[name]:
                errors['sweep.' + name] = ValueError(_(
                    'sweep.{name}: expected a non-empty list of values'
                ).format(name=name))
        values = tuple(
            tuple(_numbers(sweep[name], 'sweep.' + name, errors))
            if isinstance(sweep[name], list) else ()
            for name in names)
    jobs = _integer(raw.get('jobs', 1), 'jobs', errors, minimum=1)
    if errors:
        raise InvalidConfiguration(errors)
    return SweepSpec(base, names, values, jobs)
