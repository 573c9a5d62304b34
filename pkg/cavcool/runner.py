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
The :mod:`cavcool.runner` module drives the simulations behind the
:doc:`cavcool <manual>` commands: it integrates a validated
:class:`~cavcool.config.ScenarioConfig`, fits and judges the cooling rate,
and writes the resulting artifacts. Every function returns the exit status
of its command (0 on pass, 2 when a comparison fails); errors propagate as
exceptions.

.. autofunction:: simulate

.. autofunction:: evaluate

.. autofunction:: run_scenario

.. autofunction:: run_sweep

.. autofunction:: rates

.. autofunction:: print_rates

.. autofunction:: oracle_compare

.. autofunction:: effective_jobs
"""

import os
import gettext
from pathlib import Path
from multiprocessing import Pool

import numpy as np

from .exc import InvalidConfiguration, UndefinedRatio
from .model import derive_couplings, check_regime
from .moments import (
    MOMENT_COLUMNS,
    ScenarioKind,
    moment_field,
    conserved_q,
    analytic_m,
    analytic_rate_common,
    analytic_rate_individual,
    adiabatic_rate,
    linear_rate,
)
from .integrator import Trajectory, integrate
from .quantum import (
    basis_operators,
    build_hamiltonian_common,
    build_hamiltonian_individual,
    initial_density,
    propagate_rho,
    extract_moments,
    bosonic_drift,
    moments_to_covariance,
    propagate_covariance,
    closed_form_covariance,
    covariance_to_moments,
)
from .analysis import (
    default_fit_window,
    fit_exponential_rate,
    predict_rate,
    compare_to_analytic,
)
from .output import Output
from .files import AtomicReplaceFile
from .term import warn

_ = gettext.gettext


EXACT_COLUMNS = ('trace_residual', 'min_eigenvalue')
SWEEP_COLUMNS = (
    'x', 'y', 'fitted_rate', 'analytic_rate', 'relative_error', 'status')
ORACLE_TOLERANCE = 1e-6
ORACLE_POINTS = 200


def _terminated(times, config, t_end):
    if times[-1] >= t_end:
        return 't_end'
    elif config.steady_threshold is not None:
        return 'steady_state'
    return 'step_limit'


def _oracle_trajectory(config, c, settings=None):
    if settings is None:
        settings = config.integrator
    n = config.params.n_particles
    K = bosonic_drift(c, config.params.kappa)
    M0 = moments_to_covariance(config.initial, n)
    records = propagate_covariance(
        M0, K, (config.initial.t, config.t_end), settings)
    times = [record.t for record in records]
    return Trajectory(
        times,
        [covariance_to_moments(record.M, n, record.t).vector
         for record in records],
        _terminated(times, settings, config.t_end),
        columns=MOMENT_COLUMNS)


def _exact_trajectory(config, c, settings=None):
    if settings is None:
        settings = config.integrator
    basis = config.basis
    build = {
        'common': build_hamiltonian_common,
        'individual': build_hamiltonian_individual,
    }[basis.layout]
    rho0 = initial_density(
        basis, config.initial.m, config.initial.n, config.phonon_state)
    records = propagate_rho(
        rho0, build(basis, c), basis_operators(basis).c,
        config.params.kappa, (config.initial.t, config.t_end), settings,
        basis)
    times = [record.t for record in records]
    states = [
        np.concatenate((
            extract_moments(record.rho, basis, record.t).vector,
            [record.trace_residual, record.min_eigenvalue]))
        for record in records
    ]
    return Trajectory(
        times, states, _terminated(times, settings, config.t_end),
        columns=MOMENT_COLUMNS + EXACT_COLUMNS)


def simulate(config):
    """
    Integrate the scenario *config* (a
    :class:`~cavcool.config.ScenarioConfig`) and return the
    :class:`~cavcool.integrator.Trajectory` of its moment variables.

    The "common" and "individual" scenarios integrate the moment equations,
    "bosonic-oracle" the covariance matrix of the bosonized model, and
    "dicke-exact" the master equation on the truncated basis, whose
    trajectory carries the trace residual and smallest eigenvalue of the
    density matrix as two extra columns.
    """
    c = derive_couplings(config.params)
    if config.scenario == 'bosonic-oracle':
        return _oracle_trajectory(config, c)
    elif config.scenario == 'dicke-exact':
        return _exact_trajectory(config, c)
    else:
        return integrate(
            moment_field(c, config.params, config.kind),
            config.initial.vector, (config.initial.t, config.t_end),
            config.integrator, columns=MOMENT_COLUMNS)


def evaluate(config, traj, tol, reference):
    """
    Fit the phonon number of *traj* over the configured window (or the
    :func:`~cavcool.analysis.default_fit_window`) and compare the fitted rate
    with the *reference* prediction for *config* at relative tolerance
    *tol*. Returns the :class:`~cavcool.analysis.ComparisonReport`.
    """
    c = derive_couplings(config.params)
    window = config.window
    if window is None:
        window = default_fit_window(traj, c)
    fit = fit_exponential_rate(traj, 'm', window)
    return compare_to_analytic(
        fit, c, config.params.kappa, config.kind, tol, reference,
        params=config.params, traj=traj)


def _trajectory_table(config, traj, reference):
    c = derive_couplings(config.params)
    states = traj.states
    moments = states[:, :len(MOMENT_COLUMNS)]
    if c.y == 0:
        q = np.full(len(traj), np.nan)
    else:
        q = conserved_q(moments.T, c)
    try:
        rate = predict_rate(
            c, config.params.kappa, config.kind, reference, config.params)
        expected = analytic_m(
            traj.times - traj.times[0], config.initial.m, rate)
    except ValueError:
        # UndefinedRatio, or a negative predicted rate
        expected = np.full(len(traj), np.nan)
    header = ('t',) + MOMENT_COLUMNS + ('Q', 'm_analytic')
    columns = [traj.times[:, None], moments, q[:, None], expected[:, None]]
    if config.scenario == 'dicke-exact':
        header += EXACT_COLUMNS
        columns.append(states[:, len(MOMENT_COLUMNS):])
    return header, np.hstack(columns)


def _write_csv(path, header, rows):
    with AtomicReplaceFile(path, encoding='utf-8', newline='') as f:
        Output.write_csv(header, rows, f)


def _write_json(path, document):
    with AtomicReplaceFile(path, encoding='utf-8') as f:
        Output.dump_report(document, f)


def run_scenario(config, out_dir, tol=None, reference=None):
    """
    Run the scenario *config*, writing its trajectory CSV and JSON report
    to the directory *out_dir* (created if missing). *tol* and *reference*
    override the configured fit tolerance and reference rate.

    Returns 0 if the fitted rate lies within tolerance of the reference, and
    2 otherwise. A failing fit raises :exc:`~cavcool.exc.FitError` after the
    trajectory has been written.
    """
    if tol is None:
        tol = config.tolerance
    if reference is None:
        reference = config.reference
    c = derive_couplings(config.params)
    regime = check_regime(config.params, config.dominance)
    for line in regime.warnings():
        warn(_('Warning: {line}').format(line=line))
    traj = simulate(config)
    if traj.terminated_by != 't_end':
        warn(_('Warning: integration stopped at t={t:.6g} ({reason})').format(
            t=traj.times[-1], reason=traj.terminated_by))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / config.output['trajectory']
    header, rows = _trajectory_table(config, traj, reference)
    _write_csv(path, header, rows)
    warn(_('Wrote trajectory to {path}').format(path=path))

    report = evaluate(config, traj, tol, reference)
    document = report.as_dict()
    document.update({
        'units': config.units,
        'n_particles': config.params.n_particles,
        'terminated_by': traj.terminated_by,
        'couplings': {
            'x': c.x,
            'y': c.y,
            'x_per_mode': list(c.x_per_mode),
            'omega_eff': c.omega_eff,
            'splitting': c.splitting,
        },
        'regime': regime.as_dict(),
    })
    path = out_dir / config.output['report']
    _write_json(path, document)
    warn(_('Wrote report to {path}').format(path=path))
    if report.passed:
        return 0
    warn(_(
        'Fitted rate {fit:.6g} differs from the {reference} rate {rate:.6g} '
        'by {error:.3g} (tolerance {tol:.3g})').format(
            fit=report.fit.rate, reference=report.reference,
            rate=report.analytic_rate, error=report.relative_error, tol=tol))
    if report.note is not None:
        warn(report.note)
    return 2


def effective_jobs(requested):
    """
    Returns the number of worker processes to use for *requested* jobs,
    capped by the ``CAVCOOL_JOBS`` environment variable when it is set.
    """
    limit = os.environ.get('CAVCOOL_JOBS', '').strip()
    if limit:
        try:
            limit = int(limit)
            if limit < 1:
                raise ValueError(limit)
        except ValueError:
            raise ValueError(_(
                'CAVCOOL_JOBS must be a positive integer, not {value!r}'
            ).format(value=os.environ['CAVCOOL_JOBS']))
        return min(requested, limit)
    return requested


def _error_message(exc):
    if isinstance(exc, InvalidConfiguration):
        return '; '.join(str(error) for error in exc.errors.values())
    return str(exc)


def _sweep_point(point):
    # executed in the worker processes; everything in point must pickle
    base, names, values, tol, reference = point
    row = dict(zip(names, values))
    row.update({column: np.nan for column in SWEEP_COLUMNS})
    try:
        config = base
        for name, value in zip(names, values):
            config = config.swept(name, value)
        c = derive_couplings(config.params)
        row.update(x=c.x, y=c.y)
        report = evaluate(
            config, simulate(config),
            config.tolerance if tol is None else tol,
            config.reference if reference is None else reference)
        row.update(
            fitted_rate=report.fit.rate,
            analytic_rate=report.analytic_rate,
            relative_error=report.relative_error,
            status='ok' if report.passed else 'fail')
    except (ValueError, ArithmeticError) as exc:
        row['status'] = 'error: {message}'.format(
            message=_error_message(exc))
    return row


def run_sweep(spec, out_dir, jobs=None, tol=None, reference=None,
              name='sweep'):
    """
    Run every point of the :class:`~cavcool.config.SweepSpec` *spec* and
    write the aggregate table, one row per grid point in lexicographic
    order, to *name*\\ ``.csv`` and *name*\\ ``.json`` in *out_dir*. *jobs*
    overrides the parallelism of *spec*; points run in a process pool when
    more than one job is effective.

    A point which fails (tolerance or error) is marked in its row's status
    and the sweep continues. Returns 0 if every row is "ok", 2 otherwise.
    """
    if jobs is None:
        jobs = spec.jobs
    jobs = effective_jobs(jobs)
    points = [
        (spec.base, spec.names, values, tol, reference)
        for values in spec.grid()
    ]
    if jobs > 1 and len(points) > 1:
        with Pool(processes=min(jobs, len(points))) as pool:
            rows = pool.map(_sweep_point, points)
    else:
        rows = [_sweep_point(point) for point in points]

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = spec.names + SWEEP_COLUMNS
    path = out_dir / (name + '.csv')
    _write_csv(path, header, [
        [row[column] for column in header] for row in rows])
    warn(_('Wrote sweep table to {path}').format(path=path))
    path = out_dir / (name + '.json')
    _write_json(path, {'columns': list(header), 'rows': rows})
    warn(_('Wrote sweep report to {path}').format(path=path))
    failed = 0
    for row in rows:
        if row['status'] != 'ok':
            failed += 1
            warn(_('Sweep point {point}: {status}').format(
                point=', '.join(
                    '{name}={value!r}'.format(name=name, value=row[name])
                    for name in spec.names),
                status=row['status']))
    return 2 if failed else 0


def _guarded(rate, *args):
    try:
        return rate(*args)
    except UndefinedRatio:
        return None


def rates(config):
    """
    Returns a :class:`dict` of the couplings, the closed-form cooling rates of
    both scenarios, the adiabatic rate of the common mode, the linearised
    rates of both scenarios and the regime report for *config*. Nothing is
    integrated. Rates which are undefined (y = 0) are :data:`None`.
    """
    params = config.params
    c = derive_couplings(params)
    kappa = params.kappa
    kinds = {
        tag: config.kind if config.kind.tag == tag else ScenarioKind(tag)
        for tag in ScenarioKind.tags
    }
    return {
        'x': c.x,
        'y': c.y,
        'x_per_mode': list(c.x_per_mode),
        'rate_common': _guarded(analytic_rate_common, c, kappa),
        'rate_individual': _guarded(analytic_rate_individual, c, kappa),
        'rate_common_adiabatic': _guarded(
            adiabatic_rate, c, kappa, kinds['common']),
        'rate_common_linear': linear_rate(c, params, kinds['common']),
        'rate_individual_linear': linear_rate(c, params, kinds['individual']),
        'splitting': c.splitting,
        'regime': check_regime(params, config.dominance).as_dict(),
    }


def print_rates(config, output, file):
    """
    Write the :func:`rates` of *config* to *file* in the style of *output*
    (an :class:`~cavcool.output.Output`). Returns 0.
    """
    output.dump_rates(rates(config), file)
    return 0


def _deviations(values, reference):
    # relative to the largest magnitude of the reference column; absolute
    # for a column which is identically zero
    result = {}
    for index, column in enumerate(MOMENT_COLUMNS):
        scale = float(np.max(np.abs(reference[:, index])))
        error = float(np.max(np.abs(values[:, index] - reference[:, index])))
        result[column] = error / scale if scale > 0 else error
    return result


def oracle_compare(config, out_dir, tol=ORACLE_TOLERANCE):
    """
    Integrate the common-mode moment equations with s3 clamped and the spin
    population retained, and the covariance oracle, from the initial data of
    *config*; evaluate the matrix exponential solution of the oracle and,
    for a "dicke-exact" configuration, the exact master equation run at the
    same times (the configured record stride, or 200 intervals).

    Writes ``oracle.csv`` (t, m_moments, m_oracle, m_closed_form and
    m_exact for exact runs) and ``oracle.json`` (the largest deviation of
    every moment variable, relative to the largest magnitude of the
    reference) to *out_dir*. Returns 0 if the moments agree with the oracle
    and the oracle with its closed form to within *tol*, and 2 otherwise.
    """
    if config.kind.tag != 'common':
        raise InvalidConfiguration({'scenario': ValueError(_(
            'scenario: oracle comparison needs a common-mode configuration, '
            'not {scenario!r}').format(scenario=config.scenario))})
    params = config.params
    n = params.n_particles
    c = derive_couplings(params)
    stride = config.integrator.record_stride
    if stride is None:
        stride = (config.t_end - config.initial.t) / ORACLE_POINTS
    settings = config.integrator._replace(record_stride=stride)

    kind = ScenarioKind('common', clamp_s3=True, retain_spin_population=True)
    moments = integrate(
        moment_field(c, params, kind), config.initial.vector,
        (config.initial.t, config.t_end), settings, columns=MOMENT_COLUMNS)
    oracle = _oracle_trajectory(config, c, settings)
    if not np.array_equal(moments.times, oracle.times):
        raise ValueError(_(
            'the moment and oracle integrations recorded different times '
            '({moments} and {oracle} points)').format(
                moments=len(moments), oracle=len(oracle)))
    M0 = moments_to_covariance(config.initial, n)
    closed = np.array([
        covariance_to_moments(record.M, n, record.t).vector
        for record in closed_form_covariance(
            M0, bosonic_drift(c, params.kappa), oracle.times)
    ])
    deviations = {
        'moments_vs_oracle': _deviations(moments.states, oracle.states),
        'oracle_vs_closed_form': _deviations(oracle.states, closed),
    }
    header = ('t', 'm_moments', 'm_oracle', 'm_closed_form')
    columns = [oracle.times, moments.column('m'), oracle.column('m'),
               closed[:, 0]]
    if config.scenario == 'dicke-exact':
        exact = _exact_trajectory(config, c, settings)
        if not np.array_equal(exact.times, oracle.times):
            raise ValueError(_(
                'the exact run stopped early at t={t:.6g}').format(
                    t=exact.times[-1]))
        deviations['exact_vs_oracle'] = _deviations(
            exact.states[:, :len(MOMENT_COLUMNS)], oracle.states)
        header += ('m_exact',)
        columns.append(exact.column('m'))

    worst = {
        name: max(values.values()) for name, values in deviations.items()}
    passed = (
        worst['moments_vs_oracle'] <= tol and
        worst['oracle_vs_closed_form'] <= tol)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / 'oracle.csv'
    _write_csv(path, header, np.column_stack(columns))
    warn(_('Wrote oracle comparison to {path}').format(path=path))
    path = out_dir / 'oracle.json'
    _write_json(path, {
        'scenario': config.scenario,
        'n_particles': n,
        'stride': stride,
        'points': len(oracle),
        'tolerance': tol,
        'deviations': deviations,
        'max_deviation': worst,
        'passed': passed,
    })
    warn(_('Wrote oracle report to {path}').format(path=path))
    if passed:
        return 0
    for name, value in sorted(worst.items()):
        if name != 'exact_vs_oracle' and value > tol:
            warn(_(
                'Largest {name} deviation {value:.3g} exceeds the tolerance '
                '{tol:.3g}').format(
                    name=name.replace('_', ' '), value=value, tol=tol))
    return 2
