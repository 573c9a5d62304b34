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

import sys
import csv
import json
import math
from pathlib import Path

import pytest

from cavcool.exc import FitError, InvalidConfiguration
from cavcool.config import parse_config, parse_sweep
from cavcool.output import Output
from cavcool.runner import *


def read_csv(path):
    with Path(str(path)).open('r', encoding='utf-8', newline='') as f:
        return list(csv.reader(f))


def read_json(path):
    with Path(str(path)).open('r', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture()
def fig2a():
    return parse_config({'preset': 'fig2a'})


@pytest.fixture()
def exact():
    return parse_config({
        'scenario': 'dicke-exact',
        'params': {
            'n_particles': 1, 'g': 1.0, 'kappa': 1.0, 'eta': 0.5,
            'rabi': [1.0], 'trap_freqs': [10.0],
        },
        'initial': {'m0': 1},
        'cutoffs': {'phonon': 3, 'photon': 3},
        't_end': 20.0,
        'integrator': {'record_stride': 1.0},
    })


def test_simulate_moments(fig2a):
    traj = simulate(fig2a)
    assert traj.terminated_by == 't_end'
    assert traj.columns == MOMENT_COLUMNS
    assert traj.times[-1] == 150.0
    assert len(traj) == 301
    assert traj.column('m')[-1] < 1.0


def test_simulate_oracle(fig2a):
    traj = simulate(fig2a._replace(scenario='bosonic-oracle'))
    assert traj.columns == MOMENT_COLUMNS
    assert len(traj) == 301
    assert traj.column('m')[0] == 1000.0


def test_simulate_exact(exact):
    traj = simulate(exact)
    assert traj.columns == MOMENT_COLUMNS + EXACT_COLUMNS
    assert len(traj) == 21
    assert traj.column('m')[0] == pytest.approx(1.0)
    assert max(traj.column('trace_residual')) <= 1e-10


def test_run_scenario(fig2a, tmpdir, capsys):
    out_dir = Path(str(tmpdir)) / 'fig2a'
    assert run_scenario(fig2a, out_dir) == 2
    captured = capsys.readouterr()
    assert captured.out == ''
    assert 'Wrote trajectory to' in captured.err
    assert 'Wrote report to' in captured.err
    assert 'closed-form rate' in captured.err

    rows = read_csv(out_dir / 'trajectory.csv')
    assert rows[0] == [
        't', 'm', 'n', 's3', 'u1', 'u2', 'k3', 'Q', 'm_analytic']
    assert len(rows) == 302
    assert float(rows[1][0]) == 0.0
    assert float(rows[1][1]) == 1000.0
    assert float(rows[1][7]) == 1000.0
    assert float(rows[1][8]) == 1000.0
    assert float(rows[-1][0]) == 150.0

    report = read_json(out_dir / 'report.json')
    assert report['passed'] is False
    assert report['scenario'] == 'common'
    assert report['reference'] == 'closed-form'
    assert report['analytic_rate'] == pytest.approx(0.06640625)
    assert report['units'] == 'kappa'
    assert report['n_particles'] == 10**6
    assert report['terminated_by'] == 't_end'
    assert report['couplings']['x'] == pytest.approx(0.25)
    assert report['couplings']['y'] == pytest.approx(1.0)
    assert report['regime']['ok'] is True
    assert 40.0 <= report['fit']['fit_window'][0] <= 40.5
    assert report['relative_errors']['linear'] < 0.01
    assert report['relative_errors']['adiabatic'] < 0.03


def test_run_scenario_references(fig2a, tmpdir):
    assert run_scenario(fig2a, str(tmpdir), reference='linear') == 0
    assert read_json(tmpdir.join('report.json'))['reference'] == 'linear'
    assert run_scenario(fig2a, str(tmpdir), tol=0.15) == 0
    assert read_json(tmpdir.join('report.json'))['tolerance'] == 0.15


def test_run_scenario_output_names(fig2a, tmpdir):
    config = fig2a._replace(output={
        'trajectory': 'fig2a.csv', 'report': 'fig2a.json'})
    run_scenario(config, str(tmpdir), reference='adiabatic')
    assert tmpdir.join('fig2a.csv').check()
    assert tmpdir.join('fig2a.json').check()
    assert not tmpdir.join('report.json').check()


def test_run_scenario_oracle(fig2a, tmpdir):
    config = fig2a._replace(scenario='bosonic-oracle')
    assert run_scenario(config, str(tmpdir), reference='adiabatic') == 0
    report = read_json(tmpdir.join('report.json'))
    assert report['scenario'] == 'common'


def test_run_scenario_individual(tmpdir):
    # at N = 10**6 the per-particle exchange is underdamped and the
    # summed phonon number barely moves over the run
    config = parse_config({'preset': 'fig2b'})
    assert run_scenario(config, str(tmpdir)) == 2
    report = read_json(tmpdir.join('report.json'))
    assert report['passed'] is False
    assert report['scenario'] == 'individual'
    assert report['analytic_rate'] == pytest.approx(0.0625)
    assert 0 < report['fit']['rate'] < 1e-3
    assert set(report['predictions']) == {'closed-form', 'linear'}
    assert 0 < report['predictions']['linear'] < 1e-5
    with pytest.raises(ValueError):
        run_scenario(config, str(tmpdir), reference='adiabatic')


def test_run_scenario_exact(exact, tmpdir):
    assert run_scenario(exact, str(tmpdir)) in (0, 2)
    rows = read_csv(tmpdir.join('trajectory.csv'))
    assert rows[0][-2:] == ['trace_residual', 'min_eigenvalue']
    assert len(rows) == 22


def test_run_scenario_regime_warnings(fig2a, tmpdir, capsys):
    config = fig2a._replace(params=fig2a.params._replace(gamma=0.1))
    run_scenario(config, str(tmpdir))
    captured = capsys.readouterr()
    assert 'Warning: spontaneous emission' in captured.err
    report = read_json(tmpdir.join('report.json'))
    assert report['regime']['strong_damping_ok'] is False


def test_run_scenario_fit_error(fig2a, tmpdir):
    config = fig2a._replace(t_end=3.0)
    with pytest.raises(FitError):
        run_scenario(config, str(tmpdir))
    # the trajectory is kept for inspection
    assert len(read_csv(tmpdir.join('trajectory.csv'))) == 8
    assert not tmpdir.join('report.json').check()


def test_run_scenario_step_limit(fig2a, tmpdir, capsys):
    config = fig2a._replace(
        integrator=fig2a.integrator._replace(max_steps=3))
    with pytest.raises(FitError):
        run_scenario(config, str(tmpdir))
    captured = capsys.readouterr()
    assert 'step_limit' in captured.err


def test_run_scenario_no_cavity(fig2a, tmpdir):
    config = fig2a._replace(
        params=fig2a.params._replace(g=0.0), t_end=20.0)
    with pytest.raises(ValueError):
        run_scenario(config, str(tmpdir))
    rows = read_csv(tmpdir.join('trajectory.csv'))
    assert rows[1][7] == 'nan'
    assert rows[1][8] == 'nan'


def test_effective_jobs(monkeypatch):
    monkeypatch.delenv('CAVCOOL_JOBS', raising=False)
    assert effective_jobs(4) == 4
    monkeypatch.setenv('CAVCOOL_JOBS', '2')
    assert effective_jobs(4) == 2
    assert effective_jobs(1) == 1
    monkeypatch.setenv('CAVCOOL_JOBS', ' ')
    assert effective_jobs(4) == 4
    for value in ('0', 'many'):
        monkeypatch.setenv('CAVCOOL_JOBS', value)
        with pytest.raises(ValueError):
            effective_jobs(4)


@pytest.fixture()
def sweep_spec():
    return parse_sweep({
        'base': {'preset': 'fig2a', 'fit': {'reference': 'linear'}},
        'sweep': {'kappa': [0.8, 1.0, 1.25], 'm0': [10, 100, 1000]},
    })


def test_run_sweep(sweep_spec, tmpdir, capsys, monkeypatch):
    monkeypatch.delenv('CAVCOOL_JOBS', raising=False)
    serial = tmpdir.mkdir('serial')
    parallel = tmpdir.mkdir('parallel')
    assert run_sweep(sweep_spec, str(serial), jobs=1) == 0
    assert run_sweep(sweep_spec, str(parallel), jobs=3) == 0
    assert (
        serial.join('sweep.csv').read_binary() ==
        parallel.join('sweep.csv').read_binary())
    rows = read_csv(serial.join('sweep.csv'))
    assert rows[0] == ['kappa', 'm0'] + list(SWEEP_COLUMNS)
    assert len(rows) == 10
    assert [row[:2] for row in rows[1:4]] == [
        ['0.80000000000000004', '10'],
        ['0.80000000000000004', '100'],
        ['0.80000000000000004', '1000'],
    ]
    assert all(row[-1] == 'ok' for row in rows[1:])
    report = read_json(serial.join('sweep.json'))
    assert report['columns'] == rows[0]
    assert len(report['rows']) == 9
    assert report['rows'][0]['kappa'] == 0.8
    assert 'Wrote sweep table to' in capsys.readouterr().err


def test_run_sweep_errors(tmpdir, capsys):
    spec = parse_sweep({
        'base': {'preset': 'fig2a', 't_end': 100.0},
        'sweep': {'kappa': [-1.0, 1.0]},
    })
    assert run_sweep(spec, str(tmpdir), tol=0.15) == 2
    rows = read_csv(tmpdir.join('sweep.csv'))
    assert rows[1][-1].startswith('error: kappa:')
    assert rows[1][3] == 'nan'
    assert rows[2][-1] == 'ok'
    report = read_json(tmpdir.join('sweep.json'))
    assert report['rows'][0]['fitted_rate'] is None
    assert 'Sweep point kappa=-1.0: error' in capsys.readouterr().err


def test_run_sweep_fail(tmpdir):
    spec = parse_sweep({
        'base': {'preset': 'fig2a'},
        'sweep': {'m0': [1000]},
        'jobs': 4,
    })
    assert run_sweep(spec, str(tmpdir), name='grid') == 2
    assert read_csv(tmpdir.join('grid.csv'))[1][-1] == 'fail'
    assert read_json(tmpdir.join('grid.json'))['rows'][0]['status'] == 'fail'
    assert not tmpdir.join('sweep.csv').check()


def test_rates(fig2a):
    result = rates(fig2a)
    assert result['x'] == pytest.approx(0.25)
    assert result['y'] == pytest.approx(1.0)
    assert result['rate_common'] == pytest.approx(0.06640625)
    assert result['rate_individual'] == pytest.approx(0.0625)
    assert result['rate_common_adiabatic'] == pytest.approx(0.0625 / 1.0625)
    assert result['rate_common_linear'] == pytest.approx(
        result['rate_common_adiabatic'], rel=0.03)
    assert 0 < result['rate_individual_linear'] < 1e-5
    assert 'rate_individual_adiabatic' not in result
    assert result['splitting'] == pytest.approx(math.hypot(0.25, 1.0))
    assert result['regime']['ok'] is True


def test_rates_clamped():
    result = rates(parse_config({'preset': 'fig2b'}))
    assert 0 < result['rate_individual_linear'] < 1e-5
    assert result['rate_individual_linear'] < result['rate_individual']


def test_rates_no_cavity(fig2a):
    config = fig2a._replace(params=fig2a.params._replace(g=0.0))
    result = rates(config)
    assert result['rate_common'] is None
    assert result['rate_common_adiabatic'] is None
    assert result['rate_individual_linear'] == pytest.approx(0.0, abs=1e-12)
    assert result['y'] == 0.0


def test_print_rates(fig2a, capsys):
    assert print_rates(fig2a, Output('json'), sys.stdout) == 0
    result = json.loads(capsys.readouterr().out)
    assert result['rate_common'] == pytest.approx(0.06640625)
    print_rates(fig2a, Output('shell'), sys.stdout)
    lines = capsys.readouterr().out.splitlines()
    assert 'regime_ok=true' in lines
    assert 'x_per_mode=(0.25)' in lines


def test_oracle_compare(fig2a, tmpdir):
    assert oracle_compare(fig2a, str(tmpdir)) == 0
    rows = read_csv(tmpdir.join('oracle.csv'))
    assert rows[0] == ['t', 'm_moments', 'm_oracle', 'm_closed_form']
    assert len(rows) == 302
    report = read_json(tmpdir.join('oracle.json'))
    assert report['passed'] is True
    assert report['stride'] == 0.5
    assert report['points'] == 301
    assert set(report['deviations']) == {
        'moments_vs_oracle', 'oracle_vs_closed_form'}
    assert report['max_deviation']['moments_vs_oracle'] <= 1e-6
    assert set(report['deviations']['moments_vs_oracle']) == set(
        MOMENT_COLUMNS)


def test_oracle_compare_default_stride(fig2a, tmpdir):
    config = fig2a._replace(
        t_end=20.0,
        integrator=fig2a.integrator._replace(record_stride=None))
    oracle_compare(config, str(tmpdir))
    report = read_json(tmpdir.join('oracle.json'))
    assert report['stride'] == 0.1
    assert report['points'] == 201


def test_oracle_compare_exact(exact, tmpdir):
    assert oracle_compare(exact, str(tmpdir)) in (0, 2)
    rows = read_csv(tmpdir.join('oracle.csv'))
    assert rows[0][-1] == 'm_exact'
    report = read_json(tmpdir.join('oracle.json'))
    # a single excitation does not feel the spin nonlinearity
    assert report['deviations']['exact_vs_oracle']['m'] < 1e-6


def test_oracle_compare_individual(tmpdir):
    with pytest.raises(InvalidConfiguration) as exc:
        oracle_compare(parse_config({'preset': 'fig2b'}), str(tmpdir))
    assert set(exc.value.errors) == {'scenario'}


def test_oracle_compare_fail(fig2a, tmpdir, capsys):
    assert oracle_compare(fig2a, str(tmpdir), tol=1e-16) == 2
    assert 'exceeds the tolerance' in capsys.readouterr().err
