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
import os
import sys
import json
import argparse
from unittest import mock
from pathlib import Path

import yaml
import pytest

from cavcool.term import ErrorHandler
from cavcool.exc import InvalidConfiguration
from cavcool.main import (
    Application, ArgumentParser, positive_int, non_negative_float)


def read_json(path):
    with Path(str(path)).open('r', encoding='utf-8') as f:
        return json.load(f)


def write_json(path, obj):
    with Path(str(path)).open('w', encoding='utf-8') as f:
        json.dump(obj, f)
    return str(path)


@pytest.fixture()
def defaults(request):
    values = {}
    def my_read(self, *args, **kwargs):
        for key, value in values.items():
            self['defaults'][key] = value
        return []
    with mock.patch('configparser.ConfigParser.read', my_read):
        yield values


@pytest.fixture()
def main(request, defaults):
    return Application()


def test_positive_int():
    assert positive_int('1') == 1
    assert positive_int('16') == 16
    with pytest.raises(argparse.ArgumentTypeError):
        positive_int('0')
    with pytest.raises(argparse.ArgumentTypeError):
        positive_int('-2')
    with pytest.raises(argparse.ArgumentTypeError):
        positive_int('two')


def test_non_negative_float():
    assert non_negative_float('0') == 0.0
    assert non_negative_float('0.15') == 0.15
    with pytest.raises(argparse.ArgumentTypeError):
        non_negative_float('-0.1')
    with pytest.raises(argparse.ArgumentTypeError):
        non_negative_float('inf')
    with pytest.raises(argparse.ArgumentTypeError):
        non_negative_float('nan')
    with pytest.raises(argparse.ArgumentTypeError):
        non_negative_float('tight')


def test_help(main, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(['-h'])
    assert exc_info.value.args[0] == 0
    captured = capsys.readouterr()
    assert captured.out.lstrip().startswith('usage: ')
    assert {'run', 'sweep', 'rates', 'oracle-compare'} <= set(
        captured.out.replace(',', ' ').replace('{', ' ').replace(
            '}', ' ').split())

    with pytest.raises(SystemExit) as exc_info:
        main(['help'])
    assert exc_info.value.args[0] == 0
    captured = capsys.readouterr()
    assert captured.out.lstrip().startswith('usage: ')


def test_help_no_command(main, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main([])
    assert exc_info.value.args[0] == 0
    assert capsys.readouterr().out.lstrip().startswith('usage: ')


def test_help_command(main, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(['help', 'run'])
    assert exc_info.value.args[0] == 0
    captured = capsys.readouterr()
    assert captured.out.lstrip().startswith('usage: ')
    assert {'--config', '--preset', '--out', '--tol', '--reference'} <= set(
        captured.out.replace(',', ' ').split())

    with pytest.raises(SystemExit) as exc_info:
        main(['help', 'rates'])
    assert exc_info.value.args[0] == 0
    captured = capsys.readouterr()
    assert {'--json', '--yaml', '--shell'} <= set(
        captured.out.replace(',', ' ').split())


def test_help_unknown_command(main):
    with pytest.raises(ValueError) as exc_info:
        main(['help', 'cool'])
    assert str(exc_info.value) == 'Unknown command "cool"'


def test_source_required(main, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(['run'])
    assert exc_info.value.args[0] == 1
    assert 'required' in capsys.readouterr().err

    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-c', 'fig2a.yaml'])
    assert exc_info.value.args[0] == 1

    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig3'])
    assert exc_info.value.args[0] == 1


def test_run_preset(main, tmpdir, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-o', str(tmpdir)])
    assert exc_info.value.args[0] == 2
    assert 'closed-form rate' in capsys.readouterr().err
    report = read_json(tmpdir.join('report.json'))
    assert report['passed'] is False
    assert report['tolerance'] == 0.05
    assert tmpdir.join('trajectory.csv').check()


def test_run_reference(main, tmpdir):
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-o', str(tmpdir), '-r', 'linear'])
    assert exc_info.value.args[0] == 0
    report = read_json(tmpdir.join('report.json'))
    assert report['passed'] is True
    assert report['reference'] == 'linear'


def test_run_tolerance(main, tmpdir):
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-o', str(tmpdir), '-t', '0.15'])
    assert exc_info.value.args[0] == 0
    assert read_json(tmpdir.join('report.json'))['tolerance'] == 0.15


def test_run_config_file(main, tmpdir):
    path = tmpdir.join('scenario.yaml')
    with Path(str(path)).open('w', encoding='utf-8') as f:
        yaml.safe_dump({
            'preset': 'fig2a',
            'fit': {'reference': 'adiabatic'},
        }, f)
    out_dir = tmpdir.join('out')
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-c', str(path), '-o', str(out_dir)])
    assert exc_info.value.args[0] == 0
    assert read_json(out_dir.join('report.json'))['reference'] == 'adiabatic'


def test_run_invalid_config(main, tmpdir):
    path = write_json(tmpdir.join('scenario.json'), {
        'preset': 'fig2a', 't_end': -1.0, 'colour': 'blue'})
    try:
        main(['run', '-c', path, '-o', str(tmpdir)])
    except:
        msg = Application.invalid_config(*sys.exc_info())
        assert msg[0] == "Configuration failed to validate with 2 error(s)"
        assert sorted(msg[1:]) == [
            "colour: unknown key",
            "t_end: must be > 0, not -1.0",
        ]
    else:
        assert False, 'invalid configuration was accepted'
    assert not tmpdir.join('report.json').check()


def test_default_tolerance(main, defaults, tmpdir):
    defaults['tolerance'] = '0.15'
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-o', str(tmpdir)])
    assert exc_info.value.args[0] == 0
    assert read_json(tmpdir.join('report.json'))['tolerance'] == 0.15


def test_default_out_dir(main, defaults, tmpdir):
    defaults['out_dir'] = str(tmpdir.join('results'))
    with pytest.raises(SystemExit) as exc_info:
        main(['run', '-p', 'fig2a', '-r', 'linear'])
    assert exc_info.value.args[0] == 0
    assert tmpdir.join('results', 'report.json').check()


def test_bad_defaults(main, defaults):
    defaults['jobs'] = '0'
    try:
        main(['help'])
    except InvalidConfiguration:
        msg = Application.invalid_config(*sys.exc_info())
        assert msg == [
            "Configuration failed to validate with 1 error(s)",
            "jobs: expected a positive integer, not '0'",
        ]
    else:
        assert False, 'invalid defaults were accepted'


def test_bad_dominance(main, defaults):
    defaults['dominance'] = '1'
    with pytest.raises(InvalidConfiguration) as exc_info:
        main(['help'])
    assert set(exc_info.value.errors) == {'dominance'}
    assert str(exc_info.value.errors['dominance']) == 'dominance: must be > 1'


def test_sweep(main, tmpdir, capsys):
    path = write_json(tmpdir.join('sweep.json'), {
        'base': {'preset': 'fig2a', 'fit': {'reference': 'linear'}},
        'sweep': {'m0': [100, 1000]},
    })
    out_dir = tmpdir.join('out')
    with pytest.raises(SystemExit) as exc_info:
        main(['sweep', '-c', path, '-o', str(out_dir), '-j', '1'])
    assert exc_info.value.args[0] == 0
    report = read_json(out_dir.join('sweep-results.json'))
    assert [row['m0'] for row in report['rows']] == [100, 1000]
    assert out_dir.join('sweep-results.csv').check()
    assert 'Wrote sweep table to' in capsys.readouterr().err


def test_sweep_fail(main, tmpdir):
    sweep = {
        'base': {'preset': 'fig2a'},
        'sweep': {'m0': [1000]},
    }
    path = write_json(tmpdir.join('sweep.json'), sweep)
    with pytest.raises(SystemExit) as exc_info:
        main(['sweep', '-c', path, '-o', str(tmpdir)])
    assert exc_info.value.args[0] == 2
    assert read_json(path) == sweep

    # the sweep file is still readable for a second run
    with pytest.raises(SystemExit) as exc_info:
        main(['sweep', '-c', path, '-o', str(tmpdir), '-r', 'linear'])
    assert exc_info.value.args[0] == 0
    assert read_json(path) == sweep


def test_sweep_in_out_dir(main, tmpdir, monkeypatch):
    sweep = {
        'base': {'preset': 'fig2a', 'fit': {'reference': 'linear'}},
        'sweep': {'m0': [100]},
    }
    write_json(tmpdir.join('sweep.json'), sweep)
    monkeypatch.chdir(str(tmpdir))
    for attempt in range(2):
        with pytest.raises(SystemExit) as exc_info:
            main(['sweep', '-c', 'sweep.json'])
        assert exc_info.value.args[0] == 0
        assert read_json(tmpdir.join('sweep.json')) == sweep
    report = read_json(tmpdir.join('sweep-results.json'))
    assert [row['m0'] for row in report['rows']] == [100]


def test_rates(main, capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(['rates', '-p', 'fig2a'])
    assert exc_info.value.args[0] == 0
    result = json.loads(capsys.readouterr().out)
    assert result['rate_common'] == pytest.approx(0.06640625)
    assert result['regime']['ok'] is True

    with pytest.raises(SystemExit) as exc_info:
        main(['rates', '-p', 'fig2a', '--yaml'])
    assert exc_info.value.args[0] == 0
    result = yaml.safe_load(capsys.readouterr().out)
    assert result['rate_individual'] == pytest.approx(0.0625)

    with pytest.raises(SystemExit) as exc_info:
        main(['rates', '-p', 'fig2a', '--shell'])
    assert exc_info.value.args[0] == 0
    assert 'regime_ok=true' in capsys.readouterr().out.splitlines()


def test_oracle_compare(main, tmpdir):
    with pytest.raises(SystemExit) as exc_info:
        main(['oracle-compare', '-p', 'fig2a', '-o', str(tmpdir)])
    assert exc_info.value.args[0] == 0
    report = read_json(tmpdir.join('oracle.json'))
    assert report['passed'] is True
    assert report['tolerance'] == 1e-6


def test_oracle_compare_individual(main, tmpdir):
    with pytest.raises(InvalidConfiguration) as exc_info:
        main(['oracle-compare', '-p', 'fig2b', '-o', str(tmpdir)])
    assert set(exc_info.value.errors) == {'scenario'}


def test_debug_run(main, capsys):
    sys.excepthook = sys.__excepthook__
    os.environ['DEBUG'] = '1'
    try:
        with pytest.raises(SystemExit):
            main(['help'])
        assert not isinstance(sys.excepthook, ErrorHandler)
    finally:
        del os.environ['DEBUG']
    with pytest.raises(SystemExit):
        main(['help'])
    assert isinstance(sys.excepthook, ErrorHandler)
    sys.excepthook = sys.__excepthook__


def test_usage_errors(main, capsys):
    assert isinstance(main.commands['run'], ArgumentParser)
    for args in (
            ['run', '-p', 'fig2a', '-r', 'exact'],
            ['sweep'],
            ['rates', '-p', 'fig2a', '--json', '--yaml'],
            ['cool']):
        with pytest.raises(SystemExit) as exc_info:
            main(args)
        assert exc_info.value.args[0] == 1
        err = capsys.readouterr().err
        assert err.startswith('usage:')
        assert 'error:' in err
