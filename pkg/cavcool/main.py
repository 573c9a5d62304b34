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
The :mod:`cavcool.main` module defines the :class:`Application` class, and an
instance of this called :data:`main`. Instances of :class:`Application` are
callable and thus :data:`main` is the entry-point for the :doc:`cavcool
<manual>` script.

From an API perspective the simulations are better driven through
:mod:`cavcool.config` and :mod:`cavcool.runner` directly::

    from cavcool.config import parse_config
    from cavcool.runner import simulate

    traj = simulate(parse_config({'preset': 'fig2a', 't_end': 50.0}))

.. data:: main

    The instance of :class:`Application` which is the entry-point for the
    :doc:`cavcool <manual>` script.

.. autoclass:: Application
    :members:
"""

import os
import sys
import gettext
import argparse
import configparser
from pathlib import Path

import pkginfo

from .config import PRESETS, load_file, parse_config, parse_sweep
from .analysis import REFERENCES
from .runner import (
    ORACLE_TOLERANCE,
    run_scenario,
    run_sweep,
    print_rates,
    oracle_compare,
)
from .term import ErrorHandler
from .output import Output
from .exc import InvalidConfiguration, CutoffExceeded

_ = gettext.gettext


def positive_int(s):
    """
    Convert the string *s* to a positive :class:`int` for :mod:`argparse`.
    """
    try:
        value = int(s)
        if value < 1:
            raise ValueError(value)
    except ValueError:
        raise argparse.ArgumentTypeError(_(
            'expected a positive integer, not {s!r}').format(s=s))
    return value


def non_negative_float(s):
    """
    Convert the string *s* to a finite, non-negative :class:`float` for
    :mod:`argparse`.
    """
    try:
        value = float(s)
        if not 0 <= value < float('inf'):
            raise ValueError(value)
    except ValueError:
        raise argparse.ArgumentTypeError(_(
            'expected a finite number >= 0, not {s!r}').format(s=s))
    return value


class ArgumentParser(argparse.ArgumentParser):
    """
    An :class:`argparse.ArgumentParser` whose command line errors exit with
    status 1 rather than 2, which the commands return for a failed
    comparison. Sub-command parsers inherit the class.
    """
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, _('{prog}: error: {message}\n').format(
            prog=self.prog, message=message))


class Application:
    """
    An instance of this class (:data:`main`) is the entry point for the
    application. The instance is callable, accepting the command line arguments
    as its single (optional) argument. The arguments will be derived from
    :data:`sys.argv` if not provided::

        >>> from cavcool.main import main
        >>> try:
        ...     main(['-h'])
        ... except SystemExit:
        ...     pass
        usage:  [-h] [--version] {help,?,run,sweep,rates,oracle-compare} ...

    Every command ends by raising :exc:`SystemExit` with its exit status: 0
    when the comparison passed, 2 when it failed. Errors leave through the
    exception hook with status 1.

    .. warning::

        Calling :data:`main` will raise :exc:`SystemExit`. It will also
        replace the system exception hook (:func:`sys.excepthook`).
    """
    def __init__(self):
        super().__init__()
        self._args = None
        self._commands = None
        self._config = None
        self._parser = None
        self._output = None

    def __call__(self, args=None):
        if not int(os.environ.get('DEBUG', '0')):
            sys.excepthook = ErrorHandler()
            sys.excepthook[InvalidConfiguration] = (self.invalid_config, 1)
            sys.excepthook[CutoffExceeded] = (sys.excepthook.exc_message, 1)
            sys.excepthook[Exception] = (sys.excepthook.exc_message, 1)
        self._args = self.parser.parse_args(args)
        self._output = Output(
            self._args.style if 'style' in self._args else 'json')
        raise SystemExit(self._args.func() or 0)

    @property
    def config(self):
        """
        Returns the script's configuration as derived from the files in the
        three pre-defined locations (see :doc:`cavcool <manual>` for more
        information). Returns a :class:`~argparse.Namespace` containing the
        parsed configuration.
        """
        if self._config is None:
            self._config = self._get_config()
        return self._config

    @property
    def parser(self):
        """
        The parser for all the sub-commands that the script accepts. The
        parser's defaults are derived from the configuration obtained from
        :attr:`config`. Returns the newly constructed argument parser.
        """
        if self._parser is None:
            self._parser, self._commands = self._get_parser()
        return self._parser

    @property
    def commands(self):
        """
        A dictionary mapping command names to their sub-parser.
        """
        if self._commands is None:
            self._parser, self._commands = self._get_parser()
        return self._commands

    @staticmethod
    def _get_config():
        parser = configparser.ConfigParser(
            defaults={
                'out_dir':   '.',
                'tolerance': '0.05',
                'jobs':      '1',
                'dominance': '10',
            },
            empty_lines_in_values=False,
            default_section='defaults',
            delimiters=('=',),
            comment_prefixes=('#',),
            interpolation=None)
        parser.read(
            [
                '/lib/cavcool/cavcool.conf',
                '/etc/cavcool.conf',
                '{xdg_config}/cavcool.conf'.format(
                    xdg_config=os.environ.get(
                        'XDG_CONFIG_HOME', os.path.expanduser('~/.config'))),
            ],
            encoding='ascii')
        section = parser['defaults']
        errors = {}
        values = {}
        for key, convert in (
                ('tolerance', non_negative_float),
                ('jobs', positive_int),
                ('dominance', non_negative_float)):
            try:
                values[key] = convert(section[key])
            except argparse.ArgumentTypeError as exc:
                errors[key] = ValueError('{key}: {exc}'.format(
                    key=key, exc=exc))
        if 'dominance' in values and not values['dominance'] > 1:
            errors['dominance'] = ValueError(_('dominance: must be > 1'))
        if errors:
            raise InvalidConfiguration(errors)
        return argparse.Namespace(out_dir=section['out_dir'], **values)

    def _get_parser(self):
        info = pkginfo.Installed('cavcool')
        parser = ArgumentParser(
            description=_(
                "%(prog)s simulates the collective cooling of trapped "
                "particles through a damped cavity mode and checks the "
                "cooling rate against its predictions."))
        parser.add_argument(
            '--version', action='version', version=info.version)
        parser.set_defaults(func=self.do_help)
        commands = parser.add_subparsers(title=_("commands"))

        help_cmd = commands.add_parser(
            "help", aliases=["?"],
            description=_(
                "With no arguments, displays the list of cavcool "
                "commands. If a command name is given, displays the "
                "description and options for the named command."),
            help=_("Displays help about the specified command"))
        help_cmd.add_argument(
            "cmd", metavar="command", nargs='?',
            help=_("The name of the command to output help for"))
        help_cmd.set_defaults(func=self.do_help)

        run_cmd = commands.add_parser(
            "run",
            description=_(
                "Integrate a scenario, fit the exponential decay of the "
                "phonon number, and compare the fitted rate with the "
                "predicted cooling rate. Writes the trajectory as CSV and "
                "the comparison as a JSON report. Exits with 2 if the rates "
                "differ by more than the tolerance."),
            help=_("Simulate a scenario and check its cooling rate"))
        self._add_scenario_args(run_cmd)
        self._add_fit_args(run_cmd)
        run_cmd.set_defaults(func=self.do_run)

        sweep_cmd = commands.add_parser(
            "sweep",
            description=_(
                "Run a scenario over a grid of one or two swept parameters "
                "and write one row per grid point with the fitted and "
                "predicted rates. Exits with 2 if any point fails."),
            help=_("Sweep a scenario over a parameter grid"))
        sweep_cmd.add_argument(
            "-c", "--config", metavar="PATH", required=True,
            help=_("The sweep specification (JSON or YAML)"))
        sweep_cmd.add_argument(
            "-o", "--out", metavar="DIR", default=self.config.out_dir,
            help=_(
                "The directory to write the sweep table to (default: "
                "%(default)s)"))
        sweep_cmd.add_argument(
            "-j", "--jobs", type=positive_int, default=None,
            help=_(
                "The number of grid points to run in parallel; defaults to "
                "the specification's value, else {jobs}").format(
                    jobs=self.config.jobs))
        self._add_fit_args(sweep_cmd)
        sweep_cmd.set_defaults(func=self.do_sweep)

        rates_cmd = commands.add_parser(
            "rates",
            description=_(
                "Output the collective couplings, the predicted cooling "
                "rates and the operating regime of a scenario without "
                "simulating anything."),
            help=_("Show the predicted cooling rates of a scenario"))
        self._add_source_args(rates_cmd)
        Output.add_style_arg(rates_cmd)
        rates_cmd.set_defaults(func=self.do_rates)

        oracle_cmd = commands.add_parser(
            "oracle-compare",
            description=_(
                "Integrate the linearized moment equations and the "
                "covariance matrix of the bosonized model from the same "
                "initial data, together with the matrix exponential "
                "solution (and the exact run for dicke-exact scenarios), "
                "and report their largest deviations. Exits with 2 if they "
                "disagree by more than the tolerance."),
            help=_("Compare the moment equations with the bosonic oracle"))
        self._add_scenario_args(oracle_cmd)
        oracle_cmd.add_argument(
            "-t", "--tol", type=non_negative_float, default=ORACLE_TOLERANCE,
            help=_(
                "The largest relative deviation accepted (default: "
                "%(default)s)"))
        oracle_cmd.set_defaults(func=self.do_oracle_compare)

        return parser, commands.choices

    @staticmethod
    def _add_source_args(cmd):
        group = cmd.add_mutually_exclusive_group(required=True)
        group.add_argument(
            "-c", "--config", metavar="PATH",
            help=_("The scenario configuration (JSON or YAML)"))
        group.add_argument(
            "-p", "--preset", choices=sorted(PRESETS),
            help=_("A compiled-in scenario to use"))

    def _add_scenario_args(self, cmd):
        self._add_source_args(cmd)
        cmd.add_argument(
            "-o", "--out", metavar="DIR", default=self.config.out_dir,
            help=_(
                "The directory to write artifacts to (default: "
                "%(default)s)"))

    @staticmethod
    def _add_fit_args(cmd):
        cmd.add_argument(
            "-t", "--tol", type=non_negative_float, default=None,
            help=_(
                "The relative tolerance on the fitted rate; overrides the "
                "scenario's tolerance"))
        cmd.add_argument(
            "-r", "--reference", choices=REFERENCES, default=None,
            help=_(
                "The predicted rate to compare against; overrides the "
                "scenario's reference (default: closed-form)"))

    def _load_scenario(self):
        if self._args.preset is not None:
            raw = {'preset': self._args.preset}
        else:
            raw = load_file(self._args.config)
        return parse_config(
            raw, self.config.tolerance, self.config.dominance)

    @staticmethod
    def invalid_config(*exc):
        """
        Generates the error message for unhandled
        :exc:`~cavcool.exc.InvalidConfiguration` exceptions. These are caused
        when a configuration fails to validate, and have an
        :attr:`~cavcool.exc.InvalidConfiguration.errors` attribute listing
        all the exceptions that occurred during validation.
        """
        msg = sys.excepthook.exc_message(*exc)
        for error in exc[1].errors.values():
            msg.extend(sys.excepthook.exc_message(type(error), error, None))
        return msg

    def do_help(self):
        """
        Implementation of the :doc:`help` command.
        """
        if 'cmd' in self._args and self._args.cmd is not None:
            if self._args.cmd not in self.commands:
                raise ValueError(_(
                    'Unknown command "{self._args.cmd}"').format(self=self))
            self.parser.parse_args([self._args.cmd, '-h'])
        else:
            self.parser.parse_args(['-h'])

    def do_run(self):
        """
        Implementation of the :doc:`run` command.
        """
        return run_scenario(
            self._load_scenario(), self._args.out, self._args.tol,
            self._args.reference)

    def do_sweep(self):
        """
        Implementation of the :doc:`sweep` command.
        """
        raw = load_file(self._args.config)
        spec = parse_sweep(raw, self.config.tolerance, self.config.dominance)
        jobs = self._args.jobs
        if jobs is None:
            jobs = spec.jobs if 'jobs' in raw else self.config.jobs
        # results are named after the sweep file and never replace it
        name = Path(self._args.config).stem + '-results'
        return run_sweep(
            spec, self._args.out, jobs, self._args.tol, self._args.reference,
            name)

    def do_rates(self):
        """
        Implementation of the :doc:`rates` command.
        """
        return print_rates(self._load_scenario(), self._output, sys.stdout)

    def do_oracle_compare(self):
        """
        Implementation of the :doc:`oracle-compare` command.
        """
        return oracle_compare(
            self._load_scenario(), self._args.out, self._args.tol)


main = Application()
