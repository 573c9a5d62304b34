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
The :mod:`cavcool.output` module defines the :class:`Output` class which is
responsible for rendering results (rate tables, comparison reports,
trajectories) in a selected style (JSON, YAML or shell); it also provides a
static method to add the supported styles to an
:class:`~argparse.ArgumentParser`.

.. autoclass:: Output
    :members:

.. autofunction:: format_number

.. autofunction:: finite
"""

import csv
import json
import math
import shlex
import gettext

import numpy as np
import yaml

_ = gettext.gettext


def format_number(value):
    """
    Format *value* for a CSV cell with 17 significant digits, enough to
    read back the identical binary64 value. NaN and infinities are written
    as ``nan``, ``inf`` and ``-inf``.
    """
    return '%.17g' % value


def finite(obj):
    """
    Returns a copy of *obj* (nested dicts, lists and tuples of numbers,
    strings, booleans and :data:`None`) in which non-finite floats are
    replaced by :data:`None` and numpy scalars by their Python equivalents,
    so that the result is valid JSON.
    """
    if isinstance(obj, dict):
        return {str(key): finite(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [finite(item) for item in obj]
    elif isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    elif isinstance(obj, (int, np.integer)):
        return int(obj)
    elif isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if math.isfinite(obj) else None
    return obj


class Output:
    """
    Used by the main application to render its results. The methods
    :meth:`dump_rates` and :meth:`dump_report` change the format they work
    with based on the value of the :attr:`style` attribute which defaults to
    "json", but can alternatively be "yaml" or "shell" if the user specifies
    one of the style arguments which :meth:`add_style_arg` creates.
    Trajectories and sweep tables are always CSV (:meth:`write_csv`).
    """
    def __init__(self, style='json'):
        self.style = style

    @staticmethod
    def add_style_arg(parser, *, required=False):
        """
        Create a mutually exclusive :mod:`argparse` group and add to it options
        for the various output styles supported by this class.
        """
        parser.set_defaults(style="json")
        fmt_group = parser.add_mutually_exclusive_group(required=required)
        fmt_group.add_argument(
            "--json", dest="style", action="store_const", const="json",
            help=_("Use JSON as the format (the default)"))
        fmt_group.add_argument(
            "--yaml", dest="style", action="store_const", const="yaml",
            help=_("Use YAML as the format"))
        fmt_group.add_argument(
            "--shell", dest="style", action="store_const", const="shell",
            help=_("Use a var=value format suitable for the shell"))
        return fmt_group

    def dump_rates(self, rates, file):
        """
        Write the mapping *rates* (as produced by
        :func:`~cavcool.runner.rates`) to the file-like object *file*.
        """
        return {
            'json':  self._dump_rates_json,
            'yaml':  self._dump_rates_yaml,
            'shell': self._dump_rates_shell,
        }[self.style](finite(rates), file)

    @staticmethod
    def _dump_rates_json(rates, file):
        json.dump(rates, file, sort_keys=True, indent=2)
        file.write('\n')

    @staticmethod
    def _dump_rates_yaml(rates, file):
        yaml.safe_dump(rates, file, default_flow_style=False)

    @staticmethod
    def _dump_rates_shell(rates, file):
        def flatten(prefix, obj):
            if isinstance(obj, dict):
                for key, value in sorted(obj.items()):
                    yield from flatten(
                        key if not prefix else prefix + '_' + key, value)
            else:
                yield prefix, obj

        for name, value in flatten('', rates):
            file.write('{name}={value}\n'.format(
                name=name, value=Output._format_value_shell(value)))

    @staticmethod
    def _format_value_shell(value):
        if value is None:
            return ''
        elif isinstance(value, bool):
            return ('false', 'true')[value]
        elif isinstance(value, list):
            return '({})'.format(' '.join(
                Output._format_value_shell(e) for e in value
            ))
        elif isinstance(value, float):
            return repr(value)
        else:
            return shlex.quote(str(value))

    @staticmethod
    def dump_report(report, file):
        """
        Write the mapping *report* to *file* as JSON with sorted keys. Reports
        are always JSON regardless of :attr:`style`.
        """
        json.dump(finite(report), file, sort_keys=True, indent=2)
        file.write('\n')

    @staticmethod
    def write_csv(header, rows, file):
        """
        Write the sequence of column names *header* followed by *rows* to the
        file-like object *file* (opened with ``newline=''``). Numbers are
        written by :func:`format_number`; strings are quoted where needed.
        """
        writer = csv.writer(file, lineterminator='\r\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([
                value if isinstance(value, str) else format_number(value)
                for value in row
            ])
