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
The :mod:`cavcool.files` module contains the :class:`AtomicReplaceFile`
context manager through which every artifact (trajectory CSV, reports, sweep
tables) is written. Output goes to a hidden file beside the target which
replaces the target only if the block completes, so an interrupted run never
leaves a truncated CSV behind::

    >>> from pathlib import Path
    >>> from cavcool.files import AtomicReplaceFile
    >>> report = Path('report.json')
    >>> report.write_text('{}')
    2
    >>> with AtomicReplaceFile(report, encoding='utf-8') as f:
    ...     f.write('{"passed": ')
    ...     raise KeyboardInterrupt
    ...
    11
    Traceback (most recent call last):
      File "<stdin>", line 3, in <module>
    KeyboardInterrupt
    >>> report.read_text()
    '{}'

.. autoclass:: AtomicReplaceFile

.. data:: UMASK

    The umask of the process, read once when the module is imported.
"""

import os
import tempfile
from pathlib import Path


def _read_umask():
    # the only way to query the umask is to replace it
    mask = os.umask(0o022)
    os.umask(mask)
    return mask


UMASK = _read_umask()


class AtomicReplaceFile:
    """
    Context manager returning a file for the artifact at *path*. The file is
    a hidden temporary (``.<name>.<random>.part``) in the target's directory,
    which must exist. When the block completes the temporary is renamed over
    the target; if it raises, the temporary is removed, the target is left
    as it was and the exception propagates.

    A replaced artifact keeps its permissions. A new one gets 0666 masked by
    :data:`UMASK`, as :func:`open` would have created it.

    :type path: str or pathlib.Path
    :param path:
        The artifact to write.

    :param str encoding:
        If :data:`None` (the default) the file is opened in binary mode,
        otherwise in text mode with this encoding.

    :param str newline:
        Passed to text mode files; the :mod:`csv` writers use ``''`` so that
        they control line endings themselves.
    """
    def __init__(self, path, encoding=None, newline=None):
        self.path = Path(path)
        self.encoding = encoding
        self.newline = newline
        self._file = None

    def _mode(self):
        try:
            return self.path.stat().st_mode & 0o7777
        except FileNotFoundError:
            return 0o666 & ~UMASK

    def __enter__(self):
        fd, name = tempfile.mkstemp(
            prefix='.{name}.'.format(name=self.path.name), suffix='.part',
            dir=str(self.path.parent))
        os.close(fd)
        if self.encoding is None:
            self._file = open(name, 'wb')
        else:
            self._file = open(
                name, 'w', encoding=self.encoding, newline=self.newline)
        return self._file

    def __exit__(self, exc_type, exc_value, exc_tb):
        name = self._file.name
        self._file.close()
        self._file = None
        if exc_type is None:
            os.chmod(name, self._mode())
            os.replace(name, str(self.path))
        else:
            os.unlink(name)
        return False
