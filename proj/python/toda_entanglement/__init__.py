"""Entanglement growth in the two-particle Toda model."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401


def read_table(path):
    """Read a whitespace table with ``# key = value`` headers.

    Returns ``(header, rows)`` where rows is a list of float tuples.
    """
    header, rows = {}, []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            rows.append(tuple(float(x) for x in line.split()))
    return header, rows
