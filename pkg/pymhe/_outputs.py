"""
pymhe._outputs
==============

Output directory and the files commands write into it.
"""

from __future__ import annotations as _annotations

import csv as _csv
import io as _io
import json as _json
import math as _math
import typing as _t
from abc import ABC as _ABC
from abc import abstractmethod as _abstractmethod
from pathlib import Path as _Path

from ._objects import NAME as _NAME

#: Significant digits of every float written to CSV.
DIGITS = 17

Row = _t.Sequence[_t.Any]


def format_value(value: _t.Any) -> str:
    """Format a single CSV cell.

    Floats keep 17 significant digits so re-reading reproduces them
    exactly; ``None`` and NaN are written as empty cells.

    :param value: Value to format.
    :return: Cell text.
    """
    if value is None:
        return ""

    if isinstance(value, bool):
        return str(int(value))

    if isinstance(value, (int, str)):
        return str(value)

    value = float(value)
    if _math.isnan(value):
        return ""

    return format(value, f".{DIGITS}g")


def parse_value(text: str) -> float:
    """Parse a cell written by ``format_value``.

    :param text: Cell text.
    :return: Float value, NaN for empty cells.
    """
    return float(text) if text else float("nan")


class _File(_ABC):
    def __init__(self, parent: _Path) -> None:
        self._parent = parent

    @property
    @_abstractmethod
    def name(self) -> str:
        """File name."""

    @property
    @_abstractmethod
    def text(self) -> str:
        """File text."""

    @property
    def path(self) -> _Path:
        """File path."""
        return self._parent / self.name

    def write(self) -> _Path:
        """Write to file.

        :return: Path written.
        """
        self.path.parent.mkdir(exist_ok=True, parents=True)
        self.path.write_text(self.text, encoding="utf-8")
        return self.path


class _Gitignore(_File):
    @property
    def name(self) -> str:
        """File path."""
        return ".gitignore"

    @property
    def text(self) -> str:
        """File text."""
        return f"# Created by {_NAME} automatically.\n*\n"


class CsvFile(_File):
    """Comma separated table with a header row.

    :param parent: Directory to write into.
    :param name: File name.
    :param header: Column names.
    :param rows: Table rows, one value per column.
    """

    def __init__(
        self,
        parent: _Path,
        name: str,
        header: _t.Sequence[str],
        rows: _t.Iterable[Row],
    ) -> None:
        super().__init__(parent)
        self._name = name
        self._header = list(header)
        self._rows = [list(r) for r in rows]

    @property
    def name(self) -> str:
        """File path."""
        return self._name

    @property
    def text(self) -> str:
        """File text."""
        buffer = _io.StringIO()
        writer = _csv.writer(buffer, lineterminator="\n")
        writer.writerow(self._header)
        for row in self._rows:
            writer.writerow([format_value(i) for i in row])

        return buffer.getvalue()


class RunRecord(_File):
    """Resolved configuration and seed of a run.

    :param parent: Directory to write into.
    :param record: JSON serializable mapping.
    """

    def __init__(self, parent: _Path, record: dict[str, _t.Any]) -> None:
        super().__init__(parent)
        self._record = record

    @property
    def name(self) -> str:
        """File path."""
        return "run.json"

    @property
    def text(self) -> str:
        """File text."""
        return _json.dumps(self._record, indent=2, sort_keys=True) + "\n"


def write_csv(
    path: _Path, header: _t.Sequence[str], rows: _t.Iterable[Row]
) -> _Path:
    """Write a table to ``path``.

    :param path: Destination file.
    :param header: Column names.
    :param rows: Table rows.
    :return: Path written.
    """
    return CsvFile(path.parent, path.name, header, rows).write()


def read_csv(path: _Path) -> tuple[list[str], list[list[str]]]:
    """Read a table written by ``write_csv``.

    :param path: Source file.
    :return: Header and raw rows.
    """
    with path.open(encoding="utf-8", newline="") as fin:
        reader = _csv.reader(fin)
        header = next(reader)
        return header, list(reader)


def create(path: _Path) -> None:
    """Create output directory and mark it untracked.

    :param path: Output directory.
    """
    path.mkdir(exist_ok=True, parents=True)
    _Gitignore(path).write()
