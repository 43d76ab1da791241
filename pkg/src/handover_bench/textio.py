"""Line-oriented structured text container shared by scene, chain, trace,
and results files: a magic line, `key value...` header lines, then dense
records.  Floats are written with ``repr`` so files round-trip bit-exactly.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterator


class FormatError(Exception):
    """Malformed container file; carries the byte offset of the bad line."""

    def __init__(self, message: str, path: str | Path | None = None, byte_offset: int | None = None):
        self.path = str(path) if path is not None else None
        self.byte_offset = byte_offset
        where = ""
        if self.path is not None:
            where += f" in {self.path}"
        if byte_offset is not None:
            where += f" at byte {byte_offset}"
        super().__init__(message + where)


class LineReader:
    """Iterates non-empty lines of a text file, tracking byte offsets."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._offset = 0
        try:
            self._raw = self.path.read_bytes()
        except OSError as exc:
            raise FormatError(f"cannot read file: {exc}", path=path) from exc

    def __iter__(self) -> Iterator[tuple[list[str], int]]:
        offset = 0
        for raw_line in self._raw.split(b"\n"):
            line_offset = offset
            offset += len(raw_line) + 1
            try:
                text = raw_line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError("non-UTF-8 data", path=self.path, byte_offset=line_offset) from exc
            fields = text.split()
            if fields:
                yield fields, line_offset

    def error(self, message: str, byte_offset: int | None = None) -> FormatError:
        return FormatError(message, path=self.path, byte_offset=byte_offset)


def fmt_float(x: float) -> str:
    """Shortest decimal representation that parses back to the same float."""
    return repr(float(x))


def fmt_floats(values) -> str:
    return " ".join(fmt_float(v) for v in values)


def parse_float(token: str, reader: LineReader, offset: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise reader.error(f"expected a number, got {token!r}", offset) from None


def parse_int(token: str, reader: LineReader, offset: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise reader.error(f"expected an integer, got {token!r}", offset) from None
