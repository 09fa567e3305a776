"""Capture-log parsing and dataset file I/O.

Capture line grammar, one frame per LF-terminated line::

    CSI_DATA,<MAC>,<RSSI>,<CHANNEL>,<TIMESTAMP_MS>,[i0 r0 i1 r1 ...]

* MAC as ``XX:XX:XX:XX:XX:XX`` hex (uppercase canonical, any case accepted),
* RSSI / CHANNEL / TIMESTAMP_MS as decimal integers,
* payload: space-separated decimal integers in [-32768, 32767] inside
  square brackets, interleaved (imaginary, real) per subcarrier,
* fields after the closing bracket (signal mode, signal length from some
  capture tools) are accepted and ignored.

The parser is total: any byte sequence yields either a CsiFrame or a
typed ParseFailure, never an exception. The dataset file is a plain CSV
(``label,f0,...,f127``) with floats in shortest round-trip decimal form.
"""

from __future__ import annotations

import enum
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

from .csi import ClassLabel, CsiFrame
from .features import Dataset

PAYLOAD_MIN = -32768
PAYLOAD_MAX = 32767

_SENTINEL = "CSI_DATA"
_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_MAC_ANYCASE_RE = re.compile(r"^[0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5}$")


class FailureKind(enum.Enum):
    NOT_CSI_LINE = "NotCsiLine"
    FIELD_COUNT = "FieldCount"
    BAD_INTEGER = "BadInteger"
    BAD_MAC = "BadMac"
    ODD_PAYLOAD = "OddPayload"
    WIDTH_MISMATCH = "WidthMismatch"


@dataclass(frozen=True)
class RawCsiLine:
    """Verbatim capture line plus its 1-based line number."""

    text: str
    number: int = 1

    def __post_init__(self):
        if self.number < 1:
            raise ValueError("line numbers are 1-based")


@dataclass(frozen=True)
class ParseFailure:
    line_number: int
    kind: FailureKind
    message: str


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files (ragged rows, unknown labels)."""


def _fail(line: RawCsiLine, kind: FailureKind, message: str) -> ParseFailure:
    return ParseFailure(line.number, kind, message)


def _parse_int(token: str) -> Union[int, None]:
    # int() accepts underscores and surrounding whitespace; the wire
    # format does not.
    if not _INT_RE.match(token):
        return None
    return int(token)


def parse_csi_line(
    line: Union[RawCsiLine, str], expected_n: int
) -> Union[CsiFrame, ParseFailure]:
    """Decode one capture line into a frame, or a typed failure.

    The payload decodes as interleaved (imaginary, real) pairs: payload
    ``[a b c d]`` yields subcarrier0 = (re=b, im=a), subcarrier1 =
    (re=d, im=c). ``expected_n`` is the required pair count.
    """
    if expected_n < 1:
        raise ValueError("expected_n must be >= 1")
    if isinstance(line, str):
        line = RawCsiLine(line, 1)
    text = line.text.rstrip("\r\n")

    fields = text.split(",", 5)
    if fields[0] != _SENTINEL:
        return _fail(line, FailureKind.NOT_CSI_LINE, "missing CSI_DATA sentinel")
    if len(fields) != 6:
        return _fail(
            line, FailureKind.FIELD_COUNT, f"expected 6 header fields, got {len(fields)}"
        )

    mac_text = fields[1]
    if not _MAC_ANYCASE_RE.match(mac_text):
        return _fail(line, FailureKind.BAD_MAC, f"malformed MAC {mac_text!r}")
    mac = mac_text.upper()

    meta = {}
    for name, token in (("RSSI", fields[2]), ("CHANNEL", fields[3]), ("TIMESTAMP_MS", fields[4])):
        value = _parse_int(token)
        if value is None:
            return _fail(line, FailureKind.BAD_INTEGER, f"{name} field {token!r} is not an integer")
        meta[name] = value

    payload_field = fields[5]
    if not payload_field.startswith("["):
        return _fail(line, FailureKind.FIELD_COUNT, "payload field must start with '['")
    close = payload_field.find("]")
    if close < 0:
        return _fail(line, FailureKind.FIELD_COUNT, "payload field missing ']'")
    trailing = payload_field[close + 1 :]
    if trailing and not trailing.startswith(","):
        return _fail(line, FailureKind.FIELD_COUNT, "garbage after payload bracket")

    tokens = payload_field[1:close].split()
    values = []
    for token in tokens:
        value = _parse_int(token)
        if value is None or not (PAYLOAD_MIN <= value <= PAYLOAD_MAX):
            return _fail(
                line,
                FailureKind.BAD_INTEGER,
                f"payload token {token!r} is not an integer in [{PAYLOAD_MIN}, {PAYLOAD_MAX}]",
            )
        values.append(value)

    if len(values) % 2 != 0:
        return _fail(
            line, FailureKind.ODD_PAYLOAD, f"{len(values)} payload integers cannot form pairs"
        )
    pairs = len(values) // 2
    if pairs != expected_n:
        return _fail(
            line,
            FailureKind.WIDTH_MISMATCH,
            f"expected {expected_n} subcarriers, payload has {pairs}",
        )

    im = np.array(values[0::2], dtype=float)
    re_ = np.array(values[1::2], dtype=float)
    return CsiFrame(
        timestamp_ms=meta["TIMESTAMP_MS"],
        source_mac=mac,
        rssi_dbm=meta["RSSI"],
        channel=meta["CHANNEL"],
        subcarriers=re_ + 1j * im,
    )


def parse_capture(
    stream: Union[TextIO, Iterable[str]], expected_n: int
) -> tuple[list[CsiFrame], list[ParseFailure]]:
    """Parse every line of a capture; failures are collected, not fatal."""
    frames: list[CsiFrame] = []
    failures: list[ParseFailure] = []
    for number, text in enumerate(stream, start=1):
        result = parse_csi_line(RawCsiLine(text, number), expected_n)
        if isinstance(result, CsiFrame):
            frames.append(result)
        else:
            failures.append(result)
    return frames, failures


def _format_payload_int(value: float, frame_idx: int) -> str:
    if not float(value).is_integer():
        raise ValueError(
            f"frame {frame_idx}: payload value {value!r} is not integral; "
            "the capture format carries ADC integers"
        )
    v = int(value)
    if not (PAYLOAD_MIN <= v <= PAYLOAD_MAX):
        raise ValueError(f"frame {frame_idx}: payload value {v} out of range")
    return str(v)


def write_capture(frames: Iterable[CsiFrame]) -> str:
    """Render frames back to capture text; inverse of parse_capture."""
    lines = []
    for idx, frame in enumerate(frames):
        tokens = []
        for z in frame.subcarriers:
            tokens.append(_format_payload_int(z.imag, idx))
            tokens.append(_format_payload_int(z.real, idx))
        lines.append(
            f"{_SENTINEL},{frame.source_mac},{frame.rssi_dbm},"
            f"{frame.channel},{frame.timestamp_ms},[{' '.join(tokens)}]\n"
        )
    return "".join(lines)


def _atomic_write_text(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_capture_file(frames: Iterable[CsiFrame], path: Union[str, Path]) -> None:
    _atomic_write_text(path, write_capture(frames))


def write_dataset(dataset: Dataset, path: Union[str, Path]) -> None:
    """Write the labeled feature matrix as CSV (atomically).

    Floats use Python's shortest round-trip decimal representation, so
    ``load_dataset(write_dataset(d))`` preserves every value exactly.
    """
    width = dataset.width
    header = "label," + ",".join(f"f{i}" for i in range(width))
    rows = [header]
    for label, row in zip(dataset.labels, dataset.X):
        rows.append(label.value + "," + ",".join(repr(float(v)) for v in row))
    _atomic_write_text(path, "\n".join(rows) + "\n")


def load_dataset(path: Union[str, Path]) -> Dataset:
    """Read a dataset CSV; raises DatasetFormatError naming the bad row."""
    with open(path, "r", encoding="utf-8") as fp:
        header = fp.readline().rstrip("\n")
        columns = header.split(",")
        if len(columns) < 2 or columns[0] != "label":
            raise DatasetFormatError("header must be 'label,f0,...'")
        width = len(columns) - 1

        labels: list[ClassLabel] = []
        rows: list[np.ndarray] = []
        for row_number, text in enumerate(fp, start=2):
            text = text.rstrip("\n")
            if not text:
                continue
            parts = text.split(",")
            if len(parts) != width + 1:
                raise DatasetFormatError(
                    f"row {row_number}: width mismatch, {len(parts) - 1} features, "
                    f"expected {width}"
                )
            try:
                labels.append(ClassLabel.from_string(parts[0]))
            except ValueError as exc:
                raise DatasetFormatError(f"row {row_number}: {exc}") from exc
            try:
                rows.append(np.array([float(v) for v in parts[1:]]))
            except ValueError as exc:
                raise DatasetFormatError(f"row {row_number}: bad float ({exc})") from exc

    if not rows:
        raise DatasetFormatError("dataset has no rows")
    return Dataset(np.stack(rows), labels)
