"""
Readers for one-port measurement files: Touchstone v1 ``.s1p`` (loaded with scikit-rf after a line-numbered
validation pass) and ``freq_hz,re_z,im_z`` impedance CSV
"""
import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
import skrf

from bawutils.errors import ArgumentException, TouchstoneParseException
from bawutils.sparams import DEFAULT_Z0, ReflectionSpectrum, z_to_s11
from bawutils.thickness_mode import ImpedanceSpectrum

_LOGGER = logging.getLogger(__name__)

FREQUENCY_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
DATA_FORMATS = ("RI", "MA", "DB")
IMPEDANCE_CSV_HEADER = ["freq_hz", "re_z", "im_z"]
SKRF_ERRORS = (ValueError, IndexError, KeyError, NotImplementedError)


@dataclass
class OptionLine:
    """Touchstone option line; the defaults are the ones the format prescribes when the line is absent"""

    frequency_multiplier: float = 1e9
    data_format: str = "MA"
    z0: float = DEFAULT_Z0

    @classmethod
    def parse(cls, text: str, line_number: int) -> "OptionLine":
        option = cls()
        tokens = text.upper().split()
        index = 0
        while index < len(tokens):
            token = tokens[index]
            if token in FREQUENCY_UNITS:
                option.frequency_multiplier = FREQUENCY_UNITS[token]
            elif token in DATA_FORMATS:
                option.data_format = token
            elif token == "S":
                pass
            elif token in ("Y", "Z", "H", "G"):
                raise TouchstoneParseException(f"only S parameters are supported, got {token}", line_number)
            elif token == "R":
                index += 1
                try:
                    option.z0 = float(tokens[index])
                except (IndexError, ValueError) as exc:
                    raise TouchstoneParseException("option R must be followed by a number", line_number) from exc
                if not option.z0 > 0:
                    raise TouchstoneParseException(
                        f"reference impedance must be positive, got {option.z0}", line_number
                    )
            else:
                raise TouchstoneParseException(f"unrecognised option {token!r}", line_number)
            index += 1
        return option


def _read_lines(path: Path) -> List[str]:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ArgumentException(f"Unable to read {path}: {exc}") from exc
    try:
        return raw.decode("utf-8").splitlines()
    except UnicodeDecodeError as exc:
        line_number = raw.count(b"\n", 0, exc.start) + 1
        raise TouchstoneParseException(f"{path} is not UTF-8 text: {exc.reason}", line_number) from exc


def _check_values(values: List[float], previous: float, line_number: int) -> None:
    if not all(math.isfinite(value) for value in values):
        raise TouchstoneParseException(f"non-finite value in {values}", line_number)
    if values[0] <= previous:
        raise TouchstoneParseException(f"frequency {values[0]:g} is not above the previous sample", line_number)


def validate_s1p(path: Union[str, Path]) -> OptionLine:
    """
    Check a one-port Touchstone v1 file line by line before it is handed to scikit-rf: one option line at most, three
    finite numbers per data line and strictly increasing frequencies. ``!`` starts a comment anywhere on a line.
    """
    path = Path(path)
    option = None
    previous = -math.inf
    count = 0
    for line_number, raw_line in enumerate(_read_lines(path), start=1):
        line = raw_line.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if option is not None or count:
                raise TouchstoneParseException("the option line must come once, before the data", line_number)
            option = OptionLine.parse(line[1:], line_number)
            continue
        fields = line.split()
        if len(fields) != 3:
            raise TouchstoneParseException(
                f"expected 3 values (frequency and one S11 pair) for a one-port file, got {len(fields)}", line_number
            )
        try:
            values = [float(value) for value in fields]
        except ValueError as exc:
            raise TouchstoneParseException(f"non-numeric data: {line!r}", line_number) from exc
        _check_values(values, previous, line_number)
        previous = values[0]
        count += 1
    if not count:
        raise TouchstoneParseException("file contains no data lines")
    if option is None:
        _LOGGER.debug(f"{path}: no option line, using Touchstone defaults")
        option = OptionLine()
    return option


def read_touchstone_s1p(path: Union[str, Path]) -> ReflectionSpectrum:
    """Parse a one-port Touchstone v1 file in RI, MA or DB format"""
    path = Path(path)
    if path.suffix.lower() != ".s1p":
        raise ArgumentException(f"a one-port Touchstone file needs the .s1p extension, got {path}")
    option = validate_s1p(path)
    try:
        network = skrf.Network(str(path))
    except SKRF_ERRORS as exc:
        raise TouchstoneParseException(f"scikit-rf could not load {path}: {exc}") from exc
    if network.nports != 1:
        raise TouchstoneParseException(f"expected a one-port network, got {network.nports} ports")
    z0 = float(np.real(network.z0[0, 0]))
    if not math.isclose(z0, option.z0):
        _LOGGER.warning(f"{path}: scikit-rf reference impedance {z0:g} differs from the option line {option.z0:g}")
    _LOGGER.info(f"Read {network.f.size} S11 samples from {path}")
    return ReflectionSpectrum(network.f, network.s[:, 0, 0], z0)


def read_impedance_csv(path: Union[str, Path]) -> ImpedanceSpectrum:
    path = Path(path)
    rows = list(csv.reader(_read_lines(path)))
    if not rows or [cell.strip() for cell in rows[0]] != IMPEDANCE_CSV_HEADER:
        raise TouchstoneParseException(f"expected header {','.join(IMPEDANCE_CSV_HEADER)}", 1)
    values = []
    previous = -math.inf
    for line_number, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise TouchstoneParseException(f"expected 3 columns, got {len(row)}", line_number)
        try:
            sample = [float(cell) for cell in row]
        except ValueError as exc:
            raise TouchstoneParseException(f"non-numeric data: {row!r}", line_number) from exc
        _check_values(sample, previous, line_number)
        previous = sample[0]
        values.append(sample)
    if not values:
        raise TouchstoneParseException("file contains no data rows")
    data = np.array(values)
    _LOGGER.info(f"Read {data.shape[0]} impedance samples from {path}")
    return ImpedanceSpectrum(data[:, 0], data[:, 1] + 1j * data[:, 2])


def read_spectrum(path: Union[str, Path], z0: float = DEFAULT_Z0) -> ReflectionSpectrum:
    """Read ``.s1p`` (reference impedance from the file) or impedance ``.csv`` (converted with ``z0``)"""
    suffix = Path(path).suffix.lower()
    if suffix == ".s1p":
        return read_touchstone_s1p(path)
    if suffix == ".csv":
        return z_to_s11(read_impedance_csv(path), z0)
    raise ArgumentException(f"unsupported measurement file {path}, expected .s1p or .csv")
