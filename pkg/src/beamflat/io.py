"""Atomic CSV/JSON writers with fixed-precision number formatting."""

import csv
import json
import os
import tempfile

PRECISION_ENV = "BEAMFLAT_PRECISION"
DEFAULT_PRECISION = 17


def precision():
    """Significant digits for numeric output; ``BEAMFLAT_PRECISION`` overrides."""
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION
    try:
        digits = int(raw)
    except ValueError:
        raise ValueError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
    if not 1 <= digits <= 17:
        raise ValueError(f"{PRECISION_ENV} must lie in 1..17, got {digits}")
    return digits


def format_value(value, digits=None):
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return "" if value is None else str(value)
    if isinstance(value, int):
        return str(value)
    return f"{float(value) + 0.0:.{digits or precision()}g}"  # no "-0"


def _atomic_write(path, write):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Write ``rows`` under ``header``; the file appears only once complete."""
    digits = precision()

    def write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v, digits) for v in row])

    _atomic_write(path, write)


def write_json(path, payload):
    _atomic_write(path, lambda fh: fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n"))


def read_csv(path):
    """Header and rows (as strings) of a CSV written by :func:`write_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)
