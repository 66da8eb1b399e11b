"""CSV output with round-trip float formatting."""

import csv
import sys


def fmt(x) -> str:
    if isinstance(x, (bool, int, str)):
        return str(x)
    return format(float(x), ".17g")


def emit_csv(path, header, rows, comment=None) -> None:
    """Write ``rows`` under ``header``; ``path`` of None or '-' means stdout.

    ``comment`` goes on a leading '# ' line.
    """
    if path is None or str(path) == "-":
        _write(sys.stdout, header, rows, comment)
        return
    try:
        with open(path, "w", newline="") as fh:
            _write(fh, header, rows, comment)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write(fh, header, rows, comment=None):
    if comment is not None:
        fh.write(f"# {comment}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])


def read_csv(path):
    """Return (header, rows of floats)."""
    with open(path, newline="") as fh:
        rd = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rd)
        rows = [[float(x) for x in r] for r in rd if r]
    return header, rows
