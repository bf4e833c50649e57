"""Readers for the simulator's CSV and Husimi-field export formats.

This package is a pure consumer: it never computes physics, only parses the
documented file layouts and validates their headers.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class InputError(RuntimeError):
    """Missing or malformed input file."""


def read_csv(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a one-line-header CSV into named float columns.

    String-valued columns (e.g. status) come back as object arrays.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"missing input file: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    missing = set(required) - set(header)
    if missing:
        raise InputError(f"{path}: missing columns {sorted(missing)}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    columns: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in rows]
        try:
            columns[name] = np.array([float(x) if x else np.nan for x in raw])
        except ValueError:
            columns[name] = np.array(raw, dtype=object)
    return columns


def read_husimi_field(path: Path):
    """Read the Husimi-field export: two header lines then row-major values."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"missing input file: {path}")
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise InputError(f"{path}: expected a header line")
        parts = fh.readline().lstrip("# ").split()
        if len(parts) != 6:
            raise InputError(f"{path}: malformed grid header")
        qmin, qmax, pmin, pmax = (float(x) for x in parts[:4])
        nq, npts = int(parts[4]), int(parts[5])
        values = np.loadtxt(fh, delimiter=",")
    values = np.asarray(values, dtype=float).reshape(nq, npts)
    q = np.linspace(qmin, qmax, nq)
    p = np.linspace(pmin, pmax, npts)
    return q, p, values
