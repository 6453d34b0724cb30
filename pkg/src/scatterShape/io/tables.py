"""Atomic text artifacts: CSV tables, JSON documents, far-field CSV input."""
import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write(path, data):
    """Write bytes to a temporary file next to path, then rename over it"""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path, document):
    text = json.dumps(document, indent=2, sort_keys=True, default=_plain)
    atomic_write(path, (text + "\n").encode())


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_table_csv(path, rows, columns=None):
    """rows: list of dicts; columns default to the keys of the first row"""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _plain(row[c]) if isinstance(row[c], np.generic) else row[c] for c in columns})
    atomic_write(path, buffer.getvalue().encode())


def read_table_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_matrix_csv(path, matrix):
    """One row per matrix row, no header (images, latent vectors)"""
    buffer = io.StringIO()
    np.savetxt(buffer, np.atleast_2d(matrix), delimiter=",", fmt="%.9g")
    atomic_write(path, buffer.getvalue().encode())


def read_farfield_csv(path):
    """Far-field amplitudes from one value per line or a comma-separated row"""
    with open(path, encoding="utf-8") as fh:
        tokens = [t.strip() for line in fh for t in line.replace(";", ",").split(",")]
    values = [float(t) for t in tokens if t]
    if not values:
        raise ValueError(f"no far-field values in {path}")
    return np.array(values)


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
