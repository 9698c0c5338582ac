"""Result files. Every file carries enough metadata to reproduce it:
tool version, hash of the resolved config, and the seed.

CSV metadata rides in leading comment lines (`# key=value`) so the
remainder stays plain CSV for any reader that skips comments.
"""
from __future__ import annotations

import csv
import io
import json
import os

from . import __version__


def meta_lines(cfg_hash: str, seed: int) -> list[str]:
    return [
        f"# version={__version__}",
        f"# config_hash={cfg_hash}",
        f"# seed={seed}",
    ]


def write_csv(path: str, columns: list[str], rows: list[dict], cfg_hash: str, seed: int) -> None:
    buf = io.StringIO()
    for line in meta_lines(cfg_hash, seed):
        buf.write(line + "\n")
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({col: _fmt(row.get(col)) for col in columns})
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def _fmt(value):
    if isinstance(value, float):
        # plain-float repr (numpy scalars carry a wrapper repr)
        return repr(float(value))
    if value is None:
        return ""
    return value


def write_json(path: str, payload: dict, cfg_hash: str, seed: int) -> None:
    doc = {
        "version": __version__,
        "config_hash": cfg_hash,
        "seed": seed,
        **payload,
    }
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def read_csv(path: str) -> tuple[dict, list[str], list[dict]]:
    """Read a file produced by write_csv; returns (meta, columns, rows)."""
    meta: dict[str, str] = {}
    with open(path) as fh:
        pos = fh.tell()
        line = fh.readline()
        while line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            pos = fh.tell()
            line = fh.readline()
        fh.seek(pos)
        reader = csv.DictReader(fh)
        columns = list(reader.fieldnames or [])
        rows = list(reader)
    return meta, columns, rows
