"""Deterministic CSV emission (17 significant digits, RFC-4180 quoting)."""

from __future__ import annotations

import csv
import os

from ..errors import IoFailure

SCHEMA_VERSION = 1


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, complex):
        return f"{format(v.real, '.17g')}+{format(v.imag, '.17g')}j"
    return str(v)


def export_csv(rows, path, schema: str, meta_hash: str = "") -> str:
    """Write a list of dict records deterministically.

    Column order: canonical (first-record key order, then any extras
    sorted); every row carries the schema version and the run metadata
    hash, so a file is self-describing and re-runs are byte-comparable.
    """
    rows = list(rows)
    if not rows:
        raise IoFailure("refusing to write an empty table")
    cols = list(rows[0].keys())
    extra = sorted({k for r in rows for k in r} - set(cols))
    cols = cols + extra
    header = ["schema", "meta_hash"] + cols
    tag = f"{schema}-v{SCHEMA_VERSION}"
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
            w.writerow(header)
            for r in rows:
                w.writerow([tag, meta_hash] + [_fmt(r.get(c, "")) for c in cols])
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from None
    return path
