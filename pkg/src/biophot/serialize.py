"""Deterministic text serialization shared by trajectory, scan, and CLI output.

All numeric CSV cells carry 17 significant digits so that a re-run with the
same seed reproduces byte-identical artifacts.
"""

from __future__ import annotations

import json
from typing import Iterable, Sequence

__all__ = ["fmt_number", "csv_text", "json_text"]


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)):
        return str(x)
    return f"{float(x):.17g}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_number(x) if not isinstance(x, str) else x for x in row))
    return "\n".join(lines) + "\n"


def _json_default(x):
    import numpy as np

    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"
