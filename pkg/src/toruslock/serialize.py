"""JSON round trips for systems and artifacts, and atomic file writes.

Everything written to disk is deterministic for a fixed config and seed:
keys are sorted, floats serialize through repr (round-trip exact), rational
data as integer pairs, and files land via temp-file + rename.
"""

from __future__ import annotations

import json
import os
import tempfile

from .dynamics import Omega, QpfSystem
from .errors import RepresentationError
from .fields import field_from_obj

__all__ = ["system_to_obj", "system_from_obj", "load_system", "dump_json",
           "atomic_write_text", "atomic_write_json"]


def system_to_obj(sys: QpfSystem) -> dict:
    return {"schema": "toruslock-map-1", "omega": sys.omega.to_obj(),
            "field": sys.field.to_obj()}


def system_from_obj(obj) -> QpfSystem:
    if not isinstance(obj, dict) or "omega" not in obj or "field" not in obj:
        raise RepresentationError("map spec needs 'omega' and 'field' entries")
    return QpfSystem(Omega.from_obj(obj["omega"]), field_from_obj(obj["field"]))


def load_system(path: str) -> QpfSystem:
    with open(path) as fh:
        return system_from_obj(json.load(fh))


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def atomic_write_text(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str, obj):
    atomic_write_text(path, dump_json(obj))
