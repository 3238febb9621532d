"""JSON and CSV helpers with byte-stable output.

Floats are written with their shortest round-trip representation; NaN and
infinities become ``null`` so every file is valid JSON.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .normal_form import NormalFormParams
from .ode_model import OdeParams


def clean(v):
    """Convert numpy scalars/arrays, tuples and non-finite floats into plain JSON values."""
    if isinstance(v, dict):
        return {str(k): clean(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [clean(u) for u in v]
    if isinstance(v, np.ndarray):
        return clean(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [clean(float(v.real)), clean(float(v.imag))]
    if isinstance(v, np.generic):
        return clean(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def dumps(obj):
    return json.dumps(clean(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj, path):
    text = dumps(obj)
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)


def read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: not valid JSON ({exc})") from exc


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def load_normal_form(path):
    d = read_json(path)
    if isinstance(d, dict) and "params" in d:
        d = d["params"]
    try:
        return NormalFormParams.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{path}: {exc}") from exc


def load_ode(path):
    d = read_json(path)
    if isinstance(d, dict) and "ode" in d:
        d = d["ode"]
    try:
        return OdeParams.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{path}: {exc}") from exc
