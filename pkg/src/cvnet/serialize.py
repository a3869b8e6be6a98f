"""JSON round-tripping for states and reports."""

from __future__ import annotations

import dataclasses
import enum
import json
from pathlib import Path

import numpy as np

from cvnet.errors import InvalidInput, WrongShape
from cvnet.symplectic import GaussianState, validate_cm


def state_to_dict(state: GaussianState) -> dict:
    return {
        "n_modes": state.n_modes,
        "displacement": [float(x) for x in state.displacement],
        "cm": [[float(x) for x in row] for row in state.cm.entries],
    }


def state_from_dict(data: dict) -> GaussianState:
    try:
        n = int(data["n_modes"])
        cm = np.asarray(data["cm"], dtype=float)
        disp = np.asarray(data.get("displacement", np.zeros(2 * n)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed state JSON: {exc}") from exc
    if cm.shape != (2 * n, 2 * n):
        raise WrongShape(f"n_modes={n} but cm has shape {cm.shape}")
    return GaussianState(disp, validate_cm(cm))


def load_state(path) -> GaussianState:
    with open(path, encoding="utf-8") as fh:
        return state_from_dict(json.load(fh))


def save_state(state: GaussianState, path) -> None:
    Path(path).write_text(dumps(state_to_dict(state)) + "\n", encoding="utf-8")


def to_jsonable(obj):
    """Convert dataclasses, enums and numpy values into plain JSON types."""
    if isinstance(obj, GaussianState):
        return state_to_dict(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict())
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        if np.isnan(x):
            return None
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)
