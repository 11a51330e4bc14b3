from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import numpy as np

# 17 significant digits round-trip every double exactly
FLOAT_FORMAT = "%.17g"
TWO_PI = 2.0 * math.pi


def env_get(env: Any, key: str, default: Any = None) -> Any:
    if env is None:
        return default
    val = getattr(env, key, None)
    if val is not None:
        return val
    try:
        return env.get(key, default)
    except Exception:
        return default


def load_json_object(path: str | Path) -> Dict[str, Any]:
    try:
        body = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ValueError(f"Cannot read JSON document {path}: {e}") from e
    if not isinstance(body, dict):
        raise ValueError(f"{path}: JSON document must be an object")
    return body


def chunked(seq: Sequence[Any], size: int) -> Iterable[Sequence[Any]]:
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def to_native(v: Any) -> Any:
    """Convert numpy scalars so json.dumps works, keep None for missing."""
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        f = float(v)
        return None if not math.isfinite(f) else f
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def json_safe(obj: Any) -> Any:
    """Recursively turn NaN/Infinity into None and numpy values into natives."""
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    obj = to_native(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def complex_pair(z: complex) -> list[float]:
    """JSON has no complex type; store as [re, im]."""
    z = complex(z)
    return [z.real, z.imag]


def wrap_phase(phi: float) -> float:
    """Map an angle into [-pi, pi)."""
    return (float(phi) + math.pi) % TWO_PI - math.pi
