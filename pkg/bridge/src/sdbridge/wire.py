"""Array encoding for the wire: base64 of little-endian float32 bytes."""

from __future__ import annotations

import base64

import numpy as np


class WireError(ValueError):
    """Malformed payload (bad base64 or length/shape mismatch)."""


def encode_f32(arr: np.ndarray) -> str:
    data = np.ascontiguousarray(arr, dtype="<f4")
    return base64.b64encode(data.tobytes()).decode("ascii")


def decode_f32(text: str, shape) -> np.ndarray:
    try:
        raw = base64.b64decode(str(text).encode("ascii"), validate=True)
    except Exception as exc:
        raise WireError(f"invalid base64: {exc}") from exc
    count = 1
    for v in shape:
        count *= int(v)
    if len(raw) != 4 * count:
        raise WireError(
            f"payload holds {len(raw) // 4} float32 values, shape "
            f"{tuple(shape)} needs {count}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(tuple(int(v) for v in shape))
