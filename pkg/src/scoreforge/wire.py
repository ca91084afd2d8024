"""Wire encoding shared with the prediction bridge.

Arrays travel as base64-encoded little-endian 32-bit floats inside JSON
documents. The round trip is bit-exact for float32 payloads, debuggable
with standard tools, and language-neutral.
"""

from __future__ import annotations

import base64

import numpy as np

from .exceptions import ProtocolError


def encode_f32(arr: np.ndarray) -> str:
    """Array -> base64 string of little-endian float32 bytes (C order)."""
    data = np.ascontiguousarray(arr, dtype="<f4")
    return base64.b64encode(data.tobytes()).decode("ascii")


def decode_f32(text: str, shape: tuple[int, ...] | list[int]) -> np.ndarray:
    """Inverse of encode_f32; validates the byte count against shape."""
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as exc:
        raise ProtocolError(f"invalid base64 payload: {exc}") from exc
    count = int(np.prod(shape)) if len(shape) else 1
    if len(raw) != 4 * count:
        raise ProtocolError(
            f"payload holds {len(raw) // 4} float32 values, shape "
            f"{tuple(shape)} needs {count}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(tuple(shape))
