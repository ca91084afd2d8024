"""File-output helpers: atomic writes, hashes, CSV, PGM image dumps.

Every artifact writer goes through atomic_write_* (temp file + rename in
the destination directory) so partially written files never appear under
their final name.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | Path, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_csv(
    path: str | Path, header: Sequence[str], rows: Iterable[Sequence]
) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    atomic_write_text(path, buf.getvalue())


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_json(doc: dict) -> str:
    return sha256_bytes(json.dumps(doc, sort_keys=True).encode("utf-8"))


def sha256_array(arr: np.ndarray) -> str:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return sha256_bytes(arr.tobytes())


def hash_draw(t: int, eps: np.ndarray) -> str:
    """Stable digest of one (timestep, noise draw) pair, for paired-run
    identity checks."""
    h = hashlib.sha256()
    h.update(int(t).to_bytes(8, "little", signed=False))
    h.update(np.ascontiguousarray(eps, dtype=np.float64).tobytes())
    return h.hexdigest()


def write_pgm(path: str | Path, image: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> None:
    """Dump a 2-D field as binary 8-bit PGM, mapping [lo, hi] to 0..255.

    Values outside the range are clipped. Bit-exact and dependency-free;
    use write_png for a viewer-friendlier format.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"PGM dump needs a 2-D array, got shape {image.shape}")
    if hi <= lo:
        raise ValueError("hi must exceed lo")
    scaled = np.clip((image - lo) / (hi - lo), 0.0, 1.0)
    pixels = np.round(scaled * 255.0).astype(np.uint8)
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + pixels.tobytes())


def write_png(path: str | Path, image: np.ndarray, lo: float = 0.0, hi: float = 1.0) -> None:
    """Optional PNG dump via Pillow; falls back to PGM if Pillow is absent."""
    try:
        from PIL import Image
    except ImportError:
        write_pgm(Path(path).with_suffix(".pgm"), image, lo, hi)
        return
    image = np.asarray(image, dtype=np.float64)
    scaled = np.clip((image - lo) / (hi - lo), 0.0, 1.0)
    pixels = np.round(scaled * 255.0).astype(np.uint8)
    buf = Image.fromarray(pixels, mode="L")
    tmp = Path(path).with_name(Path(path).name + ".tmp.png")
    buf.save(tmp, format="PNG")
    os.replace(tmp, path)
