"""Binary PGM dumps of grids and plain-text run manifests."""

from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError
from .grid import as_grid

_RANGE_RE = re.compile(rb"#\s*editts\s+min=(\S+)\s+max=(\S+)")


def quantize(grid: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Min-max scale to 0..255; a constant grid maps to all zeros."""
    grid = as_grid(grid)
    lo, hi = float(grid.min()), float(grid.max())
    if hi == lo:
        return np.zeros(grid.shape, dtype=np.uint8), lo, hi
    pixels = np.rint((grid - lo) / (hi - lo) * 255.0)
    return pixels.astype(np.uint8), lo, hi


def export_pgm(grid: np.ndarray, path) -> Path:
    """Write an 8-bit P5 image: time left to right, frequency bin 0 on the bottom row."""
    pixels, lo, hi = quantize(grid)
    height, width = pixels.shape
    header = f"P5\n# editts min={lo!r} max={hi!r}\n{width} {height}\n255\n".encode("ascii")
    path = Path(path)
    path.write_bytes(header + np.ascontiguousarray(pixels[::-1]).tobytes())
    return path


def read_pgm(path) -> tuple[np.ndarray, float, float]:
    """Return ``(pixels, min, max)`` with pixels back in grid orientation."""
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    lo = hi = None
    pos = 0
    while len(tokens) < 4:
        end = data.index(b"\n", pos)
        line = data[pos:end]
        pos = end + 1
        if line.startswith(b"#"):
            m = _RANGE_RE.match(line)
            if m:
                lo, hi = float(m.group(1)), float(m.group(2))
            continue
        tokens.extend(line.split())
    if tokens[0] != b"P5":
        raise ValidationError("not a binary PGM (P5) file")
    width, height = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos : pos + width * height], dtype=np.uint8).reshape(height, width)
    return pixels[::-1].copy(), lo, hi


def dequantize(pixels: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return lo + pixels.astype(np.float64) / 255.0 * (hi - lo)


def write_manifest(path, entries: Mapping[str, object]) -> Path:
    path = Path(path)
    lines = [f"{key}: {value}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
