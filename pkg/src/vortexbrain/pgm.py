"""Binary PGM (P5) writers for debug dumps of patterns and reconstructions,
plus a tiled montage builder.

8-bit frames are max-normalized for quick visual checks; 16-bit frames store
raw sensor counts big-endian per the format.
"""

from __future__ import annotations

import numpy as np


def write_pgm8(path, img: np.ndarray) -> None:
    """Max-normalize to [0, 255] and write binary P5. Debug output."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected 2-d image, got shape {img.shape}")
    peak = img.max() if img.size else 0.0
    if peak <= 0.0:
        data = np.zeros(img.shape, dtype=np.uint8)
    else:
        data = np.clip(np.rint(img * (255.0 / peak)), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_pgm16(path, counts: np.ndarray, maxval: int = 65535) -> None:
    """Write integer counts as 16-bit binary P5 (big-endian sample words)."""
    counts = np.asarray(counts)
    if counts.ndim != 2:
        raise ValueError(f"expected 2-d image, got shape {counts.shape}")
    if not 256 <= maxval <= 65535:
        raise ValueError(f"16-bit maxval must be in [256, 65535], got {maxval}")
    if counts.min() < 0 or counts.max() > maxval:
        raise ValueError("counts out of range for the declared maxval")
    data = counts.astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{counts.shape[1]} {counts.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read binary P5, either depth. Returns uint8 or uint16 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # possibly interleaved with '#' comment lines
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"truncated PGM header in {path}")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace byte after maxval precedes the raster
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:4])
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height
    body = raw[pos : pos + count * dtype.itemsize]
    if len(body) != count * dtype.itemsize:
        raise ValueError(f"PGM raster truncated in {path}")
    img = np.frombuffer(body, dtype=dtype).reshape(height, width)
    return img.astype(np.uint16) if maxval > 255 else img.copy()


def montage(tiles, grid: tuple[int, int] = (5, 5), sep: int = 2) -> np.ndarray:
    """Tile images row-major into a (rows, cols) grid with ``sep``-pixel gaps.

    All tiles must share one shape; gaps and unused cells are filled with
    the global maximum so they read as white in the normalized 8-bit dump.
    Supplying fewer tiles than cells is fine; more is an error. A 5x5 grid
    of 28x28 tiles comes out 148x148.
    """
    tiles = [np.asarray(t, dtype=np.float64) for t in tiles]
    rows, cols = grid
    if not tiles:
        raise ValueError("montage needs at least one tile")
    if len(tiles) > rows * cols:
        raise ValueError(f"{len(tiles)} tiles exceed the {rows}x{cols} grid")
    shape = tiles[0].shape
    if any(t.shape != shape for t in tiles):
        raise ValueError("tiles must all share one shape")
    th, tw = shape
    fill = max(t.max() for t in tiles) if tiles else 1.0
    out = np.full(
        (rows * th + (rows - 1) * sep, cols * tw + (cols - 1) * sep),
        fill,
        dtype=np.float64,
    )
    for idx, tile in enumerate(tiles):
        r, c = divmod(idx, cols)
        y = r * (th + sep)
        x = c * (tw + sep)
        out[y : y + th, x : x + tw] = tile
    return out
