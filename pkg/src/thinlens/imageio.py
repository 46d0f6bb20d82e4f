"""Raster file I/O: PNG images, PFM float maps, and the two raw formats
used by this project (TLDEPTH1 float32 depth, TLSEG1 top-3 label stacks).

Stored PNG code values are treated as linear light: decoding divides by the
max code value (255 or 65535) and encoding multiplies back. No gamma
transform is applied in either direction, so a decode/encode round trip is
deterministic.
"""

from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np

DEPTH_MAGIC = b"TLDEPTH1"
SEG_MAGIC = b"TLSEG1"


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a float64 array in [0, 1], shape (H, W) or (H, W, 3)."""
    raw = cv2.imdecode(np.frombuffer(data, np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError("could not decode PNG data")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ValueError(f"unsupported PNG sample type: {raw.dtype}")
    if raw.ndim == 3:
        if raw.shape[2] == 4:  # drop alpha
            raw = raw[:, :, :3]
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    return raw.astype(np.float64) / scale


def encode_png(image: np.ndarray, bit_depth: int = 16) -> bytes:
    """Encode a float image in [0, 1] as PNG bytes (16-bit by default)."""
    if bit_depth == 16:
        maxval, dtype = 65535.0, np.uint16
    elif bit_depth == 8:
        maxval, dtype = 255.0, np.uint8
    else:
        raise ValueError("bit_depth must be 8 or 16")
    arr = np.asarray(image, dtype=np.float64)
    codes = np.rint(np.clip(arr, 0.0, 1.0) * maxval).astype(dtype)
    if codes.ndim == 3:
        if codes.shape[2] == 1:
            codes = codes[:, :, 0]
        else:
            codes = cv2.cvtColor(codes, cv2.COLOR_RGB2BGR)
    ok, buf = cv2.imencode(".png", codes)
    if not ok:
        raise ValueError("PNG encoding failed")
    return buf.tobytes()


def load_image(path: str | Path) -> np.ndarray:
    return decode_png(Path(path).read_bytes())


def save_image(path: str | Path, image: np.ndarray, bit_depth: int = 16) -> None:
    Path(path).write_bytes(encode_png(image, bit_depth=bit_depth))


# ---------------------------------------------------------------------------
# PFM (portable float map). Written little-endian with scale -1.0; readers
# honor a positive scale as big-endian. Rows are stored bottom-to-top.
# ---------------------------------------------------------------------------

def decode_pfm(data: bytes) -> np.ndarray:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        # header tokens are whitespace-separated
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos > start:
            tokens.append(data[start:pos])
    if len(tokens) < 4:
        raise ValueError("truncated PFM header")
    magic = tokens[0]
    if magic == b"Pf":
        channels = 1
    elif magic == b"PF":
        channels = 3
    else:
        raise ValueError("not a PFM file")
    try:
        width, height = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3])
    except ValueError as exc:
        raise ValueError("malformed PFM header") from exc
    if width < 1 or height < 1:
        raise ValueError("malformed PFM header")
    pos += 1  # single whitespace byte terminates the header
    count = width * height * channels
    buf = data[pos : pos + count * 4]
    if len(buf) != count * 4:
        raise ValueError("truncated PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(buf, dtype=dtype).reshape(height, width, channels)
    arr = np.flipud(arr).astype(np.float64)
    return arr[:, :, 0] if channels == 1 else arr


def encode_pfm(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 2:
        magic, data = b"Pf", np.flipud(arr)
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic, data = b"PF", np.flipud(arr)
    else:
        raise ValueError("PFM supports only HxW or HxWx3 arrays")
    h, w = arr.shape[:2]
    header = magic + b"\n" + f"{w} {h}".encode() + b"\n" + b"-1.0" + b"\n"
    return header + data.astype("<f4").tobytes()


def load_pfm(path: str | Path) -> np.ndarray:
    return decode_pfm(Path(path).read_bytes())


def save_pfm(path: str | Path, arr: np.ndarray) -> None:
    Path(path).write_bytes(encode_pfm(arr))


# ---------------------------------------------------------------------------
# TLDEPTH1: 16-byte header (8-byte magic + u32 width + u32 height, both
# little-endian) followed by row-major float32 little-endian samples.
# ---------------------------------------------------------------------------

def decode_depth_raw(data: bytes) -> np.ndarray:
    if data[:8] != DEPTH_MAGIC:
        raise ValueError("not a TLDEPTH1 blob")
    if len(data) < 16:
        raise ValueError("truncated TLDEPTH1 header")
    width, height = struct.unpack_from("<II", data, 8)
    count = width * height
    buf = data[16 : 16 + count * 4]
    if len(buf) != count * 4:
        raise ValueError("truncated TLDEPTH1 payload")
    return np.frombuffer(buf, dtype="<f4").reshape(height, width).astype(np.float64)


def encode_depth_raw(depth: np.ndarray) -> bytes:
    depth = np.asarray(depth)
    if depth.ndim != 2:
        raise ValueError("depth must be a HxW array")
    h, w = depth.shape
    return DEPTH_MAGIC + struct.pack("<II", w, h) + depth.astype("<f4").tobytes()


def decode_depth(data: bytes) -> np.ndarray:
    """Decode a depth map from TLDEPTH1 or single-channel PFM bytes."""
    if data[:8] == DEPTH_MAGIC:
        return decode_depth_raw(data)
    if data[:2] in (b"Pf", b"PF"):
        arr = decode_pfm(data)
        if arr.ndim != 2:
            raise ValueError("depth PFM must be single channel")
        return arr
    raise ValueError("unrecognized depth format (expected TLDEPTH1 or PFM)")


def load_depth(path: str | Path) -> np.ndarray:
    return decode_depth(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# TLSEG1: 6-byte magic + u32 width + u32 height (little-endian), then three
# little-endian u16 class ids per pixel, row-major.
# ---------------------------------------------------------------------------

def decode_label_stack(data: bytes) -> np.ndarray:
    if data[:6] != SEG_MAGIC:
        raise ValueError("not a TLSEG1 blob")
    if len(data) < 14:
        raise ValueError("truncated TLSEG1 header")
    width, height = struct.unpack_from("<II", data, 6)
    count = width * height * 3
    buf = data[14 : 14 + count * 2]
    if len(buf) != count * 2:
        raise ValueError("truncated TLSEG1 payload")
    return np.frombuffer(buf, dtype="<u2").reshape(height, width, 3).astype(np.int64)


def encode_label_stack(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    if labels.ndim != 3 or labels.shape[2] != 3:
        raise ValueError("label stack must be HxWx3")
    if labels.min() < 0 or labels.max() > 0xFFFF:
        raise ValueError("class ids must fit in u16")
    h, w = labels.shape[:2]
    return SEG_MAGIC + struct.pack("<II", w, h) + labels.astype("<u2").tobytes()


def load_label_stack(path: str | Path) -> np.ndarray:
    return decode_label_stack(Path(path).read_bytes())


def save_label_stack(path: str | Path, labels: np.ndarray) -> None:
    Path(path).write_bytes(encode_label_stack(labels))
