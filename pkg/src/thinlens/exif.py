"""EXIF metadata extraction and depth-of-field dataset partitioning.

The parser handles exactly the five tags this project needs: FNumber
(0x829D), ExposureTime (0x829A) and FocalLength (0x920A) as RATIONALs,
Make (0x010F) and Model (0x0110) as ASCII. It accepts either a bare TIFF
blob or a JPEG whose APP1 segment carries "Exif\\0\\0" + TIFF, honors both
II and MM byte orders, and walks IFD0 plus the Exif sub-IFD behind pointer
tag 0x8769. Every multi-byte read and every offset is bounds-checked
against the supplied buffer, so corrupt input surfaces as a declared error
instead of an out-of-range access. Absent tags leave fields as None;
defaults are never invented here.

Bucketing rules: shallow depth of field keeps apertures below 10 unless
the device is denylisted (smartphone heuristics) or the blur label
disagrees; deep keeps apertures in [10, 50] unless the exposure exceeds
0.1 s or the blur label disagrees. Everything else is rejected with a
single machine-readable reason code.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    MalformedIfd,
    NotAnImage,
    ThinLensError,
    TruncatedExif,
    ZeroDenominator,
)

TAG_MAKE = 0x010F
TAG_MODEL = 0x0110
TAG_EXPOSURE_TIME = 0x829A
TAG_F_NUMBER = 0x829D
TAG_EXIF_IFD = 0x8769
TAG_FOCAL_LENGTH = 0x920A

TYPE_ASCII = 2
TYPE_SHORT = 3
TYPE_LONG = 4
TYPE_RATIONAL = 5

_TYPE_SIZES = {1: 1, 2: 1, 3: 2, 4: 4, 5: 8, 6: 1, 7: 1, 8: 2, 9: 4, 10: 8, 11: 4, 12: 8}

SHALLOW_MAX_F = 10.0
DEEP_MIN_F = 10.0
DEEP_MAX_F = 50.0
DEEP_MAX_EXPOSURE_S = 0.1

# case-insensitive substrings; the source data does not say how smartphones
# are detected, so the list is configuration
DEFAULT_DENYLIST = ("Apple", "samsung", "Google", "Xiaomi")

BLUR_NONE = "none"
BLUR_DESIRABLE = "desirable"
BLUR_UNDESIRABLE = "undesirable"
_BLUR_LABELS = (BLUR_NONE, BLUR_DESIRABLE, BLUR_UNDESIRABLE)


@dataclass(frozen=True)
class ExifRecord:
    f_number: float | None = None
    focal_length_mm: float | None = None
    exposure_time_s: float | None = None
    make: str | None = None
    model: str | None = None


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _u16(data: bytes, off: int, endian: str) -> int:
    if off < 0 or off + 2 > len(data):
        raise TruncatedExif(f"u16 read at {off} out of bounds ({len(data)} bytes)")
    return struct.unpack_from(endian + "H", data, off)[0]


def _u32(data: bytes, off: int, endian: str) -> int:
    if off < 0 or off + 4 > len(data):
        raise TruncatedExif(f"u32 read at {off} out of bounds ({len(data)} bytes)")
    return struct.unpack_from(endian + "I", data, off)[0]


def _find_exif_segment(data: bytes) -> bytes | None:
    """Scan JPEG markers for APP1/"Exif\\0\\0"; None when no such segment."""
    pos = 2
    n = len(data)
    while pos + 2 <= n:
        if data[pos] != 0xFF:
            return None  # marker stream desynced; treat as no metadata
        marker = data[pos + 1]
        if marker == 0xFF:  # fill byte
            pos += 1
            continue
        if marker == 0xD8 or marker == 0x01 or 0xD0 <= marker <= 0xD7:
            pos += 2  # standalone marker, no length field
            continue
        if marker in (0xD9, 0xDA):  # EOI / start of scan: metadata is over
            return None
        if pos + 4 > n:
            raise TruncatedExif("JPEG segment header out of bounds")
        length = (data[pos + 2] << 8) | data[pos + 3]
        if length < 2:
            raise MalformedIfd("JPEG segment length below header size")
        end = pos + 2 + length
        if end > n:
            raise TruncatedExif("JPEG segment extends past end of data")
        if marker == 0xE1 and data[pos + 4 : pos + 10] == b"Exif\x00\x00":
            return data[pos + 10 : end]
        pos = end
    return None


def _walk_ifd(tiff: bytes, endian: str, offset: int) -> list[int]:
    """Validate one IFD and return the byte offsets of its 12-byte entries."""
    count = _u16(tiff, offset, endian)
    if offset + 2 + 12 * count > len(tiff):
        raise MalformedIfd(
            f"IFD at {offset} declares {count} entries but only "
            f"{len(tiff) - offset - 2} bytes remain"
        )
    return [offset + 2 + 12 * i for i in range(count)]


def _entry_value(tiff: bytes, endian: str, entry: int) -> tuple[int, int, int, bytes]:
    """Decode one IFD entry into (tag, type, count, value_bytes)."""
    tag = _u16(tiff, entry, endian)
    vtype = _u16(tiff, entry + 2, endian)
    count = _u32(tiff, entry + 4, endian)
    size = _TYPE_SIZES.get(vtype, 0) * count
    if size == 0:
        return tag, vtype, count, b""
    if size <= 4:
        value = tiff[entry + 8 : entry + 8 + size]
    else:
        off = _u32(tiff, entry + 8, endian)
        if off + size > len(tiff):
            raise TruncatedExif(
                f"value for tag 0x{tag:04X} at {off}+{size} out of bounds"
            )
        value = tiff[off : off + size]
    return tag, vtype, count, value


def _rational(value: bytes, endian: str) -> float:
    num, den = struct.unpack(endian + "II", value[:8])
    if den == 0:
        raise ZeroDenominator(f"RATIONAL {num}/0")
    return num / den


def _ascii(value: bytes) -> str | None:
    text = value.split(b"\x00", 1)[0].decode("ascii", "replace").strip()
    return text or None


def _positive_or_none(value: float) -> float | None:
    # record invariant: present numeric fields are finite and > 0 (a u32/u32
    # ratio with nonzero denominator is always finite)
    return value if value > 0 else None


def _parse_tiff(tiff: bytes) -> ExifRecord:
    if len(tiff) < 8:
        raise TruncatedExif("TIFF header needs 8 bytes")
    if tiff[:2] == b"II":
        endian = "<"
    elif tiff[:2] == b"MM":
        endian = ">"
    else:
        raise MalformedIfd("unknown TIFF byte order")
    if _u16(tiff, 2, endian) != 42:
        raise MalformedIfd("bad TIFF magic")

    fields: dict[str, float | str | None] = {}
    sub_ifd_offset = None

    def scan(offset: int) -> None:
        nonlocal sub_ifd_offset
        for entry in _walk_ifd(tiff, endian, offset):
            tag, vtype, count, value = _entry_value(tiff, endian, entry)
            if tag == TAG_MAKE and vtype == TYPE_ASCII:
                fields["make"] = _ascii(value)
            elif tag == TAG_MODEL and vtype == TYPE_ASCII:
                fields["model"] = _ascii(value)
            elif tag == TAG_EXIF_IFD and vtype in (TYPE_SHORT, TYPE_LONG) and count >= 1:
                sub_ifd_offset = (
                    _u32(tiff, entry + 8, endian)
                    if vtype == TYPE_LONG
                    else _u16(tiff, entry + 8, endian)
                )
            elif vtype == TYPE_RATIONAL and count >= 1:
                if tag == TAG_F_NUMBER:
                    fields["f_number"] = _positive_or_none(_rational(value, endian))
                elif tag == TAG_EXPOSURE_TIME:
                    fields["exposure_time_s"] = _positive_or_none(_rational(value, endian))
                elif tag == TAG_FOCAL_LENGTH:
                    fields["focal_length_mm"] = _positive_or_none(_rational(value, endian))

    scan(_u32(tiff, 4, endian))
    if sub_ifd_offset:
        scan(sub_ifd_offset)

    return ExifRecord(
        f_number=fields.get("f_number"),
        focal_length_mm=fields.get("focal_length_mm"),
        exposure_time_s=fields.get("exposure_time_s"),
        make=fields.get("make"),
        model=fields.get("model"),
    )


def parse_exif(data: bytes) -> ExifRecord:
    """Parse the five supported tags from JPEG or TIFF bytes.

    A JPEG without an APP1 Exif segment yields a record with every field
    absent. Bytes that are neither JPEG nor TIFF raise NotAnImage.
    """
    if len(data) >= 2 and data[:2] == b"\xff\xd8":
        tiff = _find_exif_segment(data)
        return ExifRecord() if tiff is None else _parse_tiff(tiff)
    if data[:4] in (b"II*\x00", b"MM\x00*"):
        return _parse_tiff(data)
    raise NotAnImage("expected a JPEG SOI marker or TIFF header")


# ---------------------------------------------------------------------------
# bucketing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DofBucket:
    kind: str  # "deep" | "shallow" | "rejected"
    reason: str | None = None  # exactly one reason code when rejected

    @classmethod
    def deep(cls) -> "DofBucket":
        return cls("deep")

    @classmethod
    def shallow(cls) -> "DofBucket":
        return cls("shallow")

    @classmethod
    def rejected(cls, reason: str) -> "DofBucket":
        return cls("rejected", reason)


def _denylisted(make: str | None, denylist: Iterable[str]) -> bool:
    if make is None:
        return False
    lowered = make.lower()
    return any(entry.lower() in lowered for entry in denylist)


def classify_dof_bucket(
    rec: ExifRecord,
    denylist: Iterable[str] = DEFAULT_DENYLIST,
    blur_label: str | None = None,
) -> DofBucket:
    """Total classification of a record into deep / shallow / rejected.

    The aperture split is exclusive by construction: f-numbers below 10 go
    to the shallow rules, [10, 50] to the deep rules. ``blur_label`` is an
    optional external classifier verdict; absent means pass-through.
    """
    if blur_label is not None and blur_label not in _BLUR_LABELS:
        raise ValueError(f"blur_label must be one of {_BLUR_LABELS}, got {blur_label!r}")
    if rec.f_number is None:
        return DofBucket.rejected("no_aperture")
    if rec.f_number < SHALLOW_MAX_F:
        if _denylisted(rec.make, denylist):
            return DofBucket.rejected("smartphone")
        if blur_label is not None and blur_label != BLUR_DESIRABLE:
            return DofBucket.rejected("blur_label_mismatch")
        return DofBucket.shallow()
    if rec.f_number <= DEEP_MAX_F:
        if rec.exposure_time_s is not None and rec.exposure_time_s > DEEP_MAX_EXPOSURE_S:
            return DofBucket.rejected("long_exposure")
        if blur_label is not None and blur_label != BLUR_NONE:
            return DofBucket.rejected("blur_label_mismatch")
        return DofBucket.deep()
    return DofBucket.rejected("aperture_out_of_range")


# ---------------------------------------------------------------------------
# corpus partitioning
# ---------------------------------------------------------------------------

@dataclass
class PartitionConfig:
    denylist: tuple[str, ...] = DEFAULT_DENYLIST
    blur_labels: Mapping[str, str] | None = None  # path -> blur label


@dataclass
class PartitionReport:
    deep_count: int = 0
    shallow_count: int = 0
    rejected: Counter = field(default_factory=Counter)
    deep_path: Path | None = None
    shallow_path: Path | None = None
    rejected_path: Path | None = None

    @property
    def rejected_count(self) -> int:
        return sum(self.rejected.values())


def _manifest_line(path: str, rec: ExifRecord) -> str:
    def fmt(v: float | None) -> str:
        return repr(v) if v is not None else ""

    return "\t".join(
        [path, fmt(rec.f_number), fmt(rec.focal_length_mm), fmt(rec.exposure_time_s)]
    )


def partition_corpus(
    manifest: Sequence[str | Path],
    out_dir: str | Path,
    config: PartitionConfig | None = None,
) -> PartitionReport:
    """Stream files through parse + classify and write the three outputs.

    Output order equals input order. Per-file failures (unreadable path,
    parse error) are logged as rejected(parse_error) and never abort the
    stream.
    """
    config = config or PartitionConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = PartitionReport(
        deep_path=out / "deep.tsv",
        shallow_path=out / "shallow.tsv",
        rejected_path=out / "rejected.tsv",
    )
    labels = config.blur_labels or {}
    with (
        open(report.deep_path, "w") as deep_f,
        open(report.shallow_path, "w") as shallow_f,
        open(report.rejected_path, "w") as rejected_f,
    ):
        for raw_path in manifest:
            path = str(raw_path)
            try:
                rec = parse_exif(Path(path).read_bytes())
            except (OSError, ThinLensError):
                bucket = DofBucket.rejected("parse_error")
            else:
                bucket = classify_dof_bucket(
                    rec, denylist=config.denylist, blur_label=labels.get(path)
                )
            if bucket.kind == "deep":
                report.deep_count += 1
                deep_f.write(_manifest_line(path, rec) + "\n")
            elif bucket.kind == "shallow":
                report.shallow_count += 1
                shallow_f.write(_manifest_line(path, rec) + "\n")
            else:
                report.rejected[bucket.reason] += 1
                rejected_f.write(f"{path}\t{bucket.reason}\n")
    return report
