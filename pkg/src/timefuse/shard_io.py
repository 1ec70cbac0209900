"""TFSHARD1 binary shard files.

Layout: 8 magic bytes ``TFSHARD1``, a little-endian u32 manifest length, a
UTF-8 JSON manifest, then three contiguous row-major little-endian float32
blocks (features, predictions, truths) with no padding. The manifest carries
a CRC32C (Castagnoli) checksum of the payload as lowercase hex.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .dataset import MetaShard
from .errors import ChecksumMismatch, FormatError, TruncatedFile
from .features import FEATURE_NAMES, N_FEATURES

MAGIC = b"TFSHARD1"
FORMAT_VERSION = 1

_CRC32C_POLY = 0x82F63B78


def _build_table() -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC32C_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_TABLE = _build_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC32C (Castagnoli) of ``data``, chainable via ``crc``."""
    table = _TABLE
    crc = ~crc & 0xFFFFFFFF
    for byte in data:
        crc = (crc >> 8) ^ table[(crc ^ byte) & 0xFF]
    return ~crc & 0xFFFFFFFF


def _payload_blocks(shard: MetaShard) -> tuple[bytes, bytes, bytes]:
    return (
        np.ascontiguousarray(shard.features, dtype="<f4").tobytes(),
        np.ascontiguousarray(shard.predictions, dtype="<f4").tobytes(),
        np.ascontiguousarray(shard.truths, dtype="<f4").tobytes(),
    )


def write_shard(shard: MetaShard, path: str | os.PathLike) -> None:
    """Serialize a shard; the same shard always produces identical bytes."""
    blocks = _payload_blocks(shard)
    checksum = 0
    for block in blocks:
        checksum = crc32c(block, checksum)
    manifest = {
        "format_version": FORMAT_VERSION,
        "task_id": shard.task_id,
        "split": shard.split,
        "n_samples": shard.n_samples,
        "k": shard.k,
        "d_meta": N_FEATURES,
        "t_out": shard.t_out,
        "d": shard.d,
        "roster": list(shard.roster),
        "feature_order": list(FEATURE_NAMES),
        "checksum": f"{checksum:08x}",
    }
    manifest_bytes = json.dumps(manifest, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(manifest_bytes)))
        fh.write(manifest_bytes)
        for block in blocks:
            fh.write(block)


def read_shard(path: str | os.PathLike) -> MetaShard:
    """Parse a TFSHARD1 file, verifying structure and payload checksum."""
    with open(path, "rb") as fh:
        data = fh.read()

    if len(data) < len(MAGIC) + 4:
        raise TruncatedFile(f"{path}: file shorter than the fixed header")
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic bytes {data[:len(MAGIC)]!r}")
    (manifest_len,) = struct.unpack_from("<I", data, len(MAGIC))
    manifest_start = len(MAGIC) + 4
    manifest_end = manifest_start + manifest_len
    if len(data) < manifest_end:
        raise TruncatedFile(f"{path}: manifest cut short")
    try:
        manifest = json.loads(data[manifest_start:manifest_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: manifest is not valid JSON: {exc}") from exc

    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {manifest.get('format_version')!r}")
    if manifest.get("d_meta") != N_FEATURES:
        raise FormatError(f"{path}: d_meta {manifest.get('d_meta')!r} != {N_FEATURES}")
    if manifest.get("feature_order") != list(FEATURE_NAMES):
        raise FormatError(f"{path}: unexpected feature_order")

    n = int(manifest["n_samples"])
    k = int(manifest["k"])
    t_out = int(manifest["t_out"])
    d = int(manifest["d"])
    sizes = (n * N_FEATURES, n * k * t_out * d, n * t_out * d)
    payload_len = 4 * sum(sizes)
    payload = data[manifest_end:]
    if len(payload) < payload_len:
        raise TruncatedFile(
            f"{path}: payload has {len(payload)} bytes, manifest declares {payload_len}"
        )
    if len(payload) > payload_len:
        raise FormatError(f"{path}: {len(payload) - payload_len} trailing bytes after payload")

    actual = f"{crc32c(payload):08x}"
    if actual != manifest["checksum"]:
        raise ChecksumMismatch(f"{path}: checksum {actual} != declared {manifest['checksum']}")

    offsets = np.cumsum((0,) + sizes) * 4
    features = np.frombuffer(payload[offsets[0] : offsets[1]], dtype="<f4").reshape(n, N_FEATURES)
    predictions = np.frombuffer(payload[offsets[1] : offsets[2]], dtype="<f4").reshape(
        n, k, t_out, d
    )
    truths = np.frombuffer(payload[offsets[2] : offsets[3]], dtype="<f4").reshape(n, t_out, d)
    return MetaShard(
        manifest["task_id"],
        manifest["split"],
        tuple(manifest["roster"]),
        features,
        predictions,
        truths,
    )
