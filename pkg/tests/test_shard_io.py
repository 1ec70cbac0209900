import struct

import numpy as np
import pytest

from conftest import toy_shard
from timefuse.errors import ChecksumMismatch, FormatError, TruncatedFile
from timefuse.shard_io import MAGIC, crc32c, read_shard, write_shard


def test_crc32c_known_vectors():
    # published check value for the Castagnoli polynomial
    assert crc32c(b"123456789") == 0xE3069283
    assert crc32c(b"") == 0
    assert crc32c(b"a" * 32) == crc32c(b"a" * 32)


def test_round_trip_identity(rng, tmp_path):
    shard = toy_shard(rng, "task_a", n=12, k=3, t_out=5, d=2)
    path = tmp_path / "a.tfshard"
    write_shard(shard, path)
    loaded = read_shard(path)
    assert loaded.task_id == shard.task_id
    assert loaded.split == shard.split
    assert loaded.roster == shard.roster
    assert loaded.features.tobytes() == shard.features.tobytes()
    assert loaded.predictions.tobytes() == shard.predictions.tobytes()
    assert loaded.truths.tobytes() == shard.truths.tobytes()


def test_rewrite_is_byte_identical(rng, tmp_path):
    shard = toy_shard(rng, "task_a", n=7)
    first, second = tmp_path / "1.tfshard", tmp_path / "2.tfshard"
    write_shard(shard, first)
    write_shard(read_shard(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_bad_magic(rng, tmp_path):
    path = tmp_path / "bad.tfshard"
    write_shard(toy_shard(rng), path)
    data = bytearray(path.read_bytes())
    data[:8] = b"NOTSHARD"
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError):
        read_shard(path)


def test_truncated_payload(rng, tmp_path):
    path = tmp_path / "short.tfshard"
    write_shard(toy_shard(rng), path)
    data = path.read_bytes()
    path.write_bytes(data[:-10])
    with pytest.raises(TruncatedFile):
        read_shard(path)


def test_truncated_manifest(tmp_path):
    path = tmp_path / "stub.tfshard"
    path.write_bytes(MAGIC + struct.pack("<I", 1000) + b"{}")
    with pytest.raises(TruncatedFile):
        read_shard(path)


def test_corrupted_payload_checksum(rng, tmp_path):
    path = tmp_path / "flip.tfshard"
    write_shard(toy_shard(rng), path)
    data = bytearray(path.read_bytes())
    data[-1] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumMismatch):
        read_shard(path)


def test_wrong_version(rng, tmp_path):
    path = tmp_path / "v9.tfshard"
    write_shard(toy_shard(rng), path)
    data = path.read_bytes()
    patched = data.replace(b'"format_version":1', b'"format_version":9', 1)
    path.write_bytes(patched)
    with pytest.raises(FormatError):
        read_shard(path)


def test_trailing_garbage(rng, tmp_path):
    path = tmp_path / "extra.tfshard"
    write_shard(toy_shard(rng), path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(FormatError):
        read_shard(path)


def test_float32_payload_is_exact(rng, tmp_path):
    # values already representable in float32 survive bit-exactly
    shard = toy_shard(rng, "exact", n=3)
    path = tmp_path / "exact.tfshard"
    write_shard(shard, path)
    loaded = read_shard(path)
    assert np.array_equal(loaded.features, shard.features)
