"""Collecting meta-training triplets and storing them as shard files.

Each sample is (meta-features, stacked zoo predictions, truth). A shard
groups one task's samples for one split and lives in a checksummed binary
file, so a full meta-training corpus is just a directory of shards.
"""

import json
import struct
import tempfile
from pathlib import Path

from timefuse import read_shard, write_shard
from timefuse.simulate import DEFAULT_ZOO, make_task_shards

mix = {"periodic": 0.4, "mean_reverting": 0.3, "drifting": 0.3}
train, test = make_task_shards("demo_task", mix, n_train=40, n_test=20, seed=7)

print(f"zoo roster: {train.roster}")
print(f"meta_train shard: n={train.n_samples}, k={train.k}, t_out={train.t_out}, d={train.d}")
print(f"test shard:       n={test.n_samples}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo_task.meta_train.tfshard"
    write_shard(train, path)
    size = path.stat().st_size
    print(f"\nwrote {path.name}: {size} bytes")

    raw = path.read_bytes()
    magic = raw[:8].decode()
    (manifest_len,) = struct.unpack_from("<I", raw, 8)
    manifest = json.loads(raw[12 : 12 + manifest_len])
    print(f"magic={magic!r}, manifest={manifest_len} bytes, payload={size - 12 - manifest_len} bytes")
    print("manifest checksum (CRC32C):", manifest["checksum"])

    loaded = read_shard(path)
    identical = (
        loaded.features.tobytes() == train.features.tobytes()
        and loaded.predictions.tobytes() == train.predictions.tobytes()
        and loaded.truths.tobytes() == train.truths.tobytes()
    )
    print("round-trip payload bit-identical:", identical)
