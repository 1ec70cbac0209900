"""Human-auditable and binary interchange formats for the CLI.

Windows and truths travel as long-format CSV with columns
``sample_id,t,var_0..var_{d-1}``; per-model prediction files are raw
little-endian float32 next to a JSON sidecar declaring the array shape.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeMismatch, TruncatedFile


def read_windows_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    """Parse a long-format CSV into ``(sample_ids, array (n, T, d))``.

    All samples must share the same length and variable count; time indices
    must run 0..T-1 within each contiguous sample block. Errors name the
    offending physical line (the header is line 1).
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file")
    header = lines[0].split(",")
    if header[:2] != ["sample_id", "t"] or len(header) < 3:
        raise FormatError(
            f"{path}: line 1: header must be sample_id,t,var_0..; got {lines[0]!r}"
        )
    d = len(header) - 2
    expected_vars = [f"var_{j}" for j in range(d)]
    if header[2:] != expected_vars:
        raise FormatError(f"{path}: line 1: variable columns must be {expected_vars}")

    order: list[str] = []
    rows: dict[str, list[np.ndarray]] = {}
    closed: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2 + d:
            raise FormatError(f"{path}: line {lineno}: expected {2 + d} fields, got {len(cells)}")
        sid = cells[0]
        try:
            t = int(cells[1])
            values = np.array([float(c) for c in cells[2:]])
        except ValueError as exc:
            raise FormatError(f"{path}: line {lineno}: {exc}") from exc
        if not np.all(np.isfinite(values)):
            raise FormatError(f"{path}: line {lineno}: non-finite value")
        if sid in closed:
            raise FormatError(f"{path}: line {lineno}: sample {sid!r} reappears after its block")
        if sid not in rows:
            if order:
                closed.add(order[-1])
            order.append(sid)
            rows[sid] = []
        if t != len(rows[sid]):
            raise FormatError(
                f"{path}: line {lineno}: step {t} out of order (expected {len(rows[sid])})"
            )
        rows[sid].append(values)

    if not order:
        raise FormatError(f"{path}: no data rows")
    lengths = {len(rows[sid]) for sid in order}
    if len(lengths) != 1:
        raise FormatError(f"{path}: samples have differing lengths {sorted(lengths)}")
    stacked = np.stack([np.stack(rows[sid]) for sid in order])
    return order, stacked


def write_windows_csv(path: str | os.PathLike, sample_ids, arrays: np.ndarray) -> None:
    """Inverse of :func:`read_windows_csv`."""
    arrays = np.asarray(arrays, dtype=np.float64)
    d = arrays.shape[2]
    lines = ["sample_id,t," + ",".join(f"var_{j}" for j in range(d))]
    for sid, block in zip(sample_ids, arrays):
        for t, row in enumerate(block):
            lines.append(f"{sid},{t}," + ",".join(format(v, ".17g") for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_prediction_file(
    directory: str | os.PathLike, model: str, values: np.ndarray
) -> None:
    """Write ``<model>.f32`` plus its JSON sidecar into ``directory``."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 3:
        raise ShapeMismatch(f"prediction array must be (n, t_out, d), got {values.shape}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{model}.f32").write_bytes(values.tobytes())
    sidecar = {"model": model, "shape": list(values.shape), "dtype": "float32", "order": "C"}
    (directory / f"{model}.json").write_text(
        json.dumps(sidecar, separators=(",", ":")) + "\n", encoding="utf-8"
    )


def read_prediction_file(directory: str | os.PathLike, model: str) -> np.ndarray:
    directory = Path(directory)
    sidecar_path = directory / f"{model}.json"
    payload_path = directory / f"{model}.f32"
    if not sidecar_path.exists():
        raise FormatError(f"missing sidecar for model {model!r}: {sidecar_path}")
    if not payload_path.exists():
        raise FormatError(f"missing prediction file for model {model!r}: {payload_path}")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{sidecar_path}: invalid JSON: {exc}") from exc
    shape = tuple(int(s) for s in sidecar.get("shape", ()))
    if len(shape) != 3 or sidecar.get("dtype") != "float32":
        raise FormatError(f"{sidecar_path}: sidecar must declare a 3-D float32 shape")
    raw = payload_path.read_bytes()
    expected = 4 * int(np.prod(shape))
    if len(raw) < expected:
        raise TruncatedFile(f"{payload_path}: {len(raw)} bytes, sidecar declares {expected}")
    if len(raw) > expected:
        raise FormatError(f"{payload_path}: {len(raw) - expected} trailing bytes")
    return np.frombuffer(raw, dtype="<f4").reshape(shape)


def scan_prediction_dir(directory: str | os.PathLike) -> list[str]:
    """Model names present in a prediction directory, sorted for determinism.

    Either half of a (sidecar, payload) pair missing is an error naming the
    model.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FormatError(f"{directory}: not a directory")
    sidecars = {p.stem for p in directory.glob("*.json")}
    payloads = {p.stem for p in directory.glob("*.f32")}
    for model in sorted(sidecars - payloads):
        raise FormatError(f"missing prediction file for model {model!r}")
    for model in sorted(payloads - sidecars):
        raise FormatError(f"missing sidecar for model {model!r}")
    if not sidecars:
        raise FormatError(f"{directory}: no prediction files found")
    return sorted(sidecars)
