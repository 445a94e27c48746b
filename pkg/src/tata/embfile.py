"""Binary embedding container with a JSON sidecar manifest.

Layout: magic "TATA", u32 format version, u64 record count, u32
dimension, u32 element code (1 = little-endian float32), then the
row-major payload.  The manifest lives next to the file at
"<path>.json" and carries ids plus whatever metadata the producer
attached (labels, class names, bank kind, notes).

Storage is float32; everything returned to callers is float64.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    IoFailureError,
    LengthMismatchError,
    ManifestMismatchError,
    VersionUnsupportedError,
)

log = logging.getLogger(__name__)

MAGIC = b"TATA"
VERSION = 1
ELEM_F32LE = 1
_HEADER = struct.Struct("<4sIQII")

# rows whose norm strays further than this from 1 are re-normalized on read
NORM_SLACK = 1e-3


def manifest_path(path) -> Path:
    return Path(str(path) + ".json")


def write_embedding_file(path, vectors, manifest: dict) -> Path:
    """Write vectors (float32 on disk) plus the sidecar manifest.

    The manifest must carry unique `ids`, one per record; `labels` (when
    present) must be parallel to them.
    """
    rows = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64), dtype="<f4")
    if rows.ndim != 2:
        raise IoFailureError(f"expected a 2-D vector block, got shape {rows.shape}")
    count, dim = rows.shape
    _check_manifest(manifest, count)
    target = Path(path)
    try:
        with open(target, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, count, dim, ELEM_F32LE))
            fh.write(rows.tobytes())
        manifest_path(target).write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise IoFailureError(f"cannot write {target}: {exc}") from exc
    return target


def read_embedding_file(path):
    """Read and validate an embedding file; returns (vectors, manifest).

    Vectors come back float64.  Rows whose L2 norm deviates from 1 by
    more than 1e-3 are re-normalized with a logged warning (zero rows
    are left alone for downstream per-record validation to reject).
    """
    target = Path(path)
    try:
        blob = target.read_bytes()
    except OSError as exc:
        raise IoFailureError(f"cannot read {target}: {exc}") from exc
    if len(blob) < _HEADER.size:
        raise BadMagicError(f"{target} is too short to hold a header")
    magic, version, count, dim, elem = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"{target} does not start with {MAGIC!r}")
    if version != VERSION:
        raise VersionUnsupportedError(f"{target} has format version {version}, expected {VERSION}")
    if elem != ELEM_F32LE:
        raise VersionUnsupportedError(f"{target} uses element type {elem}, expected {ELEM_F32LE}")
    payload = blob[_HEADER.size:]
    expected = count * dim * 4
    if len(payload) != expected:
        raise LengthMismatchError(
            f"{target} payload is {len(payload)} bytes, header promises {expected}"
        )
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim).astype(np.float64)

    mpath = manifest_path(target)
    try:
        manifest = json.loads(mpath.read_text())
    except OSError as exc:
        raise ManifestMismatchError(f"missing manifest {mpath}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestMismatchError(f"manifest {mpath} is not valid JSON: {exc}") from exc
    _check_manifest(manifest, count)

    norms = np.linalg.norm(rows, axis=1)
    stray = np.abs(norms - 1.0) > NORM_SLACK
    fixable = stray & (norms > 0)
    if np.any(fixable):
        log.warning(
            "%s: re-normalizing %d of %d rows whose norms stray from 1",
            target, int(np.count_nonzero(fixable)), count,
        )
        rows[fixable] /= norms[fixable, None]
    return rows, manifest


def _check_manifest(manifest, count: int) -> None:
    if not isinstance(manifest, dict):
        raise ManifestMismatchError("manifest must be a JSON object")
    ids = manifest.get("ids")
    if not isinstance(ids, list) or len(ids) != count:
        raise ManifestMismatchError(
            f"manifest ids count {len(ids) if isinstance(ids, list) else 'missing'} "
            f"does not match record count {count}"
        )
    if len(set(ids)) != len(ids):
        raise ManifestMismatchError("manifest ids are not unique")
    labels = manifest.get("labels")
    if labels is not None and len(labels) != count:
        raise ManifestMismatchError(
            f"manifest labels count {len(labels)} does not match record count {count}"
        )
