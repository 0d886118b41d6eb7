"""Binary checkpointing of matrix product states.

File layout, all integers little-endian:

  magic   6 bytes  b"TNMPS1"
  payload:
    uint32           site count N
    N x 3 x uint32   per-site (D_l, d, D_r)
    N blocks         site data, row-major complex128 stored as
                     interleaved (real, imag) 8-byte little-endian floats
    int32            orthogonality center index, -1 when none
  uint32  CRC-32 of the payload

Round trips are bit exact. Reads verify the magic, the declared sizes and
the checksum before constructing anything, so truncated or corrupted files
fail with CheckpointError rather than producing a wrong state.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .mps import MatrixProductState

MAGIC = b"TNMPS1"


class CheckpointError(Exception):
    """The file is not a valid checkpoint (bad magic, truncation, checksum)."""


def checkpoint_write(psi: MatrixProductState, path: str) -> None:
    parts = [struct.pack("<I", psi.n_sites)]
    for a in psi.sites:
        parts.append(struct.pack("<III", *a.shape))
    for a in psi.sites:
        parts.append(np.ascontiguousarray(a, dtype="<c16").tobytes())
    center = -1 if psi.center is None else psi.center
    parts.append(struct.pack("<i", center))
    payload = b"".join(parts)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def checkpoint_read(path: str) -> MatrixProductState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a checkpoint file (bad magic bytes)")
    if len(blob) < len(MAGIC) + 4 + 4 + 4:
        raise CheckpointError("checkpoint is truncated, checksum cannot be verified")
    payload = blob[len(MAGIC) : -4]
    (stored,) = struct.unpack("<I", blob[-4:])
    if zlib.crc32(payload) != stored:
        raise CheckpointError("checkpoint checksum mismatch, file is truncated or corrupted")

    offset = 0

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(payload):
            raise CheckpointError("checkpoint payload is shorter than its headers declare")
        piece = payload[offset : offset + n]
        offset += n
        return piece

    (n_sites,) = struct.unpack("<I", take(4))
    shapes = [struct.unpack("<III", take(12)) for _ in range(n_sites)]
    sites = []
    for shape in shapes:
        count = shape[0] * shape[1] * shape[2]
        data = np.frombuffer(take(16 * count), dtype="<c16")
        sites.append(data.reshape(shape))
    (center,) = struct.unpack("<i", take(4))
    if offset != len(payload):
        raise CheckpointError("checkpoint has trailing bytes after the declared payload")
    try:
        return MatrixProductState(sites, center=None if center == -1 else center)
    except ValueError as exc:
        raise CheckpointError(f"checkpoint holds an inconsistent state: {exc}") from None
