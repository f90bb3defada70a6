"""Reader and writer for ``.regen`` redundancy files and ``.sha256`` sidecars.

A regen file is an 11-byte big-endian header followed by the checksum table
(one uint16 per checksum block, parity-block-major) and the parity blob::

    offset  size  field
    0       5     b"REGEN"
    5       2     version (1)
    7       2     checksum block length in bytes
    9       2     parity block count
    11      2*pb*cb  checksums
    ...     pbl   XOR parity
"""

import os
import re
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    GeometryMismatchError,
    MalformedSidecarError,
    MissingRegenFileError,
    MissingSidecarError,
    NotARegenFileError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .geometry import GeometryPlan, layout

MAGIC = b"REGEN"
VERSION = 1
HEADER = struct.Struct(">5sHHH")
HEADER_LEN = HEADER.size

REGEN_SUFFIX = ".regen"
SIDECAR_SUFFIX = ".sha256"

_HEX64 = re.compile(r"[0-9a-fA-F]{64}")


@dataclass(frozen=True)
class RegenHeader:
    version: int
    checksum_block_len: int
    parity_blocks: int


@dataclass
class RegenArtifact:
    header: RegenHeader
    checksums: np.ndarray  # uint16, shape (pb, cb)
    parity: bytes

    def checksum(self, i, j):
        return int(self.checksums[i, j])


def regen_path(archive_path):
    return os.fspath(archive_path) + REGEN_SUFFIX


def sidecar_path(archive_path):
    return os.fspath(archive_path) + SIDECAR_SUFFIX


def encode_header(h: RegenHeader) -> bytes:
    return HEADER.pack(MAGIC, h.version, h.checksum_block_len, h.parity_blocks)


def decode_header(data: bytes) -> RegenHeader:
    if len(data) < HEADER_LEN:
        raise TruncatedFileError(f"regen header needs {HEADER_LEN} bytes, got {len(data)}")
    magic, version, cbl, pb = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise NotARegenFileError(f"bad magic {magic!r}")
    if version > VERSION:
        raise UnsupportedVersionError(f"regen version {version} is newer than {VERSION}")
    if version == 0:
        raise NotARegenFileError("regen version 0 is not valid")
    if cbl == 0 or pb == 0:
        raise NotARegenFileError(f"header has zero field (cbl={cbl}, pb={pb})")
    return RegenHeader(version, cbl, pb)


def encode_artifact(artifact: RegenArtifact) -> bytes:
    table = np.asarray(artifact.checksums, dtype=">u2").tobytes()
    return encode_header(artifact.header) + table + bytes(artifact.parity)


def decode_artifact(data: bytes, archive_size: int) -> tuple[RegenArtifact, GeometryPlan]:
    """Parse a regen file against the archive's current size.

    The geometry is never stored; it is rebuilt from ``archive_size`` and the
    header, and the file length must agree with it exactly.
    """
    header = decode_header(data)
    try:
        geo = layout(archive_size, header.parity_blocks, header.checksum_block_len)
    except ValueError as exc:
        raise GeometryMismatchError(str(exc)) from exc
    if len(data) != geo.regen_size:
        raise GeometryMismatchError(
            f"regen file is {len(data)} bytes but an archive of {archive_size} bytes "
            f"with pb={header.parity_blocks}, cbl={header.checksum_block_len} needs {geo.regen_size}")
    table_end = HEADER_LEN + 2 * geo.total_checksum_blocks
    checksums = (np.frombuffer(data, dtype=">u2", count=geo.total_checksum_blocks, offset=HEADER_LEN)
                 .astype(np.uint16)
                 .reshape(geo.parity_blocks, geo.checksum_blocks))
    return RegenArtifact(header, checksums, bytes(data[table_end:])), geo


def write_regen(path, artifact: RegenArtifact):
    with open(path, "wb") as fh:
        fh.write(encode_artifact(artifact))


def read_regen(path, archive_size: int) -> tuple[RegenArtifact, GeometryPlan]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except FileNotFoundError as exc:
        raise MissingRegenFileError(f"no regen file at {path}") from exc
    return decode_artifact(data, archive_size)


def parse_sidecar(text: str) -> str:
    digest = text.strip()
    if not _HEX64.fullmatch(digest):
        raise MalformedSidecarError(f"sidecar does not hold a SHA-256 hex digest: {digest[:80]!r}")
    return digest.lower()


def write_sidecar_hash(path, digest: str):
    digest = parse_sidecar(digest)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(digest + "\n")


def read_sidecar_hash(path) -> str:
    try:
        with open(path, "r", encoding="ascii", errors="replace") as fh:
            return parse_sidecar(fh.read())
    except FileNotFoundError as exc:
        raise MissingSidecarError(f"no hash file at {path}") from exc
