"""generate / verify / regenerate over an archive and its redundancy files."""

import logging
import os
from dataclasses import dataclass, field
from itertools import combinations, islice

import numpy as np

from . import codec
from .errors import MissingSidecarError, PartialWriteError
from .format import (
    RegenArtifact,
    RegenHeader,
    VERSION,
    read_regen,
    read_sidecar_hash,
    regen_path,
    sidecar_path,
    write_regen,
    write_sidecar_hash,
)
from .geometry import GeometryPlan, plan_geometry

log = logging.getLogger(__name__)

DEFAULT_ATTEMPT_CAP = 1023
_ROW_BUDGET = 4 << 20  # bytes of archive handled per vectorised checksum pass
_BATCH = 4096

CLEAN = "clean"
REPAIRED = "repaired"
PARTIAL_FAILURE = "partial-failure"


@dataclass(frozen=True)
class Correction:
    offset: int
    block_index: int
    length: int
    data: bytes
    parity_block: int = 0
    attempts: int = 0


@dataclass
class RecoveryReport:
    corrections: list = field(default_factory=list)
    failed_block_indexes: set = field(default_factory=set)
    mismatched_blocks: int = 0
    combinations_tried: int = 0
    corrections_applied: int = 0
    corrections_skipped: int = 0
    verified: bool | None = None
    outcome: str = CLEAN

    @property
    def corrections_found(self):
        return len(self.corrections)

    def as_dict(self):
        return {
            "outcome": self.outcome,
            "mismatched_blocks": self.mismatched_blocks,
            "corrections_found": self.corrections_found,
            "corrections_applied": self.corrections_applied,
            "corrections_skipped": self.corrections_skipped,
            "failed_block_indexes": sorted(self.failed_block_indexes),
            "combinations_tried": self.combinations_tried,
            "verified": self.verified,
        }


def _open_archive(path, size):
    if size == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.memmap(path, dtype=np.uint8, mode="r", shape=(size,))


def block_checksums(data: np.ndarray, geo: GeometryPlan) -> np.ndarray:
    """Fletcher-16 of every checksum block, shape (pb, cb)."""
    pb, pbl, cbl, cb = geo.parity_blocks, geo.parity_block_len, geo.checksum_block_len, geo.checksum_blocks
    out = np.empty((pb, cb), dtype=np.uint16)
    full = cb - 1
    rows_per_pass = max(1, _ROW_BUDGET // cbl)
    for i in range(pb):
        base = i * pbl
        for r0 in range(0, full, rows_per_pass):
            r1 = min(full, r0 + rows_per_pass)
            rows = np.asarray(data[base + r0 * cbl: base + r1 * cbl]).reshape(r1 - r0, cbl)
            out[i, r0:r1] = codec.fletcher16_rows(rows)
        last = data[base + full * cbl: base + pbl]
        out[i, full] = codec.fletcher16(np.asarray(last))
    return out


def parity_of(data: np.ndarray, geo: GeometryPlan) -> bytes:
    pbl = geo.parity_block_len
    acc = np.zeros(pbl, dtype=np.uint8)
    step = max(1, _ROW_BUDGET)
    for i in range(geo.parity_blocks):
        base = i * pbl
        for s in range(0, pbl, step):
            e = min(pbl, s + step)
            np.bitwise_xor(acc[s:e], data[base + s: base + e], out=acc[s:e])
    return acc.tobytes()


def generate(archive_path, parity_percent=5, cbl=64, *, force=True):
    """Write ``<archive>.sha256`` and ``<archive>.regen``; return the geometry used."""
    archive_path = os.fspath(archive_path)
    size = os.path.getsize(archive_path)
    geo = plan_geometry(size, parity_percent, cbl)
    if not force:
        for out in (sidecar_path(archive_path), regen_path(archive_path)):
            if os.path.exists(out):
                raise FileExistsError(out)
    write_sidecar_hash(sidecar_path(archive_path), codec.sha256_file(archive_path))
    data = _open_archive(archive_path, size)
    try:
        checksums = block_checksums(data, geo)
        parity = parity_of(data, geo)
    finally:
        del data
    header = RegenHeader(VERSION, geo.checksum_block_len, geo.parity_blocks)
    write_regen(regen_path(archive_path), RegenArtifact(header, checksums, parity))
    return geo


def verify(archive_path) -> bool:
    """True when the archive's SHA-256 equals the sidecar digest."""
    expected = read_sidecar_hash(sidecar_path(archive_path))
    return codec.sha256_file(archive_path) == expected


def locate_bad_bits(computed, stored, effective_len) -> list:
    """Bit indexes (byte * 8 + bit, LSB = 0) where two parity segments differ."""
    a = np.frombuffer(bytes(computed[:effective_len]), dtype=np.uint8)
    b = np.frombuffer(bytes(stored[:effective_len]), dtype=np.uint8)
    diff = np.bitwise_xor(a, b)
    return np.flatnonzero(np.unpackbits(diff, bitorder="little")).tolist()


def _index_combinations(n, attempt_cap):
    """Index subsets of range(n): largest first, lexicographic within a size."""
    def gen():
        for r in range(n, 0, -1):
            yield from combinations(range(n), r)
    if attempt_cap is None:
        return gen()
    return islice(gen(), attempt_cap)


def generate_combinations(bad_bits, attempt_cap=DEFAULT_ATTEMPT_CAP):
    bits = sorted(bad_bits)
    for combo in _index_combinations(len(bits), attempt_cap):
        yield [bits[k] for k in combo]


def _reverse_lex(n, k, lo=0):
    """k-subsets of range(lo, n) as sorted tuples, in decreasing lexicographic order."""
    if k == 0:
        yield ()
        return
    for first in range(n - k, lo - 1, -1):
        for rest in _reverse_lex(n, k - 1, first + 1):
            yield (first,) + rest


def _candidate_batches(n, attempt_cap):
    """Index batches in search order, as (indexes, is_complement) pairs.

    For subsets larger than half of ``n`` the batch holds the complements
    instead, which keeps the arrays narrow. Complements of lexicographically
    ordered r-subsets come out in decreasing lexicographic order.
    """
    remaining = float("inf") if attempt_cap is None else attempt_cap
    for r in range(n, 0, -1):
        complement = n - r < r
        width = n - r if complement else r
        it = _reverse_lex(n, width) if complement else combinations(range(n), r)
        size = 1
        while remaining > 0:
            batch = list(islice(it, int(min(size, remaining))))
            if not batch:
                break
            remaining -= len(batch)
            yield np.array(batch, dtype=np.int64).reshape(len(batch), width), complement
            size = min(size * 2, _BATCH)
        if remaining <= 0:
            return


def attempt_block_correction(original_block, bad_bits, target_checksum,
                             attempt_cap=DEFAULT_ATTEMPT_CAP):
    """Search flips of ``bad_bits`` for a block whose Fletcher-16 is ``target_checksum``.

    Returns ``(corrected_bytes or None, attempts)``. Candidates are scored
    in batches from per-bit deltas of the two running sums, which is exact
    because both sums are linear in the byte values mod 255.
    """
    block = np.frombuffer(bytes(original_block), dtype=np.uint8)
    if not bad_bits:
        return None, 0
    length = block.shape[0]
    bits = np.array(sorted(bad_bits), dtype=np.int64)
    byte_idx = bits >> 3
    bit_pos = bits & 7
    current = (block[byte_idx].astype(np.int64) >> bit_pos) & 1
    delta1 = np.where(current == 1, -1, 1) * (1 << bit_pos)
    delta2 = delta1 * ((length - byte_idx) % codec.MOD)
    total1, total2 = delta1.sum(), delta2.sum()
    base1, base2 = codec._sums(block)
    t1, t2 = target_checksum & 0xFF, target_checksum >> 8

    attempts = 0
    for idx, complement in _candidate_batches(len(bits), attempt_cap):
        d1, d2 = delta1[idx].sum(axis=1), delta2[idx].sum(axis=1)
        if complement:
            d1, d2 = total1 - d1, total2 - d2
        hits = np.flatnonzero(((base1 + d1) % codec.MOD == t1) & ((base2 + d2) % codec.MOD == t2))
        if not hits.size:
            attempts += idx.shape[0]
            continue
        attempts += int(hits[0]) + 1
        chosen = np.zeros(len(bits), dtype=bool)
        chosen[idx[hits[0]]] = True
        if complement:
            chosen = ~chosen
        flips = bits[chosen]
        candidate = block.copy()
        np.bitwise_xor.at(candidate, flips >> 3, (1 << (flips & 7)).astype(np.uint8))
        corrected = candidate.tobytes()
        if codec.fletcher16(corrected) != target_checksum:
            raise RuntimeError("delta scoring disagreed with the checksum")
        return corrected, attempts
    return None, attempts


def apply_corrections(corrections, failed_block_indexes, archive_path):
    """Write every correction whose block index did not fail; return (applied, skipped)."""
    applied = skipped = 0
    todo = []
    for c in corrections:
        if c.block_index in failed_block_indexes:
            skipped += 1
        else:
            todo.append(c)
    if not todo:
        return 0, skipped
    with open(archive_path, "r+b") as fh:
        for c in todo:
            try:
                fh.seek(c.offset)
                fh.write(c.data[:c.length])
            except OSError as exc:
                raise PartialWriteError(f"write failed at offset {c.offset}: {exc}", applied) from exc
            applied += 1
    return applied, skipped


def scan(data, artifact: RegenArtifact, geo: GeometryPlan, attempt_cap=DEFAULT_ATTEMPT_CAP,
         report=None):
    """Phase 1: find mismatched checksum blocks and search for corrections. Read-only."""
    report = report if report is not None else RecoveryReport()
    computed = block_checksums(data, geo)
    mismatches = np.argwhere(computed != artifact.checksums)
    report.mismatched_blocks = len(mismatches)
    pbl, cbl, pb = geo.parity_block_len, geo.checksum_block_len, geo.parity_blocks
    parity_cache = {}
    for i, j in mismatches.tolist():
        bl = geo.block_len(j)
        seg = j * cbl
        if j not in parity_cache:
            pairing = np.stack([np.asarray(data[k * pbl + seg: k * pbl + seg + bl]) for k in range(pb)])
            computed_parity = np.bitwise_xor.reduce(pairing, axis=0).tobytes()
            parity_cache[j] = locate_bad_bits(computed_parity, artifact.parity[seg:seg + bl], bl)
        bad = parity_cache[j]
        offset = geo.block_offset(i, j)
        block = np.asarray(data[offset: offset + bl]).tobytes()
        fixed, attempts = attempt_block_correction(block, bad, artifact.checksum(i, j), attempt_cap)
        report.combinations_tried += attempts
        if fixed is None:
            report.failed_block_indexes.add(j)
            log.debug("block (%d, %d): no correction in %d attempts, %d bad bits", i, j, attempts, len(bad))
        else:
            report.corrections.append(Correction(offset, j, bl, fixed, i, attempts))
    return report


def regenerate(archive_path, attempt_cap=DEFAULT_ATTEMPT_CAP, *, check=True) -> RecoveryReport:
    """Repair the archive in place from its regen file.

    Phase 1 scans every checksum block without touching the archive; Phase 2
    writes the corrections whose block index never failed. With ``check`` the
    sidecar digest decides between ``repaired`` and ``partial-failure``.
    """
    archive_path = os.fspath(archive_path)
    size = os.path.getsize(archive_path)
    artifact, geo = read_regen(regen_path(archive_path), size)
    report = RecoveryReport()
    data = _open_archive(archive_path, size)
    try:
        scan(data, artifact, geo, attempt_cap, report)
    finally:
        del data

    report.corrections_applied, report.corrections_skipped = apply_corrections(
        report.corrections, report.failed_block_indexes, archive_path)

    if check:
        try:
            report.verified = verify(archive_path)
        except MissingSidecarError:
            report.verified = None
    if report.verified is None:
        ok = not report.failed_block_indexes
    else:
        ok = report.verified
    if not ok:
        report.outcome = PARTIAL_FAILURE
    elif report.mismatched_blocks == 0:
        report.outcome = CLEAN
    else:
        report.outcome = REPAIRED
    return report
