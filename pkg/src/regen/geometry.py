"""Block layout of an archive: parity blocks, checksum blocks, tail."""

from dataclasses import dataclass

from .errors import FileTooSmallError

UINT16_MAX = 0xFFFF


@dataclass(frozen=True)
class GeometryPlan:
    file_size: int
    parity_blocks: int
    parity_block_len: int
    checksum_block_len: int
    checksum_blocks: int
    last_checksum_block_len: int
    tail_len: int

    @property
    def covered_len(self) -> int:
        """Bytes protected by parity and checksums (everything but the tail)."""
        return self.parity_blocks * self.parity_block_len

    @property
    def total_checksum_blocks(self) -> int:
        return self.parity_blocks * self.checksum_blocks

    @property
    def regen_size(self) -> int:
        return 11 + 2 * self.total_checksum_blocks + self.parity_block_len

    def block_len(self, j: int) -> int:
        if j == self.checksum_blocks - 1:
            return self.last_checksum_block_len
        return self.checksum_block_len

    def block_offset(self, i: int, j: int) -> int:
        return i * self.parity_block_len + j * self.checksum_block_len


def parity_blocks_for(parity_percent: int) -> int:
    """round(100 / parity_percent), halves rounded away from zero."""
    if isinstance(parity_percent, bool) or not isinstance(parity_percent, int):
        raise ValueError(f"parity percentage must be an integer, got {parity_percent!r}")
    if not 1 <= parity_percent <= 100:
        raise ValueError(f"parity percentage must be within 1..100, got {parity_percent}")
    return (200 + parity_percent) // (2 * parity_percent)


def layout(file_size: int, parity_blocks: int, cbl: int) -> GeometryPlan:
    """Geometry from an explicit parity block count (as stored in a regen header)."""
    if cbl < 1 or cbl > UINT16_MAX:
        raise ValueError(f"checksum block length must be within 1..{UINT16_MAX}, got {cbl}")
    if parity_blocks < 1 or parity_blocks > UINT16_MAX:
        raise ValueError(f"parity block count must be within 1..{UINT16_MAX}, got {parity_blocks}")
    if file_size < 1:
        raise FileTooSmallError("archive is empty")
    pbl = file_size // parity_blocks
    if pbl == 0:
        raise FileTooSmallError(
            f"archive of {file_size} bytes is smaller than {parity_blocks} parity blocks")
    cb = -(-pbl // cbl)
    lcbl = pbl - (cb - 1) * cbl
    return GeometryPlan(
        file_size=file_size,
        parity_blocks=parity_blocks,
        parity_block_len=pbl,
        checksum_block_len=cbl,
        checksum_blocks=cb,
        last_checksum_block_len=lcbl,
        tail_len=file_size - parity_blocks * pbl,
    )


def plan_geometry(file_size: int, parity_percent: int, cbl: int) -> GeometryPlan:
    return layout(file_size, parity_blocks_for(parity_percent), cbl)
