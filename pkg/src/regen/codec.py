"""Byte-level primitives: Fletcher-16, XOR parity and SHA-256."""

import hashlib

import numpy as np

MOD = 255
_CHUNK = 1 << 20


def _as_array(data):
    if isinstance(data, np.ndarray):
        return data.astype(np.uint8, copy=False).ravel()
    if not isinstance(data, (bytes, bytearray, memoryview)):
        data = bytes(data)
    return np.frombuffer(data, dtype=np.uint8)


def _sums(arr):
    """Return (s1, s2) mod 255 for a 1-D uint8 array.

    Uses the closed form s1 = sum(b_k), s2 = sum((L - k) * b_k), which equals
    the running-sum definition term by term.
    """
    n = arr.shape[0]
    if n == 0:
        return 0, 0
    weights = (np.arange(n, 0, -1, dtype=np.int64)) % MOD
    s1 = int(arr.sum(dtype=np.int64)) % MOD
    s2 = int(np.dot(arr.astype(np.int64), weights)) % MOD
    return s1, s2


class Fletcher16:
    """Incremental Fletcher-16 (mod 255, both sums starting at zero).

    >>> f = Fletcher16(b"abc")
    >>> f.update(b"de")
    >>> hex(f.digest())
    '0xc8f0'
    """

    def __init__(self, data=b""):
        self.sum1 = 0
        self.sum2 = 0
        if len(data):
            self.update(data)

    def update(self, data):
        arr = _as_array(data)
        for start in range(0, arr.shape[0], _CHUNK):
            chunk = arr[start:start + _CHUNK]
            a, b = _sums(chunk)
            # appending m bytes adds m * sum1 to sum2 before the chunk's own terms
            self.sum2 = (self.sum2 + chunk.shape[0] * self.sum1 + b) % MOD
            self.sum1 = (self.sum1 + a) % MOD

    def digest(self):
        return (self.sum2 << 8) | self.sum1

    def copy(self):
        f = Fletcher16()
        f.sum1, f.sum2 = self.sum1, self.sum2
        return f


def fletcher16(data) -> int:
    """Fletcher-16 checksum of ``data`` as a 16-bit int, ``sum2 << 8 | sum1``."""
    if isinstance(data, np.ndarray):
        data = data.astype(np.uint8, copy=False).tobytes()
    if len(data) <= 64:
        s1 = s2 = 0
        for b in data:
            s1 = (s1 + b) % MOD
            s2 = (s2 + s1) % MOD
        return (s2 << 8) | s1
    return Fletcher16(data).digest()


def fletcher16_rows(rows: np.ndarray) -> np.ndarray:
    """Fletcher-16 of every row of a 2-D uint8 array, as a uint16 vector."""
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.ndim != 2:
        raise ValueError("expected a 2-D array of blocks")
    n_rows, width = rows.shape
    if width == 0:
        return np.zeros(n_rows, dtype=np.uint16)
    weights = np.arange(width, 0, -1, dtype=np.int64) % MOD
    wide = rows.astype(np.int64)
    s1 = wide.sum(axis=1) % MOD
    s2 = (wide @ weights) % MOD
    return ((s2 << 8) | s1).astype(np.uint16)


def xor_parity(blocks) -> bytes:
    """XOR equal-length blocks together byte by byte."""
    blocks = list(blocks)
    if not blocks:
        raise ValueError("xor_parity needs at least one block")
    length = len(blocks[0])
    if any(len(b) != length for b in blocks):
        raise ValueError("xor_parity blocks must all have the same length")
    stacked = np.stack([np.frombuffer(bytes(b), dtype=np.uint8) for b in blocks])
    return np.bitwise_xor.reduce(stacked, axis=0).tobytes()


def sha256_hex(stream, chunk_size=1 << 20) -> str:
    h = hashlib.sha256()
    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            break
        h.update(chunk)
    return h.hexdigest()


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return sha256_hex(fh)
