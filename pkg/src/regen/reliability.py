"""Analytical recovery model: collision probabilities and redundancy size.

The prediction is an upper bound in practice; real recovery rates come out
lower because Fletcher-16 is not uniform and errors do not spread evenly.
"""

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction

CAVEAT = ("note: the model overestimates recovery; checksum non-uniformity and "
          "uneven error placement lower real-world rates")

BLOCK_BITS = "block-bits"
PARITY_COUNT = "parity-count"

TABLE1_GRID = [(5, 8), (5, 16), (10, 16), (15, 16), (15, 32), (20, 32), (25, 32), (26, 32), (30, 32)]
TABLE2_GRID = [(8_000_000, p, c, 16, 1000) for p in (2, 5, 10, 20) for c in (15625, 7813)]
TABLE3_GRID = [(d, p, c, q) for d, p, c, q, _ in TABLE2_GRID]


@dataclass(frozen=True)
class ReliabilityParams:
    d: int
    p: int
    c: int
    q: int = 16
    n: int = 1000

    def __post_init__(self):
        for name in ("d", "p", "c", "q"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n < 0:
            raise ValueError("n must be non-negative")


@dataclass(frozen=True)
class Prediction:
    checksum_collision: float
    parity_collision: float
    recovery: float
    raw_checksum_collision: float
    raw_recovery: float
    saturated: bool = False


def collision_probability(n: int, q: int) -> Fraction:
    """(2**n - 1) / 2**q, exactly."""
    if n < 0 or q <= 0:
        raise ValueError("need n >= 0 and q > 0")
    return Fraction(2 ** n - 1, 2 ** q)


def format_probability(value: Fraction, places: int = 16) -> str:
    """Decimal rendering rounded to ``places``, trailing zeros dropped."""
    with localcontext() as ctx:
        ctx.prec = 200
        dec = Decimal(value.numerator) / Decimal(value.denominator)
        text = format(dec.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_EVEN), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def checksum_collision(n, p, c, q) -> float:
    """((2**(n*p/c) - 1) / 2**q) * n, unclamped; inf once the power overflows."""
    exponent = n * p / c
    try:
        return math.expm1(exponent * math.log(2)) / 2.0 ** q * n
    except OverflowError:
        return math.inf


def _log_survival(n, d, p, mode):
    """log prod_{i<n} (1 - i/M), or None once a factor reaches zero."""
    if mode not in (BLOCK_BITS, PARITY_COUNT):
        raise ValueError(f"unknown mode {mode!r}")
    m = d / p if mode == BLOCK_BITS else float(p)
    if n <= 1:
        return 0.0
    if n - 1 >= m:
        return None
    return math.fsum(math.log1p(-i / m) for i in range(1, n))


def no_parity_collision(n, d, p, mode=BLOCK_BITS):
    """prod_{i<n} (1 - i/M), evaluated in log space.

    ``M`` is the parity block length in bits (d / p) by default; ``mode=
    PARITY_COUNT`` uses the bare parity block count instead.
    """
    log_prod = _log_survival(n, d, p, mode)
    return 0.0 if log_prod is None else math.exp(log_prod)


def parity_collision(n, d, p, mode=BLOCK_BITS):
    """1 - prod_{i<n} (1 - i/M), returned as (probability, saturated)."""
    log_prod = _log_survival(n, d, p, mode)
    if log_prod is None:
        return 1.0, True
    return -math.expm1(log_prod), False


def predict_reliability(params: ReliabilityParams, mode=BLOCK_BITS) -> Prediction:
    cc = checksum_collision(params.n, params.p, params.c, params.q)
    pc, saturated = parity_collision(params.n, params.d, params.p, mode)
    raw = 1.0 - cc - pc
    clamp = lambda x: min(1.0, max(0.0, x))  # noqa: E731
    return Prediction(
        checksum_collision=clamp(cc),
        parity_collision=clamp(pc),
        recovery=clamp(raw),
        raw_checksum_collision=cc,
        raw_recovery=raw,
        saturated=saturated or cc > 1.0,
    )


def redundant_size(d: int, p: int, c: int, q: int = 16) -> int:
    """Redundant bits: q * c of checksums plus floor(d / p) of parity."""
    return q * c + d // p


def table1_rows(grid=TABLE1_GRID):
    for n, q in grid:
        yield [n, q, 2 ** n - 1, format_probability(collision_probability(n, q))]


def table2_rows(grid=TABLE2_GRID, mode=BLOCK_BITS):
    for d, p, c, q, n in grid:
        pred = predict_reliability(ReliabilityParams(d, p, c, q, n), mode)
        yield [d, p, c, q, n, f"{pred.recovery:.7f}"]


def table3_rows(grid=TABLE3_GRID):
    for d, p, c, q in grid:
        yield [d, p, c, q, redundant_size(d, p, c, q)]


TABLES = {
    "1": (["bit_errors_n", "checksum_bits_q", "combination_set_size", "collision_probability_w"], table1_rows),
    "2": (["data_bits_d", "parity_blocks_p", "checksum_blocks_c", "checksum_bits_q", "bit_errors_n",
           "reliability"], table2_rows),
    "3": (["data_bits_d", "parity_blocks_p", "checksum_blocks_c", "checksum_bits_q", "redundant_bits"],
          table3_rows),
}


def emit_table(which, grid=None, fmt="csv") -> str:
    """Render table ``which`` ("1", "2" or "3") as CSV or aligned text."""
    header, rows_fn = TABLES[str(which)]
    rows = [header] + [[str(v) for v in row] for row in (rows_fn() if grid is None else rows_fn(grid))]
    if fmt == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    widths = [max(len(r[k]) for r in rows) for k in range(len(header))]
    return "".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) + "\n" for r in rows)
