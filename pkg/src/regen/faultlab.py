"""Seeded fault injection and the recovery benchmark harness."""

import csv
import io
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import pipeline
from .errors import PlacementError

BIT = "bit"
BURST = "burst"
ZERO_REGION = "zero_region"
KINDS = (BIT, BURST, ZERO_REGION)

TMPDIR_ENV = "REGEN_BENCH_TMPDIR"
_MAX_PLACEMENT_TRIES = 10_000


def _flip(arr, positions):
    positions = np.asarray(positions, dtype=np.int64)
    np.bitwise_xor.at(arr, positions >> 3, (1 << (positions & 7)).astype(np.uint8))


def _file_array(path, mode="r+"):
    size = os.path.getsize(path)
    if size == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.memmap(path, dtype=np.uint8, mode=mode, shape=(size,))


def choose_bit_positions(total_bits, n, rng):
    if n < 0 or n > total_bits:
        raise ValueError(f"cannot pick {n} distinct bits out of {total_bits}")
    return np.sort(rng.choice(total_bits, size=n, replace=False))


def burst_lengths(n, b):
    if b < 1 or n < b:
        raise ValueError(f"need b >= 1 and n >= b, got n={n}, b={b}")
    lengths = [n // b] * b
    lengths[-1] += n % b
    return lengths


def place_bursts(total_bits, lengths, rng):
    """Pick non-overlapping start bits for each run length, by rejection."""
    placed = []
    for length in lengths:
        if length > total_bits:
            raise PlacementError(f"burst of {length} bits does not fit in {total_bits}")
        for _ in range(_MAX_PLACEMENT_TRIES):
            start = int(rng.integers(0, total_bits - length + 1))
            if all(start + length <= s or s + ln <= start for s, ln in placed):
                placed.append((start, length))
                break
        else:
            raise PlacementError(f"could not place {len(lengths)} non-overlapping bursts")
    return placed


def inject_bit_errors(path, n, seed):
    """Flip ``n`` distinct random bits of the file; returns their positions."""
    arr = _file_array(path)
    positions = choose_bit_positions(arr.shape[0] * 8, n, np.random.default_rng(seed))
    _flip(arr, positions)
    _flush(arr)
    return positions.tolist()


def inject_burst_errors(path, n, b, seed):
    """Flip ``b`` contiguous runs totalling ``n`` bits; returns (start_bit, length) pairs."""
    arr = _file_array(path)
    bursts = place_bursts(arr.shape[0] * 8, burst_lengths(n, b), np.random.default_rng(seed))
    for start, length in bursts:
        _flip(arr, np.arange(start, start + length))
    _flush(arr)
    return bursts


def zero_region(path, offset, length):
    size = os.path.getsize(path)
    if offset < 0 or length < 0 or offset + length > size:
        raise ValueError(f"region [{offset}, {offset + length}) outside file of {size} bytes")
    if length == 0:
        return
    with open(path, "r+b") as fh:
        fh.seek(offset)
        fh.write(bytes(length))


def _flush(arr):
    if isinstance(arr, np.memmap):
        arr.flush()


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    n: int = 0
    b: int = 1
    offset: int = 0
    length: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fault kind {self.kind!r}")
        if self.kind == BIT and self.n < 1:
            raise ValueError("bit faults need n >= 1")
        if self.kind == BURST and (self.b < 1 or self.n < self.b):
            raise ValueError("burst faults need b >= 1 and n >= b")

    def apply(self, path, seed=None):
        seed = self.seed if seed is None else seed
        if self.kind == BIT:
            return inject_bit_errors(path, self.n, seed)
        if self.kind == BURST:
            return inject_burst_errors(path, self.n, self.b, seed)
        zero_region(path, self.offset, self.length)
        return [(self.offset, self.length)]


@dataclass(frozen=True)
class BenchConfig:
    file_size: int
    parity_percent: int
    cbl: int
    fault: FaultSpec
    trials: int = 100
    seed: int = 0
    attempt_cap: int | None = pipeline.DEFAULT_ATTEMPT_CAP
    workers: int = 1


@dataclass
class TrialResult:
    index: int
    success: bool
    outcome: str
    combinations_tried: int
    mismatched_blocks: int
    error: str | None = None


@dataclass
class BenchResult:
    config: BenchConfig
    trials: list = field(default_factory=list)
    wall_time: float = 0.0
    aborted: str | None = None

    @property
    def successes(self):
        return sum(t.success for t in self.trials)

    @property
    def rate(self):
        return self.successes / len(self.trials) if self.trials else None

    @property
    def mean_combinations(self):
        if not self.trials:
            return None
        return sum(t.combinations_tried for t in self.trials) / len(self.trials)

    def summary(self):
        c = self.config
        if self.rate is None:
            return "no trials run"
        return (f"{c.fault.kind} n={c.fault.n} b={c.fault.b} size={c.file_size} parity={c.parity_percent}% "
                f"cbl={c.cbl}B: {self.successes}/{len(self.trials)} ({self.rate:.0%}) recovered, "
                f"mean combinations {self.mean_combinations:.1f}, {self.wall_time:.1f}s")


CSV_COLUMNS = ["data_size", "fault", "errors_n", "bursts_b", "parity_percent", "checksum_block",
               "successes", "trials", "rate", "mean_combinations", "wall_time_s"]


def results_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        c = r.config
        w.writerow([c.file_size, c.fault.kind, c.fault.n, c.fault.b if c.fault.kind == BURST else "",
                    c.parity_percent, c.cbl, r.successes, len(r.trials),
                    "" if r.rate is None else f"{r.rate:.4f}",
                    "" if r.mean_combinations is None else f"{r.mean_combinations:.2f}",
                    f"{r.wall_time:.3f}"])
    return buf.getvalue()


def trial_seeds(master_seed, trials):
    """(file_seed, fault_seed) per trial, derived from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(trials)
    return [tuple(int(x) for x in child.generate_state(2, dtype=np.uint64)) for child in children]


def synthesize(path, size, seed):
    data = np.random.default_rng(seed).integers(0, 256, size=size, dtype=np.uint8)
    data.tofile(path)


def run_trial(config: BenchConfig, index: int, file_seed: int, fault_seed: int, workdir=None) -> TrialResult:
    with tempfile.TemporaryDirectory(prefix="regen-bench-", dir=workdir or os.environ.get(TMPDIR_ENV)) as tmp:
        path = os.path.join(tmp, "archive.bin")
        synthesize(path, config.file_size, file_seed)
        pipeline.generate(path, config.parity_percent, config.cbl)
        config.fault.apply(path, fault_seed)
        report = pipeline.regenerate(path, config.attempt_cap)
        return TrialResult(index, bool(report.verified), report.outcome,
                           report.combinations_tried, report.mismatched_blocks)


def run_benchmark(config: BenchConfig, workdir=None, progress=None) -> BenchResult:
    """Run ``config.trials`` independent generate/corrupt/regenerate/verify rounds.

    Every trial gets its own file and fault seed from ``config.seed``, so
    results do not depend on worker count or completion order. An I/O
    failure stops the run and the trials finished so far are returned.
    """
    result = BenchResult(config)
    seeds = trial_seeds(config.seed, config.trials)
    t0 = time.perf_counter()
    try:
        if config.workers > 1 and config.trials > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                futures = [pool.submit(run_trial, config, k, fs, fa, workdir) for k, (fs, fa) in enumerate(seeds)]
                for fut in futures:
                    result.trials.append(fut.result())
                    if progress:
                        progress(result.trials[-1])
        else:
            for k, (fs, fa) in enumerate(seeds):
                result.trials.append(run_trial(config, k, fs, fa, workdir))
                if progress:
                    progress(result.trials[-1])
    except OSError as exc:
        result.aborted = str(exc)
    result.wall_time = time.perf_counter() - t0
    return result
