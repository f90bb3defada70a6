"""End-to-end acceptance checks, one test per criterion.

Each test appends a single ``[PASS]``/``[FAIL]`` line that pytest prints in
an "acceptance criteria" section at the end of the run. Benchmarks use a
fixed master seed (0) so the reported rates are reproducible.
"""

import os
from contextlib import contextmanager
from functools import lru_cache

import numpy as np

import conftest
from conftest import flip_bit
from oracle import brute_force_recover
from regen import faultlab, format as fmt, pipeline, reliability
from regen.faultlab import BenchConfig, FaultSpec
from regen.geometry import parity_blocks_for, plan_geometry
from regen.reliability import ReliabilityParams

MIB = 1 << 20
BENCH_SEED = 0
BENCH_TRIALS = 100


@contextmanager
def criterion(number, title):
    notes = []
    try:
        yield notes
    except BaseException:
        conftest.ACCEPTANCE_LINES.append(f"[FAIL] AC{number} {title}: {'; '.join(notes)}")
        raise
    conftest.ACCEPTANCE_LINES.append(f"[PASS] AC{number} {title}: {'; '.join(notes)}")


@lru_cache(maxsize=None)
def bench(kind, n, b, parity):
    workers = int(os.environ.get("REGEN_BENCH_WORKERS", "1"))
    cfg = BenchConfig(MIB, parity, 64, FaultSpec(kind, n=n, b=b), trials=BENCH_TRIALS,
                      seed=BENCH_SEED, workers=workers)
    result = faultlab.run_benchmark(cfg)
    assert result.aborted is None, result.aborted
    return result


def test_ac01_format_golden_bytes(make_archive):
    with criterion(1, "format golden bytes") as notes:
        header = fmt.encode_header(fmt.RegenHeader(1, 64, 20))
        notes.append(f"header {header.hex(' ')}")
        assert header == bytes.fromhex("52 45 47 45 4E 00 01 00 40 00 14")
        path = make_archive(MIB)
        pipeline.generate(path, 10, 64)
        size = os.path.getsize(fmt.regen_path(path))
        notes.append(f"1 MiB at 10%/64 B -> {size} bytes")
        assert size == 137_648
        assert size == plan_geometry(MIB, 10, 64).regen_size


def test_ac02_checksum_collision_table():
    rows = [
        (5, 8, "0.12109375"),
        (5, 16, "0.0004730224609375"),
        (10, 16, "0.0156097412109375"),
        (15, 16, "0.4999847412109375"),
        (15, 32, "0.0000076291617006"),
        (20, 32, "0.0002441403921694"),
        (25, 32, "0.0078124997671694"),
        (26, 32, "0.0156249997671694"),
        (30, 32, "0.2499999997671694"),
    ]
    with criterion(2, "checksum collision probabilities (9 rows, exact)") as notes:
        got = [reliability.format_probability(reliability.collision_probability(n, q)) for n, q, _ in rows]
        bad = [(r, g) for r, g in zip(rows, got) if g != r[2]]
        notes.append(f"{len(rows) - len(bad)}/9 rows exact")
        assert not bad, bad


def test_ac03_recovery_prediction_table():
    rows = [
        (2, 15625, 0.8811824), (2, 7813, 0.8796356),
        (5, 15625, 0.7280075), (5, 7813, 0.7232780),
        (10, 15625, 0.5269373), (10, 7813, 0.5136633),
        (20, 15625, 0.2647691), (20, 7813, 0.2118513),
    ]
    with criterion(3, "recovery predictions (8 rows, 1e-6)") as notes:
        errs = [abs(reliability.predict_reliability(ReliabilityParams(8_000_000, p, c, 16, 1000)).recovery - want)
                for p, c, want in rows]
        notes.append(f"max abs error {max(errs):.2e}")
        assert max(errs) <= 1e-6


def test_ac04_redundant_size_table():
    rows = [
        (2, 15625, 4250000), (2, 7813, 4125008),
        (5, 15625, 1850000), (5, 7813, 1725008),
        (10, 15625, 1050000), (10, 7813, 925008),
        (20, 15625, 650000), (20, 7813, 525008),
    ]
    with criterion(4, "redundant sizes (8 rows, exact)") as notes:
        got = [reliability.redundant_size(8_000_000, p, c, 16) for p, c, _ in rows]
        notes.append(f"{sum(g == r[2] for g, r in zip(got, rows))}/8 rows exact")
        assert got == [r[2] for r in rows]


def test_ac05_single_bit_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    cases = 200
    with criterion(5, "single-bit round trip (200 cases)") as notes:
        failures = []
        for k in range(cases):
            size = int(np.exp(rng.uniform(np.log(1024), np.log(4 * MIB))))
            parity = int(rng.integers(5, 51))
            cbl = int(rng.choice([16, 32, 64, 128]))
            path = tmp_path / f"rt{k}.bin"
            rng.integers(0, 256, size, dtype=np.uint8).tofile(path)
            geo = pipeline.generate(path, parity, cbl)
            # the tail past the last full parity block carries no parity, so flips land in the covered region
            flip_bit(path, int(rng.integers(0, geo.covered_len * 8)))
            pipeline.regenerate(path)
            if not pipeline.verify(path):
                failures.append((size, parity, cbl))
            for p in (path, fmt.regen_path(path), fmt.sidecar_path(path)):
                os.remove(p)
        notes.append(f"{cases - len(failures)}/{cases} verified")
        assert not failures, failures


def test_ac06_sector_erasure(make_archive):
    with criterion(6, "4 KiB sector erasure on 10 MiB at 5%/64 B") as notes:
        path = make_archive(10 * MIB, seed=6)
        pipeline.generate(path, 5, 64)
        faultlab.zero_region(path, 0, 4096)
        report = pipeline.regenerate(path)
        attempts = sorted({c.attempts for c in report.corrections})
        notes.append(f"outcome {report.outcome}, {report.corrections_applied} corrections, attempts {attempts}")
        assert report.outcome == pipeline.REPAIRED and report.verified
        assert pipeline.verify(path)
        assert report.corrections and attempts == [1]


def test_ac07_burst_benchmark():
    with criterion(7, "burst benchmark, 1 MiB, 100 trials") as notes:
        ten = bench(faultlab.BURST, 1000, 10, 10)
        notes.append(f"n=1000 b=10 10%: {ten.rate:.2f} (need >= 0.90)")
        forty = bench(faultlab.BURST, 1000, 40, 5)
        notes.append(f"n=1000 b=40 5%: {forty.rate:.2f} (need 0.34 +/- 0.15)")
        assert ten.rate >= 0.90
        assert abs(forty.rate - 0.34) <= 0.15


def test_ac08_random_bit_benchmark():
    model = reliability.predict_reliability(ReliabilityParams(8_000_000, 10, 15625, 16, 1000)).recovery
    with criterion(8, "random-bit benchmark, 1 MiB, 100 trials") as notes:
        thousand = bench(faultlab.BIT, 1000, 1, 10)
        notes.append(f"n=1000 10%: {thousand.rate:.2f} (need 0.49 +/- 0.12)")
        quarter = bench(faultlab.BIT, 250, 1, 10)
        notes.append(f"n=250 10%: {quarter.rate:.2f} (need >= 0.85)")
        notes.append(f"n=1000 vs model {model:.3f} + 0.05")
        checks = [abs(thousand.rate - 0.49) <= 0.12, quarter.rate >= 0.85, thousand.rate <= round(model, 3) + 0.05]
        assert all(checks), checks


def test_ac09_oracle_equivalence(tmp_path):
    rng = np.random.default_rng(9)
    cases = 1000
    with criterion(9, "brute-force oracle equivalence (1000 cases)") as notes:
        mismatches = []
        for k in range(cases):
            size = int(rng.integers(8, 257))
            parity = int(rng.integers(1, 101))
            if parity_blocks_for(parity) > size:
                parity = 50
            cbl = int(rng.choice([1, 3, 4, 8, 16, 32, 64]))
            path = tmp_path / f"o{k}.bin"
            rng.integers(0, 256, size, dtype=np.uint8).tofile(path)
            pipeline.generate(path, parity, cbl)
            for bit in rng.choice(size * 8, size=int(rng.integers(1, 4)), replace=False):
                flip_bit(path, int(bit))
            expected = brute_force_recover(path.read_bytes(), open(fmt.regen_path(path), "rb").read())
            pipeline.regenerate(path, attempt_cap=None)
            if path.read_bytes() != expected:
                mismatches.append((k, size, parity, cbl))
        notes.append(f"{cases - len(mismatches)}/{cases} identical")
        assert not mismatches, mismatches[:5]


def test_ac10_parity_collision(protected):
    with criterion(10, "parity collision is reported, not written") as notes:
        path, geo = protected(3000, parity=50, cbl=64)
        j = 7
        for i in range(geo.parity_blocks):
            flip_bit(path, 8 * geo.block_offset(i, j) + 13)
        corrupted = path.read_bytes()
        report = pipeline.regenerate(path)
        notes.append(f"outcome {report.outcome}, failed {sorted(report.failed_block_indexes)}")
        assert report.outcome == pipeline.PARTIAL_FAILURE
        assert report.failed_block_indexes == {j}
        assert path.read_bytes() == corrupted

