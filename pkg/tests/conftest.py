import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from regen import pipeline  # noqa: E402

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the 1 GB benchmark rows and the full 1 MB benchmark grid")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def make_archive(tmp_path):
    """Write ``size`` seeded random bytes to a fresh file and return its path."""
    counter = iter(range(10_000))

    def make(size, seed=0, name=None):
        path = tmp_path / (name or f"archive{next(counter)}.bin")
        np.random.default_rng(seed).integers(0, 256, size, dtype=np.uint8).tofile(path)
        return path

    return make


@pytest.fixture
def protected(make_archive):
    """An archive with regen + sha256 files already generated."""
    def make(size, parity=50, cbl=64, seed=0):
        path = make_archive(size, seed)
        geo = pipeline.generate(path, parity, cbl)
        return path, geo

    return make


def flip_bit(path, bit):
    with open(path, "r+b") as fh:
        fh.seek(bit // 8)
        b = fh.read(1)[0]
        fh.seek(bit // 8)
        fh.write(bytes([b ^ (1 << (bit % 8))]))
