"""Partial redundancy (Fletcher-16 checksums + XOR parity) for single archive files."""

from .codec import fletcher16, sha256_hex, xor_parity
from .geometry import GeometryPlan, plan_geometry
from .pipeline import RecoveryReport, Correction, generate, regenerate, verify
from .reliability import ReliabilityParams, predict_reliability, redundant_size

__version__ = "0.1.0"

__all__ = [
    "Correction",
    "GeometryPlan",
    "RecoveryReport",
    "ReliabilityParams",
    "fletcher16",
    "generate",
    "plan_geometry",
    "predict_reliability",
    "redundant_size",
    "regenerate",
    "sha256_hex",
    "verify",
    "xor_parity",
]
