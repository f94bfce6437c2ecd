"""Deterministic seed derivation.

Every random stream in the package (topology sampling, interdependency
wiring, disruption patterns, Poisson arrivals) is seeded from one master
seed through a labeled hash, so regenerating one stream never perturbs
the others.
"""

import hashlib
import random


def subseed(master_seed: int, label: str) -> int:
    """Derive a 64-bit sub-seed from a master seed and a stream label."""
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream(master_seed: int, label: str) -> random.Random:
    """A private PRNG for one labeled stream."""
    return random.Random(subseed(master_seed, label))
