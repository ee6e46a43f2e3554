"""Seeded random streams.

Every stream is numpy's Philox-4x32-10 counter-based bit generator keyed by a
``SeedSequence``.  Uniforms come from ``Generator.random`` (53-bit doubles,
one 64-bit draw each), so a stream's draws do not depend on how they are
chunked.  Independent chains use ``spawn``, which derives child keys from the
parent seed sequence.
"""
import numpy as np


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


def spawn(seed: int, count: int) -> list[np.random.Generator]:
    """``count`` independent streams derived from ``seed``."""
    return [make_rng(child) for child in np.random.SeedSequence(int(seed)).spawn(count)]
