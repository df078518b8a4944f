"""Splittable seeding: one independent PCG64 stream per (seed, index)."""

from __future__ import annotations

import numpy as np


def stream(seed: int, index: int, *purpose: int) -> np.random.Generator:
    """Generator for replicate ``index`` under root ``seed``.

    The stream depends only on ``(seed, index, *purpose)``, never on how work
    is split between processes.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(index), *purpose))
    return np.random.Generator(np.random.PCG64(ss))


def lineage(seed: int) -> dict:
    return {
        "root_seed": int(seed),
        "bit_generator": "PCG64",
        "derivation": "SeedSequence(entropy=root_seed, spawn_key=(replicate_index,))",
    }
