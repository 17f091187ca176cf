"""Deterministic fan-out of one experiment seed into named substreams.

Every stochastic component of a run (subject splitting, weight init,
dropout, augmentation, masking, batch shuffling, ...) draws from its own
generator so that adding or reordering components never perturbs the
others.  The derivation rule is:

    stream(seed, name, *indices) = PCG64(SeedSequence([seed, h, *indices]))

where ``h`` is the first 8 bytes of SHA-256 of the stream name.  The rule
is stable across processes and platforms.
"""

import hashlib

import numpy as np


def _name_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Independent generator for the component ``name`` of run ``seed``.

    Extra ``indices`` (epoch number, tree index, layer index, ...) key
    further sub-substreams, e.g. ``substream(seed, "tree", 17)``.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, _name_key(name)]
    entropy.extend(int(i) & 0xFFFFFFFFFFFFFFFF for i in indices)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def generator_state(rng: np.random.Generator) -> dict:
    """JSON-serializable snapshot of a generator's position."""
    return rng.bit_generator.state


def restore_generator(state: dict) -> np.random.Generator:
    """Rebuild a generator from a :func:`generator_state` snapshot."""
    bitgen = np.random.PCG64()
    bitgen.state = state
    return np.random.Generator(bitgen)
