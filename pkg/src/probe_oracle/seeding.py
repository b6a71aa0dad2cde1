"""Deterministic random stream derivation.

Every stochastic step in the package draws from a Generator spawned here.
Streams are keyed by (root seed, domain tag, context tokens); string tokens
are folded to 64-bit ints with sha256 so keys never depend on Python's
per-process hash randomization.
"""

import hashlib

import numpy as np

# domain tags, one per independent stream family
FOLDS = 1
CONTROL = 2
BATTERY = 3
FINGERPRINT = 4
SYNTH = 5
SUBSAMPLE = 6

_MASK64 = (1 << 64) - 1


def token(value):
    """Fold a key component into a non-negative 64-bit int."""
    if isinstance(value, str):
        digest = hashlib.sha256(value.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value) & _MASK64
    raise TypeError(f"unsupported key component: {value!r}")


def generator(seed, *parts):
    """Generator for the stream keyed by (seed, *parts)."""
    entropy = [token(seed)] + [token(p) for p in parts]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
