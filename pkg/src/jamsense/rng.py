"""Deterministic seed derivation and named PRNG substreams.

Every random draw in a simulation comes from a PCG64 generator whose seed
is derived from the master seed with the splitmix64 finalizer.  The
derivation below is part of the reproducibility contract (see README):
identical (seed, path) pairs always yield identical streams, and the
streams for distinct paths are independent for practical purposes.

Purpose tags are stable; renumbering them would silently change every
simulation trajectory, so never do that.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# Substream purpose tags (frozen contract).
REPLICATION = 1  # per-replication run seed
JAMMER = 2       # one stream per jammer chain, keyed by channel index
SENSING = 3      # per-step sensing noise draws
POLICY = 4       # action selection draws (incl. initial actions)
TRANSMIT = 5     # transmit-channel choice among candidates


def mix64(x: int) -> int:
    """splitmix64 finalizer: a bijective scramble of a 64-bit integer."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D4A13CD491BDE6) & _MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, *path: int) -> int:
    """Fold integer path components into `seed`, one mix per component.

    derive_seed(s) == s & 2**64-1; each component c maps the running seed
    through mix64(seed ^ mix64(c)).
    """
    s = seed & _MASK64
    for component in path:
        s = mix64(s ^ mix64(component & _MASK64))
    return s


def substream(seed: int, *path: int) -> np.random.Generator:
    """PCG64 generator for the substream identified by (seed, path)."""
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *path)))
