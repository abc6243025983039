"""Counter-based random streams.

Every draw is a pure function of an integer seed: the seed is used as the
Philox key and the counter starts at zero, so no generator state is ever
shared between replicates or worker processes.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1

# sub-stream identifiers used under a replicate seed
STREAM_DESIGN = 1
STREAM_NOISE = 2
STREAM_SUPPORT = 3


def derive_seed(master: int, *keys: int) -> int:
    """Hash ``(master, *keys)`` into a 64-bit seed.

    Distinct key tuples give statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(master) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def uniforms(seed: int, size: int) -> np.ndarray:
    """``size`` uniforms on the open interval (0, 1), 53-bit resolution."""
    if size == 0:
        return np.empty(0)
    bg = np.random.Philox(key=int(seed) & _MASK64)
    raw = bg.random_raw(int(size))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, shape) -> np.ndarray:
    """Standard normal draws by inverse-CDF transform of :func:`uniforms`."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    size = int(np.prod(shape)) if shape else 1
    return ndtri(uniforms(seed, size)).reshape(shape)


def permutation(seed: int, m: int) -> np.ndarray:
    return np.argsort(uniforms(seed, m), kind="stable")
