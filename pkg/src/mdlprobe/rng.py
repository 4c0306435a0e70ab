import numpy as np


def derive_seed(*keys: int) -> int:
    """Mix integer keys into a 32-bit sub-seed, independent of call order."""
    return int(np.random.SeedSequence([int(k) & 0xFFFFFFFF for k in keys]).generate_state(1)[0])


def make_rng(*keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*keys))
