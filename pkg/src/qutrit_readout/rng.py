"""Counter-based random streams for reproducible trajectory ensembles."""
import numpy as np

__all__ = ["trajectory_generator", "wiener_block"]

_MASK64 = (1 << 64) - 1


def trajectory_generator(seed, index):
    """
    Philox generator keyed on ``(seed, index)``.

    The key packs the 64-bit seed above the 64-bit trajectory index, so every
    trajectory owns a fixed stream regardless of how an ensemble is split
    across workers. Draw ``k`` of the stream belongs to time step ``k``.
    """
    seed = int(seed)
    index = int(index)
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    key = ((seed & _MASK64) << 64) | (index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def wiener_block(generators, n_steps, dt, n_components=2):
    """
    Draw the next `n_steps` Wiener increments from each generator.

    Returns an array ``(len(generators), n_steps, n_components)`` of
    Normal(0, dt) samples.
    """
    sd = np.sqrt(dt)
    return np.stack([g.standard_normal((n_steps, n_components)) for g in generators]) * sd
