"""Deterministic random streams and unit-sphere sampling.

Streams are built on numpy's Philox bit generator, keyed by a master seed
plus a tuple path of child ids. Because Philox is counter based and the
(seed, path) pair fully determines the key, any stream can be reconstructed
in isolation: repetitions of an experiment may be dispatched in any order,
or skipped, without changing what the others draw. Forking a stream never
consumes state from the parent.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


class RngStream:
    """A seeded random stream addressed by (seed, path of child ids)."""

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] | None = None):
        if seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.path = (int(stream_id),) if _path is None else tuple(int(p) for p in _path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size=size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size=size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)


def fork_stream(rng: RngStream, child_id: int) -> RngStream:
    """Derive an independent child stream; the parent's state is untouched.

    The child is keyed by the parent's path extended with child_id, so the
    same (seed, path) always yields the same stream regardless of how many
    siblings were forked before it or in what order.
    """
    return RngStream(rng.seed, _path=rng.path + (int(child_id),))


def sample_unit_sphere(rng: RngStream, d: int, n: int | None = None) -> np.ndarray:
    """Uniform sample(s) on the unit sphere S^{d-1}.

    Gaussian draws normalized to unit length; an exactly zero draw (possible
    in floating point, probability negligible) is rejected and redrawn.

    Args:
        rng: stream to consume.
        d: ambient dimension, >= 1. For d = 1 the result is +-1.
        n: if given, return an (n, d) batch; otherwise a single (d,) vector.

    Returns:
        Array of shape (d,) or (n, d) with unit Euclidean norm per row.
    """
    if d < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {d}")
    if n is None:
        z = rng.normal(size=d)
        norm = np.linalg.norm(z)
        while norm == 0.0:
            z = rng.normal(size=d)
            norm = np.linalg.norm(z)
        return z / norm
    z = rng.normal(size=(n, d))
    norms = np.linalg.norm(z, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        z[bad] = rng.normal(size=(int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1)
    return z / norms[:, None]
