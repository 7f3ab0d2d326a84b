"""Reproducible white-noise streams and the delay line for feedback.

Every trajectory owns a ``NoiseStream`` keyed by ``(master_seed, stream_index)``.
The generator is Philox (counter based) seeded through ``numpy``'s
``SeedSequence`` spawn keys, so stream ``i`` produces the same samples no matter
which worker runs it or how the draws are chunked.

Samples have mean zero and variance ``1/dt``, i.e. ``xi * dt`` is a Wiener
increment.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np


def _generator(master_seed: int, stream_index: int) -> np.random.Generator:
    if stream_index < 0:
        raise ValueError("stream_index must be non-negative")
    seq = np.random.SeedSequence(int(master_seed) & (2**64 - 1), spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.Philox(seq))


class NoiseStream:
    """Gaussian white noise for one trajectory."""

    def __init__(self, master_seed: int, stream_index: int = 0):
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self._gen = _generator(self.master_seed, self.stream_index)

    def sample(self, dt: float) -> float:
        return float(self.samples(1, dt)[0])

    def samples(self, n: int, dt: float) -> np.ndarray:
        """Draw the next ``n`` samples; identical to ``n`` calls of ``sample``."""
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        return self._gen.standard_normal(n) / np.sqrt(dt)

    def standard_normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal(n)

    @property
    def seed_info(self) -> tuple[int, int]:
        return (self.master_seed, self.stream_index)


def sample(stream: NoiseStream, dt: float) -> float:
    return stream.sample(dt)


class DelayBuffer:
    """FIFO that returns the sample pushed ``kappa`` steps earlier.

    ``push_pop`` returns ``None`` until more than ``kappa`` values have been
    pushed; with ``kappa == 0`` it hands the value straight back.
    """

    def __init__(self, kappa: int):
        if kappa < 0:
            raise ValueError("kappa must be non-negative")
        self.kappa = int(kappa)
        self._fifo: deque[float] = deque()

    def push_pop(self, xi: float):
        self._fifo.append(xi)
        if len(self._fifo) > self.kappa:
            return self._fifo.popleft()
        return None

    def __len__(self):
        return len(self._fifo)


def push_pop(buffer: DelayBuffer, xi: float):
    return buffer.push_pop(xi)


class BatchDelayLine:
    """Ring buffer holding the last ``kappa`` noise vectors of a batch."""

    def __init__(self, kappa: int, batch: int):
        self.kappa = int(kappa)
        self._ring = np.zeros((max(self.kappa, 1), batch))
        self._count = 0

    def push_pop(self, xi: np.ndarray):
        if self.kappa == 0:
            self._count += 1
            return xi
        slot = self._count % self.kappa
        out = self._ring[slot].copy() if self._count >= self.kappa else None
        self._ring[slot] = xi
        self._count += 1
        return out


def coarsen_noise(xi: np.ndarray, factor: int) -> np.ndarray:
    """Noise on a grid ``factor`` times coarser, driven by the same Wiener path.

    The coarse increment is the sum of the fine ones, so the returned samples
    are the block means of ``xi``.
    """
    xi = np.asarray(xi, dtype=float)
    if factor < 1 or xi.shape[-1] % factor:
        raise ValueError("noise length must be a multiple of the coarsening factor")
    return xi.reshape(xi.shape[:-1] + (-1, factor)).mean(axis=-1)


def write_golden(path, values) -> None:
    """One float per line, 17 significant digits."""
    Path(path).write_text("".join(f"{v:.17g}\n" for v in values))


def read_golden(path) -> np.ndarray:
    return np.array([float(line) for line in Path(path).read_text().split()])
