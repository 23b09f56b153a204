"""Counter-based random streams.

Every stochastic event in the simulator draws one block from a Philox
generator keyed by (seed, stream tag) with the event index placed in the
counter's high word.  A draw is therefore a pure function of
(seed, stream, event, position), independent of call order and of how a
block might be chunked across workers.
"""

from __future__ import annotations

import numpy as np


def _generator(seed: int, stream: int, event: int) -> np.random.Generator:
    bitgen = np.random.Philox(
        key=np.array([seed, stream], dtype=np.uint64),
        counter=np.array([0, 0, event, 0], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


def uniform_block(seed: int, stream: int, event: int, n: int) -> np.ndarray:
    return _generator(seed, stream, event).random(n)


def normal_block(seed: int, stream: int, event: int, n: int) -> np.ndarray:
    return _generator(seed, stream, event).standard_normal(n)
