"""Seeded, counter-based random streams.

Every stream is a Philox generator keyed by ``SeedSequence([seed, stream, *sub])``.
Streams with different ids never overlap, so results do not depend on how
work is split across threads or processes.

Stream layout used by the library:

* quantization offsets (alg1 and dataset mode): stream ``OFFSETS``; secret
  ``i`` takes the ``i``-th uniform draw of that stream.
* per-sample noise baselines: ``GAUSS_NOISE`` / ``LAPLACE_NOISE``.
* DP histogram: ``HISTOGRAM`` with sub-stream = column index.
* Monte-Carlo trials: ``MONTE_CARLO`` with sub-stream = block index.
"""

from __future__ import annotations

import numpy as np

OFFSETS = 1
GAUSS_NOISE = 2
LAPLACE_NOISE = 3
HISTOGRAM = 4
MONTE_CARLO = 5
SLICED = 6
SYNTHETIC = 7
SUBSAMPLE = 8
SWEEP = 9


def stream(seed: int, stream_id: int, *sub: int) -> np.random.Generator:
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream_id, *map(int, sub)])))
