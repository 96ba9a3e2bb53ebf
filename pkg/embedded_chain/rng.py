import numpy as np

from utilities.errors import ModelError

_MASK64 = (1 << 64) - 1


class RngStream:
    """
    Counter-based random stream keyed by (seed, stream_id).

    The Philox key packs the 64-bit seed in the low word and the stream id in
    the high word, so draw number k of a stream is the same on every platform
    and under every scheduling of streams to workers.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ModelError("seed and stream_id must be non-negative")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.generator = np.random.Generator(
            np.random.Philox(key=(self.stream_id << 64) | self.seed)
        )

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
