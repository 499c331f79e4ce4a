"""Parisi-Rapuano shift-register generator and its parallel stream forks.

The generator is a 32-bit lagged-Fibonacci recurrence with an XOR whitener:

    I(k) = (I(k-24) + I(k-55)) mod 2^32
    R(k) = I(k) XOR I(k-61)

so the live state is the 62 most recent I values, kept here in a circular
window.  Seeding expands a 64-bit seed through the SplitMix64 avalanche
function (constants below) into the 62 initial words; stream i of a fork is
seeded from ``mix_seed(seed, i)``.  Both procedures are fixed so that any
implementation of this module reproduces the exact same bit stream.

`PRWheel` is the single-stream form; `StreamSet` holds many wheels in one
array so engines can draw one word per site in a single vector operation.
Stream j of ``fork_streams(seed, n)`` is bit-identical to
``PRWheel.from_seed(mix_seed(seed, j))``.

Wheels and stream sets are single-owner objects; to hand streams to
parallel workers, split a set (views over disjoint rows) or build
disjoint-id subsets with ``StreamSet.for_ids`` so no state is shared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

WINDOW = 62          # words of history retained
TAP_A = 24           # additive taps
TAP_B = 55
TAP_XOR = 61         # whitening tap

# SplitMix64 constants (seed expansion / stream mixing).
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One SplitMix64 avalanche step: maps a 64-bit value to a 64-bit value."""
    x &= MASK64
    x = (x ^ (x >> 30)) * _MIX1 & MASK64
    x = (x ^ (x >> 27)) * _MIX2 & MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, index: int) -> int:
    """Derive the 64-bit seed of stream `index` from a base seed."""
    return splitmix64((seed + (index + 1) * _GAMMA) & MASK64)


def _expand_seed(seed: int) -> np.ndarray:
    """Fill the 62-word window from a 64-bit seed.

    31 successive SplitMix64 outputs of the counter seed+GAMMA, seed+2*GAMMA,
    ... are split into (low32, high32) pairs.  An all-zero window is a fixed
    point of the recurrence; it cannot occur from this expansion, but guard
    anyway.
    """
    words = np.empty(WINDOW, dtype=np.uint32)
    x = seed & MASK64
    for i in range(WINDOW // 2):
        x = (x + _GAMMA) & MASK64
        out = splitmix64(x)
        words[2 * i] = out & MASK32
        words[2 * i + 1] = out >> 32
    if not words.any():
        words[0] = 1
    return words


def _splitmix64_vec(x: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 over a uint64 array; bit-identical to the scalar."""
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(_MIX1)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def _mix_seeds_vec(seed: int, ids: np.ndarray) -> np.ndarray:
    base = (ids.astype(np.uint64) + np.uint64(1)) * np.uint64(_GAMMA)
    return _splitmix64_vec(base + np.uint64(seed & MASK64))


def _expand_seeds_vec(seeds: np.ndarray) -> np.ndarray:
    """Windows for many seeds at once; row i equals _expand_seed(seeds[i])."""
    n = len(seeds)
    windows = np.empty((n, WINDOW), dtype=np.uint32)
    for i in range(WINDOW // 2):
        counter = seeds + np.uint64(((i + 1) * _GAMMA) & MASK64)
        out = _splitmix64_vec(counter)
        windows[:, 2 * i] = (out & np.uint64(MASK32)).astype(np.uint32)
        windows[:, 2 * i + 1] = (out >> np.uint64(32)).astype(np.uint32)
    dead = ~windows.any(axis=1)
    if dead.any():
        windows[dead, 0] = 1
    return windows


@dataclass
class PRWheel:
    """Single generator stream: 62-word circular window plus cursor.

    ``window[(cursor + j) % 62]`` holds I(n-62+j) where n is the index of the
    next value to be produced; the cursor points at the oldest word.
    """

    window: np.ndarray
    cursor: int = 0

    @classmethod
    def from_seed(cls, seed: int) -> "PRWheel":
        return cls(window=_expand_seed(seed), cursor=0)

    def next_u32(self) -> int:
        c = self.cursor
        w = self.window
        new = (int(w[(c + WINDOW - TAP_A) % WINDOW])
               + int(w[(c + WINDOW - TAP_B) % WINDOW])) & MASK32
        out = new ^ int(w[(c + WINDOW - TAP_XOR) % WINDOW])
        w[c] = new
        self.cursor = (c + 1) % WINDOW
        return out

    def draw_block(self, count: int) -> np.ndarray:
        """`count` successive outputs as a uint32 array."""
        out = np.empty(count, dtype=np.uint32)
        for i in range(count):
            out[i] = self.next_u32()
        return out


def seed_wheel(seed: int) -> PRWheel:
    """Deterministically seeded wheel; see module docstring for the expander."""
    return PRWheel.from_seed(seed)


class StreamSet:
    """A bank of independent wheels advanced with vector operations.

    Stream ids are global: ``for_ids(seed, ids)`` builds only the named
    streams, and a worker holding a disjoint id subset produces exactly the
    words the full bank would have produced for those ids.  All wheels here
    start unadvanced; splitting a set shares state through array views.
    """

    def __init__(self, windows: np.ndarray, cursors: np.ndarray, ids: np.ndarray):
        self.windows = windows          # (n, 62) uint32
        self.cursors = cursors          # (n,) int64
        self.ids = ids                  # (n,) int64, global stream ids

    @classmethod
    def for_ids(cls, seed: int, ids) -> "StreamSet":
        ids = np.asarray(ids, dtype=np.int64)
        windows = _expand_seeds_vec(_mix_seeds_vec(seed, ids))
        return cls(windows, np.zeros(len(ids), dtype=np.int64), ids)

    @classmethod
    def fork(cls, seed: int, n: int) -> "StreamSet":
        if n < 1:
            raise ValueError(f"stream count must be >= 1, got {n}")
        return cls.for_ids(seed, np.arange(n))

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def count(self) -> int:
        return len(self.ids)

    def wheel(self, row: int) -> PRWheel:
        """Extract stream `row` as an independent PRWheel (copies state)."""
        return PRWheel(window=self.windows[row].copy(), cursor=int(self.cursors[row]))

    def split(self, k: int) -> tuple["StreamSet", "StreamSet"]:
        """Split into row ranges [0, k) and [k, n); views share state."""
        return (StreamSet(self.windows[:k], self.cursors[:k], self.ids[:k]),
                StreamSet(self.windows[k:], self.cursors[k:], self.ids[k:]))

    def draw(self, rows=None) -> np.ndarray:
        """One output word from each selected stream (all streams if None)."""
        w = self.windows
        if rows is None:
            c = self.cursors
            if len(c) and (c == c[0]).all():
                # Lockstep fast path: plain column slices instead of gathers.
                c0 = int(c[0])
                new = w[:, (c0 + WINDOW - TAP_A) % WINDOW] \
                    + w[:, (c0 + WINDOW - TAP_B) % WINDOW]
                out = new ^ w[:, (c0 + WINDOW - TAP_XOR) % WINDOW]
                w[:, c0] = new
                self.cursors[:] = (c0 + 1) % WINDOW
                return out
            rows = np.arange(len(self.ids))
        else:
            rows = np.asarray(rows, dtype=np.int64)
        c = self.cursors[rows]
        a = w[rows, (c + (WINDOW - TAP_A)) % WINDOW]
        b = w[rows, (c + (WINDOW - TAP_B)) % WINDOW]
        new = a + b                     # uint32 wraps mod 2^32
        out = new ^ w[rows, (c + (WINDOW - TAP_XOR)) % WINDOW]
        w[rows, c] = new
        self.cursors[rows] = (c + 1) % WINDOW
        return out

    def draw_block(self, count: int) -> np.ndarray:
        """`count` successive draws from every stream; shape (count, n).

        Bit-identical to `count` repeated `draw()` calls.  The recurrence is
        advanced in chunks of up to TAP_A steps, which is the longest run
        whose inputs all precede the chunk.
        """
        n = len(self.ids)
        if not (self.cursors == self.cursors[0]).all():
            out = np.empty((count, n), dtype=np.uint32)
            for i in range(count):
                out[i] = self.draw()
            return out
        c0 = int(self.cursors[0])
        hist = np.empty((n, WINDOW + count), dtype=np.uint32)
        order = (c0 + np.arange(WINDOW)) % WINDOW
        hist[:, :WINDOW] = self.windows[:, order]
        t = WINDOW
        end = WINDOW + count
        while t < end:
            k = min(TAP_A, end - t)
            np.add(hist[:, t - TAP_A:t - TAP_A + k],
                   hist[:, t - TAP_B:t - TAP_B + k],
                   out=hist[:, t:t + k])
            t += k
        out = hist[:, WINDOW:] ^ hist[:, WINDOW - TAP_XOR:WINDOW - TAP_XOR + count]
        new_cursor = (c0 + count) % WINDOW
        order_back = (new_cursor + np.arange(WINDOW)) % WINDOW
        self.windows[:, order_back] = hist[:, count:count + WINDOW]
        self.cursors[:] = new_cursor
        return np.ascontiguousarray(out.T)


def fork_streams(seed: int, n: int) -> StreamSet:
    """`n` parallel streams; stream i is seeded from mix_seed(seed, i)."""
    return StreamSet.fork(seed, n)


@dataclass
class GoldenVector:
    seed: int
    k: int
    out: int


def write_golden_vectors(path, seeds, count: int) -> None:
    """Emit `prng_vectors.txt` lines: ``seed=<s> k=<k> out=<hex32>``."""
    with open(path, "w") as fh:
        for seed in seeds:
            wheel = seed_wheel(seed)
            for k in range(count):
                fh.write(f"seed={seed} k={k} out={wheel.next_u32():08x}\n")


def read_golden_vectors(path) -> list[GoldenVector]:
    vectors = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = dict(part.split("=", 1) for part in line.split())
            vectors.append(GoldenVector(seed=int(fields["seed"]),
                                        k=int(fields["k"]),
                                        out=int(fields["out"], 16)))
    return vectors
