"""Integer probability lookup tables for the Heat-Bath and Metropolis rules.

Probabilities are stored as 32-bit fixed-point thresholds on the scale 2^32
(round to nearest, clamped to 2^32-1) so acceptance is a single unsigned
comparison ``word < threshold`` against a generator output, and every engine
sharing a table makes bit-identical decisions.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .models import (CHIRAL_POTTS, GLASSY_POTTS, ISING_EA, POTTS_DISORDERED,
                     ModelSpec)

MAX_WORD = 0xFFFFFFFF
HALF_WORD = 0x80000000
SCALE = 2 ** 32

#: neighbor sums addressable by the 7-entry Heat-Bath table
HB_NBS = (-6, -4, -2, 0, 2, 4, 6)


def _threshold(p: float) -> int:
    """round(2^32 * p), clamped into the 32-bit word range."""
    return min(round(p * SCALE), MAX_WORD)


@dataclass
class HeatBathTable:
    """P(s_i = +1 | nbs) for nbs in {-6,-4,...,+6}, as word thresholds.

    Entry index is (nbs + 6) // 2.  The uniform field h is folded into each
    entry, which is valid whenever the dilution mask is uniform.
    """

    entries: np.ndarray            # (7,) uint32
    beta: float
    field: float = 0.0

    def entry(self, nbs: int) -> int:
        return int(self.entries[(nbs + 6) // 2])

    @property
    def checksum(self) -> int:
        return zlib.crc32(self.entries.tobytes())


def heatbath_prob_up(beta: float, local_sum: float) -> float:
    """P(s_i = +1) = 1 / (1 + exp(-2*beta*(nbs + h*eps))).

    At beta = inf this is the step function of the sign of local_sum, with
    ties at exactly 1/2.
    """
    if math.isinf(beta):
        if local_sum > 0:
            return 1.0
        if local_sum < 0:
            return 0.0
        return 0.5
    x = -2.0 * beta * local_sum
    if x > 700.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def build_heatbath_table(beta: float, local_field: float = 0.0) -> HeatBathTable:
    """7-entry table over the even neighbor sums, field folded in."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    entries = np.empty(7, dtype=np.uint32)
    for i, nbs in enumerate(HB_NBS):
        entries[i] = _threshold(heatbath_prob_up(beta, nbs + local_field))
    return HeatBathTable(entries=entries, beta=beta, field=local_field)


@dataclass
class MetropolisTable:
    """Acceptance thresholds round(2^32 * exp(-beta*dE)) for positive dE.

    thresholds[d] holds the entry for dE = d; index 0 keeps the maximum word
    so the stored table also encodes "dE <= 0 always accepts" (the engines
    take that branch before consulting the table).  `spectrum` lists the
    positive dE values reachable by the model kind.  With a nonzero field dE
    leaves the integer lattice and `on_the_fly` flags that engines must
    evaluate exp(-beta*dE) directly.
    """

    thresholds: np.ndarray         # (max_delta + 1,) uint32
    spectrum: tuple[int, ...]
    beta: float
    kind: str
    q: int = 2
    on_the_fly: bool = False

    @property
    def size(self) -> int:
        return len(self.spectrum)

    def entry(self, delta: int) -> int:
        if delta <= 0:
            return MAX_WORD
        return int(self.thresholds[delta])

    @property
    def checksum(self) -> int:
        return zlib.crc32(self.thresholds.tobytes())


def metropolis_spectrum(model: ModelSpec) -> tuple[int, ...]:
    """Distinct positive integer dE values reachable by single-site moves."""
    if model.kind == ISING_EA:
        if model.couplings.diluted:
            return tuple(range(2, 13, 2))      # dE = 2*s*nbs, nbs any of -6..6
        return (4, 8, 12)                      # undiluted: nbs is even
    if model.kind in (POTTS_DISORDERED, GLASSY_POTTS, CHIRAL_POTTS):
        return tuple(range(1, 7))              # each bond delta changes by <= 1
    raise ValueError(f"no integer spectrum for kind {model.kind!r}")


def build_metropolis_table(model: ModelSpec) -> MetropolisTable:
    """Acceptance table for `model`; falls back to on-the-fly for h != 0."""
    beta = model.beta
    if model.kind == ISING_EA and model.couplings.h_fp != 0:
        return MetropolisTable(thresholds=np.array([MAX_WORD], dtype=np.uint32),
                               spectrum=(), beta=beta, kind=model.kind,
                               q=model.q, on_the_fly=True)
    spectrum = metropolis_spectrum(model)
    thresholds = np.zeros(max(spectrum) + 1, dtype=np.uint32)
    thresholds[0] = MAX_WORD
    for delta in spectrum:
        p = 0.0 if math.isinf(beta) else math.exp(-beta * delta)
        thresholds[delta] = _threshold(p)
    return MetropolisTable(thresholds=thresholds, spectrum=spectrum, beta=beta,
                           kind=model.kind, q=model.q)
