"""Cubic lattice geometry, site indexing and spin configurations.

Sites of the L^3 periodic lattice are numbered z-major:
``site = x + L*y + L^2*z``, so increasing site index scans x fastest and z
slowest.  Neighbor lists are returned in the fixed order
(+x, -x, +y, -y, +z, -z).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NEIGHBOR_ORDER = ("+x", "-x", "+y", "-y", "+z", "-z")

ISING = "ising"
POTTS = "potts"


@dataclass(frozen=True)
class LatticeGeometry:
    """Periodic hypercubic lattice, fixed at three dimensions."""

    L: int
    D: int = 3

    def __post_init__(self):
        if self.D != 3:
            raise ValueError(f"only D=3 lattices are supported, got D={self.D}")
        if self.L < 2:
            raise ValueError(f"linear size must be >= 2, got L={self.L}")

    @property
    def n_sites(self) -> int:
        return self.L ** self.D

    def site_index(self, x: int, y: int, z: int) -> int:
        L = self.L
        return (x % L) + L * ((y % L) + L * (z % L))

    def site_coords(self, site: int) -> tuple[int, int, int]:
        L = self.L
        x = site % L
        y = (site // L) % L
        z = site // (L * L)
        return x, y, z

    def neighbor_table(self) -> np.ndarray:
        """(N, 6) table of nearest neighbors in NEIGHBOR_ORDER."""
        return _neighbor_table(self.L)


@lru_cache(maxsize=None)
def _neighbor_table(L: int) -> np.ndarray:
    n = L ** 3
    sites = np.arange(n)
    x = sites % L
    y = (sites // L) % L
    z = sites // (L * L)
    table = np.empty((n, 6), dtype=np.int64)
    table[:, 0] = (x + 1) % L + L * (y + L * z)
    table[:, 1] = (x - 1) % L + L * (y + L * z)
    table[:, 2] = x + L * ((y + 1) % L + L * z)
    table[:, 3] = x + L * ((y - 1) % L + L * z)
    table[:, 4] = x + L * (y + L * ((z + 1) % L))
    table[:, 5] = x + L * (y + L * ((z - 1) % L))
    table.setflags(write=False)
    return table


def neighbor_indices(geometry: LatticeGeometry, site: int) -> np.ndarray:
    """The 6 nearest neighbors of `site` under periodic wraparound."""
    if not 0 <= site < geometry.n_sites:
        raise ValueError(f"site {site} out of range for N={geometry.n_sites}")
    return geometry.neighbor_table()[site]


@dataclass
class SpinConfig:
    """Site variables: +-1 for the Ising domain, 0..q-1 for q-state Potts."""

    values: np.ndarray
    domain: str = ISING
    q: int = 2

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int8)

    def validate(self, geometry: LatticeGeometry | None = None) -> None:
        if geometry is not None and len(self.values) != geometry.n_sites:
            raise ValueError(
                f"config has {len(self.values)} sites, geometry has {geometry.n_sites}")
        if self.domain == ISING:
            if not np.isin(self.values, (-1, 1)).all():
                raise ValueError("Ising values must be -1 or +1")
        elif self.domain == POTTS:
            if self.values.min(initial=0) < 0 or self.values.max(initial=0) >= self.q:
                raise ValueError(f"Potts values must lie in 0..{self.q - 1}")
        else:
            raise ValueError(f"unknown domain {self.domain!r}")

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.values.copy(), self.domain, self.q)


def random_config(geometry: LatticeGeometry, domain: str, q: int, seed: int) -> SpinConfig:
    """Deterministic random start: one generator word per site in site order.

    Ising: s = +1 iff the word's top bit is 0.  Potts: word mod q (the modulo
    bias is far below anything the tests can resolve).
    """
    from .prng import PRWheel

    wheel = PRWheel.from_seed(seed)
    n = geometry.n_sites
    values = np.empty(n, dtype=np.int8)
    if domain == ISING:
        for i in range(n):
            values[i] = 1 if wheel.next_u32() < 0x80000000 else -1
        return SpinConfig(values, ISING, 2)
    for i in range(n):
        values[i] = wheel.next_u32() % q
    return SpinConfig(values, POTTS, q)
