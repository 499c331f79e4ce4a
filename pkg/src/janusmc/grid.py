"""Domain-decomposed Heat-Bath engine over a virtual worker grid.

The lattice is split into gx * gy slabs in x and y (full z columns per
worker, mirroring a 2-D processor torus), each worker holding its slab in a
padded array with one halo layer on the four x/y faces.  A sweep is bulk
synchronous: before each color half-sweep all halos are refreshed, then
every worker updates its own sites of that color; workers never write
outside their slab and all cross-worker traffic happens at those
synchronization points, so the result is independent of thread scheduling.

Random words keep the global per-site stream routing of the scalar engine,
so any grid shape, 1x1 included, reproduces the single-domain configuration
bit for bit.  `JANUS_THREADS` caps the worker pool; fewer threads than
subdomains just means one thread serves several slabs per phase.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .lattice import ISING, LatticeGeometry, SpinConfig
from .models import CouplingSet, ModelSpec, effective_bonds6
from .engines import SweepSchedule
from .prng import StreamSet
from .tables import SCALE, HeatBathTable


@dataclass
class HaloBuffer:
    """Views of one worker's four halo layers (filled by exchange_halos)."""

    west: np.ndarray      # (L, sy) column x0-1
    east: np.ndarray      # (L, sy) column x1
    south: np.ndarray     # (L, sx) row y0-1
    north: np.ndarray     # (L, sx) row y1


@dataclass
class Subdomain:
    """One worker's slab: x in [x0, x1), y in [y0, y1), all z.

    Spins live in a (L+2, sy+2, sx+2) padded array: x/y halo layers are
    filled from grid neighbors, the two z pad planes from the worker's own
    wrap (z columns are fully owned).
    """

    ax: int
    ay: int
    x0: int
    x1: int
    y0: int
    y1: int
    padded: np.ndarray = None
    halos: HaloBuffer = None
    jslots: np.ndarray = None          # (6, L, sy, sx) int8 bond per slot
    eps: np.ndarray = None             # (L, sy, sx)
    color_masks: dict = field(default_factory=dict)
    streams: dict = field(default_factory=dict)
    _nbs: np.ndarray = None            # scratch, (L, sy, sx) int8
    _tmp: np.ndarray = None

    @property
    def interior(self) -> np.ndarray:
        return self.padded[1:-1, 1:-1, 1:-1]

    def wrap_z(self) -> None:
        self.padded[0, 1:-1, 1:-1] = self.padded[-2, 1:-1, 1:-1]
        self.padded[-1, 1:-1, 1:-1] = self.padded[1, 1:-1, 1:-1]


@dataclass
class DomainGrid:
    geometry: LatticeGeometry
    gx: int
    gy: int
    subdomains: list    # row-major: worker (ax, ay) at index ax + gx * ay

    def worker(self, ax: int, ay: int) -> Subdomain:
        return self.subdomains[(ax % self.gx) + self.gx * (ay % self.gy)]


def _valid_grids(L: int) -> list[int]:
    return [g for g in range(1, L + 1) if L % g == 0 and (L // g) % 2 == 0]


def partition_lattice(geometry: LatticeGeometry, gx: int, gy: int) -> DomainGrid:
    """Tile the lattice into gx*gy slabs; subdomain sides must be even."""
    if gx < 1 or gy < 1:
        raise ValueError("grid extents must be >= 1")
    L = geometry.L
    for g, name in ((gx, "gx"), (gy, "gy")):
        if L % g or (L // g) % 2:
            raise ValueError(
                f"{name}={g} does not tile L={L} into even slabs; "
                f"valid extents: {_valid_grids(L)}")
    sx, sy = L // gx, L // gy
    subdomains = [Subdomain(ax=ax, ay=ay, x0=ax * sx, x1=(ax + 1) * sx,
                            y0=ay * sy, y1=(ay + 1) * sy)
                  for ay in range(gy) for ax in range(gx)]
    return DomainGrid(geometry=geometry, gx=gx, gy=gy, subdomains=subdomains)


def _prepare(grid: DomainGrid, couplings: CouplingSet,
             schedule: SweepSchedule, update_seed: int) -> None:
    """Allocate slabs, halos, per-worker couplings and stream banks."""
    L = grid.geometry.L
    jeff6 = effective_bonds6(grid.geometry, couplings).reshape(L, L, L, 6)
    eps = couplings.site_mask().reshape(L, L, L)
    site_grid = np.arange(grid.geometry.n_sites).reshape(L, L, L)
    zz, yy, xx = np.indices((L, L, L))
    parity = (xx + yy + zz) % 2
    for w in grid.subdomains:
        sy, sx = w.y1 - w.y0, w.x1 - w.x0
        w.padded = np.zeros((L + 2, sy + 2, sx + 2), dtype=np.int8)
        w.halos = HaloBuffer(west=w.padded[1:-1, 1:-1, 0],
                             east=w.padded[1:-1, 1:-1, -1],
                             south=w.padded[1:-1, 0, 1:-1],
                             north=w.padded[1:-1, -1, 1:-1])
        w.jslots = np.ascontiguousarray(
            jeff6[:, w.y0:w.y1, w.x0:w.x1, :].transpose(3, 0, 1, 2))
        w.eps = eps[:, w.y0:w.y1, w.x0:w.x1].copy()
        w._nbs = np.empty((L, sy, sx), dtype=np.int8)
        w._tmp = np.empty((L, sy, sx), dtype=np.int8)
        local_parity = parity[:, w.y0:w.y1, w.x0:w.x1]
        local_sites = site_grid[:, w.y0:w.y1, w.x0:w.x1]
        for color, bit in (("black", 0), ("white", 1)):
            mask = local_parity == bit
            w.color_masks[color] = mask
            ids = schedule.stream_ids[local_sites[mask]]
            w.streams[color] = StreamSet.for_ids(update_seed, ids)


def scatter_config(grid: DomainGrid, config: SpinConfig) -> None:
    L = grid.geometry.L
    values = config.values.reshape(L, L, L)
    for w in grid.subdomains:
        w.interior[...] = values[:, w.y0:w.y1, w.x0:w.x1]


def gather_config(grid: DomainGrid) -> SpinConfig:
    L = grid.geometry.L
    values = np.empty((L, L, L), dtype=np.int8)
    for w in grid.subdomains:
        values[:, w.y0:w.y1, w.x0:w.x1] = w.interior
    return SpinConfig(values.reshape(L * L * L), ISING, 2)


def exchange_halos(grid: DomainGrid) -> None:
    """Refresh every worker's halos from its torus neighbors' boundaries
    (and its own z wrap planes, which never cross workers)."""
    for w in grid.subdomains:
        west = grid.worker(w.ax - 1, w.ay)
        east = grid.worker(w.ax + 1, w.ay)
        south = grid.worker(w.ax, w.ay - 1)
        north = grid.worker(w.ax, w.ay + 1)
        w.halos.west[...] = west.interior[:, :, -1]
        w.halos.east[...] = east.interior[:, :, 0]
        w.halos.south[...] = south.interior[:, -1, :]
        w.halos.north[...] = north.interior[:, 0, :]
        w.wrap_z()


_SLOT_VIEWS = (
    (slice(1, -1), slice(1, -1), slice(2, None)),    # +x
    (slice(1, -1), slice(1, -1), slice(None, -2)),   # -x
    (slice(1, -1), slice(2, None), slice(1, -1)),    # +y
    (slice(1, -1), slice(None, -2), slice(1, -1)),   # -y
    (slice(2, None), slice(1, -1), slice(1, -1)),    # +z
    (slice(None, -2), slice(1, -1), slice(1, -1)),   # -z
)


def _update_color(w: Subdomain, color: str, table: HeatBathTable,
                  beta: float, h: float, diluted: bool, jitter=None) -> None:
    """Heat-Bath update of one worker's sites of one color.

    The six J*s terms fit int8 (|nbs| <= 6), so the whole neighbor sum runs
    in 8-bit arithmetic on preallocated scratch.
    """
    if jitter is not None:
        jitter()
    p = w.padded
    nbs, tmp = w._nbs, w._tmp
    np.multiply(w.jslots[0], p[_SLOT_VIEWS[0]], out=nbs)
    for slot in range(1, 6):
        np.multiply(w.jslots[slot], p[_SLOT_VIEWS[slot]], out=tmp)
        np.add(nbs, tmp, out=nbs)
    mask = w.color_masks[color]
    words = w.streams[color].draw()
    inner = w.interior
    if not diluted:
        thr = table.entries[(nbs[mask] + 6) >> 1]
        inner[mask] = np.where(words < thr, 1, -1)
        return
    local = nbs[mask] + h * w.eps[mask]
    if math.isinf(beta):
        p_up = np.where(local > 0, 1.0, np.where(local < 0, 0.0, 0.5))
    else:
        with np.errstate(over="ignore"):
            p_up = 1.0 / (1.0 + np.exp(-2.0 * beta * local))
    inner[mask] = np.where(words < p_up * SCALE, 1, -1)


def _pool_size(grid: DomainGrid, threads: int | None) -> int:
    """Worker threads serving the subdomains; several slabs per thread is
    fine since phases are barrier-synchronized.  Defaults to the host core
    count: more CPU-bound threads than cores only adds GIL contention."""
    limit = threads
    env = os.environ.get("JANUS_THREADS")
    if limit is None and env:
        limit = int(env)
    if limit is None:
        limit = os.cpu_count() or 1
    return max(1, min(limit, len(grid.subdomains)))


class GridEngine:
    """Persistent worker pool running Heat-Bath sweeps on a DomainGrid."""

    def __init__(self, grid: DomainGrid, couplings: CouplingSet,
                 table: HeatBathTable, schedule: SweepSchedule,
                 update_seed: int, threads: int | None = None, jitter=None):
        self.grid = grid
        self.table = table
        self.beta = table.beta
        self.h = couplings.h
        self.diluted = couplings.diluted
        self.jitter = jitter
        _prepare(grid, couplings, schedule, update_seed)
        self._pool = ThreadPoolExecutor(max_workers=_pool_size(grid, threads))

    def close(self) -> None:
        self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def load(self, config: SpinConfig) -> None:
        scatter_config(self.grid, config)

    def config(self) -> SpinConfig:
        return gather_config(self.grid)

    def sweep(self, n: int = 1, on_sweep=None) -> None:
        """`n` full sweeps; each color phase is halo-exchange then update.

        The pool map is the phase barrier: no worker starts a color until
        every halo is in place, and the next exchange waits for all workers.
        """
        workers = self.grid.subdomains
        for sweep in range(n):
            for color in ("black", "white"):
                exchange_halos(self.grid)
                futures = [self._pool.submit(_update_color, w, color,
                                             self.table, self.beta, self.h,
                                             self.diluted, self.jitter)
                           for w in workers]
                for f in futures:
                    f.result()
            if on_sweep is not None:
                on_sweep(sweep + 1)


def parallel_sweep(grid: DomainGrid, model: ModelSpec, config: SpinConfig,
                   table: HeatBathTable, schedule: SweepSchedule,
                   update_seed: int, threads: int | None = None) -> SpinConfig:
    """One barrier-synchronized sweep of `config` (updated in place).

    One-shot wrapper: stream banks start fresh from the seed, exactly like a
    single scalar sweep.  Multi-sweep runs should hold a GridEngine so
    worker state persists.
    """
    with GridEngine(grid, model.couplings, table, schedule, update_seed,
                    threads=threads) as engine:
        engine.load(config)
        engine.sweep(1)
        config.values[:] = engine.config().values
    return config


def run_grid(grid: DomainGrid, model: ModelSpec, config: SpinConfig,
             table: HeatBathTable, schedule: SweepSchedule, update_seed: int,
             sweeps: int, measure_every: int, record,
             threads: int | None = None) -> None:
    with GridEngine(grid, model.couplings, table, schedule, update_seed,
                    threads=threads) as engine:
        engine.load(config)

        def on_sweep(done: int) -> None:
            if done % measure_every == 0:
                record(done, engine.config())

        engine.sweep(sweeps, on_sweep)
        config.values[:] = engine.config().values
