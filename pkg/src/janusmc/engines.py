"""Scalar checkerboard sweep engines: Heat-Bath and Metropolis.

One sweep updates the black color set then the white one; within one color
all sites are mutually non-adjacent so the vectorized update is equivalent
to any sequential order (the documented order is lexicographic, i.e.
ascending site index).  Random words are routed per site: the r-th black
site (in site order) owns stream r and the r-th white site owns stream
N/2 + r, and every update of a site consumes words only from its own
stream.  This routing is what makes the bit-sliced and domain-grid engines
reproduce the scalar engine word for word.

Word accounting per full sweep: Heat-Bath draws exactly one word per site,
Metropolis exactly two (proposal first, then acceptance), whether or not
the proposal is forced (Ising) or the move is rejected.

An engine is single-threaded over one configuration; independent engine
instances on distinct configurations (separate disorder samples) can run
on separate threads with no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import ISING, LatticeGeometry, SpinConfig, random_config
from .models import (GLASSY_POTTS, GRAPH_COLORING, ISING_EA,
                     POTTS_DISORDERED, CouplingSet, ModelSpec,
                     effective_bonds6)
from .prng import StreamSet, mix_seed
from .tables import SCALE, HeatBathTable, MetropolisTable

COLOR_ORDER = ("black", "white")


@dataclass
class SweepSchedule:
    """Checkerboard partition plus the site-to-stream routing map."""

    geometry: LatticeGeometry
    black: np.ndarray            # sorted site indices, (x+y+z) even
    white: np.ndarray
    stream_ids: np.ndarray       # (N,) global stream id per site

    def sites(self, color: str) -> np.ndarray:
        return self.black if color == "black" else self.white


def checkerboard_partition(geometry: LatticeGeometry) -> SweepSchedule:
    """Two-color the lattice by coordinate parity; odd L cannot wrap."""
    if geometry.L % 2:
        raise ValueError(
            f"checkerboard needs even L (got {geometry.L}): parity conflicts "
            "across the periodic boundary")
    n = geometry.n_sites
    sites = np.arange(n)
    x = sites % geometry.L
    y = (sites // geometry.L) % geometry.L
    z = sites // (geometry.L * geometry.L)
    parity = (x + y + z) % 2
    black = sites[parity == 0]
    white = sites[parity == 1]
    stream_ids = np.empty(n, dtype=np.int64)
    stream_ids[black] = np.arange(len(black))
    stream_ids[white] = len(black) + np.arange(len(white))
    return SweepSchedule(geometry=geometry, black=black, white=white,
                         stream_ids=stream_ids)


@dataclass
class SiteStreams:
    """One generator stream per site, split by color for lockstep draws."""

    black: StreamSet
    white: StreamSet

    @classmethod
    def fork(cls, seed: int, schedule: SweepSchedule) -> "SiteStreams":
        full = StreamSet.fork(seed, schedule.geometry.n_sites)
        black, white = full.split(len(schedule.black))
        return cls(black=black, white=white)

    def for_color(self, color: str) -> StreamSet:
        return self.black if color == "black" else self.white


# ---------------------------------------------------------------------------
# Per-run context: everything gather-ready for vectorized half-sweeps
# ---------------------------------------------------------------------------

@dataclass
class LatticeContext:
    kind: str
    q: int
    beta: float
    nbt: np.ndarray              # (N, 6)
    jeff6: np.ndarray            # (N, 6) effective bond per slot
    eps: np.ndarray              # (N,) dilution mask
    perms: np.ndarray | None
    h: float
    h_fp: int
    diluted: bool

    @classmethod
    def build(cls, kind: str, q: int, beta: float, geometry: LatticeGeometry,
              couplings: CouplingSet) -> "LatticeContext":
        return cls(kind=kind, q=q, beta=beta,
                   nbt=geometry.neighbor_table(),
                   jeff6=effective_bonds6(geometry, couplings),
                   eps=couplings.site_mask(),
                   perms=couplings.permutations,
                   h=couplings.h, h_fp=couplings.h_fp,
                   diluted=couplings.diluted)


def _neighbor_sum(ctx: LatticeContext, values: np.ndarray, sites: np.ndarray) -> np.ndarray:
    """nbs = sum_slots J_eff * s_neighbor, the Heat-Bath local sum.

    Six +-1 terms fit comfortably in int8, so the whole chain stays 8-bit.
    """
    return (ctx.jeff6[sites] * values[ctx.nbt[sites]]).sum(axis=1, dtype=np.int8)


def _heatbath_halfsweep(ctx: LatticeContext, values: np.ndarray,
                        sites: np.ndarray, words: np.ndarray,
                        table: HeatBathTable) -> None:
    nbs = _neighbor_sum(ctx, values, sites)
    if not ctx.diluted:
        # Undiluted sums are even; the field is already folded into the table.
        thr = table.entries[(nbs + 6) // 2]
        values[sites] = np.where(words < thr, 1, -1)
        return
    # Diluted lattices reach odd neighbor sums the 7-entry table cannot
    # index; evaluate P(+1) directly (and per-site eps when h != 0).
    local = nbs + ctx.h * ctx.eps[sites]
    if math.isinf(ctx.beta):
        p_up = np.where(local > 0, 1.0, np.where(local < 0, 0.0, 0.5))
    else:
        with np.errstate(over="ignore"):
            p_up = 1.0 / (1.0 + np.exp(-2.0 * ctx.beta * local))
    values[sites] = np.where(words < p_up * SCALE, 1, -1)


def _propose(ctx: LatticeContext, old: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Uniform proposal over the q-1 values different from the current one.

    word mod (q-1) with offset-skip; for Ising this is the deterministic
    flip (the proposal word is still consumed).
    """
    if ctx.kind == ISING_EA:
        return -old
    r = (words % np.uint32(ctx.q - 1)).astype(np.int8)
    return r + (r >= old)


def _delta_energy(ctx: LatticeContext, values: np.ndarray, sites: np.ndarray,
                  old: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Vectorized E(new) - E(old) over `sites` (bond terms plus field)."""
    nbrs = ctx.nbt[sites]
    if ctx.kind == ISING_EA:
        nbs = (ctx.jeff6[sites] * values[nbrs]).sum(axis=1, dtype=np.int8)
        delta = (old.astype(np.int16) - new) * nbs
        if ctx.h_fp:
            return delta - ctx.h * ctx.eps[sites] * (new.astype(np.float64) - old)
        return delta
    s_nb = values[nbrs]
    if ctx.kind == POTTS_DISORDERED:
        jeff = ctx.jeff6[sites].astype(np.int64)
        return (jeff * ((s_nb == old[:, None]).astype(np.int64)
                        - (s_nb == new[:, None]))).sum(axis=1)
    mask6 = (ctx.eps[sites, None] * ctx.eps[nbrs]).astype(np.int64)
    delta = np.zeros(len(sites), dtype=np.int64)
    for d in range(3):
        plus, minus = nbrs[:, 2 * d], nbrs[:, 2 * d + 1]
        if ctx.kind == GLASSY_POTTS:
            mapped = ctx.perms[sites, d, s_nb[:, 2 * d]]
            delta += mask6[:, 2 * d] * ((mapped == old).astype(np.int64) - (mapped == new))
            pm_old = ctx.perms[minus, d, old]
            pm_new = ctx.perms[minus, d, new]
            s_minus = s_nb[:, 2 * d + 1]
            delta += mask6[:, 2 * d + 1] * ((s_minus == pm_old).astype(np.int64)
                                            - (s_minus == pm_new))
        else:  # chiral: delta shifted modulo q, orientation base -> head
            delta += mask6[:, 2 * d] * (((old + 1) % ctx.q == s_nb[:, 2 * d]).astype(np.int64)
                                        - ((new + 1) % ctx.q == s_nb[:, 2 * d]))
            shifted = (s_nb[:, 2 * d + 1] + 1) % ctx.q
            delta += mask6[:, 2 * d + 1] * ((shifted == old).astype(np.int64)
                                            - (shifted == new))
    return delta


def _metropolis_halfsweep(ctx: LatticeContext, values: np.ndarray,
                          sites: np.ndarray, prop_words: np.ndarray,
                          acc_words: np.ndarray, table: MetropolisTable) -> None:
    old = values[sites]
    new = _propose(ctx, old, prop_words)
    delta = _delta_energy(ctx, values, sites, old, new)
    if table.on_the_fly:
        weight = np.exp(-ctx.beta * np.maximum(delta, 0.0))
        accept = (delta <= 0) | (acc_words < weight * SCALE)
    else:
        thr = np.take(table.thresholds, np.maximum(delta, 0))
        accept = (delta <= 0) | (acc_words < thr)
    values[sites[accept]] = new[accept]


def heatbath_sweep(config: SpinConfig, couplings: CouplingSet,
                   table: HeatBathTable, schedule: SweepSchedule,
                   streams: SiteStreams,
                   color_order: tuple[str, str] = COLOR_ORDER) -> SpinConfig:
    """One full Heat-Bath sweep (both colors) in place; Ising family only."""
    if config.domain != ISING:
        raise ValueError("Heat-Bath engine applies to the Ising domain only")
    if len(config.values) != schedule.geometry.n_sites:
        raise ValueError("config does not match the schedule geometry")
    ctx = LatticeContext.build(ISING_EA, 2, table.beta, schedule.geometry, couplings)
    for color in color_order:
        words = streams.for_color(color).draw()
        _heatbath_halfsweep(ctx, config.values, schedule.sites(color), words, table)
    return config


def metropolis_sweep(config: SpinConfig, couplings: CouplingSet,
                     table: MetropolisTable, schedule: SweepSchedule,
                     streams: SiteStreams,
                     color_order: tuple[str, str] = COLOR_ORDER) -> SpinConfig:
    """One full Metropolis sweep in place; any lattice model kind."""
    if len(config.values) != schedule.geometry.n_sites:
        raise ValueError("config does not match the schedule geometry")
    ctx = LatticeContext.build(table.kind, table.q, table.beta,
                               schedule.geometry, couplings)
    for color in color_order:
        bank = streams.for_color(color)
        prop_words = bank.draw()
        acc_words = bank.draw()
        _metropolis_halfsweep(ctx, config.values, schedule.sites(color),
                              prop_words, acc_words, table)
    return config


# ---------------------------------------------------------------------------
# Two-replica mixed lattices
# ---------------------------------------------------------------------------

@dataclass
class MixedReplicaPair:
    """mixedA = black of replica 1 + white of replica 2; mixedB the complement.

    Every lattice neighbor of a mixedA site lives in mixedB and vice versa,
    so each mixed lattice can be updated wholesale.
    """

    mixed_a: SpinConfig
    mixed_b: SpinConfig
    schedule: SweepSchedule
    couplings: CouplingSet


def mix_replicas(rep1: SpinConfig, rep2: SpinConfig, schedule: SweepSchedule,
                 couplings: CouplingSet) -> MixedReplicaPair:
    if len(rep1.values) != len(rep2.values) or len(rep1.values) != schedule.geometry.n_sites:
        raise ValueError("replicas must share the schedule geometry")
    a, b = rep1.copy(), rep2.copy()
    black, white = schedule.black, schedule.white
    a.values[white] = rep2.values[white]
    b.values[white] = rep1.values[white]
    return MixedReplicaPair(mixed_a=a, mixed_b=b, schedule=schedule,
                            couplings=couplings)


def unmix_replicas(pair: MixedReplicaPair) -> tuple[SpinConfig, SpinConfig]:
    black, white = pair.schedule.black, pair.schedule.white
    rep1 = pair.mixed_a.copy()
    rep1.values[white] = pair.mixed_b.values[white]
    rep2 = pair.mixed_b.copy()
    rep2.values[white] = pair.mixed_a.values[white]
    return rep1, rep2


# ---------------------------------------------------------------------------
# Trajectory runner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Seeds:
    """Independent 64-bit seeds for the initial configuration and the updates."""

    init: int
    update: int

    @classmethod
    def from_master(cls, master: int) -> "Seeds":
        return cls(init=mix_seed(master, 1), update=mix_seed(master, 2))


ENGINES = ("scalar-hb", "scalar-metro", "amsc", "smsc", "grid")


def _check_engine(model: ModelSpec, engine: str) -> None:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}; choose from {ENGINES}")
    if model.kind == GRAPH_COLORING:
        raise ValueError("graph coloring runs through the coloring module")
    if engine in ("scalar-hb", "amsc") and model.kind != ISING_EA:
        raise ValueError(f"{engine} is a Heat-Bath engine and needs an Ising-family model")
    if engine == "smsc" and model.kind != ISING_EA:
        raise ValueError("the bit-plane SMSC engine packs 1-bit spins (Ising family)")


def run(model: ModelSpec, engine: str, sweeps: int, measure_every: int = 1,
        seeds: Seeds = Seeds(1, 2), *, grid_shape: tuple[int, int] = (4, 4),
        lanes: int = 8, sweep_block: int = 256,
        initial: SpinConfig | None = None):
    """Run `sweeps` full sweeps and record observables into a Trajectory.

    Replayable: (model, engine, seeds) determine every recorded byte.  The
    initial measurement at sweep 0 is always recorded; with sweeps=0 it is
    the only sample.  For multi-replica engines (amsc, smsc) the trajectory
    follows lane 0 / replica 1 and the metadata says so.  `initial`
    replaces the seeded random start (for lane 0 / replica 1 in the
    multi-replica engines), e.g. to continue from a snapshot.
    """
    from .observables import Trajectory, measure

    _check_engine(model, engine)
    if sweeps < 0:
        raise ValueError("sweep count must be >= 0")
    if measure_every < 1:
        raise ValueError("measure_every must be >= 1")
    schedule = checkerboard_partition(model.geometry)
    record_sweeps, energies, mags = [], [], []
    last_config = [None]

    def record(sweep: int, config: SpinConfig) -> None:
        energy, mag = measure(config, model)
        record_sweeps.append(sweep)
        energies.append(energy)
        mags.append(mag)
        last_config[0] = config.copy()

    if initial is None:
        config = random_config(model.geometry, model.domain, model.q, seeds.init)
    else:
        model.validate_config(initial)
        config = initial.copy()
    table = _build_table(model, engine)

    if engine in ("scalar-hb", "scalar-metro"):
        streams = SiteStreams.fork(seeds.update, schedule)
        _run_scalar(model, engine, config, table, schedule, streams, sweeps,
                    measure_every, record, sweep_block)
        last_config[0] = config
    elif engine == "grid":
        from .grid import partition_lattice, run_grid
        grid = partition_lattice(model.geometry, *grid_shape)
        record(0, config)
        run_grid(grid, model, config, table, schedule, seeds.update, sweeps,
                 measure_every, record)
        last_config[0] = config
    elif engine == "amsc":
        from .bitslice import amsc_run
        last_config[0] = amsc_run(model, table, schedule, seeds, sweeps,
                                  measure_every, record, lanes, initial=config)
    else:  # smsc
        from .bitslice import smsc_run
        last_config[0] = smsc_run(model, table, schedule, seeds, sweeps,
                                  measure_every, record, initial=config)

    meta = {
        "model": model.kind, "L": model.geometry.L, "q": model.q,
        "beta": model.beta, "engine": engine,
        "seed_init": seeds.init, "seed_update": seeds.update,
        "coupling_seed": model.couplings.seed,
        "table_checksum": table.checksum,
        "measure_every": measure_every, "sweeps": sweeps,
    }
    if engine == "grid":
        meta["grid"] = f"{grid_shape[0]}x{grid_shape[1]}"
    if engine == "amsc":
        meta["lanes"] = lanes
        meta["series"] = "lane 0"
    if engine == "smsc":
        meta["series"] = "replica 1"
    mag_arr = None if mags[0] is None else np.array(mags, dtype=np.float64)
    return Trajectory(sweeps=np.array(record_sweeps, dtype=np.int64),
                      energies=np.array(energies, dtype=np.float64),
                      magnetizations=mag_arr, metadata=meta,
                      final_config=last_config[0])


def _build_table(model: ModelSpec, engine: str):
    from .tables import build_heatbath_table, build_metropolis_table

    if engine in ("scalar-hb", "amsc", "grid"):
        return build_heatbath_table(model.beta, model.couplings.h)
    return build_metropolis_table(model)


def _run_scalar(model: ModelSpec, engine: str, config: SpinConfig, table,
                schedule: SweepSchedule, streams: SiteStreams, sweeps: int,
                measure_every: int, record, sweep_block: int) -> None:
    """Blocked driver: pre-draws words per color, bit-identical to calling
    the single-sweep operations in a loop."""
    ctx = LatticeContext.build(model.kind, model.q, model.beta,
                               model.geometry, model.couplings)
    heatbath = engine == "scalar-hb"
    words_per_sweep = 1 if heatbath else 2
    record(0, config)
    done = 0
    while done < sweeps:
        block = min(sweep_block, sweeps - done)
        wb = streams.black.draw_block(block * words_per_sweep)
        ww = streams.white.draw_block(block * words_per_sweep)
        for i in range(block):
            for sites, words in ((schedule.black, wb), (schedule.white, ww)):
                if heatbath:
                    _heatbath_halfsweep(ctx, config.values, sites, words[i], table)
                else:
                    _metropolis_halfsweep(ctx, config.values, sites,
                                          words[2 * i], words[2 * i + 1], table)
            done += 1
            if done % measure_every == 0:
                record(done, config)
