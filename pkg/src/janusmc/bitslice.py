"""Word-packed multi-spin-coded engines.

AMSC (asynchronous): bit l of each 64-bit word belongs to lane l, an
independent disorder replica with its own packed couplings.  One random
word per site steers all lanes at once; six one-bit J*s terms per lane are
summed with a carry-save adder tree into a 3-bit neighbor count, and the
shared word is compared against the 7 possible table entries once, the
per-lane result selected by the lane's count code.

SMSC (synchronous): sites of one system are packed along x into the bits of
a word, one word per (y) row, one row block per z plane.  The engine runs
on the two-replica mixed layout, where every neighbor of an updating plane
lives in the other mixed store, and walks z plane by plane reading planes
z-1, z, z+1 of the neighbor store; randomness is per site, so its cost
profile differs from AMSC exactly where the hardware's did.

Bit convention everywhere: spin bit 1 means s = +1, coupling bit 1 means
J = +1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import ISING, LatticeGeometry, SpinConfig, random_config
from .models import ISING_EA, CouplingSet, ModelSpec, generate_couplings
from .engines import (COLOR_ORDER, MixedReplicaPair, Seeds, SiteStreams,
                      SweepSchedule, mix_replicas, unmix_replicas)
from .prng import mix_seed
from .tables import SCALE, HeatBathTable, MetropolisTable

WORD_WIDTH = 64
_ONE = np.uint64(1)
_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


# ---------------------------------------------------------------------------
# AMSC: lanes are replicas
# ---------------------------------------------------------------------------

@dataclass
class PackedEnsemble:
    """K <= 64 Ising replicas packed bitwise, one lane per bit."""

    geometry: LatticeGeometry
    k: int
    spins: np.ndarray                  # (N,) uint64
    couplings: np.ndarray | None = None  # (N, 3) uint64 bond sign bits

    def lane(self, index: int) -> SpinConfig:
        if not 0 <= index < self.k:
            raise ValueError(f"lane {index} out of range for K={self.k}")
        bits = (self.spins >> np.uint64(index)) & _ONE
        return SpinConfig((2 * bits.astype(np.int8) - 1), ISING, 2)


def pack(configs, coupling_sets=None) -> PackedEnsemble:
    """Pack replica configs (and optionally their couplings) into lanes."""
    configs = list(configs)
    if not 1 <= len(configs) <= WORD_WIDTH:
        raise ValueError(f"lane count must be in 1..{WORD_WIDTH}, got {len(configs)}")
    n = len(configs[0].values)
    for cfg in configs:
        if cfg.domain != ISING:
            raise ValueError("only the Ising domain packs into single bits")
        if len(cfg.values) != n:
            raise ValueError("all lanes must share one geometry")
    spins = np.zeros(n, dtype=np.uint64)
    for lane, cfg in enumerate(configs):
        bits = ((cfg.values + 1) // 2).astype(np.uint64)
        spins |= bits << np.uint64(lane)
    packed_couplings = None
    if coupling_sets is not None:
        coupling_sets = list(coupling_sets)
        if len(coupling_sets) != len(configs):
            raise ValueError("need one coupling set per lane")
        packed_couplings = np.zeros((n, 3), dtype=np.uint64)
        for lane, cpl in enumerate(coupling_sets):
            if cpl.diluted:
                raise ValueError("AMSC lanes must be undiluted")
            bits = ((cpl.bonds + 1) // 2).astype(np.uint64)
            packed_couplings |= bits << np.uint64(lane)
    side = round(n ** (1 / 3))
    if side ** 3 != n:
        raise ValueError(f"{n} sites is not a cubic lattice")
    return PackedEnsemble(geometry=LatticeGeometry(side), k=len(configs),
                          spins=spins, couplings=packed_couplings)


def unpack(ensemble: PackedEnsemble) -> list[SpinConfig]:
    return [ensemble.lane(i) for i in range(ensemble.k)]


def _packed_slots6(geometry: LatticeGeometry, packed: np.ndarray) -> np.ndarray:
    """(N, 6) per-slot packed bond words; slot -d is the +d bond of the -d neighbor."""
    nbt = geometry.neighbor_table()
    out = np.empty((geometry.n_sites, 6), dtype=np.uint64)
    for d in range(3):
        out[:, 2 * d] = packed[:, d]
        out[:, 2 * d + 1] = packed[nbt[:, 2 * d + 1], d]
    return out


def _csa_count6(terms: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bitwise count of six one-bit inputs: returns bit planes (hi, mid, lo)
    of the per-lane count 0..6 (count = 4*hi + 2*mid + lo)."""
    t0, t1, t2, t3, t4, t5 = (terms[:, j] for j in range(6))
    x01 = t0 ^ t1
    s_a = x01 ^ t2
    c_a = (t0 & t1) | (t2 & x01)
    x34 = t3 ^ t4
    s_b = x34 ^ t5
    c_b = (t3 & t4) | (t5 & x34)
    lo = s_a ^ s_b
    carry = s_a & s_b
    xc = c_a ^ c_b
    mid = xc ^ carry
    hi = (c_a & c_b) | (carry & xc)
    return hi, mid, lo


def _select_by_count(hi: np.ndarray, mid: np.ndarray, lo: np.ndarray,
                     masks: list[np.ndarray]) -> np.ndarray:
    """OR over count codes of (lanes whose count == code) & masks[code]."""
    out = np.zeros_like(hi)
    for code in range(7):
        eq = (hi if code & 4 else ~hi) \
            & (mid if code & 2 else ~mid) \
            & (lo if code & 1 else ~lo)
        out |= eq & masks[code]
    return out


def amsc_heatbath_sweep(ensemble: PackedEnsemble, table: HeatBathTable,
                        schedule: SweepSchedule, streams: SiteStreams,
                        color_order: tuple[str, str] = COLOR_ORDER) -> PackedEnsemble:
    """One Heat-Bath sweep of all lanes, one shared random word per site."""
    if ensemble.couplings is None:
        raise ValueError("ensemble has no packed couplings")
    if ensemble.geometry.n_sites != schedule.geometry.n_sites:
        raise ValueError("ensemble does not match the schedule geometry")
    jslots = _packed_slots6(ensemble.geometry, ensemble.couplings)
    nbt = ensemble.geometry.neighbor_table()
    for color in color_order:
        sites = schedule.sites(color)
        words = streams.for_color(color).draw()
        _amsc_halfsweep(ensemble.spins, nbt, jslots, sites, words, table)
    return ensemble


def _amsc_halfsweep(spins: np.ndarray, nbt: np.ndarray, jslots: np.ndarray,
                    sites: np.ndarray, words: np.ndarray,
                    table: HeatBathTable) -> None:
    terms = ~(spins[nbt[sites]] ^ jslots[sites])   # bit: J*s_neighbor == +1
    hi, mid, lo = _csa_count6(terms)
    # Per count code, lanes accept +1 iff the shared word clears that entry.
    masks = [np.where(words < table.entries[code], _FULL, np.uint64(0))
             for code in range(7)]
    spins[sites] = _select_by_count(hi, mid, lo, masks)


def amsc_ensemble_for(model: ModelSpec, lanes: int, init_seed: int,
                      initial: SpinConfig | None = None) -> PackedEnsemble:
    """Lane 0 is `model` (starting from `initial` when given); lanes i>0 are
    fresh disorder samples of the same kind (coupling seed
    mix_seed(model seed, i)), each with its own random start."""
    if model.kind != ISING_EA:
        raise ValueError("AMSC packs Ising-family replicas")
    if model.couplings.diluted:
        raise ValueError("AMSC lanes must be undiluted")
    base_seed = model.couplings.seed
    configs, coupling_sets = [], []
    for lane in range(lanes):
        if lane == 0 and initial is not None:
            configs.append(initial.copy())
        else:
            seed = init_seed if lane == 0 else mix_seed(init_seed, lane)
            configs.append(random_config(model.geometry, ISING, 2, seed))
        if lane == 0 or base_seed is None:
            coupling_sets.append(model.couplings)
        else:
            coupling_sets.append(generate_couplings(
                ISING_EA, model.geometry, mix_seed(base_seed, lane),
                h=model.couplings.h))
    return pack(configs, coupling_sets)


def amsc_run(model: ModelSpec, table: HeatBathTable, schedule: SweepSchedule,
             seeds: Seeds, sweeps: int, measure_every: int, record,
             lanes: int, initial: SpinConfig | None = None) -> SpinConfig:
    ensemble = amsc_ensemble_for(model, lanes, seeds.init, initial)
    streams = SiteStreams.fork(seeds.update, schedule)
    jslots = _packed_slots6(ensemble.geometry, ensemble.couplings)
    nbt = ensemble.geometry.neighbor_table()
    record(0, ensemble.lane(0))
    for sweep in range(1, sweeps + 1):
        for color in COLOR_ORDER:
            words = streams.for_color(color).draw()
            _amsc_halfsweep(ensemble.spins, nbt, jslots,
                            schedule.sites(color), words, table)
        if sweep % measure_every == 0:
            record(sweep, ensemble.lane(0))
    return ensemble.lane(0)


# ---------------------------------------------------------------------------
# SMSC: sites of one (mixed) system along the word bits
# ---------------------------------------------------------------------------

@dataclass
class BitPlaneStore:
    """One bit per site: planes[z, y] is a word whose bit x is site (x,y,z)."""

    L: int
    planes: np.ndarray              # (L, L) uint64

    @classmethod
    def from_config(cls, config: SpinConfig, geometry: LatticeGeometry) -> "BitPlaneStore":
        if config.domain != ISING:
            raise ValueError("bit planes hold single-bit (Ising) spins")
        L = geometry.L
        if L > WORD_WIDTH:
            raise ValueError(f"L={L} exceeds the word width {WORD_WIDTH}")
        bits = ((config.values + 1) // 2).astype(np.uint64).reshape(L, L, L)
        planes = (bits << np.arange(L, dtype=np.uint64)).sum(axis=2, dtype=np.uint64)
        return cls(L=L, planes=planes)

    def to_config(self) -> SpinConfig:
        L = self.L
        bits = (self.planes[:, :, None] >> np.arange(L, dtype=np.uint64)) & _ONE
        values = (2 * bits.astype(np.int8) - 1).reshape(L * L * L)
        return SpinConfig(values, ISING, 2)


def _rot_to_plus(word: np.ndarray, L: int) -> np.ndarray:
    """Bit x of the result is bit (x+1) mod L of the input."""
    mask = _FULL >> np.uint64(WORD_WIDTH - L)
    return ((word >> _ONE) | (word << np.uint64(L - 1))) & mask


def _rot_to_minus(word: np.ndarray, L: int) -> np.ndarray:
    """Bit x of the result is bit (x-1) mod L of the input."""
    mask = _FULL >> np.uint64(WORD_WIDTH - L)
    return ((word << _ONE) | (word >> np.uint64(L - 1))) & mask


@dataclass
class PlaneCouplings:
    """Per-slot packed bond planes, precomputed for the six neighbor slots."""

    sign: list[np.ndarray]          # 6 arrays (L, L); bit 1 = J * eps = +1
    active: list[np.ndarray] | None  # 6 arrays (L, L); bit 1 = bond alive

    @classmethod
    def build(cls, geometry: LatticeGeometry, couplings: CouplingSet) -> "PlaneCouplings":
        L = geometry.L
        xr = np.arange(L, dtype=np.uint64)

        def pack3(values) -> np.ndarray:
            bits = values.astype(np.uint64).reshape(L, L, L)
            return (bits << xr).sum(axis=2, dtype=np.uint64)

        jx = pack3((couplings.bonds[:, 0] + 1) // 2)
        jy = pack3((couplings.bonds[:, 1] + 1) // 2)
        jz = pack3((couplings.bonds[:, 2] + 1) // 2)
        sign = [jx, _rot_to_minus(jx, L),
                jy, np.roll(jy, 1, axis=1),
                jz, np.roll(jz, 1, axis=0)]
        active = None
        if couplings.diluted:
            from .models import bond_mask
            msk = bond_mask(geometry, couplings)
            mx, my, mz = pack3(msk[:, 0]), pack3(msk[:, 1]), pack3(msk[:, 2])
            active = [mx, _rot_to_minus(mx, L),
                      my, np.roll(my, 1, axis=1),
                      mz, np.roll(mz, 1, axis=0)]
        return cls(sign=sign, active=active)


@dataclass
class MixedPlanePair:
    """The two mixed replicas of `mix_replicas`, in bit-plane form."""

    geometry: LatticeGeometry
    a: BitPlaneStore
    b: BitPlaneStore
    couplings: PlaneCouplings
    raw_couplings: CouplingSet

    @classmethod
    def from_mixed(cls, pair: MixedReplicaPair) -> "MixedPlanePair":
        geo = pair.schedule.geometry
        return cls(geometry=geo,
                   a=BitPlaneStore.from_config(pair.mixed_a, geo),
                   b=BitPlaneStore.from_config(pair.mixed_b, geo),
                   couplings=PlaneCouplings.build(geo, pair.couplings),
                   raw_couplings=pair.couplings)

    def to_mixed(self, schedule: SweepSchedule) -> MixedReplicaPair:
        return MixedReplicaPair(mixed_a=self.a.to_config(),
                                mixed_b=self.b.to_config(),
                                schedule=schedule, couplings=self.raw_couplings)


@lru_cache(maxsize=None)
def _parity_grid(L: int) -> np.ndarray:
    grid = np.indices((L, L, L)).sum(axis=0) % 2 == 0   # (x+y+z) even
    grid.setflags(write=False)
    return grid


def _plane_word_grids(geometry: LatticeGeometry, streams_black: SiteStreams,
                      streams_white: SiteStreams, black_grid: np.ndarray,
                      count: int) -> list[np.ndarray]:
    """Draw `count` words per site for one mixed-store update.

    Black sites (replica-1 content of store A, or replica-2 content of
    store B) draw from their replica's black streams; white sites from the
    other replica's white streams.  Returns per-draw (L,L,L) word grids.
    """
    grids = []
    for _ in range(count):
        grid = np.empty((geometry.L,) * 3, dtype=np.uint32)
        grid[black_grid] = streams_black.black.draw()
        grid[~black_grid] = streams_white.white.draw()
        grids.append(grid)
    return grids


def smsc_metropolis_sweep(pair: MixedPlanePair, table: MetropolisTable,
                          rng: tuple[SiteStreams, SiteStreams]) -> MixedPlanePair:
    """One full Metropolis sweep of the mixed pair: update store A, then B.

    Per replica this equals a scalar checkerboard sweep with color order
    (black, white) for replica 1 and (white, black) for replica 2, under
    the shared per-site stream routing.
    """
    if table.kind != ISING_EA:
        raise ValueError("the bit-plane engine packs 1-bit (Ising) spins")
    streams1, streams2 = rng
    black_grid = _parity_grid(pair.geometry.L)
    _smsc_update_store(pair, "a", table, streams1, streams2, black_grid)
    _smsc_update_store(pair, "b", table, streams2, streams1, black_grid)
    return pair


def _smsc_update_store(pair: MixedPlanePair, which: str, table: MetropolisTable,
                       streams_black: SiteStreams, streams_white: SiteStreams,
                       black_grid: np.ndarray) -> None:
    """Update every site of one mixed store, plane by plane in z.

    Store A holds black sites of replica 1 and white sites of replica 2, so
    its black positions draw from replica 1's streams and its white ones
    from replica 2's; store B is the complement.  The z loop fetches planes
    z-1, z, z+1 of the neighbor store and the z plane of the couplings,
    carrying a rolling prev/cur/next window as the pipeline analog.
    """
    active = pair.a if which == "a" else pair.b
    other = pair.b if which == "a" else pair.a
    geometry = pair.geometry
    L = geometry.L
    # proposal words are consumed first, then acceptance words, per stream
    prop_grid, acc_grid = _plane_word_grids(
        geometry, streams_black, streams_white, black_grid, 2)
    cpl = pair.couplings
    eps_grid = None
    h = pair.raw_couplings.h
    if table.on_the_fly:
        eps_grid = pair.raw_couplings.site_mask().reshape(L, L, L)
    xr = np.arange(L, dtype=np.uint64)
    nxt = other.planes[1 % L]
    cur_nb = other.planes[0]
    for z in range(L):
        prev_nb = other.planes[(z - 1) % L]
        if z:
            cur_nb = nxt
        nxt = other.planes[(z + 1) % L]      # prefetched while z-1 retires
        slots = [
            _rot_to_plus(cur_nb, L), _rot_to_minus(cur_nb, L),
            np.roll(cur_nb, -1, axis=0), np.roll(cur_nb, 1, axis=0),
            nxt, prev_nb,
        ]
        cur = active.planes[z]
        if cpl.active is None:
            terms = [~(slots[j] ^ cpl.sign[j][z]) for j in range(6)]
            hi, mid, lo = _csa_count6(np.stack(terms, axis=1))
            cnt = _unpack_count(hi, mid, lo, xr, L)
            nbs = 2 * cnt - 6
        else:
            pos = [(~(slots[j] ^ cpl.sign[j][z])) & cpl.active[j][z] for j in range(6)]
            hi, mid, lo = _csa_count6(np.stack(pos, axis=1))
            cpos = _unpack_count(hi, mid, lo, xr, L)
            hi, mid, lo = _csa_count6(np.stack([cpl.active[j][z] for j in range(6)], axis=1))
            nbs = 2 * cpos - _unpack_count(hi, mid, lo, xr, L)
        s = 2 * ((cur[:, None] >> xr) & _ONE).astype(np.int64) - 1
        delta = 2 * s * nbs
        acc_words = acc_grid[z]
        if table.on_the_fly:
            fdelta = delta + 2.0 * h * eps_grid[z] * s
            weight = np.exp(-table.beta * np.maximum(fdelta, 0.0))
            accept = (fdelta <= 0) | (acc_words < weight * SCALE)
        else:
            thr = np.take(table.thresholds, np.maximum(delta, 0))
            accept = (delta <= 0) | (acc_words < thr)
        flip = (accept.astype(np.uint64) << xr).sum(axis=1, dtype=np.uint64)
        active.planes[z] = cur ^ flip


def _unpack_count(hi: np.ndarray, mid: np.ndarray, lo: np.ndarray,
                  xr: np.ndarray, L: int) -> np.ndarray:
    """(L, L) integer counts from the three count bit planes of one z row."""
    h = ((hi[:, None] >> xr) & _ONE).astype(np.int64)
    m = ((mid[:, None] >> xr) & _ONE).astype(np.int64)
    low = ((lo[:, None] >> xr) & _ONE).astype(np.int64)
    return 4 * h + 2 * m + low


def smsc_run(model: ModelSpec, table: MetropolisTable, schedule: SweepSchedule,
             seeds: Seeds, sweeps: int, measure_every: int, record,
             initial: SpinConfig | None = None) -> SpinConfig:
    geo = model.geometry
    rep1 = initial.copy() if initial is not None \
        else random_config(geo, ISING, 2, seeds.init)
    rep2 = random_config(geo, ISING, 2, mix_seed(seeds.init, 1))
    streams1 = SiteStreams.fork(seeds.update, schedule)
    streams2 = SiteStreams.fork(mix_seed(seeds.update, 1), schedule)
    pair = MixedPlanePair.from_mixed(
        mix_replicas(rep1, rep2, schedule, model.couplings))
    record(0, rep1)
    for sweep in range(1, sweeps + 1):
        smsc_metropolis_sweep(pair, table, (streams1, streams2))
        if sweep % measure_every == 0:
            rep1_now, _ = unmix_replicas(pair.to_mixed(schedule))
            record(sweep, rep1_now)
    return unmix_replicas(pair.to_mixed(schedule))[0]
