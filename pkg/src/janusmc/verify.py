"""Named self-checks behind the `verify` subcommand.

Every check is independent of the engine path it validates: the generator
is replayed against a naive big-history transcription of the recurrence,
tables against high-precision arithmetic, engines against each other and
against the exact enumeration oracle, all at fixed, pre-registered seeds.
A fresh checkout must pass the whole list in well under ten minutes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from decimal import Decimal, getcontext

import numpy as np

from .lattice import ISING, LatticeGeometry, random_config
from .models import (ISING_EA, ModelSpec, ferromagnet_couplings,
                     generate_couplings)
from .engines import (LatticeContext, SiteStreams, _heatbath_halfsweep,
                      checkerboard_partition, heatbath_sweep,
                      metropolis_sweep, mix_replicas, unmix_replicas)
from .prng import PRWheel, StreamSet, _expand_seed, mix_seed
from .tables import build_heatbath_table, build_metropolis_table


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _naive_parisi_rapuano(seed: int, count: int) -> list:
    """Big-history transcription of the recurrence, kept deliberately dumb."""
    hist = [int(w) for w in _expand_seed(seed)]
    out = []
    for k in range(62, 62 + count):
        new = (hist[k - 24] + hist[k - 55]) & 0xFFFFFFFF
        hist.append(new)
        out.append(new ^ hist[k - 61])
    return out


def check_prng_recurrence() -> tuple[bool, str]:
    for seed in (0, 1, 42, 0xDEADBEEF):
        wheel = PRWheel.from_seed(seed)
        got = [wheel.next_u32() for _ in range(2000)]
        if got != _naive_parisi_rapuano(seed, 2000):
            return False, f"wheel output diverges from the naive recurrence at seed {seed}"
    bank = StreamSet.fork(7, 16)
    block = bank.draw_block(500)
    for i in range(16):
        if block[:, i].tolist() != _naive_parisi_rapuano(mix_seed(7, i), 500):
            return False, f"stream {i} of fork(7, 16) diverges from the naive recurrence"
    return True, "4 seeds x 2000 outputs and 16 forked streams x 500 match the naive recurrence"


def check_table_constants() -> tuple[bool, str]:
    t0 = build_heatbath_table(0.0)
    if not (t0.entries == 2 ** 31).all():
        return False, "beta=0 Heat-Bath entries must all equal 2^31"
    tinf = build_heatbath_table(math.inf)
    if tinf.entry(2) != 0xFFFFFFFF or tinf.entry(-2) != 0 or tinf.entry(0) != 2 ** 31:
        return False, "beta=inf Heat-Bath table is not the sign step function"
    getcontext().prec = 60
    beta, nbs = Decimal("0.5"), 2
    p = 1 / (1 + (-2 * beta * nbs).exp())
    want = int((p * (1 << 32)).to_integral_value(rounding="ROUND_HALF_EVEN"))
    got = build_heatbath_table(0.5).entry(2)
    if abs(got - want) > 1:
        return False, f"beta=0.5 nbs=2 threshold {got} != high-precision {want}"
    geo = LatticeGeometry(4)
    model = ModelSpec(ISING_EA, beta=0.3, geometry=geo,
                      couplings=ferromagnet_couplings(geo))
    mt = build_metropolis_table(model)
    if mt.spectrum != (4, 8, 12) or mt.size > 13:
        return False, f"Ising Metropolis spectrum {mt.spectrum} is wrong"
    want = round(math.exp(-1.2) * 2 ** 32)
    if mt.entry(4) != want:
        return False, f"Metropolis entry(4) {mt.entry(4)} != {want}"
    return True, "Heat-Bath beta=0/inf/0.5 and Metropolis beta=0.3 entries match recomputation"


def check_lane_equivalence() -> tuple[bool, str]:
    from .bitslice import amsc_heatbath_sweep, pack, unpack

    geo = LatticeGeometry(4)
    schedule = checkerboard_partition(geo)
    table = build_heatbath_table(0.7)
    configs = [random_config(geo, ISING, 2, 300 + i) for i in range(8)]
    cpls = [generate_couplings(ISING_EA, geo, seed=400 + i) for i in range(8)]
    ensemble = pack([c.copy() for c in configs], cpls)
    streams = SiteStreams.fork(71, schedule)
    for _ in range(100):
        amsc_heatbath_sweep(ensemble, table, schedule, streams)
    lanes = unpack(ensemble)
    for i in range(8):
        ref = configs[i].copy()
        bank = SiteStreams.fork(71, schedule)
        for _ in range(100):
            heatbath_sweep(ref, cpls[i], table, schedule, bank)
        if not (lanes[i].values == ref.values).all():
            return False, f"lane {i} differs from its scalar replay"
    return True, "8 lanes x 100 sweeps bit-identical to scalar replays"


def check_smsc_equivalence() -> tuple[bool, str]:
    from .bitslice import MixedPlanePair, smsc_metropolis_sweep

    geo = LatticeGeometry(4)
    schedule = checkerboard_partition(geo)
    cpl = generate_couplings(ISING_EA, geo, seed=55)
    model = ModelSpec(ISING_EA, beta=0.5, geometry=geo, couplings=cpl)
    table = build_metropolis_table(model)
    rep1 = random_config(geo, ISING, 2, 61)
    rep2 = random_config(geo, ISING, 2, 62)
    pair = MixedPlanePair.from_mixed(mix_replicas(rep1, rep2, schedule, cpl))
    s1, s2 = SiteStreams.fork(63, schedule), SiteStreams.fork(64, schedule)
    for _ in range(100):
        smsc_metropolis_sweep(pair, table, (s1, s2))
    u1, u2 = unmix_replicas(pair.to_mixed(schedule))
    ref1, ref2 = rep1.copy(), rep2.copy()
    b1, b2 = SiteStreams.fork(63, schedule), SiteStreams.fork(64, schedule)
    for _ in range(100):
        metropolis_sweep(ref1, cpl, table, schedule, b1, ("black", "white"))
        metropolis_sweep(ref2, cpl, table, schedule, b2, ("white", "black"))
    ok = (u1.values == ref1.values).all() and (u2.values == ref2.values).all()
    return ok, ("mixed pair x 100 sweeps bit-identical to the scalar pair" if ok
                else "mixed-plane engine diverged from the scalar pair")


def check_grid_equivalence() -> tuple[bool, str]:
    from .grid import GridEngine, partition_lattice

    geo = LatticeGeometry(8)
    schedule = checkerboard_partition(geo)
    cpl = generate_couplings(ISING_EA, geo, seed=77)
    table = build_heatbath_table(0.65)
    ref = random_config(geo, ISING, 2, 78)
    bank = SiteStreams.fork(79, schedule)
    for _ in range(30):
        heatbath_sweep(ref, cpl, table, schedule, bank)
    for gx, gy in ((1, 1), (2, 2), (4, 4)):
        grid = partition_lattice(geo, gx, gy)
        cfg = random_config(geo, ISING, 2, 78)
        with GridEngine(grid, cpl, table, schedule, update_seed=79) as eng:
            eng.load(cfg)
            eng.sweep(30)
            out = eng.config()
        if not (out.values == ref.values).all():
            return False, f"grid {gx}x{gy} differs from the scalar engine"
    return True, "grids 1x1, 2x2, 4x4 all bit-identical to the scalar engine over 30 sweeps"


def heatbath_histogram(model: ModelSpec, sweeps: int, init_seed: int,
                       update_seed: int, stride: int = 1,
                       block: int = 4096) -> np.ndarray:
    """Visit counts over all 2^N configurations of a Heat-Bath chain.

    One count per `stride` sweeps, taken after the sweep completes (the
    initial configuration is not counted).  A chi-square against the exact
    distribution assumes independent counts, so the stride must exceed the
    chain's integrated autocorrelation time; per-sweep counting is only
    calibrated at beta = 0 where successive sweeps are independent.
    """
    geo = model.geometry
    n = geo.n_sites
    counts = np.zeros(2 ** n, dtype=np.int64)
    schedule = checkerboard_partition(geo)
    table = build_heatbath_table(model.beta, model.couplings.h)
    ctx = LatticeContext.build(model.kind, model.q, model.beta, geo,
                               model.couplings)
    config = random_config(geo, ISING, 2, init_seed)
    streams = SiteStreams.fork(update_seed, schedule)
    powers = (2 ** np.arange(n)).astype(np.int64)
    values = config.values
    done = 0
    while done < sweeps:
        nblock = min(block, sweeps - done)
        wb = streams.black.draw_block(nblock)
        ww = streams.white.draw_block(nblock)
        for i in range(nblock):
            _heatbath_halfsweep(ctx, values, schedule.black, wb[i], table)
            _heatbath_halfsweep(ctx, values, schedule.white, ww[i], table)
            done += 1
            if done % stride == 0:
                counts[int(powers[values > 0].sum())] += 1
    return counts


def check_boltzmann_sampling() -> tuple[bool, str]:
    from .observables import chi_square_gof, enumerate_boltzmann

    geo = LatticeGeometry(2)
    model = ModelSpec(ISING_EA, beta=0.4, geometry=geo,
                      couplings=ferromagnet_couplings(geo))
    counts = heatbath_histogram(model, sweeps=300_000, init_seed=21,
                                update_seed=22, stride=100)
    p_value = chi_square_gof(counts, enumerate_boltzmann(model))
    return p_value > 0.001, (f"chi-square p={p_value:.4f} over 3e5 sweeps, "
                             "measurements every 100 (needs > 0.001)")


def check_thermodynamic_identity() -> tuple[bool, str]:
    from .observables import (enumerated_energies, exact_boltzmann_average,
                              log_partition)

    geo = LatticeGeometry(2)
    model = ModelSpec(ISING_EA, beta=0.4, geometry=geo,
                      couplings=generate_couplings(ISING_EA, geo, seed=5))
    energies = enumerated_energies(model)
    h = 1e-4
    deriv = -(log_partition(energies, 0.4 + h)
              - log_partition(energies, 0.4 - h)) / (2 * h)
    mean_e = exact_boltzmann_average(model, "energy")
    rel = abs(deriv - mean_e) / abs(mean_e)
    return rel < 1e-6, f"|dlogZ/dbeta - <E>|/|<E>| = {rel:.2e} (needs < 1e-6)"


def check_partition_validity() -> tuple[bool, str]:
    from .coloring import partition_independent_sets
    from .graphs import random_graph

    for seed in range(50):
        n = 50 + (seed * 37) % 450
        graph = random_graph(n, 2.0 + (seed % 7), seed=9000 + seed)
        partition = partition_independent_sets(graph)
        maxdeg = int(graph.degrees().max()) if graph.n_edges else 0
        if partition.n_subsets > maxdeg + 1:
            return False, f"graph seed {9000 + seed}: {partition.n_subsets} subsets > maxdeg+1"
        covered = np.concatenate(partition.subsets)
        if len(covered) != n or len(np.unique(covered)) != n:
            return False, f"graph seed {9000 + seed}: subsets do not partition the vertices"
        for subset in partition.subsets:
            members = set(subset.tolist())
            for v in subset:
                if members & set(graph.neighbors(v).tolist()):
                    return False, f"graph seed {9000 + seed}: intra-subset edge at {v}"
    return True, "50 random graphs: partitions valid, bound P <= maxdeg+1 holds"


def check_snapshot_roundtrip() -> tuple[bool, str]:
    import io
    from .cli import snapshot_load, snapshot_save

    geo = LatticeGeometry(4)
    config = random_config(geo, ISING, 2, 3)
    buf = io.StringIO()
    snapshot_save(buf, config, ISING_EA)
    buf.seek(0)
    kind, loaded = snapshot_load(buf)
    ok = kind == ISING_EA and (loaded.values == config.values).all()
    return ok, "snapshot save/load round-trips exactly" if ok else "snapshot round-trip failed"


ALL_CHECKS = (
    ("prng-recurrence", check_prng_recurrence),
    ("table-constants", check_table_constants),
    ("amsc-lane-equivalence", check_lane_equivalence),
    ("smsc-plane-equivalence", check_smsc_equivalence),
    ("grid-equivalence", check_grid_equivalence),
    ("boltzmann-sampling", check_boltzmann_sampling),
    ("thermodynamic-identity", check_thermodynamic_identity),
    ("coloring-partition-validity", check_partition_validity),
    ("snapshot-roundtrip", check_snapshot_roundtrip),
)


def run_verify(names=None) -> list[CheckResult]:
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:             # a crash is a failure with a reason
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        results.append(CheckResult(name=name, passed=passed, detail=detail,
                                   seconds=time.perf_counter() - start))
    return results
