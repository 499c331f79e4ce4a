"""Wall-clock benchmark: nanoseconds per single-site update, per engine.

The metric divides measured sweep time by the number of site updates one
sweep performs (N for the scalar and grid engines, N*K lane-site updates
for AMSC, 2N for the SMSC mixed pair), the same unit as published
spin-update times.  Setup work (stream seeding, packing, table builds) is
excluded from the timed region; each engine is measured `reps` times and
the median reported, with automatic sweep-count escalation whenever a
measurement would sit below the timer's resolution.

Published FPGA reference points for context (16 ps/spin for 3D Ising EA,
64 ps for q=4 glassy Potts on one JANUS processor): silicon numbers, not
reproducible in software, reported only so ratios have an anchor.
"""

from __future__ import annotations

import platform
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .lattice import ISING, random_config
from .models import ModelSpec
from .engines import (LatticeContext, Seeds, SiteStreams,
                      _heatbath_halfsweep, _metropolis_halfsweep,
                      checkerboard_partition, mix_replicas)
from .prng import mix_seed
from .tables import build_heatbath_table, build_metropolis_table

FPGA_CONTEXT = (
    ("3D Ising EA, Heat-Bath", "16 ps/spin"),
    ("q=4 3D glassy Potts, Metropolis", "64 ps/spin"),
)


@dataclass
class BenchResult:
    engine: str
    ns_per_update: float          # median over reps
    reps_ns: list
    sweeps_timed: int
    updates_per_sweep: int


@dataclass
class BenchReport:
    instance: dict
    host: dict
    results: list

    def result(self, engine: str) -> BenchResult:
        for r in self.results:
            if r.engine == engine:
                return r
        raise KeyError(engine)

    def ratio(self, slow_engine: str, fast_engine: str) -> float:
        return self.result(slow_engine).ns_per_update / self.result(fast_engine).ns_per_update

    def format_table(self) -> str:
        lines = ["engine            ns/update   sweeps  updates/sweep"]
        for r in self.results:
            lines.append(f"{r.engine:<16} {r.ns_per_update:>10.2f} {r.sweeps_timed:>8d} "
                         f"{r.updates_per_sweep:>14d}")
        lines.append("")
        lines.append("ratio matrix (row time / column time):")
        names = [r.engine for r in self.results]
        lines.append("            " + "".join(f"{n:>14}" for n in names))
        for a in names:
            row = "".join(f"{self.ratio(a, b):>14.2f}" for b in names)
            lines.append(f"{a:<12}" + row)
        lines.append("")
        lines.append("instance: " + " ".join(f"{k}={v}" for k, v in self.instance.items()))
        lines.append("host:     " + " ".join(f"{k}={v}" for k, v in self.host.items()))
        lines.append("FPGA literature context (not software-reproducible):")
        for model_name, figure in FPGA_CONTEXT:
            lines.append(f"  {model_name}: {figure}")
        return "\n".join(lines)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("engine,ns_per_update,sweeps_timed,updates_per_sweep,reps_ns\n")
            for r in self.results:
                reps = ";".join(f"{v:.3f}" for v in r.reps_ns)
                fh.write(f"{r.engine},{r.ns_per_update:.3f},{r.sweeps_timed},"
                         f"{r.updates_per_sweep},{reps}\n")


def _host_descriptor() -> dict:
    return {"machine": platform.machine(), "processor": platform.processor() or "unknown",
            "python": platform.python_version(), "numpy": np.__version__}


def _make_stepper(model: ModelSpec, engine: str, seeds: Seeds, lanes: int,
                  grid_shape: tuple):
    """(step(n_sweeps), updates_per_sweep, cleanup) with all setup done."""
    schedule = checkerboard_partition(model.geometry)
    n = model.geometry.n_sites
    if engine in ("scalar-hb", "scalar-metro"):
        heatbath = engine == "scalar-hb"
        table = (build_heatbath_table(model.beta, model.couplings.h) if heatbath
                 else build_metropolis_table(model))
        ctx = LatticeContext.build(model.kind, model.q, model.beta,
                                   model.geometry, model.couplings)
        config = random_config(model.geometry, model.domain, model.q, seeds.init)
        streams = SiteStreams.fork(seeds.update, schedule)
        pairs = ((schedule.black, streams.black), (schedule.white, streams.white))

        def step(count: int) -> None:
            for _ in range(count):
                for sites, bank in pairs:
                    if heatbath:
                        _heatbath_halfsweep(ctx, config.values, sites,
                                            bank.draw(), table)
                    else:
                        _metropolis_halfsweep(ctx, config.values, sites,
                                              bank.draw(), bank.draw(), table)

        return step, n, None
    if engine == "amsc":
        from .bitslice import _amsc_halfsweep, _packed_slots6, amsc_ensemble_for
        table = build_heatbath_table(model.beta, model.couplings.h)
        ensemble = amsc_ensemble_for(model, lanes, seeds.init)
        streams = SiteStreams.fork(seeds.update, schedule)
        jslots = _packed_slots6(ensemble.geometry, ensemble.couplings)
        nbt = ensemble.geometry.neighbor_table()

        def step(count: int) -> None:
            for _ in range(count):
                for color in ("black", "white"):
                    _amsc_halfsweep(ensemble.spins, nbt, jslots,
                                    schedule.sites(color),
                                    streams.for_color(color).draw(), table)

        return step, n * lanes, None
    if engine == "smsc":
        from .bitslice import MixedPlanePair, smsc_metropolis_sweep
        table = build_metropolis_table(model)
        rep1 = random_config(model.geometry, ISING, 2, seeds.init)
        rep2 = random_config(model.geometry, ISING, 2, mix_seed(seeds.init, 1))
        streams1 = SiteStreams.fork(seeds.update, schedule)
        streams2 = SiteStreams.fork(mix_seed(seeds.update, 1), schedule)
        pair = MixedPlanePair.from_mixed(
            mix_replicas(rep1, rep2, schedule, model.couplings))

        def step(count: int) -> None:
            for _ in range(count):
                smsc_metropolis_sweep(pair, table, (streams1, streams2))

        return step, 2 * n, None
    if engine == "grid":
        from .grid import GridEngine, partition_lattice
        table = build_heatbath_table(model.beta, model.couplings.h)
        grid = partition_lattice(model.geometry, *grid_shape)
        engine_obj = GridEngine(grid, model.couplings, table, schedule,
                                seeds.update)
        engine_obj.load(random_config(model.geometry, ISING, 2, seeds.init))
        return engine_obj.sweep, n, engine_obj.close
    raise ValueError(f"unknown engine {engine!r}")


def measure_engine(model: ModelSpec, engine: str, *, reps: int = 5,
                   min_time: float = 0.05, seeds: Seeds = Seeds(11, 12),
                   lanes: int = 64, grid_shape: tuple = (4, 4)) -> BenchResult:
    """Median ns per site update over `reps` timed runs of one engine."""
    step, updates_per_sweep, cleanup = _make_stepper(model, engine, seeds,
                                                     lanes, grid_shape)
    try:
        step(1)                                  # warm caches and pools
        sweeps = 1
        reps_ns = []
        for _ in range(reps):
            while True:
                t0 = time.perf_counter()
                step(sweeps)
                elapsed = time.perf_counter() - t0
                if elapsed >= min_time:
                    break
                sweeps *= 2                      # below resolution: escalate
            reps_ns.append(elapsed * 1e9 / (sweeps * updates_per_sweep))
    finally:
        if cleanup is not None:
            cleanup()
    return BenchResult(engine=engine, ns_per_update=statistics.median(reps_ns),
                       reps_ns=reps_ns, sweeps_timed=sweeps,
                       updates_per_sweep=updates_per_sweep)


def run_bench(model: ModelSpec, engines, *, reps: int = 5,
              seeds: Seeds = Seeds(11, 12), lanes: int = 64,
              grid_shape: tuple = (4, 4)) -> BenchReport:
    engines = list(engines)
    if not engines:
        raise ValueError("engine list must be non-empty")
    results = [measure_engine(model, e, reps=reps, seeds=seeds, lanes=lanes,
                              grid_shape=grid_shape) for e in engines]
    instance = {"model": model.kind, "L": model.geometry.L, "q": model.q,
                "beta": model.beta, "lanes": lanes,
                "grid": f"{grid_shape[0]}x{grid_shape[1]}"}
    return BenchReport(instance=instance, host=_host_descriptor(), results=results)
