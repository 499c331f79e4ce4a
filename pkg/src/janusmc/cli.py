"""Command-line front end: run, bench, color, oracle, verify, snapshot.

Configuration is line-oriented `key = value` text (optional `[section]`
headers are ignored, `#` starts a comment); command-line flags override
file values.  All outputs are deterministic functions of the config and
seeds.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from dataclasses import dataclass

import numpy as np

from .lattice import ISING, POTTS, LatticeGeometry, SpinConfig
from .models import (ISING_EA, LATTICE_KINDS, ModelSpec,
                     ferromagnet_couplings, generate_couplings, total_energy)
from .engines import ENGINES, Seeds, run
from .prng import mix_seed

_MODEL_CHOICES = ("ising-ea", "ising-ferro", "potts", "glassy-potts", "chiral-potts")


def parse_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


@dataclass
class RunConfig:
    model: str = "ising-ea"
    L: int = 8
    q: int = 2
    beta: float = 1.0
    engine: str = "scalar-hb"
    grid: tuple = (4, 4)
    lanes: int = 8
    sweeps: int = 1000
    measure_every: int = 1
    seed: int = 1
    coupling_seed: int | None = None
    dilution: float = 1.0
    field: float = 0.0
    out: str = "trajectory.csv"
    snapshot_in: str | None = None
    snapshot_out: str | None = None

    def validate(self) -> None:
        if self.model not in _MODEL_CHOICES:
            raise ValueError(f"unknown model {self.model!r}; choose from {_MODEL_CHOICES}")
        if self.engine not in ENGINES:
            raise ValueError(f"unknown engine {self.engine!r}; choose from {ENGINES}")
        kind = self.model_kind
        if self.engine in ("scalar-hb", "amsc", "grid", "smsc") and kind != ISING_EA:
            raise ValueError(f"engine {self.engine!r} needs an Ising-family model, "
                             f"not {self.model!r}")

    @property
    def model_kind(self) -> str:
        return ISING_EA if self.model == "ising-ferro" else self.model

    def build_model(self) -> ModelSpec:
        geometry = LatticeGeometry(self.L)
        kind = self.model_kind
        if self.model == "ising-ferro":
            couplings = ferromagnet_couplings(geometry, h=self.field)
        else:
            seed = self.coupling_seed if self.coupling_seed is not None \
                else mix_seed(self.seed, 0)
            couplings = generate_couplings(kind, geometry, seed, q=self.q,
                                           dilution_p=self.dilution, h=self.field)
        return ModelSpec(kind, beta=self.beta, q=self.q, geometry=geometry,
                         couplings=couplings)

    def seeds(self) -> Seeds:
        return Seeds.from_master(self.seed)


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        file_values = parse_config_file(args.config)
        for key, value in file_values.items():
            key = key.replace("-", "_")
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            current = getattr(cfg, key)
            if key == "grid":
                setattr(cfg, key, _parse_grid(value))
            elif isinstance(current, int):
                setattr(cfg, key, int(value))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
    for key in ("model", "L", "q", "beta", "engine", "lanes", "sweeps",
                "measure_every", "seed", "coupling_seed", "dilution", "field",
                "out", "snapshot_in", "snapshot_out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "grid", None) is not None:
        cfg.grid = _parse_grid(args.grid)
    if getattr(args, "zero_temperature", False):
        cfg.beta = math.inf
    return cfg


def _parse_grid(text) -> tuple:
    if isinstance(text, tuple):
        return text
    gx, _, gy = text.partition("x")
    return int(gx), int(gy)


# ---------------------------------------------------------------------------
# Snapshots: `janus-snap v1 kind L q` + one base-q digit per site
# ---------------------------------------------------------------------------

def snapshot_save(path_or_file, config: SpinConfig, kind: str) -> None:
    """z-major text rows, one row of L digits per (z, y) line."""
    q = 2 if config.domain == ISING else config.q
    if q > 10:
        raise ValueError("snapshot digits cover q <= 10")
    n = len(config.values)
    side = round(n ** (1 / 3))
    if side ** 3 != n:
        raise ValueError(f"{n} sites is not a cubic lattice")
    digits = ((config.values + 1) // 2 if config.domain == ISING
              else config.values).reshape(side, side, side)
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w") if own else path_or_file
    try:
        fh.write(f"janus-snap v1 {kind} {side} {q}\n")
        for z in range(side):
            for y in range(side):
                fh.write("".join(str(d) for d in digits[z, y]) + "\n")
    finally:
        if own:
            fh.close()


def snapshot_load(path_or_file) -> tuple[str, SpinConfig]:
    own = isinstance(path_or_file, str)
    fh = open(path_or_file) if own else path_or_file
    name = path_or_file if own else "<snapshot>"
    try:
        header = fh.readline().split()
        if len(header) != 5 or header[:2] != ["janus-snap", "v1"]:
            raise ValueError(f"{name}:1: not a janus-snap v1 header")
        kind, L, q = header[2], int(header[3]), int(header[4])
        values = np.empty(L * L * L, dtype=np.int8)
        site = 0
        for lineno in range(2, L * L + 2):
            line = fh.readline().strip()
            if len(line) != L:
                raise ValueError(f"{name}:{lineno}: expected {L} digits, got {line!r}")
            for ch in line:
                d = int(ch)
                if d >= q:
                    raise ValueError(f"{name}:{lineno}: digit {d} out of range for q={q}")
                values[site] = d
                site += 1
    finally:
        if own:
            fh.close()
    if kind == ISING_EA:
        return kind, SpinConfig(2 * values - 1, ISING, 2)
    return kind, SpinConfig(values, POTTS, q)


def model_hash(model: ModelSpec) -> str:
    """Short stable identifier of (kind, geometry, q, disorder sample)."""
    digest = hashlib.sha256()
    digest.update(f"{model.kind} {model.geometry.L} {model.q} ".encode())
    digest.update(model.couplings.bonds.tobytes())
    if model.couplings.permutations is not None:
        digest.update(model.couplings.permutations.tobytes())
    digest.update(model.couplings.site_mask().tobytes())
    digest.update(str(model.couplings.h_fp).encode())
    return digest.hexdigest()[:12]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    cfg.validate()
    model = cfg.build_model()
    initial = None
    if cfg.snapshot_in:
        kind, initial = snapshot_load(cfg.snapshot_in)
        if kind != model.kind:
            raise ValueError(f"snapshot holds {kind!r}, run wants {model.kind!r}")
    trajectory = run(model, cfg.engine, cfg.sweeps, cfg.measure_every,
                     cfg.seeds(), grid_shape=cfg.grid, lanes=cfg.lanes,
                     initial=initial)
    trajectory.metadata["model_hash"] = model_hash(model)
    trajectory.to_csv(cfg.out)
    if cfg.snapshot_out:
        final = trajectory.final_config
        snapshot_save(cfg.snapshot_out, final, model.kind)
    print(f"wrote {cfg.out} ({len(trajectory)} samples)")
    return 0


def cmd_bench(args) -> int:
    from .bench import run_bench

    cfg = _config_from_args(args)
    cfg.validate()
    model = cfg.build_model()
    engines = args.engines.split(",") if args.engines else ["scalar-hb", "amsc"]
    report = run_bench(model, engines, reps=args.reps, lanes=args.lanes or 64,
                       grid_shape=cfg.grid)
    print(report.format_table())
    if args.out:
        report.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_color(args) -> int:
    from .coloring import anneal, default_schedule, save_solution
    from .graphs import load_edge_list, planted_coloring_graph

    if args.graph:
        graph = load_edge_list(args.graph)
    elif args.planted:
        n, cm, qp = args.planted.split(",")
        graph, _ = planted_coloring_graph(int(n), float(cm), int(qp),
                                          seed=mix_seed(args.seed, 3))
    else:
        print("color: need --graph FILE or --planted N,CM,Q", file=sys.stderr)
        return 2
    schedule = default_schedule(args.sweeps)
    result = anneal(graph, args.colors, schedule,
                    seeds=(mix_seed(args.seed, 1), mix_seed(args.seed, 2)))
    print(f"vertices={graph.n_vertices} edges={graph.n_edges} "
          f"mean_connectivity={graph.mean_connectivity:.3f}")
    print(f"best energy {result.best_energy} after {result.sweeps_run} sweeps; "
          f"{'proper coloring found' if result.success else 'no proper coloring'}")
    if args.out:
        save_solution(args.out, result.state)
        print(f"wrote {args.out}")
    return 0 if result.success or args.best_effort else 1


def cmd_oracle(args) -> int:
    from .observables import exact_boltzmann_average

    cfg = _config_from_args(args)
    model = cfg.build_model()
    value = exact_boltzmann_average(model, args.observable)
    tag = model_hash(model)
    line = f"{tag} {model.beta!r} {args.observable} {value!r}"
    print(line)
    if args.append:
        with open(args.append, "a") as fh:
            fh.write(line + "\n")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verify

    names = args.checks.split(",") if args.checks else None
    results = run_verify(names)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name} ({r.seconds:.1f}s): {r.detail}")
        failed += not r.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_snapshot(args) -> int:
    kind, config = snapshot_load(args.file)
    geometry = LatticeGeometry(round(len(config.values) ** (1 / 3)))
    q = 2 if config.domain == ISING else config.q
    print(f"kind={kind} L={geometry.L} q={q} sites={len(config.values)}")
    if kind in LATTICE_KINDS and args.energy_couplings:
        from .models import load_couplings
        ckind, cgeo, cq, couplings = load_couplings(args.energy_couplings)
        model = ModelSpec(ckind, beta=1.0, q=cq, geometry=cgeo, couplings=couplings)
        print(f"energy={total_energy(model, config)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="janusmc",
        description="Spin-model Monte Carlo engines with exact oracles and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--model", choices=_MODEL_CHOICES)
        p.add_argument("--L", type=int)
        p.add_argument("--q", type=int)
        p.add_argument("--beta", type=float)
        p.add_argument("--zero-temperature", action="store_true",
                       dest="zero_temperature")
        p.add_argument("--seed", type=int)
        p.add_argument("--coupling-seed", type=int, dest="coupling_seed")
        p.add_argument("--dilution", type=float)
        p.add_argument("--field", type=float)
        p.add_argument("--grid")
        p.add_argument("--lanes", type=int)

    p_run = sub.add_parser("run", help="run an engine and write a trajectory")
    add_model_flags(p_run)
    p_run.add_argument("--engine", choices=ENGINES)
    p_run.add_argument("--sweeps", type=int)
    p_run.add_argument("--measure-every", type=int, dest="measure_every")
    p_run.add_argument("--out")
    p_run.add_argument("--snapshot-in", dest="snapshot_in")
    p_run.add_argument("--snapshot-out", dest="snapshot_out")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="measure ns per site update")
    add_model_flags(p_bench)
    p_bench.add_argument("--engines", help="comma-separated engine list")
    p_bench.add_argument("--reps", type=int, default=5)
    p_bench.add_argument("--out")
    p_bench.set_defaults(func=cmd_bench)

    p_color = sub.add_parser("color", help="anneal a graph coloring")
    p_color.add_argument("--graph", help="edge-list file")
    p_color.add_argument("--planted", help="N,CM,Q planted instance")
    p_color.add_argument("--colors", type=int, default=3)
    p_color.add_argument("--sweeps", type=int, default=10_000)
    p_color.add_argument("--seed", type=int, default=1)
    p_color.add_argument("--out")
    p_color.add_argument("--best-effort", action="store_true",
                         help="exit 0 even if energy 0 was not reached")
    p_color.set_defaults(func=cmd_color)

    p_oracle = sub.add_parser("oracle", help="exact Boltzmann average by enumeration")
    add_model_flags(p_oracle)
    p_oracle.add_argument("--observable", default="energy",
                          choices=("energy", "magnetization"))
    p_oracle.add_argument("--append", help="append `hash beta observable value` line")
    p_oracle.set_defaults(func=cmd_oracle)

    p_verify = sub.add_parser("verify", help="run the named self-check suite")
    p_verify.add_argument("--checks", help="comma-separated subset of checks")
    p_verify.set_defaults(func=cmd_verify)

    p_snap = sub.add_parser("snapshot", help="inspect a snapshot file")
    p_snap.add_argument("file")
    p_snap.add_argument("--energy-couplings", dest="energy_couplings",
                        help="janus-couplings file to evaluate the energy against")
    p_snap.set_defaults(func=cmd_snapshot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"janusmc {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
