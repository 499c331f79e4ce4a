"""The five Hamiltonians, their quenched couplings, and energy evaluation.

Lattice kinds and their bond terms (bond base a, partner b = a + dir):

    ising-ea       -J_ab * s_a * s_b          J in {-1,+1}, optional field
    potts          -J_ab * delta(s_a, s_b)    J in {-1,+1}
    glassy-potts   -delta(s_a, pi_ab(s_b))    pi_ab a random permutation
    chiral-potts   -delta((s_a+1) mod q, s_b)
    graph-coloring +delta(s_u, s_v)           over graph edges

Each undirected bond is counted once, as the (+x, +y, +z) bond of its base
site; at L=2 the +d and -d neighbors of a site coincide but the two bonds
remain distinct, so a 3D lattice always carries exactly 3N bonds.  Site
dilution (mask eps) removes the field at eps=0 sites and zeroes every bond
incident to them.  The uniform field h is stored in 32-bit fixed point so
probability tables built from it are bit-reproducible.

Geometry, couplings and model specs are treated as immutable once built
and may be shared read-only across threads; only SpinConfig mutates, and
only under the single engine that owns it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import ISING, POTTS, LatticeGeometry, SpinConfig

ISING_EA = "ising-ea"
POTTS_DISORDERED = "potts"
GLASSY_POTTS = "glassy-potts"
CHIRAL_POTTS = "chiral-potts"
GRAPH_COLORING = "graph-coloring"

LATTICE_KINDS = (ISING_EA, POTTS_DISORDERED, GLASSY_POTTS, CHIRAL_POTTS)
ALL_KINDS = LATTICE_KINDS + (GRAPH_COLORING,)

FIXED_POINT_SCALE = 2 ** 32


def domain_for(kind: str) -> str:
    return ISING if kind == ISING_EA else POTTS


@dataclass
class CouplingSet:
    """Quenched disorder of one lattice sample.

    bonds:        (N, 3) int8, the +x/+y/+z bond of each site, values +-1
    permutations: (N, 3, q) uint8 for glassy Potts, else None
    dilution:     (N,) uint8 site mask; None means undiluted
    h_fp:         uniform field in units of 2^-32
    seed:         generation seed, kept for file headers and lane derivation
    """

    bonds: np.ndarray
    permutations: np.ndarray | None = None
    dilution: np.ndarray | None = None
    h_fp: int = 0
    seed: int | None = None
    dilution_p: float = 1.0

    @property
    def n_sites(self) -> int:
        return self.bonds.shape[0]

    @property
    def h(self) -> float:
        return self.h_fp / FIXED_POINT_SCALE

    @property
    def diluted(self) -> bool:
        return self.dilution is not None and not self.dilution.all()

    def site_mask(self) -> np.ndarray:
        if self.dilution is None:
            return np.ones(self.n_sites, dtype=np.uint8)
        return self.dilution

    def validate(self, geometry: LatticeGeometry, q: int = 2) -> None:
        n = geometry.n_sites
        if self.bonds.shape != (n, 3):
            raise ValueError(f"expected {(n, 3)} bonds, got {self.bonds.shape}")
        if not np.isin(self.bonds, (-1, 1)).all():
            raise ValueError("bond values must be -1 or +1")
        if self.permutations is not None:
            if self.permutations.shape != (n, 3, q):
                raise ValueError("permutation table shape mismatch")
            sorted_perms = np.sort(self.permutations, axis=2)
            if not (sorted_perms == np.arange(q, dtype=np.uint8)).all():
                raise ValueError("each bond permutation must be a bijection on 0..q-1")
        if self.dilution is not None:
            if self.dilution.shape != (n,):
                raise ValueError("dilution mask shape mismatch")
            if not np.isin(self.dilution, (0, 1)).all():
                raise ValueError("dilution mask entries must be 0 or 1")


def set_field(couplings: CouplingSet, h: float) -> None:
    couplings.h_fp = round(h * FIXED_POINT_SCALE)


def ferromagnet_couplings(geometry: LatticeGeometry, h: float = 0.0) -> CouplingSet:
    """All bonds +1: the uniform ferromagnet as a special case of ising-ea."""
    bonds = np.ones((geometry.n_sites, 3), dtype=np.int8)
    return CouplingSet(bonds=bonds, h_fp=round(h * FIXED_POINT_SCALE))


def generate_couplings(kind: str, geometry: LatticeGeometry, seed: int, *,
                       q: int = 2, dilution_p: float = 1.0,
                       h: float = 0.0) -> CouplingSet:
    """Deterministic disorder sample for `kind` from a 64-bit seed.

    Draw order is fixed: bimodal bonds site-major in (x, y, z) direction
    order, then glassy permutations (Fisher-Yates, q-1 words each) in the
    same bond order, then one word per site for the dilution mask.  No words
    are consumed for sections a kind does not use, or when dilution_p == 1.
    """
    from .prng import StreamSet, _expand_seed

    n = geometry.n_sites
    # One wheel drawn in blocks; bit-identical to next_u32 in a loop.
    wheel = StreamSet(_expand_seed(seed)[None, :].copy(),
                      np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64))
    bonds = np.ones((n, 3), dtype=np.int8)
    perms = None
    if kind in (ISING_EA, POTTS_DISORDERED):
        words = wheel.draw_block(3 * n)[:, 0]
        bonds = np.where(words < 0x80000000, 1, -1).astype(np.int8).reshape(n, 3)
    elif kind == GLASSY_POTTS:
        perms = np.empty((n, 3, q), dtype=np.uint8)
        words = wheel.draw_block(3 * n * (q - 1))[:, 0]
        base = list(range(q))
        w = 0
        for i in range(n):
            for d in range(3):
                perm = base.copy()
                for j in range(q - 1, 0, -1):
                    r = int(words[w]) % (j + 1)
                    w += 1
                    perm[j], perm[r] = perm[r], perm[j]
                perms[i, d] = perm
    elif kind != CHIRAL_POTTS:
        raise ValueError(f"cannot generate couplings for kind {kind!r}")
    dilution = None
    if dilution_p < 1.0:
        threshold = round(dilution_p * FIXED_POINT_SCALE)
        words = wheel.draw_block(n)[:, 0]
        dilution = (words < threshold).astype(np.uint8)
    return CouplingSet(bonds=bonds, permutations=perms, dilution=dilution,
                       h_fp=round(h * FIXED_POINT_SCALE), seed=seed,
                       dilution_p=dilution_p)


@dataclass
class ModelSpec:
    """A runnable model: Hamiltonian kind, temperature and disorder sample.

    beta = math.inf is the zero-temperature flag.  Lattice kinds carry a
    geometry and couplings; graph-coloring carries a graph instead.
    """

    kind: str
    beta: float
    q: int = 2
    geometry: LatticeGeometry | None = None
    couplings: CouplingSet | None = None
    graph: "object | None" = None      # graphs.Graph for kind=graph-coloring

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.beta < 0 or math.isnan(self.beta):
            raise ValueError("beta must be non-negative (math.inf = zero temperature)")
        if self.kind == ISING_EA and self.q != 2:
            raise ValueError("ising-ea implies q=2")
        if self.kind != ISING_EA and self.q < 2:
            raise ValueError("Potts-family models need q >= 2")
        if self.kind in LATTICE_KINDS:
            if self.geometry is None or self.couplings is None:
                raise ValueError(f"{self.kind} needs a geometry and couplings")
            self.couplings.validate(self.geometry, self.q)
            if self.couplings.h_fp != 0 and self.kind != ISING_EA:
                raise ValueError("the uniform field applies to Ising-family models only")
        elif self.graph is None:
            raise ValueError("graph-coloring needs a graph")

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    @property
    def domain(self) -> str:
        return domain_for(self.kind)

    def validate_config(self, config: SpinConfig) -> None:
        if config.domain != self.domain:
            raise ValueError(f"config domain {config.domain!r} does not match {self.kind}")
        if self.kind in LATTICE_KINDS:
            if config.domain == POTTS and config.q != self.q:
                raise ValueError(f"config q={config.q} does not match model q={self.q}")
            config.validate(self.geometry)
        else:
            if len(config.values) != self.graph.n_vertices:
                raise ValueError("config size does not match graph")


def effective_bonds(geometry: LatticeGeometry, couplings: CouplingSet) -> np.ndarray:
    """(N, 3) bond values with dilution applied: J * eps_base * eps_partner."""
    nbt = geometry.neighbor_table()
    eps = couplings.site_mask().astype(np.int8)
    plus = nbt[:, (0, 2, 4)]
    return couplings.bonds * eps[:, None] * eps[plus]


def bond_mask(geometry: LatticeGeometry, couplings: CouplingSet) -> np.ndarray:
    """(N, 3) 0/1 mask of bonds that survive dilution."""
    nbt = geometry.neighbor_table()
    eps = couplings.site_mask()
    return eps[:, None] * eps[nbt[:, (0, 2, 4)]]


def effective_bonds6(geometry: LatticeGeometry, couplings: CouplingSet) -> np.ndarray:
    """(N, 6) per-slot effective bond value in neighbor order (+x,-x,...,-z).

    Slot -d of site i is the +d bond based at the -d neighbor.
    """
    nbt = geometry.neighbor_table()
    act = effective_bonds(geometry, couplings)
    out = np.empty((geometry.n_sites, 6), dtype=np.int8)
    for d in range(3):
        out[:, 2 * d] = act[:, d]
        out[:, 2 * d + 1] = act[nbt[:, 2 * d + 1], d]
    return out


def _plus_neighbors(geometry: LatticeGeometry) -> np.ndarray:
    return geometry.neighbor_table()[:, (0, 2, 4)]


def total_energy(model: ModelSpec, config: SpinConfig):
    """Energy of `config`, each undirected bond summed exactly once.

    Exact integer for field-free lattice models and for graph coloring.
    """
    model.validate_config(config)
    s = config.values
    if model.kind == GRAPH_COLORING:
        edges = model.graph.edges
        return int((s[edges[:, 0]] == s[edges[:, 1]]).sum())
    geo, cpl = model.geometry, model.couplings
    plus = _plus_neighbors(geo)
    if model.kind == ISING_EA:
        act = effective_bonds(geo, cpl)
        e = -int((act * (s[:, None] * s[plus]).astype(np.int64)).sum())
        if cpl.h_fp != 0:
            return e - cpl.h * float((cpl.site_mask() * s).sum())
        return e
    if model.kind == POTTS_DISORDERED:
        act = effective_bonds(geo, cpl)
        return -int((act * (s[:, None] == s[plus])).sum())
    mask = bond_mask(geo, cpl)
    if model.kind == GLASSY_POTTS:
        n = geo.n_sites
        sites = np.arange(n)[:, None]
        dirs = np.arange(3)[None, :]
        mapped = cpl.permutations[sites, dirs, s[plus]]
        return -int((mask * (mapped == s[:, None])).sum())
    # chiral Potts: delta evaluated modulo q
    return -int((mask * ((s[:, None] + 1) % model.q == s[plus])).sum())


def total_energy_batch(model: ModelSpec, spins: np.ndarray) -> np.ndarray:
    """Energies of many configurations at once; spins has shape (M, N)."""
    if model.kind == GRAPH_COLORING:
        edges = model.graph.edges
        return (spins[:, edges[:, 0]] == spins[:, edges[:, 1]]).sum(axis=1)
    geo, cpl = model.geometry, model.couplings
    plus = _plus_neighbors(geo)
    if model.kind == ISING_EA:
        act = effective_bonds(geo, cpl)
        e = -(act * (spins[:, :, None] * spins[:, plus]).astype(np.int64)).sum(axis=(1, 2))
        if cpl.h_fp != 0:
            return e - cpl.h * (cpl.site_mask() * spins).sum(axis=1)
        return e
    if model.kind == POTTS_DISORDERED:
        act = effective_bonds(geo, cpl)
        return -(act * (spins[:, :, None] == spins[:, plus])).sum(axis=(1, 2),
                                                                  dtype=np.int64)
    mask = bond_mask(geo, cpl)
    if model.kind == GLASSY_POTTS:
        n = geo.n_sites
        sites = np.arange(n)[None, :, None]
        dirs = np.arange(3)[None, None, :]
        mapped = cpl.permutations[sites, dirs, spins[:, plus]]
        return -(mask * (mapped == spins[:, :, None])).sum(axis=(1, 2), dtype=np.int64)
    return -(mask * ((spins[:, :, None] + 1) % model.q == spins[:, plus])).sum(
        axis=(1, 2), dtype=np.int64)


def _site_bond_energy(model: ModelSpec, s: np.ndarray, site: int, value: int):
    """Bond part of the local energy at `site` if it held `value`."""
    if model.kind == GRAPH_COLORING:
        nbrs = model.graph.neighbors(site)
        return int((s[nbrs] == value).sum())
    geo, cpl = model.geometry, model.couplings
    nbt = geo.neighbor_table()
    nbrs = nbt[site]
    if model.kind == ISING_EA:
        jeff = effective_bonds6(geo, cpl)[site]
        return -int((jeff.astype(np.int64) * value * s[nbrs]).sum())
    if model.kind == POTTS_DISORDERED:
        jeff = effective_bonds6(geo, cpl)[site]
        return -int((jeff * (s[nbrs] == value)).sum())
    eps = cpl.site_mask()
    mask6 = eps[site] * eps[nbrs]
    e = 0
    for d in range(3):
        j_plus, j_minus = nbrs[2 * d], nbrs[2 * d + 1]
        if model.kind == GLASSY_POTTS:
            e -= int(mask6[2 * d]) * int(value == cpl.permutations[site, d, s[j_plus]])
            e -= int(mask6[2 * d + 1]) * int(s[j_minus] == cpl.permutations[j_minus, d, value])
        else:  # chiral
            e -= int(mask6[2 * d]) * int((value + 1) % model.q == s[j_plus])
            e -= int(mask6[2 * d + 1]) * int((s[j_minus] + 1) % model.q == value)
    return e


def local_energy(model: ModelSpec, config: SpinConfig, site: int):
    """E(s_i): bond terms of every slot at `site` plus the field term."""
    model.validate_config(config)
    n = model.graph.n_vertices if model.kind == GRAPH_COLORING else model.geometry.n_sites
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range")
    s = config.values
    e = _site_bond_energy(model, s, site, int(s[site]))
    if model.kind == ISING_EA and model.couplings.h_fp != 0:
        eps = model.couplings.site_mask()
        return e - model.couplings.h * float(eps[site] * s[site])
    return e


def local_energy_delta(model: ModelSpec, config: SpinConfig, site: int, new_value: int):
    """E(new) - E(old) for a single-site move, without touching `config`."""
    model.validate_config(config)
    if model.domain == ISING:
        if new_value not in (-1, 1):
            raise ValueError(f"invalid Ising value {new_value}")
    elif not 0 <= new_value < model.q:
        raise ValueError(f"invalid Potts value {new_value} for q={model.q}")
    s = config.values
    old = int(s[site])
    if new_value == old:
        return 0
    delta = (_site_bond_energy(model, s, site, new_value)
             - _site_bond_energy(model, s, site, old))
    if model.kind == ISING_EA and model.couplings.h_fp != 0:
        eps = model.couplings.site_mask()
        delta -= model.couplings.h * float(eps[site]) * (new_value - old)
    return delta


# ---------------------------------------------------------------------------
# Coupling files: `janus-couplings v1` text format
# ---------------------------------------------------------------------------

_DIR_NAMES = ("x", "y", "z")


def save_couplings(path, kind: str, geometry: LatticeGeometry, q: int,
                   couplings: CouplingSet) -> None:
    """One line per bond, z-major site order, then direction x/y/z."""
    seed = couplings.seed if couplings.seed is not None else 0
    lines = [f"janus-couplings v1 kind={kind} L={geometry.L} q={q} seed={seed}"]
    for site in range(geometry.n_sites):
        x, y, z = geometry.site_coords(site)
        for d in range(3):
            if kind == GLASSY_POTTS:
                value = ",".join(str(v) for v in couplings.permutations[site, d])
            else:
                value = str(int(couplings.bonds[site, d]))
            lines.append(f"{x} {y} {z} {_DIR_NAMES[d]} {value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_couplings(path) -> tuple[str, LatticeGeometry, int, CouplingSet]:
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["janus-couplings", "v1"]:
            raise ValueError(f"not a janus-couplings v1 file: {path}")
        meta = dict(part.split("=", 1) for part in header[2:])
        kind, L, q = meta["kind"], int(meta["L"]), int(meta["q"])
        seed = int(meta["seed"])
        geometry = LatticeGeometry(L)
        n = geometry.n_sites
        bonds = np.ones((n, 3), dtype=np.int8)
        perms = np.empty((n, 3, q), dtype=np.uint8) if kind == GLASSY_POTTS else None
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                xs, ys, zs, dname, value = line.split()
                site = geometry.site_index(int(xs), int(ys), int(zs))
                d = _DIR_NAMES.index(dname)
                if kind == GLASSY_POTTS:
                    perms[site, d] = [int(v) for v in value.split(",")]
                else:
                    bonds[site, d] = int(value)
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad bond line {line!r}") from exc
    return kind, geometry, q, CouplingSet(bonds=bonds, permutations=perms, seed=seed)
