"""Measurement, Monte Carlo averaging, and the exact enumeration oracle.

The oracle enumerates all q^N configurations of a desk-scale instance,
weights them by exp(-beta*E) with log-sum-exp stabilization, and grounds
every statistical acceptance test in the suite.  Configuration k maps to
spins by base-q digits, site i holding digit (k // q^i) mod q (Ising digit
b becomes spin 2b-1); `pack_config` inverts the map for histogramming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .lattice import ISING, SpinConfig
from .models import ModelSpec, total_energy, total_energy_batch

ENUMERATION_CAP = 2 ** 24
_CHUNK = 2 ** 16


@dataclass
class Trajectory:
    """Time series of measurements plus enough metadata to replay the run."""

    sweeps: np.ndarray
    energies: np.ndarray
    magnetizations: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    final_config: SpinConfig | None = None

    def __post_init__(self):
        if len(self.sweeps) > 1 and not (np.diff(self.sweeps) > 0).all():
            raise ValueError("sweep indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.sweeps)

    def to_csv(self, path) -> None:
        """CSV `sweep,energy,magnetization` plus a `.meta` sidecar."""
        with open(path, "w") as fh:
            fh.write("sweep,energy,magnetization\n")
            for i, sweep in enumerate(self.sweeps):
                mag = "" if self.magnetizations is None else repr(float(self.magnetizations[i]))
                fh.write(f"{int(sweep)},{float(self.energies[i])!r},{mag}\n")
        with open(str(path) + ".meta", "w") as fh:
            for key, value in self.metadata.items():
                fh.write(f"{key} = {value}\n")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        sweeps, energies, mags = [], [], []
        with open(path) as fh:
            header = fh.readline()
            if not header.startswith("sweep,energy"):
                raise ValueError(f"{path}: not a trajectory CSV")
            for line in fh:
                parts = line.strip().split(",")
                sweeps.append(int(parts[0]))
                energies.append(float(parts[1]))
                mags.append(float(parts[2]) if len(parts) > 2 and parts[2] else None)
        mag_arr = None if not mags or mags[0] is None else np.array(mags)
        meta = {}
        try:
            with open(str(path) + ".meta") as fh:
                for line in fh:
                    if "=" in line:
                        key, _, value = line.partition("=")
                        meta[key.strip()] = value.strip()
        except FileNotFoundError:
            pass
        return cls(np.array(sweeps), np.array(energies), mag_arr, meta)


def magnetization(config: SpinConfig) -> float:
    if config.domain != ISING:
        raise ValueError("magnetization is defined for the Ising domain only")
    return float(config.values.sum()) / len(config.values)


def measure(config: SpinConfig, model: ModelSpec):
    """(energy, magnetization); magnetization is None outside the Ising domain."""
    energy = total_energy(model, config)
    mag = magnetization(config) if config.domain == ISING else None
    return energy, mag


# ---------------------------------------------------------------------------
# Exact enumeration
# ---------------------------------------------------------------------------

def _n_sites(model: ModelSpec) -> int:
    if model.geometry is not None:
        return model.geometry.n_sites
    return model.graph.n_vertices


def _check_enumerable(model: ModelSpec) -> tuple[int, int]:
    n = _n_sites(model)
    q = 2 if model.domain == ISING else model.q
    total = q ** n
    if total > ENUMERATION_CAP:
        raise ValueError(
            f"enumeration refused: q^N = {q}^{n} = {total} configurations "
            f"exceeds the cap of {ENUMERATION_CAP}")
    return q, total


def _spins_for_indices(indices: np.ndarray, n: int, q: int, domain: str) -> np.ndarray:
    digits = (indices[:, None] // q ** np.arange(n)) % q
    if domain == ISING:
        return (2 * digits - 1).astype(np.int8)
    return digits.astype(np.int8)


def pack_config(config: SpinConfig) -> int:
    """Enumeration index of a configuration (inverse of the digit map)."""
    q = 2 if config.domain == ISING else config.q
    digits = ((config.values + 1) // 2 if config.domain == ISING else config.values)
    return int((digits.astype(object) * q ** np.arange(len(digits), dtype=object)).sum())


def enumerated_energies(model: ModelSpec) -> np.ndarray:
    """E(C_k) for every configuration index k, in chunks."""
    q, total = _check_enumerable(model)
    n = _n_sites(model)
    energies = np.empty(total, dtype=np.float64)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        spins = _spins_for_indices(idx, n, q, model.domain)
        energies[start:start + len(idx)] = total_energy_batch(model, spins)
    return energies


@dataclass
class ExactDistribution:
    """Boltzmann weights over all configurations of a desk-scale model."""

    probs: np.ndarray
    log_z: float
    energies: np.ndarray
    beta: float


def log_partition(energies: np.ndarray, beta: float) -> float:
    """log Z at inverse temperature beta from an enumerated energy table."""
    w = -beta * energies
    m = w.max()
    return float(m + np.log(np.exp(w - m).sum()))


def enumerate_boltzmann(model: ModelSpec) -> ExactDistribution:
    energies = enumerated_energies(model)
    log_z = log_partition(energies, model.beta)
    probs = np.exp(-model.beta * energies - log_z)
    return ExactDistribution(probs=probs, log_z=log_z, energies=energies,
                             beta=model.beta)


def exact_boltzmann_average(model: ModelSpec, observable) -> float:
    """Weighted average sum_k A(C_k) e^(-beta E_k) / Z by full enumeration.

    `observable` is "energy", "magnetization", or a callable mapping a
    (M, N) spin block to M values.
    """
    q, total = _check_enumerable(model)
    n = _n_sites(model)
    dist = enumerate_boltzmann(model)
    if observable == "energy":
        return float((dist.probs * dist.energies).sum())
    if observable == "magnetization":
        if model.domain != ISING:
            raise ValueError("magnetization is defined for the Ising domain only")
        observable = lambda spins: spins.mean(axis=1)
    acc = 0.0
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        spins = _spins_for_indices(idx, n, q, model.domain)
        acc += float((dist.probs[start:start + len(idx)] * observable(spins)).sum())
    return acc


# ---------------------------------------------------------------------------
# Monte Carlo averages with blocked errors
# ---------------------------------------------------------------------------

def blocked_error(samples: np.ndarray, min_blocks: int = 16) -> float:
    """Standard error by bin-size doubling until the estimate plateaus.

    Doubling stops when fewer than `min_blocks` bins remain; the error is
    the first level that grows less than 5% over its predecessor (for
    correlated data the naive level underestimates, so the estimate climbs
    to a plateau; i.i.d. data plateaus immediately).
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = len(samples)
    if n < 2:
        raise ValueError("need at least 2 samples")
    best = None
    prev = None
    size = 1
    while n // size >= min_blocks or size == 1:
        blocks = n // size
        binned = samples[:blocks * size].reshape(blocks, size).mean(axis=1)
        if blocks < 2:
            break
        err = float(binned.std(ddof=1) / math.sqrt(blocks))
        if prev is not None and err < prev * 1.05:
            return max(err, prev)
        prev = err
        best = err
        size *= 2
    return best if best is not None else prev


def mc_average(trajectory, burnin: int | None = None) -> tuple[float, float]:
    """(mean, standard error) of the trajectory energy after burn-in.

    `burnin` counts discarded leading samples; the default drops the first
    half (the conservative thermalization rule).
    """
    values = trajectory.energies if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
    if burnin is None:
        burnin = len(values) // 2
    kept = np.asarray(values, dtype=np.float64)[burnin:]
    if len(kept) < 2:
        raise ValueError(f"need at least 2 post-burnin samples, have {len(kept)}")
    return float(kept.mean()), blocked_error(kept)


def chi_square_gof(empirical_counts: np.ndarray, expected_probs) -> float:
    """Goodness-of-fit p-value; bins are pooled until every expected >= 5.

    `expected_probs` may be an ExactDistribution or a probability array.
    Bins are sorted by expected probability (descending) and the tail is
    merged into one pooled bin.
    """
    if isinstance(expected_probs, ExactDistribution):
        expected_probs = expected_probs.probs
    counts = np.asarray(empirical_counts, dtype=np.float64)
    probs = np.asarray(expected_probs, dtype=np.float64)
    if counts.shape != probs.shape:
        raise ValueError("empirical and expected bin counts differ in shape")
    total = counts.sum()
    expected = probs * total
    order = np.argsort(expected)[::-1]
    exp_sorted = expected[order]
    cnt_sorted = counts[order]
    keep = np.searchsorted(-exp_sorted, -5.0, side="right")
    if keep < len(exp_sorted):
        tail_exp = exp_sorted[keep:].sum()
        tail_cnt = cnt_sorted[keep:].sum()
        exp_sorted = np.append(exp_sorted[:keep], tail_exp)
        cnt_sorted = np.append(cnt_sorted[:keep], tail_cnt)
        if tail_exp < 5.0 and len(exp_sorted) > 1:
            exp_sorted[-2] += exp_sorted[-1]
            cnt_sorted[-2] += cnt_sorted[-1]
            exp_sorted, cnt_sorted = exp_sorted[:-1], cnt_sorted[:-1]
    if len(exp_sorted) < 2:
        raise ValueError("fewer than two usable bins after merging")
    stat = float(((cnt_sorted - exp_sorted) ** 2 / exp_sorted).sum())
    dof = len(exp_sorted) - 1
    return float(stats.chi2.sf(stat, dof))
