"""Measurement, enumeration-oracle, and statistics tests."""

import math

import numpy as np
import pytest

from janusmc.lattice import ISING, POTTS, LatticeGeometry, SpinConfig, random_config
from janusmc.models import (ISING_EA, POTTS_DISORDERED, ModelSpec,
                            ferromagnet_couplings, generate_couplings,
                            total_energy)
from janusmc.observables import (Trajectory, chi_square_gof,
                                 enumerate_boltzmann, enumerated_energies,
                                 exact_boltzmann_average, log_partition,
                                 magnetization, mc_average, measure,
                                 pack_config)


def ferro_2x2x2(beta):
    geo = LatticeGeometry(2)
    return ModelSpec(ISING_EA, beta=beta, geometry=geo,
                     couplings=ferromagnet_couplings(geo))


def ea_2x2x2(beta, seed=5):
    geo = LatticeGeometry(2)
    return ModelSpec(ISING_EA, beta=beta, geometry=geo,
                     couplings=generate_couplings(ISING_EA, geo, seed))


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------

def test_all_plus_magnetization():
    config = SpinConfig(np.ones(8, dtype=np.int8), ISING, 2)
    assert magnetization(config) == 1.0
    energy, mag = measure(config, ferro_2x2x2(0.4))
    assert (energy, mag) == (-24, 1.0)


def test_measure_is_beta_independent():
    config = random_config(LatticeGeometry(2), ISING, 2, 3)
    assert measure(config, ferro_2x2x2(0.1)) == measure(config, ferro_2x2x2(2.0))


def test_potts_magnetization_rejected():
    geo = LatticeGeometry(2)
    model = ModelSpec(POTTS_DISORDERED, beta=0.4, q=4, geometry=geo,
                      couplings=generate_couplings(POTTS_DISORDERED, geo, 1, q=4))
    config = random_config(geo, POTTS, 4, 1)
    energy, mag = measure(config, model)
    assert mag is None
    with pytest.raises(ValueError):
        magnetization(config)


# ---------------------------------------------------------------------------
# exact enumeration
# ---------------------------------------------------------------------------

def test_beta_zero_uniform_and_symmetric():
    model = ferro_2x2x2(0.0)
    dist = enumerate_boltzmann(model)
    assert len(dist.probs) == 256
    assert dist.probs == pytest.approx(np.full(256, 1 / 256))
    assert exact_boltzmann_average(model, "magnetization") == pytest.approx(0.0, abs=1e-12)
    assert exact_boltzmann_average(model, "energy") == pytest.approx(0.0, abs=1e-9)


def test_distribution_normalized():
    dist = enumerate_boltzmann(ea_2x2x2(0.7))
    assert abs(dist.probs.sum() - 1.0) < 2 ** -40


def test_enumeration_matches_direct_sum():
    model = ferro_2x2x2(0.4)
    energies = enumerated_energies(model)
    weights = np.exp(-0.4 * energies)
    direct = (energies * weights).sum() / weights.sum()
    assert exact_boltzmann_average(model, "energy") == pytest.approx(direct, rel=1e-12)


def test_enumeration_digit_convention():
    model = ferro_2x2x2(0.4)
    energies = enumerated_energies(model)
    assert energies[0] == -24          # index 0: all digits 0 = all spins -1
    assert energies[255] == -24        # all spins +1
    config = SpinConfig(np.ones(8, dtype=np.int8), ISING, 2)
    assert pack_config(config) == 255
    config.values[3] = -1
    assert pack_config(config) == 255 - 8
    assert energies[pack_config(config)] == total_energy(model, config)


def test_enumeration_cap():
    geo = LatticeGeometry(3)
    model = ModelSpec(POTTS_DISORDERED, beta=0.4, q=4, geometry=geo,
                      couplings=generate_couplings(POTTS_DISORDERED, geo, 1, q=4))
    with pytest.raises(ValueError, match="exceeds the cap"):
        enumerate_boltzmann(model)


def test_thermodynamic_identity():
    model = ea_2x2x2(0.4)
    energies = enumerated_energies(model)
    h = 1e-4
    deriv = -(log_partition(energies, 0.4 + h) - log_partition(energies, 0.4 - h)) / (2 * h)
    mean = exact_boltzmann_average(model, "energy")
    assert abs(deriv - mean) / abs(mean) < 1e-6


# ---------------------------------------------------------------------------
# Monte Carlo averaging
# ---------------------------------------------------------------------------

def test_constant_trajectory_zero_error():
    mean, err = mc_average(np.full(100, 3.5), burnin=0)
    assert (mean, err) == (3.5, 0.0)


def test_iid_error_matches_sqrt_n(rng):
    samples = rng.normal(2.0, 1.0, size=8192)
    mean, err = mc_average(samples, burnin=0)
    expected = samples.std(ddof=1) / math.sqrt(len(samples))
    assert abs(err - expected) / expected < 0.20


def test_correlated_error_larger_than_naive(rng):
    # AR(1) with strong autocorrelation: blocking must inflate the error
    noise = rng.normal(size=16384)
    series = np.empty_like(noise)
    acc = 0.0
    for i, x in enumerate(noise):
        acc = 0.95 * acc + x
        series[i] = acc
    naive = series.std(ddof=1) / math.sqrt(len(series))
    _, blocked = mc_average(series, burnin=0)
    assert blocked > 2 * naive


def test_error_scales_with_sample_count(rng):
    samples = rng.normal(0.0, 1.0, size=65536)
    _, err_small = mc_average(samples[:4096], burnin=0)
    _, err_quad = mc_average(samples[:16384], burnin=0)
    _, err_large = mc_average(samples, burnin=0)
    assert 1.6 < err_small / err_quad < 2.5      # x4 samples halves the error
    assert 3.2 < err_small / err_large < 5.0     # x16 quarters it


def test_burnin_default_half():
    values = np.concatenate([np.full(50, 100.0), np.zeros(50)])
    mean, _ = mc_average(values)
    assert mean == 0.0


def test_too_few_samples():
    with pytest.raises(ValueError):
        mc_average(np.array([1.0]), burnin=0)
    with pytest.raises(ValueError):
        mc_average(np.arange(10.0), burnin=9)


# ---------------------------------------------------------------------------
# chi-square
# ---------------------------------------------------------------------------

def test_chi_square_exact_match_is_p1():
    probs = np.full(16, 1 / 16)
    counts = np.full(16, 1000.0)
    assert chi_square_gof(counts, probs) == pytest.approx(1.0)


def test_chi_square_extreme_mismatch():
    probs = np.full(16, 1 / 16)
    counts = np.zeros(16)
    counts[0] = 16000
    assert chi_square_gof(counts, probs) < 1e-6


def test_chi_square_merges_small_bins():
    probs = np.array([0.5, 0.5 - 1e-6] + [2.5e-7] * 4)
    counts = np.array([500.0, 500.0, 0, 0, 0, 0])
    p = chi_square_gof(counts, probs)
    assert 0 < p <= 1


def test_chi_square_self_consistency(rng):
    """Samples drawn from the exact distribution give uniform-ish p-values."""
    model = ea_2x2x2(0.5)
    dist = enumerate_boltzmann(model)
    p_values = []
    for _ in range(40):
        draws = rng.choice(256, size=20000, p=dist.probs)
        counts = np.bincount(draws, minlength=256)
        p_values.append(chi_square_gof(counts, dist))
    p_values = np.sort(p_values)
    # Kolmogorov spot check against U(0,1)
    grid = (np.arange(40) + 1) / 40
    assert np.abs(p_values - grid).max() < 0.35
    assert min(p_values) > 1e-4


def test_chi_square_shape_mismatch():
    with pytest.raises(ValueError):
        chi_square_gof(np.ones(4), np.full(5, 0.2))


# ---------------------------------------------------------------------------
# trajectory CSV
# ---------------------------------------------------------------------------

def test_trajectory_roundtrip(tmp_path):
    traj = Trajectory(sweeps=np.array([0, 5, 10]),
                      energies=np.array([-24.0, -20.0, -16.0]),
                      magnetizations=np.array([1.0, 0.75, 0.5]),
                      metadata={"model": "ising-ea", "L": 2})
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    text = path.read_text().splitlines()
    assert text[0] == "sweep,energy,magnetization"
    back = Trajectory.from_csv(path)
    assert (back.sweeps == traj.sweeps).all()
    assert (back.energies == traj.energies).all()
    assert (back.magnetizations == traj.magnetizations).all()
    assert back.metadata["model"] == "ising-ea"


def test_trajectory_strictly_increasing():
    with pytest.raises(ValueError):
        Trajectory(sweeps=np.array([0, 5, 5]), energies=np.zeros(3))
