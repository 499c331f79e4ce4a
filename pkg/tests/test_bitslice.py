"""Multi-spin-coding tests: packing bijections and the two equivalence
properties that define the bit-sliced engines."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from janusmc.lattice import ISING, LatticeGeometry, random_config
from janusmc.models import ISING_EA, ModelSpec, generate_couplings
from janusmc.tables import build_heatbath_table, build_metropolis_table
from janusmc.engines import (Seeds, SiteStreams, checkerboard_partition,
                             heatbath_sweep, metropolis_sweep, mix_replicas,
                             run, unmix_replicas)
from janusmc.bitslice import (BitPlaneStore, MixedPlanePair,
                              amsc_heatbath_sweep, pack,
                              smsc_metropolis_sweep, unpack)


def geo4():
    return LatticeGeometry(4)


# ---------------------------------------------------------------------------
# packing
# ---------------------------------------------------------------------------

def test_pack_single_lane_identity():
    config = random_config(geo4(), ISING, 2, 1)
    ensemble = pack([config])
    assert ensemble.k == 1
    assert (unpack(ensemble)[0].values == config.values).all()


def test_pack_two_identical_lanes():
    config = random_config(geo4(), ISING, 2, 2)
    ensemble = pack([config, config.copy()])
    up = (config.values == 1)
    assert (ensemble.spins[up] == 0b11).all()
    assert (ensemble.spins[~up] == 0).all()


@given(k=st.integers(min_value=1, max_value=64))
def test_pack_roundtrip(k):
    configs = [random_config(LatticeGeometry(2), ISING, 2, 100 + i) for i in range(k)]
    lanes = unpack(pack([c.copy() for c in configs]))
    for a, b in zip(configs, lanes):
        assert (a.values == b.values).all()


def test_pack_width_overflow():
    configs = [random_config(geo4(), ISING, 2, i) for i in range(65)]
    with pytest.raises(ValueError):
        pack(configs)


def test_pack_rejects_mixed_geometry():
    with pytest.raises(ValueError):
        pack([random_config(LatticeGeometry(2), ISING, 2, 0),
              random_config(LatticeGeometry(4), ISING, 2, 0)])


def test_bitplane_roundtrip():
    for L in (2, 4, 8):
        geo = LatticeGeometry(L)
        config = random_config(geo, ISING, 2, 5)
        store = BitPlaneStore.from_config(config, geo)
        assert store.planes.shape == (L, L)
        assert (store.to_config().values == config.values).all()


# ---------------------------------------------------------------------------
# AMSC
# ---------------------------------------------------------------------------

def amsc_setup(k=8, L=4, beta=0.7, base=400):
    geo = LatticeGeometry(L)
    sched = checkerboard_partition(geo)
    configs = [random_config(geo, ISING, 2, 100 + i) for i in range(k)]
    cpls = [generate_couplings(ISING_EA, geo, seed=base + i) for i in range(k)]
    table = build_heatbath_table(beta)
    return geo, sched, configs, cpls, table


def test_amsc_lane_equivalence_100_sweeps():
    """Every lane must replay its scalar engine bit for bit when both see
    the same shared per-site words (zero tolerance)."""
    geo, sched, configs, cpls, table = amsc_setup(k=8)
    ensemble = pack([c.copy() for c in configs], cpls)
    streams = SiteStreams.fork(42, sched)
    for _ in range(100):
        amsc_heatbath_sweep(ensemble, table, sched, streams)
    lanes = unpack(ensemble)
    for i in range(8):
        ref = configs[i].copy()
        bank = SiteStreams.fork(42, sched)
        for _ in range(100):
            heatbath_sweep(ref, cpls[i], table, sched, bank)
        assert (lanes[i].values == ref.values).all(), f"lane {i}"


def test_amsc_single_lane_matches_scalar():
    geo, sched, configs, cpls, table = amsc_setup(k=1)
    ensemble = pack([configs[0].copy()], cpls[:1])
    streams = SiteStreams.fork(9, sched)
    amsc_heatbath_sweep(ensemble, table, sched, streams)
    ref = configs[0].copy()
    heatbath_sweep(ref, cpls[0], table, sched, SiteStreams.fork(9, sched))
    assert (unpack(ensemble)[0].values == ref.values).all()


def test_amsc_identical_lanes_stay_identical():
    """Shared randomness plus identical couplings and starts means lanes
    can never diverge, at any temperature."""
    geo, sched, configs, cpls, table = amsc_setup(k=4, beta=0.0)
    same = [configs[0].copy() for _ in range(4)]
    ensemble = pack(same, [cpls[0]] * 4)
    streams = SiteStreams.fork(3, sched)
    for _ in range(50):
        amsc_heatbath_sweep(ensemble, table, sched, streams)
    lanes = unpack(ensemble)
    for lane in lanes[1:]:
        assert (lane.values == lanes[0].values).all()


def test_amsc_rng_accounting():
    """One word per site per sweep, independent of the lane count."""
    geo, sched, configs, cpls, table = amsc_setup(k=8)
    ensemble = pack(configs, cpls)
    streams = SiteStreams.fork(5, sched)
    amsc_heatbath_sweep(ensemble, table, sched, streams)
    assert (streams.black.cursors == 1).all()
    assert (streams.white.cursors == 1).all()


def test_amsc_requires_couplings():
    geo, sched, configs, cpls, table = amsc_setup(k=2)
    ensemble = pack(configs)
    with pytest.raises(ValueError):
        amsc_heatbath_sweep(ensemble, table, sched, SiteStreams.fork(1, sched))


def test_amsc_run_trajectory_follows_lane0():
    geo = LatticeGeometry(4)
    cpl = generate_couplings(ISING_EA, geo, seed=900)
    model = ModelSpec(ISING_EA, beta=0.6, geometry=geo, couplings=cpl)
    traj = run(model, "amsc", sweeps=20, measure_every=5, seeds=Seeds(1, 2), lanes=8)
    scalar = run(model, "scalar-hb", sweeps=20, measure_every=5, seeds=Seeds(1, 2))
    # lane 0 shares couplings, init and words with the scalar run
    assert (traj.energies == scalar.energies).all()
    assert traj.metadata["series"] == "lane 0"


# ---------------------------------------------------------------------------
# SMSC
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("L", [2, 4, 8])
def test_smsc_equivalence(L):
    """Plane-pipelined mixed-replica engine == scalar checkerboard pair,
    bit-exactly, 100 sweeps (zero tolerance)."""
    geo = LatticeGeometry(L)
    sched = checkerboard_partition(geo)
    cpl = generate_couplings(ISING_EA, geo, seed=31)
    model = ModelSpec(ISING_EA, beta=0.45, geometry=geo, couplings=cpl)
    table = build_metropolis_table(model)
    rep1 = random_config(geo, ISING, 2, 71)
    rep2 = random_config(geo, ISING, 2, 72)
    pair = MixedPlanePair.from_mixed(mix_replicas(rep1, rep2, sched, cpl))
    s1, s2 = SiteStreams.fork(81, sched), SiteStreams.fork(82, sched)
    for _ in range(100):
        smsc_metropolis_sweep(pair, table, (s1, s2))
    u1, u2 = unmix_replicas(pair.to_mixed(sched))
    ref1, ref2 = rep1.copy(), rep2.copy()
    b1, b2 = SiteStreams.fork(81, sched), SiteStreams.fork(82, sched)
    for _ in range(100):
        metropolis_sweep(ref1, cpl, table, sched, b1, ("black", "white"))
        metropolis_sweep(ref2, cpl, table, sched, b2, ("white", "black"))
    assert (u1.values == ref1.values).all()
    assert (u2.values == ref2.values).all()


def test_smsc_diluted_decoupled_sites():
    """With every bond cut by dilution, spins feel only the proposal coin:
    the Metropolis flip is always accepted (dE = 0), so each site follows
    its own stream deterministically."""
    geo = LatticeGeometry(4)
    cpl = generate_couplings(ISING_EA, geo, seed=3, dilution_p=0.0)
    model = ModelSpec(ISING_EA, beta=0.9, geometry=geo, couplings=cpl)
    sched = checkerboard_partition(geo)
    table = build_metropolis_table(model)
    rep1 = random_config(geo, ISING, 2, 11)
    rep2 = random_config(geo, ISING, 2, 12)
    pair = MixedPlanePair.from_mixed(mix_replicas(rep1, rep2, sched, cpl))
    s1, s2 = SiteStreams.fork(13, sched), SiteStreams.fork(14, sched)
    start = pair.a.to_config().values.copy()
    smsc_metropolis_sweep(pair, table, (s1, s2))
    # dE = 0 everywhere: every proposal (the flip) is accepted
    assert (pair.a.to_config().values == -start).all()


def test_smsc_rng_accounting():
    geo = LatticeGeometry(4)
    cpl = generate_couplings(ISING_EA, geo, seed=31)
    model = ModelSpec(ISING_EA, beta=0.45, geometry=geo, couplings=cpl)
    sched = checkerboard_partition(geo)
    table = build_metropolis_table(model)
    pair = MixedPlanePair.from_mixed(mix_replicas(
        random_config(geo, ISING, 2, 1), random_config(geo, ISING, 2, 2),
        sched, cpl))
    s1, s2 = SiteStreams.fork(3, sched), SiteStreams.fork(4, sched)
    smsc_metropolis_sweep(pair, table, (s1, s2))
    for bank in (s1.black, s1.white, s2.black, s2.white):
        assert (bank.cursors == 2).all()


def test_smsc_run_matches_scalar_pair():
    geo = LatticeGeometry(4)
    cpl = generate_couplings(ISING_EA, geo, seed=55)
    model = ModelSpec(ISING_EA, beta=0.5, geometry=geo, couplings=cpl)
    traj = run(model, "smsc", sweeps=30, measure_every=10, seeds=Seeds(5, 6))
    assert traj.metadata["series"] == "replica 1"
    assert len(traj.energies) == 4
    again = run(model, "smsc", sweeps=30, measure_every=10, seeds=Seeds(5, 6))
    assert (traj.energies == again.energies).all()
