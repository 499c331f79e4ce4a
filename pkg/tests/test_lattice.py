"""Geometry and configuration tests."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from janusmc.lattice import (ISING, POTTS, LatticeGeometry, SpinConfig,
                             neighbor_indices, random_config)


def test_sizes():
    geo = LatticeGeometry(4)
    assert geo.n_sites == 64
    with pytest.raises(ValueError):
        LatticeGeometry(1)
    with pytest.raises(ValueError):
        LatticeGeometry(4, D=2)


def test_coordinate_roundtrip():
    geo = LatticeGeometry(5)
    for site in range(geo.n_sites):
        assert geo.site_index(*geo.site_coords(site)) == site


def test_minus_x_wraps():
    geo = LatticeGeometry(4)
    nbrs = neighbor_indices(geo, geo.site_index(0, 0, 0))
    assert nbrs[1] == geo.site_index(3, 0, 0)


def test_l2_degeneracy():
    geo = LatticeGeometry(2)
    nbrs = neighbor_indices(geo, 0)
    assert nbrs[0] == nbrs[1] == geo.site_index(1, 0, 0)


def test_interior_site_no_wrap():
    geo = LatticeGeometry(3)
    nbrs = neighbor_indices(geo, geo.site_index(1, 1, 1))
    expected = {geo.site_index(2, 1, 1), geo.site_index(0, 1, 1),
                geo.site_index(1, 2, 1), geo.site_index(1, 0, 1),
                geo.site_index(1, 1, 2), geo.site_index(1, 1, 0)}
    assert set(nbrs.tolist()) == expected


def test_out_of_range_site():
    geo = LatticeGeometry(3)
    with pytest.raises(ValueError):
        neighbor_indices(geo, geo.n_sites)


@given(L=st.integers(min_value=2, max_value=6))
def test_neighbor_relation_symmetric(L):
    geo = LatticeGeometry(L)
    table = geo.neighbor_table()
    assert table.shape == (geo.n_sites, 6)
    for site in range(geo.n_sites):
        for nxt in table[site]:
            assert site in table[nxt]


def test_config_validation():
    geo = LatticeGeometry(2)
    good = SpinConfig(np.ones(8, dtype=np.int8), ISING, 2)
    good.validate(geo)
    with pytest.raises(ValueError):
        SpinConfig(np.full(8, 2, dtype=np.int8), ISING, 2).validate(geo)
    with pytest.raises(ValueError):
        SpinConfig(np.ones(7, dtype=np.int8), ISING, 2).validate(geo)
    potts = SpinConfig(np.array([0, 1, 2, 3] * 2, dtype=np.int8), POTTS, 4)
    potts.validate(geo)
    with pytest.raises(ValueError):
        SpinConfig(np.full(8, 4, dtype=np.int8), POTTS, 4).validate(geo)


def test_random_config_deterministic():
    geo = LatticeGeometry(4)
    a = random_config(geo, ISING, 2, 9)
    b = random_config(geo, ISING, 2, 9)
    assert (a.values == b.values).all()
    c = random_config(geo, POTTS, 4, 9)
    c.validate(geo)
    assert c.values.min() >= 0 and c.values.max() < 4
