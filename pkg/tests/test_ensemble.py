import numpy as np
import pytest
from scipy import stats

from rydscale.ensemble import (
    AtomConfiguration,
    Geometry,
    SamplingError,
    mix_seed,
    pair_distance,
    sample,
    sample_gaussian_cloud,
    sample_line,
    sample_uniform,
)


def test_uniform_1d_contract():
    c = sample_uniform(8, 1, seed=3)
    assert c.positions.shape == (8, 1)
    assert np.all((c.positions >= 0) & (c.positions < 8))
    r = c.distance_matrix()[np.triu_indices(8, 1)]
    assert r.min() >= c.r_min


def test_determinism():
    a = sample_uniform(12, 3, seed=42)
    b = sample_uniform(12, 3, seed=42)
    assert a.positions.tobytes() == b.positions.tobytes()
    assert not np.array_equal(a.positions, sample_uniform(12, 3, seed=43).positions)
    g1 = sample_gaussian_cloud(50, (1.0, 2.0), seed=9)
    g2 = sample_gaussian_cloud(50, (1.0, 2.0), seed=9)
    assert np.array_equal(g1.positions, g2.positions)


def test_mix_seed_is_stable_and_spread():
    # splitmix64 of 0 + golden gamma
    assert mix_seed(0, 0) == 0xE220A8397B1DCDAF
    seeds = {mix_seed(7, k) for k in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2**64 for s in seeds)


def test_poisson_nearest_neighbour_distribution():
    # unit-density Poisson process in 3d: P(r_nn > r) = exp(-4 pi r^3 / 3)
    c = sample_uniform(1000, 3, seed=11, r_min=0.0)
    r = c.distance_matrix()
    np.fill_diagonal(r, np.inf)
    nn = r.min(axis=1)
    res = stats.kstest(nn, lambda x: 1 - np.exp(-4 * np.pi * x**3 / 3))
    assert res.pvalue > 0.01
    assert c.atom_count / c.geometry.length**3 == pytest.approx(1.0)


def test_gaussian_moments():
    c = sample_gaussian_cloud(10_000, (1.0, 1.0, 1.0), seed=1, r_min=0.0)
    cov = np.cov(c.positions.T)
    assert np.allclose(np.diag(cov), 1.0, rtol=0.05)
    assert np.all(np.abs(cov - np.diag(np.diag(cov))) < 0.05)


def test_single_atom_cloud():
    c = sample_gaussian_cloud(1, (1.0, 1.0, 1.0), seed=2)
    assert c.positions.shape == (1, 3)


def test_overconstrained_fails():
    with pytest.raises(SamplingError):
        sample_uniform(10, 1, seed=0, r_min=2.0)


def test_minimum_image():
    c = AtomConfiguration(np.array([[0.5], [9.5]]), Geometry("periodic_box", length=10.0), 0)
    assert pair_distance(c, 0, 1) == pytest.approx(1.0)


def test_open_distance():
    c = AtomConfiguration(np.array([[0, 0, 0], [3, 4, 0]]), Geometry("open_gaussian", sigmas=(1, 1, 1)), 0)
    assert pair_distance(c, 0, 1) == 5.0


def test_pair_distance_errors_and_symmetry():
    c = sample_uniform(6, 2, seed=5)
    for i in range(6):
        for j in range(6):
            if i != j:
                assert pair_distance(c, i, j) == pair_distance(c, j, i)
    with pytest.raises(IndexError):
        pair_distance(c, 0, 6)
    with pytest.raises(ValueError):
        pair_distance(c, 2, 2)


def test_permutation_and_translation_invariance():
    c = sample_uniform(10, 3, seed=8)
    perm = np.random.default_rng(0).permutation(10)
    cp = AtomConfiguration(c.positions[perm], c.geometry, c.seed)
    iu = np.triu_indices(10, 1)
    assert np.allclose(np.sort(c.distance_matrix()[iu]), np.sort(cp.distance_matrix()[iu]))
    shifted = (c.positions + np.array([0.7, -1.3, 2.9])) % c.geometry.length
    ct = AtomConfiguration(shifted, c.geometry, c.seed)
    assert np.allclose(c.distance_matrix(), ct.distance_matrix(), atol=1e-12)


def test_line_and_dispatch():
    c = sample_line(5, seed=1)
    assert c.positions.shape == (5, 1)
    assert not c.geometry.periodic
    assert sample("periodic_box", 5, 2, 3).geometry.periodic
    with pytest.raises(ValueError):
        sample("hexagon", 5, 2, 3)


def test_csv_header():
    text = sample_uniform(3, 2, seed=4).to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("# geometry: periodic_box")
    assert lines[3] == "index,x,y"
    assert len(lines) == 7
