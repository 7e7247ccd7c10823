import numpy as np
import pytest
from scipy import integrate, stats

from opshrink.synthdata import (
    DistributionSpec,
    GeneratorError,
    RejectionStats,
    grid2d_centers,
    rejection_sample,
    sample,
)
from opshrink.utils import rng_at


def test_same_seed_bit_identical():
    spec = DistributionSpec("four_gaussians", theta=0.3, seed=5)
    x1, y1 = sample(spec, 200)
    x2, y2 = sample(spec, 200)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)


def test_hollow_constraint():
    x, y = sample(DistributionSpec("hollow_gaussian", radius=1.0), 500, seed=1)
    assert np.all(x**2 + y**2 >= 1.0)


def test_hollow_r0_mean_near_zero():
    n = 20000
    x, y = sample(DistributionSpec("hollow_gaussian", radius=0.0), n, seed=2)
    assert abs(x.mean()) <= 4.0 / np.sqrt(n)
    assert abs(y.mean()) <= 4.0 / np.sqrt(n)


def test_hollow_variance_matches_tail_formula():
    # conditioned on radius >= r, the squared radius is memoryless
    # exponential, so Var(x) = (r^2 + 2) / 2
    r = 1.3
    n = 100_000
    x, _ = sample(DistributionSpec("hollow_gaussian", radius=r), n, seed=3)
    want = (r**2 + 2.0) / 2.0
    x2 = x.ravel() ** 2
    se = x2.std(ddof=1) / np.sqrt(n)
    assert abs(x2.mean() - want) <= 4.0 * se


def test_hollow_acceptance_rate_matches_gaussian_tail():
    r = 1.5
    rng = rng_at(4)
    ratio = lambda z: (np.einsum("ij,ij->i", z, z) >= r**2).astype(float)
    draw = lambda g, m: g.standard_normal((m, 2))
    _, rejstats = rejection_sample(ratio, draw, 5000, rng)
    p = np.exp(-(r**2) / 2.0)
    se = np.sqrt(p * (1.0 - p) / rejstats.proposals)
    assert abs(rejstats.acceptance_rate - p) <= 3.0 * se


def test_rejection_unit_ratio_accepts_everything():
    rng = rng_at(5)
    pts, rejstats = rejection_sample(lambda z: np.ones(len(z)), lambda g, m: g.uniform(size=(m, 2)), 100, rng)
    assert rejstats.acceptance_rate == 1.0
    assert pts.shape == (100, 2)


def test_rejection_degenerate_density_is_uniform():
    # flat density through the rejection machinery must pass a uniformity test
    rng = rng_at(6)
    pts, _ = rejection_sample(lambda z: np.ones(len(z)), lambda g, m: g.uniform(size=(m, 1)), 20000, rng)
    counts, _ = np.histogram(pts.ravel(), bins=20, range=(0.0, 1.0))
    assert stats.chisquare(counts).pvalue >= 0.01


def test_rejection_ratio_range_validated():
    rng = rng_at(7)
    with pytest.raises(ValueError):
        rejection_sample(lambda z: 2.0 * np.ones(len(z)), lambda g, m: g.uniform(size=(m, 1)), 10, rng)


def test_impossible_region_errors():
    with pytest.raises(GeneratorError):
        sample(DistributionSpec("hollow_gaussian", radius=5.0), 10, seed=8)


def test_sinusoid_support_and_mean_oracle():
    freq = 0.75
    n = 100_000
    x, y = sample(DistributionSpec("sinusoid", frequency=freq), n, seed=9)
    assert x.min() >= 0.0 and x.max() <= 1.0
    s = lambda t: np.sin(2 * np.pi * freq * t)
    s_int, _ = integrate.quad(s, 0.0, 1.0)
    xs_int, _ = integrate.quad(lambda t: t * s(t), 0.0, 1.0)
    want = (0.5 + s_int * xs_int) / (1.0 + s_int**2)
    se = x.std(ddof=1) / np.sqrt(n)
    assert abs(x.mean() - want) <= 4.0 * se


def test_four_gaussians_theta0_uncorrelated():
    for seed in (10, 11, 12):
        n = 5000
        x, y = sample(DistributionSpec("four_gaussians", theta=0.0), n, seed=seed)
        corr = np.corrcoef(x.ravel(), y.ravel())[0, 1]
        assert abs(corr) <= 3.0 / np.sqrt(n)


def test_four_gaussians_covariance_rotation_invariant():
    # mixture covariance is (corner^2 + spread^2) I for every tilt
    n = 100_000
    spec = DistributionSpec("four_gaussians", theta=0.4, corner=2.0, spread=0.5)
    x, y = sample(spec, n, seed=13)
    want = 2.0**2 + 0.5**2
    for v in (x, y):
        v2 = v.ravel() ** 2
        se = v2.std(ddof=1) / np.sqrt(n)
        assert abs(v2.mean() - want) <= 4.0 * se


def test_grid2d_centers_checkerboard():
    centers = grid2d_centers(3.0)
    assert centers.shape == (8, 2)
    steps = centers * 3.0
    assert np.allclose(np.round(steps), steps)
    assert np.all((np.round(steps).sum(axis=1).astype(int) % 2) == 0)


def test_grid2d_moments_match_centers():
    n = 50_000
    spec = DistributionSpec("grid2d", frequency=3.0, spread=0.02)
    x, y = sample(spec, n, seed=14)
    centers = grid2d_centers(3.0)
    want_mean = centers[:, 0].mean()
    se = x.std(ddof=1) / np.sqrt(n)
    assert abs(x.mean() - want_mean) <= 4.0 * se
    want_var = centers[:, 0].var() + 0.02**2
    x2 = (x.ravel() - x.mean()) ** 2
    assert abs(x2.mean() - want_var) <= 4.0 * x2.std(ddof=1) / np.sqrt(n)


def test_gaussian_nd_duplicates_x():
    x, y = sample(DistributionSpec("gaussian_nd", dim=5), 50, seed=15)
    assert x.shape == (50, 5)
    assert np.array_equal(x, y)
    assert x is not y


def test_gaussian_nd_moments():
    n = 100_000
    x, _ = sample(DistributionSpec("gaussian_nd", dim=2), n, seed=17)
    for j in range(2):
        col = x[:, j]
        assert abs(col.mean()) <= 4.0 * col.std(ddof=1) / np.sqrt(n)
        c2 = col**2
        assert abs(c2.mean() - 1.0) <= 4.0 * c2.std(ddof=1) / np.sqrt(n)


def test_independent_product_preserves_marginals():
    base = DistributionSpec("four_gaussians", theta=0.35)
    spec = DistributionSpec("independent_product", theta=0.35, base=base)
    x, y = sample(spec, 300, seed=16)
    bx, by = sample(base, 300, seed=16)
    assert np.array_equal(x, bx)
    assert np.array_equal(np.sort(y.ravel()), np.sort(by.ravel()))
    assert not np.array_equal(y, by)


def test_spec_validation():
    with pytest.raises(ValueError):
        DistributionSpec("hollow_gaussian", radius=-1.0)
    with pytest.raises(ValueError):
        DistributionSpec("sinusoid", frequency=0.0)
    with pytest.raises(ValueError):
        DistributionSpec("four_gaussians", theta=2.0)
    with pytest.raises(ValueError):
        DistributionSpec("gaussian_nd", dim=0)
    with pytest.raises(ValueError):
        DistributionSpec("independent_product")
    with pytest.raises(ValueError):
        DistributionSpec("lattice")
    with pytest.raises(ValueError):
        sample(DistributionSpec("sinusoid"), 0)


def test_rejection_stats_dataclass():
    s = RejectionStats(proposals=100, accepted=25)
    assert s.acceptance_rate == 0.25
