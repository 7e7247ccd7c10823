"""Seeded generators for the synthetic benchmark distributions.

Each generator returns a paired sample (x, y) as two (n, d) arrays. The
densities are fixed here:

* ``hollow_gaussian``  2-d standard Gaussian rejection-sampled to radius
  >= r; x and y are the two coordinates.
* ``sinusoid``  density proportional to 1 + sin(2 pi f u) sin(2 pi f v)
  on the unit square, rejection-sampled from the uniform proposal.
* ``four_gaussians``  equal mixture of four isotropic Gaussians (sd
  ``spread``) at the corners (+-corner, +-corner), rotated by theta about
  the origin; theta = 0 factorizes, giving exact independence.
* ``grid2d``  equal mixture of isotropic Gaussians on the checkerboard
  sublattice (i + j even) of the spacing-1/f lattice in the unit square.
  The full lattice would be an exact product distribution (no dependence
  to detect), so the alternating sublattice is used; this is a modeling
  choice, the source material only shows a grid-like scatter.
* ``gaussian_nd``  p-dimensional standard Gaussian; y duplicates x (the
  covariance-operator studies only use the x side).
* ``independent_product``  draws from ``base`` and independently permutes
  the y rows, manufacturing exact null-hypothesis data with the original
  marginals.

Sampling is chunked (4096 proposals at a time, accepted in draw order), so
a given (spec, n, seed) always yields bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .utils import rng_at

DISTRIBUTION_KINDS = (
    "hollow_gaussian",
    "sinusoid",
    "four_gaussians",
    "grid2d",
    "gaussian_nd",
    "independent_product",
)

_CHUNK = 4096
_MIN_ACCEPTANCE = 1e-4
# proposals drawn before the acceptance-rate floor is enforced
_ACCEPTANCE_PROBE = 20_000


class GeneratorError(RuntimeError):
    """Raised when rejection sampling cannot reach a usable acceptance rate."""


@dataclass(frozen=True)
class DistributionSpec:
    """Which synthetic distribution to draw from, with its parameters."""

    kind: str
    radius: float = 0.0
    frequency: float = 1.0
    theta: float = 0.0
    dim: int = 1
    corner: float = 2.0
    spread: float | None = None
    base: "DistributionSpec | None" = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in DISTRIBUTION_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if not self.frequency > 0:
            raise ValueError("frequency must be > 0")
        if not 0.0 <= self.theta <= np.pi / 2:
            raise ValueError("theta must lie in [0, pi/2]")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.spread is not None and not self.spread > 0:
            raise ValueError("spread must be > 0")
        if self.kind == "independent_product" and self.base is None:
            raise ValueError("independent_product requires a base distribution")


@dataclass
class RejectionStats:
    proposals: int = 0
    accepted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def rejection_sample(
    ratio_fn,
    proposal_draw,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, RejectionStats]:
    """Draw n points from density(z) = ratio_fn(z) * proposal(z) / Z.

    ``ratio_fn`` maps an (m, d) array of proposal draws to acceptance
    probabilities in [0, 1] (the density over the proposal density divided
    by the envelope bound). Proposals are drawn in chunks of 4096 and
    accepted in order; raises GeneratorError once the running acceptance
    rate is below 1e-4 after 20000 proposals.
    """
    stats = RejectionStats()
    kept: list[np.ndarray] = []
    total = 0
    while total < n:
        pts = proposal_draw(rng, _CHUNK)
        u = rng.uniform(size=pts.shape[0])
        ratio = np.asarray(ratio_fn(pts), dtype=np.float64)
        if np.any(ratio > 1.0 + 1e-12) or np.any(ratio < -1e-12):
            raise ValueError("ratio_fn must map into [0, 1]; check the envelope bound")
        acc = pts[u <= ratio]
        stats.proposals += pts.shape[0]
        stats.accepted += acc.shape[0]
        if acc.shape[0]:
            kept.append(acc)
            total += acc.shape[0]
        if stats.proposals >= _ACCEPTANCE_PROBE and stats.acceptance_rate < _MIN_ACCEPTANCE:
            raise GeneratorError(
                f"acceptance rate {stats.acceptance_rate:.2e} below {_MIN_ACCEPTANCE:.0e} "
                f"after {stats.proposals} proposals"
            )
    return np.concatenate(kept, axis=0)[:n], stats


def _gauss2d(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.standard_normal((m, 2))


def _uniform2d(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.uniform(size=(m, 2))


def _hollow_gaussian(rng, n, radius):
    pts, _ = rejection_sample(
        lambda z: (np.einsum("ij,ij->i", z, z) >= radius**2).astype(float),
        _gauss2d,
        n,
        rng,
    )
    return pts[:, :1], pts[:, 1:]


def _sinusoid(rng, n, freq):
    def ratio(z):
        return 0.5 * (1.0 + np.sin(2 * np.pi * freq * z[:, 0]) * np.sin(2 * np.pi * freq * z[:, 1]))

    pts, _ = rejection_sample(ratio, _uniform2d, n, rng)
    return pts[:, :1], pts[:, 1:]


def _four_gaussians(rng, n, theta, corner, spread):
    centers = corner * np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    idx = rng.integers(0, 4, size=n)
    pts = centers[idx] + spread * rng.standard_normal((n, 2))
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    pts = pts @ rot.T
    return pts[:, :1], pts[:, 1:]


def grid2d_centers(freq: float) -> np.ndarray:
    """Checkerboard lattice centers with spacing 1/f inside the unit square."""
    coords = np.arange(0, int(np.floor(freq + 1e-9)) + 1) / freq
    centers = [
        (a, b)
        for i, a in enumerate(coords)
        for j, b in enumerate(coords)
        if (i + j) % 2 == 0
    ]
    return np.asarray(centers, dtype=float)


def _grid2d(rng, n, freq, spread):
    centers = grid2d_centers(freq)
    idx = rng.integers(0, centers.shape[0], size=n)
    pts = centers[idx] + spread * rng.standard_normal((n, 2))
    return pts[:, :1], pts[:, 1:]


def _default_spread(spec: DistributionSpec) -> float:
    if spec.spread is not None:
        return spec.spread
    if spec.kind == "grid2d":
        return 1.0 / (10.0 * spec.frequency)
    return 0.5


def sample(
    spec: DistributionSpec,
    n: int,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a paired sample of size n, deterministically for a given seed.

    Priority for the randomness source: explicit ``rng``, then ``seed``,
    then ``spec.seed``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rng is None:
        rng = rng_at(spec.seed if seed is None else seed)
    if spec.kind == "hollow_gaussian":
        return _hollow_gaussian(rng, n, spec.radius)
    if spec.kind == "sinusoid":
        return _sinusoid(rng, n, spec.frequency)
    if spec.kind == "four_gaussians":
        return _four_gaussians(rng, n, spec.theta, spec.corner, _default_spread(spec))
    if spec.kind == "grid2d":
        return _grid2d(rng, n, spec.frequency, _default_spread(spec))
    if spec.kind == "gaussian_nd":
        x = rng.standard_normal((n, spec.dim))
        return x, x.copy()
    x, y = sample(spec.base, n, rng=rng)
    return x, y[rng.permutation(n)]
