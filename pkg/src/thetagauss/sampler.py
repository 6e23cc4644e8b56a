"""Exact sampling from real-parameter discrete Gaussians.

The sampler enumerates the support ball whose certified tail mass is below
tail_eps, builds the cumulative weights in the deterministic shell order,
and inverts the CDF with 53-bit uniforms from a counter-based Philox
generator.  The sampled law equals the pmf restricted to the enumerated
support, renormalized; its total variation distance from the true pmf is
below tail_eps by construction.  Identical (parameters, count, config)
always produce the identical sample.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .engine import TWO_PI, lattice_points, theta, truncation_radius
from .errors import TooFewSamples
from .fitting import CanonicalPoint

RNG_ALGORITHM = "philox4x64"  # numpy Philox, 53-bit mantissa uniforms

MIN_EXPECTED_CELL = 5.0


@dataclass(frozen=True)
class SamplerConfig:
    tail_eps: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tail_eps < 1e-3:
            raise ValueError("tail_eps must lie in (0, 1e-3)")


def support_radius(p: CanonicalPoint, tail_eps: float) -> float:
    """Radius R with total pmf mass beyond ||n|| <= R below tail_eps,
    obtained from the engine tail bound divided by theta."""
    tp = p.to_theta_point()
    t = theta(tp, 1e-12).real
    budget = truncation_radius(tp.B, tp.u, None, tail_eps * t)
    return budget.radius


def _support_weights(p: CanonicalPoint, tail_eps: float):
    tp = p.to_theta_point()
    radius = support_radius(p, tail_eps)
    pts = lattice_points(p.g, radius)
    quad = np.einsum("pi,ij,pj->p", pts, p.B, pts)
    weights = np.exp(TWO_PI * (-0.5 * quad + pts @ p.u))
    return pts, weights


def draw(p: CanonicalPoint, count: int, cfg: SamplerConfig) -> np.ndarray:
    """`count` i.i.d. draws by inverse CDF over the enumerated support.

    Returns an integer array of shape (count, g); reproducible given the
    seed (Philox counter-based stream, one uniform per draw).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    pts, weights = _support_weights(p, cfg.tail_eps)
    cdf = np.cumsum(weights)
    total = cdf[-1]
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    uniforms = rng.random(count) * total
    idx = np.searchsorted(cdf, uniforms, side="right")
    idx = np.minimum(idx, len(pts) - 1)
    return pts[idx].astype(np.int64)


def chi_square(sample, p: CanonicalPoint) -> tuple[float, int]:
    """Pearson goodness-of-fit statistic of a sample against the pmf at p.

    Support cells with expected count >= 5 are kept individually (shell
    order); everything else, including the off-support complement, is pooled
    into one cell, which is merged into the smallest kept cell when its own
    expectation is below 5.  Returns (statistic, dof) with dof = cells - 1.

    Raises TooFewSamples when no cell reaches the threshold.
    """
    sample = np.atleast_2d(np.asarray(sample))
    if sample.size == 0:
        raise TooFewSamples("empty sample")
    if sample.shape[1] != p.g:
        sample = sample.reshape(-1, p.g)
    n_obs = sample.shape[0]

    tp = p.to_theta_point()
    t = theta(tp, 1e-12).real
    pts, weights = _support_weights(p, 1e-9)
    probs = weights / t

    expected = n_obs * probs
    keep = expected >= MIN_EXPECTED_CELL
    if not np.any(keep):
        raise TooFewSamples(
            f"no cell reaches expected count {MIN_EXPECTED_CELL} at N={n_obs}"
        )

    counts = Counter(map(tuple, sample.astype(np.int64)))
    kept_pts = pts[keep]
    kept_exp = expected[keep]
    kept_obs = np.array([counts.get(tuple(pt), 0) for pt in kept_pts], dtype=float)

    pooled_exp = n_obs - float(kept_exp.sum())
    pooled_obs = n_obs - float(kept_obs.sum())
    if pooled_exp >= MIN_EXPECTED_CELL:
        exp_cells = np.append(kept_exp, pooled_exp)
        obs_cells = np.append(kept_obs, pooled_obs)
    else:
        k = int(np.argmin(kept_exp))
        kept_exp[k] += pooled_exp
        kept_obs[k] += pooled_obs
        exp_cells, obs_cells = kept_exp, kept_obs

    stat = float(np.sum((obs_cells - exp_cells) ** 2 / exp_cells))
    return stat, len(exp_cells) - 1
