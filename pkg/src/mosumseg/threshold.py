"""Significance thresholds for the MOSUM quadratic form."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from ._validation import ValidationError, check_int, check_open_unit, check_positive

__all__ = [
    "ThresholdResult",
    "compute_threshold",
    "gumbel_cdf",
    "gumbel_constants",
    "gumbel_quantile",
    "linear_functional_sample",
    "threshold_linear_mc",
    "threshold_sublinear",
]

# Fixed chunk size so the Monte Carlo sample does not depend on how chunks are scheduled.
MC_CHUNK = 250


@dataclass(frozen=True)
class ThresholdResult:
    beta: float
    mode: str
    T: float = None
    h: float = None
    p: int = None
    alpha: float = None
    gamma: float = None
    n_mc: int = None
    seed: int = None
    grid_points_per_unit: int = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


def gumbel_constants(x, p):
    """Return ``(a(x), b(x))`` for the extreme-value limit of the sup statistic.

    ``a(x) = sqrt(2 log x)`` and
    ``b(x) = 2 log x + (p/2) log log x + log(3/2) - log Gamma(p/2)``.
    """
    check_int(p, "p", minimum=1)
    if not x > math.e:
        raise ValidationError(f"gumbel constants need x > e, got x={x!r}")
    lx = math.log(x)
    a = math.sqrt(2.0 * lx)
    b = 2.0 * lx + 0.5 * p * math.log(lx) + math.log(1.5) - float(gammaln(0.5 * p))
    return a, b


def gumbel_cdf(x):
    """``P(E <= x) = exp(-2 exp(-x))``."""
    return math.exp(-2.0 * math.exp(-x))


def gumbel_quantile(alpha):
    """Upper ``alpha`` point ``g`` with ``exp(-2 exp(-g)) = 1 - alpha``."""
    check_open_unit(alpha, "alpha")
    return -math.log(-math.log1p(-alpha) / 2.0)


def threshold_sublinear(T, h, p, alpha):
    """Threshold on the quadratic form for a bandwidth with ``h / T -> 0``.

    The limit law describes the supremum of the *root* quadratic form, so the
    Gumbel quantile is mapped back and squared:
    ``beta = ((b(T/h) + g) / a(T/h))**2``.
    """
    T = check_positive(T, "T")
    h = check_positive(h, "h")
    a, b = gumbel_constants(T / h, p)
    g = gumbel_quantile(alpha)
    root = (b + g) / a
    return ThresholdResult(beta=root * root, mode="gumbel", T=T, h=h, p=int(p), alpha=alpha)


def _chunk_sup(rng, n_paths, n_grid, k, p, gamma):
    dt = 1.0 / n_grid
    steps = rng.standard_normal((n_paths, n_grid, p)) * math.sqrt(dt)
    B = np.zeros((n_paths, n_grid + 1, p))
    np.cumsum(steps, axis=1, out=B[:, 1:])
    D = B[:, 2 * k :] - 2.0 * B[:, k:-k] + B[:, : -2 * k]
    return np.max(np.sum(D * D, axis=2), axis=1) / (2.0 * gamma)


def linear_functional_sample(gamma, p, n_mc, grid_points_per_unit=2000, seed=0, n_jobs=1):
    """Simulated draws of ``sup_s |B_{s+g} - 2 B_s + B_{s-g}|^2 / (2 g)`` over ``[g, 1 - g]``.

    ``B`` is a standard ``p``-dimensional Wiener process on ``[0, 1]``,
    approximated by Gaussian steps on a grid of ``grid_points_per_unit``
    intervals. Draws are generated in fixed-size chunks, each with its own
    child seed, so the sample is identical for every ``n_jobs``.
    """
    if not 0 < gamma < 0.5:
        raise ValidationError(f"gamma must lie in (0, 1/2), got {gamma!r}")
    check_int(p, "p", minimum=1)
    n_mc = check_int(n_mc, "n_mc", minimum=1)
    n_grid = check_int(grid_points_per_unit, "grid_points_per_unit", minimum=4)
    k = int(round(gamma * n_grid))
    if k < 1 or 2 * k >= n_grid:
        raise ValidationError("grid too coarse for this gamma")
    sizes = [MC_CHUNK] * (n_mc // MC_CHUNK)
    if n_mc % MC_CHUNK:
        sizes.append(n_mc % MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    tasks = [(np.random.default_rng(s), n, n_grid, k, p, k / n_grid) for s, n in zip(children, sizes)]
    if n_jobs == 1:
        parts = [_chunk_sup(*task) for task in tasks]
    else:
        from joblib import Parallel, delayed

        parts = Parallel(n_jobs=n_jobs)(delayed(_chunk_sup)(*task) for task in tasks)
    return np.concatenate(parts)


def threshold_linear_mc(gamma, p, alpha, n_mc=5000, grid_points_per_unit=2000, seed=0, n_jobs=1):
    """Empirical ``(1 - alpha)`` quantile of the Brownian functional for ``h = gamma T``."""
    check_open_unit(alpha, "alpha")
    if n_mc < 100:
        raise ValidationError("n_mc must be at least 100")
    sample = linear_functional_sample(gamma, p, n_mc, grid_points_per_unit, seed, n_jobs)
    beta = float(np.quantile(sample, 1.0 - alpha))
    return ThresholdResult(
        beta=beta,
        mode="linear_mc",
        p=int(p),
        alpha=alpha,
        gamma=gamma,
        n_mc=n_mc,
        seed=seed,
        grid_points_per_unit=grid_points_per_unit,
    )


def compute_threshold(config, T, p, n_jobs=1):
    """Threshold for a :class:`~mosumseg.model.SegmentationConfig` on horizon ``T``."""
    mode = config.threshold_mode
    if mode.kind == "gumbel":
        return threshold_sublinear(T, config.bandwidth_h, p, config.alpha)
    if mode.kind == "linear_mc":
        res = threshold_linear_mc(
            config.bandwidth_h / T,
            p,
            config.alpha,
            mode.n_mc,
            mode.grid_points_per_unit,
            mode.seed,
            n_jobs,
        )
        return ThresholdResult(**{**res.to_dict(), "T": float(T), "h": config.bandwidth_h})
    return ThresholdResult(beta=float(mode.beta), mode="explicit", T=float(T), h=config.bandwidth_h, p=int(p))
