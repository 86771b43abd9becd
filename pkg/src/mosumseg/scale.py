"""Scale matrices ``A_t`` for the quadratic form.

Four providers are available: locally estimated renewal variances on the
diagonal, the true diagonal, the true full covariance, and the identity.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import ValidationError, check_positive, check_sorted_strict
from .model import ChangeSpec, EventSeries, ScaleMode

__all__ = [
    "FALLBACK_GLOBAL",
    "FALLBACK_NONE",
    "FALLBACK_ONE_SIDED",
    "ScaleProvider",
    "build_scale_provider",
    "local_renewal_variance",
    "local_renewal_variances",
    "one_sided_renewal_variances",
    "renewal_asymptotic_covariance",
]

FALLBACK_NONE = 0
FALLBACK_ONE_SIDED = 1
FALLBACK_GLOBAL = 2


@dataclass(frozen=True)
class ScaleProvider:
    """Per-time access to symmetric positive definite scale matrices.

    ``at(times)`` returns an ``(n, p)`` array of diagonals when ``diagonal``
    is true and an ``(n, p, p)`` array of matrices otherwise.
    """

    mode: ScaleMode
    dim: int
    diagonal: bool
    evaluate: object
    provenance: str = "oracle"
    flag_fn: object = None

    def at(self, times):
        return self.evaluate(np.atleast_1d(np.asarray(times, dtype=float)))

    def matrices(self, times):
        values = self.at(times)
        if self.diagonal:
            out = np.zeros(values.shape + (self.dim,))
            idx = np.arange(self.dim)
            out[:, idx, idx] = values
            return out
        return values

    def matrix(self, t):
        return self.matrices([t])[0]

    def fallback_flags(self, times):
        """Per-time, per-component fallback level (0 none, 1 one-sided, 2 global)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.flag_fn is None:
            return np.zeros((times.size, self.dim), dtype=int)
        return self.flag_fn(times)


def _window_moments(events, lo, hi):
    """Count, mean and unbiased variance of inter-event times inside ``(lo, hi]``.

    Only gaps whose both endpoints are events inside the window count; the
    censored gaps at either window edge are dropped.
    """
    gaps = np.diff(events)
    shift = gaps.mean() if gaps.size else 0.0
    centred = gaps - shift
    s1 = np.concatenate([[0.0], np.cumsum(centred)])
    s2 = np.concatenate([[0.0], np.cumsum(centred * centred)])
    first = np.searchsorted(events, lo, side="right")
    last = np.searchsorted(events, hi, side="right") - 1
    n = np.maximum(last - first, 0)
    first = np.minimum(first, s1.size - 1)
    last = np.maximum(last, first)
    last = np.minimum(last, s1.size - 1)
    sum1 = s1[last] - s1[first]
    sum2 = s2[last] - s2[first]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_c = sum1 / n
        var = (sum2 - n * mean_c * mean_c) / (n - 1)
    mean = mean_c + shift
    var = np.maximum(var, 0.0)
    return n, mean, var


def one_sided_renewal_variances(events_j, times, h):
    """Left and right ``var / mean**3`` estimates over ``(t - h, t]`` and ``(t, t + h]``.

    Entries are NaN where a window holds fewer than two complete inter-event times.
    """
    events_j = np.asarray(events_j, dtype=float)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n_l, m_l, v_l = _window_moments(events_j, times - h, times)
    n_r, m_r, v_r = _window_moments(events_j, times, times + h)
    with np.errstate(invalid="ignore", divide="ignore"):
        left = np.where(n_l >= 2, v_l / m_l**3, np.nan)
        right = np.where(n_r >= 2, v_r / m_r**3, np.nan)
    return left, right


def _global_renewal_variance(events_j, horizon_T):
    gaps = np.diff(events_j)
    if gaps.size >= 2:
        return float(np.var(gaps, ddof=1) / gaps.mean() ** 3)
    # too few events to estimate anything: use the Poisson value 1 / mean gap
    mean_gap = horizon_T / max(events_j.size, 1)
    return 1.0 / mean_gap


def local_renewal_variances(events_j, times, h, floor=1e-8, horizon_T=None):
    """Vectorised :func:`local_renewal_variance` returning ``(values, flags)``.

    A window with fewer than two complete inter-event times falls back to the
    other side; if both fail the whole-sample estimate is used.
    """
    events_j = np.asarray(events_j, dtype=float)
    left, right = one_sided_renewal_variances(events_j, times, h)
    value = np.fmin(left, right)
    flags = np.where(np.isnan(left) | np.isnan(right), FALLBACK_ONE_SIDED, FALLBACK_NONE)
    missing = np.isnan(value)
    if np.any(missing):
        if horizon_T is None:
            horizon_T = float(events_j[-1]) if events_j.size else 1.0
        value = np.where(missing, _global_renewal_variance(events_j, horizon_T), value)
        flags = np.where(missing, FALLBACK_GLOBAL, flags)
    return np.maximum(value, floor), flags


def local_renewal_variance(events_j, t, h, floor=1e-8):
    """Local ``sigma^2 / mu^3`` estimate at ``t``, taking the smaller side.

    ``sigma^2`` and ``mu`` are the unbiased sample variance and the mean of the
    inter-event times lying completely inside ``(t - h, t]`` respectively
    ``(t, t + h]``. The result is floored at ``floor``.
    """
    events_j = check_sorted_strict(events_j, "events")
    check_positive(h, "h")
    values, _ = local_renewal_variances(events_j, [t], h, floor)
    return float(values[0])


def renewal_asymptotic_covariance(mu, sigma2, B=None, sigma_iet=None):
    """Asymptotic covariance per unit time of a (linearly combined) renewal process.

    Independent streams give ``B diag(sigma2 / mu**3) B'``. With ``sigma_iet``
    (the covariance of the vector of inter-event times) the streams must share
    one mean ``mu_1`` and the result is ``sigma_iet / mu_1**3``.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    sigma2 = np.atleast_1d(np.asarray(sigma2, dtype=float))
    if np.any(mu <= 0):
        raise ValidationError("renewal means must be positive")
    if sigma_iet is not None:
        if not np.allclose(mu, mu[0], rtol=1e-12, atol=0):
            raise ValidationError(
                "dependent inter-event times need equal means across components; "
                "otherwise the limit is not a multivariate Wiener process"
            )
        sigma_iet = np.asarray(sigma_iet, dtype=float)
        if not np.allclose(sigma_iet, sigma_iet.T):
            raise ValidationError("sigma_iet must be symmetric")
        if np.min(np.linalg.eigvalsh(sigma_iet)) < -1e-12:
            raise ValidationError("sigma_iet must be positive semidefinite")
        return sigma_iet / mu[0] ** 3
    if sigma2.shape != mu.shape:
        raise ValidationError("mu and sigma2 must have the same length")
    if np.any(sigma2 < 0):
        raise ValidationError("variances must be nonnegative")
    D = np.diag(sigma2 / mu**3)
    if B is None:
        return D
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[1] != mu.size:
        raise ValidationError(f"B must have shape (p, {mu.size})")
    if np.any(B < 0) or np.any(B != np.round(B)):
        raise ValidationError("B must have nonnegative integer entries")
    B = B.astype(float)
    return B @ D @ B.T


def build_scale_provider(mode, config=None, events=None, spec=None, dim=None):
    """Build the scale provider for ``mode``.

    ``local_diag`` needs ``events`` (and ``config`` for bandwidth and floor);
    ``true_diag`` and ``true_full`` need a :class:`ChangeSpec`; ``identity``
    needs only the dimension.

    The oracle modes follow ``config.true_scale``. With ``"window_average"``
    (the default) ``A_t`` is the covariance per unit time averaged over
    ``[t - h, t + h]``, i.e. the exact variance of ``M_t`` under the true
    regimes; it equals the regime covariance whenever no change lies within
    ``h`` of ``t``. With ``"piecewise"`` (or no config) ``A_t`` is the
    covariance of the regime active at ``t``, switching right after each
    change point.
    """
    mode = ScaleMode.parse(mode)
    if mode is ScaleMode.IDENTITY:
        if dim is None:
            dim = events.dim if events is not None else spec.dim if spec is not None else None
        if dim is None:
            raise ValidationError("identity scale needs the dimension")
        return ScaleProvider(mode, dim, True, lambda t: np.ones((t.size, dim)))

    if mode is ScaleMode.LOCAL_DIAGONAL_ESTIMATE:
        if not isinstance(events, EventSeries):
            raise ValidationError("local_diag scale needs event data")
        if config is None:
            raise ValidationError("local_diag scale needs a SegmentationConfig")
        h, floor, T = config.bandwidth_h, config.variance_floor, events.horizon_T

        def clip(t):
            # boundary points reuse the nearest interior estimate
            return np.clip(t, h, T - h)

        def evaluate(t):
            t = clip(t)
            cols = [local_renewal_variances(c, t, h, floor, T)[0] for c in events.components]
            return np.column_stack(cols)

        def flags(t):
            t = clip(t)
            cols = [local_renewal_variances(c, t, h, floor, T)[1] for c in events.components]
            return np.column_stack(cols)

        return ScaleProvider(mode, events.dim, True, evaluate, "estimated", flags)

    if not isinstance(spec, ChangeSpec):
        raise ValidationError(f"{mode.value} scale needs the true ChangeSpec")
    covs = spec.segment_covariances()
    if config is None or config.true_scale == "piecewise":
        def evaluate(t):
            return covs[spec.segment_index(t)]
    else:
        h = config.bandwidth_h

        def evaluate(t):
            return np.einsum("nk,kij->nij", _window_weights(spec, t, h), covs)

    if mode is ScaleMode.TRUE_DIAGONAL:
        def evaluate_diag(t):
            return np.diagonal(evaluate(t), axis1=1, axis2=2).copy()

        return ScaleProvider(mode, spec.dim, True, evaluate_diag)
    return ScaleProvider(mode, spec.dim, False, evaluate)


def _window_weights(spec, t, h):
    """Fraction of ``[t - h, t + h]`` spent in each segment, shape ``(n, q + 1)``."""
    inner = spec.change_points
    lo = np.concatenate([[-np.inf], inner])
    hi = np.concatenate([inner, [np.inf]])
    a, b = t[:, None] - h, t[:, None] + h
    overlap = np.clip(np.minimum(b, hi[None, :]) - np.maximum(a, lo[None, :]), 0.0, None)
    return overlap / (2.0 * h)
