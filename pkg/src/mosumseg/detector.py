"""Change point estimation from a MOSUM series and limit-law confidence intervals."""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import ValidationError, check_int, check_open_unit, check_positive
from .model import (
    EventSeries,
    SampledPath,
    SegmentationConfig,
    counting_path,
    validate_config,
)
from .mosum import mosum_statistic, quadratic_form_series
from .scale import build_scale_provider, one_sided_renewal_variances
from .threshold import MC_CHUNK, compute_threshold

__all__ = [
    "EstimateRecord",
    "LimitLawQuantiles",
    "SegmentationResult",
    "confidence_interval",
    "drift_change_estimate",
    "segment",
    "significant_local_extrema",
    "simulate_argmax_limit",
]

RESULT_SCHEMA = "mosumseg.segmentation/1"


@dataclass(frozen=True)
class EstimateRecord:
    time: float
    peak_norm: float
    peak_quadform: float
    window_left: float
    window_right: float
    d_hat: tuple = None
    sigma_params: tuple = None

    def to_dict(self):
        out = {
            "time": self.time,
            "peak_norm": self.peak_norm,
            "peak_quadform": self.peak_quadform,
            "window_left": self.window_left,
            "window_right": self.window_right,
        }
        if self.d_hat is not None:
            out["d_hat"] = list(self.d_hat)
        if self.sigma_params is not None:
            out["sigma_params"] = list(self.sigma_params)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ("d_hat", "sigma_params"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass(frozen=True)
class SegmentationResult:
    """Estimated change points with per-estimate diagnostics."""

    estimates: np.ndarray
    beta_used: float
    records: tuple = ()
    config: dict = field(default_factory=dict)
    threshold: dict = field(default_factory=dict)
    horizon_T: float = None

    @property
    def q_hat(self):
        return int(self.estimates.size)

    def to_dict(self):
        return {
            "schema": RESULT_SCHEMA,
            "estimates": self.estimates.tolist(),
            "q_hat": self.q_hat,
            "beta_used": self.beta_used,
            "horizon_T": self.horizon_T,
            "records": [r.to_dict() for r in self.records],
            "config": self.config,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            estimates=np.asarray(data["estimates"], dtype=float),
            beta_used=float(data["beta_used"]),
            records=tuple(EstimateRecord.from_dict(r) for r in data.get("records", [])),
            config=data.get("config", {}),
            threshold=data.get("threshold", {}),
            horizon_T=data.get("horizon_T"),
        )


def _window_radius(eta, h, step):
    # grid points with |t - t*| <= eta * h
    return int(math.floor(eta * h / step + 1e-9))


def local_maximum_mask(norms, radius):
    """Mask of indices that are the *smallest* maximiser of ``norms`` in their window.

    Index ``i`` qualifies when ``norms[i]`` is strictly larger than every value
    in ``[i - radius, i)`` and at least as large as every value in
    ``(i, i + radius]``; windows are truncated at the series ends.
    """
    n = norms.size
    padded = np.concatenate([np.full(radius, -np.inf), norms, np.full(radius, -np.inf)])
    windows = sliding_window_view(padded, radius)
    left_max = windows[:n].max(axis=1)
    right_max = windows[radius + 1 : radius + 1 + n].max(axis=1)
    return (norms > left_max) & (norms >= right_max)


def significant_local_extrema(mosum, beta, eta, h=None):
    """Apply the eta-criterion and the significance rule to ``mosum``.

    A grid point ``t*`` is returned when it is the smallest maximiser of
    ``||M_t||`` over ``[t* - eta h, t* + eta h]`` (intersected with the grid
    range) and its quadratic form is at least ``beta``.
    """
    if mosum.quadform is None:
        raise ValidationError("quadform is not filled; call quadratic_form_series first")
    check_positive(beta, "beta")
    check_open_unit(eta, "eta")
    h = mosum.bandwidth if h is None else h
    radius = _window_radius(eta, h, mosum.grid_step)
    if radius < 1:
        raise ValidationError("eta * h must span at least one grid step")
    is_max = local_maximum_mask(mosum.norms, radius)
    idx = np.flatnonzero(is_max & (mosum.quadform >= beta))
    records = tuple(
        EstimateRecord(
            time=float(mosum.times[i]),
            peak_norm=float(mosum.norms[i]),
            peak_quadform=float(mosum.quadform[i]),
            window_left=float(mosum.times[max(i - radius, 0)]),
            window_right=float(mosum.times[min(i + radius, mosum.times.size - 1)]),
        )
        for i in idx
    )
    return SegmentationResult(
        estimates=mosum.times[idx].astype(float), beta_used=float(beta), records=records
    )


def drift_change_estimate(path, t, h):
    """Difference of windowed increment means, ``(Z_{t+h} - Z_t)/h - (Z_t - Z_{t-h})/h``."""
    k = int(round(t / path.grid_step))
    m = int(round(h / path.grid_step))
    Z = path.values
    return (Z[k + m] - 2.0 * Z[k] + Z[k - m]) / h


def _block_covariance(path, lo, hi):
    """Diagonal per-unit-time variance from non-overlapping block increments on ``[lo, hi]``."""
    step = path.grid_step
    i0, i1 = int(round(lo / step)), int(round(hi / step))
    n = i1 - i0
    block = max(1, int(math.sqrt(n)))
    n_blocks = n // block
    if n_blocks < 2:
        return None
    idx = i0 + block * np.arange(n_blocks + 1)
    incr = np.diff(path.values[idx], axis=0)
    return np.var(incr, axis=0, ddof=1) / (block * step)


def _side_covariances(t, h, path, events, spec, floor):
    if spec is not None:
        # half a bandwidth away so a slightly misplaced estimate still sees both regimes
        return spec.covariance_at(t - h / 2), spec.covariance_at(t + h / 2)
    if events is not None:
        left, right = zip(*(one_sided_renewal_variances(c, [t], h) for c in events.components))
        left = np.array([x[0] for x in left])
        right = np.array([x[0] for x in right])
        left = np.where(np.isnan(left), right, left)
        right = np.where(np.isnan(right), left, right)
        if not np.all(np.isfinite(left)):
            return None, None
        return np.diag(np.maximum(left, floor)), np.diag(np.maximum(right, floor))
    var_l = _block_covariance(path, t - h, t)
    var_r = _block_covariance(path, t, t + h)
    if var_l is None or var_r is None:
        return None, None
    return np.diag(np.maximum(var_l, floor)), np.diag(np.maximum(var_r, floor))


def limit_sigma_params(d_hat, cov_left, cov_right):
    """``(sigma_(1), sigma_(21), sigma_(22), sigma_(3))`` for the argmax limit.

    Uses the left regime covariance for the windows at ``c - h`` and at ``c``
    from the left, and the right regime covariance for ``c`` from the right
    and ``c + h``.
    """
    norm = np.linalg.norm(d_hat)
    if norm == 0:
        raise ValidationError("drift change estimate is zero")
    u = np.asarray(d_hat) / norm
    s_left = math.sqrt(max(float(u @ cov_left @ u), 0.0))
    s_right = math.sqrt(max(float(u @ cov_right @ u), 0.0))
    return (s_left, s_left, s_right, s_right)


def segment(data, config, spec=None, n_jobs=1):
    """Run the full pipeline on event data or a sampled path.

    Builds the path (counting events on the grid when needed), the scale
    provider, the MOSUM series and the threshold, then extracts significant
    local extrema. Each estimate record carries the drift change estimate and
    the variance parameters used for confidence intervals.
    """
    return segment_with_series(data, config, spec, n_jobs)[0]


def segment_with_series(data, config, spec=None, n_jobs=1):
    """Like :func:`segment` but also return the filled :class:`MosumSeries`."""
    if not isinstance(config, SegmentationConfig):
        raise ValidationError("config must be a SegmentationConfig")
    events = data if isinstance(data, EventSeries) else None
    if events is not None:
        path = counting_path(events, config.grid_step)
    elif isinstance(data, SampledPath):
        path = data
        if path.grid_step != config.grid_step:
            raise ValidationError("path grid_step does not match config.grid_step")
    else:
        raise ValidationError("data must be an EventSeries or a SampledPath")
    T, p, h = path.horizon_T, path.dim, config.bandwidth_h
    validate_config(config, T, p)
    if spec is not None and spec.dim != p:
        raise ValidationError("ChangeSpec dimension does not match the data")

    scale = build_scale_provider(config.scale_mode, config, events=events, spec=spec, dim=p)
    mosum = quadratic_form_series(mosum_statistic(path, h), scale)
    thr = compute_threshold(config, T, p, n_jobs=n_jobs)
    found = significant_local_extrema(mosum, thr.beta, config.eta, h)

    records = []
    for rec in found.records:
        d_hat = drift_change_estimate(path, rec.time, h)
        cov_l, cov_r = _side_covariances(rec.time, h, path, events, spec, config.variance_floor)
        sigma = None
        if cov_l is not None and np.linalg.norm(d_hat) > 0:
            sigma = limit_sigma_params(d_hat, cov_l, cov_r)
        fields = {**rec.to_dict(), "d_hat": tuple(float(x) for x in d_hat), "sigma_params": sigma}
        records.append(EstimateRecord(**fields))
    result = SegmentationResult(
        estimates=found.estimates,
        beta_used=thr.beta,
        records=tuple(records),
        config=config.to_dict(),
        threshold=thr.to_dict(),
        horizon_T=T,
    )
    return result, mosum


@dataclass(frozen=True, eq=False)
class LimitLawQuantiles:
    """Empirical quantiles of the argmax of the two-sided drifted Brownian limit."""

    levels: tuple
    quantiles: tuple
    sigma_params: tuple
    var_left: float
    var_right: float
    n_mc: int
    seed: int
    horizon_D: float
    step: float
    boundary_rate: float
    sample: np.ndarray = field(repr=False, default=None)

    def quantile(self, level):
        """Quantile at ``level``: the tabulated value if available, else from the sample."""
        for lv, q in zip(self.levels, self.quantiles):
            if math.isclose(lv, level, rel_tol=0, abs_tol=1e-12):
                return float(q)
        if self.sample is None:
            raise ValidationError(f"level {level} is not tabulated and no sample is stored")
        return float(np.quantile(self.sample, level))

    def cdf(self, x):
        return np.searchsorted(self.sample, x, side="right") / self.sample.size

    def to_dict(self):
        return {
            "levels": list(self.levels),
            "quantiles": list(self.quantiles),
            "sigma_params": list(self.sigma_params),
            "var_left": self.var_left,
            "var_right": self.var_right,
            "n_mc": self.n_mc,
            "seed": self.seed,
            "horizon_D": self.horizon_D,
            "step": self.step,
            "boundary_rate": self.boundary_rate,
        }


DEFAULT_LEVELS = (0.005, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975, 0.995)


def _argmax_chunk(rng, n, n_side, step, sd_left, sd_right):
    half = np.sqrt(step)
    drift = -step * np.arange(1, n_side + 1)
    right = np.cumsum(rng.standard_normal((n, n_side)), axis=1) * (half * sd_right) + drift
    left = np.cumsum(rng.standard_normal((n, n_side)), axis=1) * (half * sd_left) + drift
    # column layout: t = -n_side*step .. -step, 0, step .. n_side*step
    psi = np.concatenate([left[:, ::-1], np.zeros((n, 1)), right], axis=1)
    return np.argmax(psi, axis=1) - n_side


def simulate_argmax_limit(
    sigma_params,
    n_mc=10000,
    horizon_D=None,
    step=None,
    seed=0,
    levels=DEFAULT_LEVELS,
    equal_variance=False,
):
    """Simulate ``argmax_t Psi_t`` with ``Psi_t = -|t| + s_side B_t`` on ``[-D, D]``.

    ``sigma_params = (s1, s21, s22, s3)`` give the side variances
    ``s1^2 + 4 s21^2 + s3^2`` (``t < 0``) and ``s1^2 + 4 s22^2 + s3^2``
    (``t >= 0``); the two sides are independent. With ``equal_variance`` the
    single-parameter form ``-|t| + sqrt(6) s1 B_t`` is used instead.

    ``horizon_D`` defaults to 40 times the larger side variance and ``step`` to
    ``horizon_D / 4000``. Raises if the argmax hits the boundary in 1% or more
    of the replicates.
    """
    s1, s21, s22, s3 = (float(s) for s in sigma_params)
    if min(s1, s21, s22, s3) < 0 or max(s1, s21, s22, s3) == 0:
        raise ValidationError("sigma parameters must be nonnegative and not all zero")
    n_mc = check_int(n_mc, "n_mc", minimum=1)
    if equal_variance:
        var_left = var_right = 6.0 * s1 * s1
    else:
        var_left = s1 * s1 + 4.0 * s21 * s21 + s3 * s3
        var_right = s1 * s1 + 4.0 * s22 * s22 + s3 * s3
    if horizon_D is None:
        horizon_D = 40.0 * max(var_left, var_right)
    if step is None:
        step = horizon_D / 4000.0
    check_positive(horizon_D, "horizon_D")
    check_positive(step, "step")
    n_side = int(round(horizon_D / step))
    if n_side < 2:
        raise ValidationError("horizon_D must cover at least two steps")
    sizes = [MC_CHUNK] * (n_mc // MC_CHUNK) + ([n_mc % MC_CHUNK] if n_mc % MC_CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    idx = np.concatenate(
        [
            _argmax_chunk(np.random.default_rng(s), n, n_side, step, math.sqrt(var_left), math.sqrt(var_right))
            for s, n in zip(children, sizes)
        ]
    )
    boundary = float(np.mean(np.abs(idx) == n_side))
    if boundary >= 0.01:
        raise ValidationError(
            f"argmax reached the boundary in {boundary:.1%} of replicates; increase horizon_D"
        )
    sample = np.sort(idx * step)
    sample.setflags(write=False)
    return LimitLawQuantiles(
        levels=tuple(levels),
        quantiles=tuple(float(np.quantile(sample, q)) for q in levels),
        sigma_params=(s1, s21, s22, s3),
        var_left=var_left,
        var_right=var_right,
        n_mc=n_mc,
        seed=seed,
        horizon_D=float(horizon_D),
        step=float(step),
        boundary_rate=boundary,
        sample=sample,
    )


def confidence_interval(estimate, d_hat, quantiles, alpha, horizon_T=None):
    """Interval ``[c + q_{alpha/2} / |d|^2, c + q_{1-alpha/2} / |d|^2]`` clipped to ``[0, T]``."""
    check_open_unit(alpha, "alpha")
    sq = float(np.sum(np.square(d_hat)))
    if sq == 0:
        raise ValidationError("drift change estimate is zero; no interval available")
    lo = estimate + quantiles.quantile(alpha / 2) / sq
    hi = estimate + quantiles.quantile(1 - alpha / 2) / sq
    upper = np.inf if horizon_T is None else horizon_T
    return max(lo, 0.0), min(hi, upper)
