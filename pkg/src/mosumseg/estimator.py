"""scikit-learn style wrapper around the segmentation pipeline."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import ValidationError
from .detector import confidence_interval, segment_with_series, simulate_argmax_limit
from .model import EventSeries, SampledPath, SegmentationConfig, ThresholdMode

__all__ = ["MosumSegmenter"]


class MosumSegmenter(BaseEstimator):
    """MOSUM change point estimator.

    ``fit`` accepts an :class:`EventSeries`, a :class:`SampledPath`, or an
    array of path values of shape ``(n + 1, p)`` sampled every ``grid_step``
    starting from a zero row. After fitting, ``change_points_`` holds the
    estimates and ``mosum_`` the full statistic series.

    Parameters mirror :class:`SegmentationConfig`; ``threshold`` is
    ``"gumbel"``, ``"linear_mc"`` or a positive number used as an explicit
    threshold. ``spec`` supplies the true regimes for the oracle scale modes.
    """

    def __init__(
        self,
        bandwidth=120.0,
        eta=0.75,
        alpha=0.05,
        grid_step=1.0,
        scale_mode="local_diag",
        threshold="gumbel",
        n_mc=5000,
        mc_seed=0,
        variance_floor=1e-8,
        true_scale="window_average",
        spec=None,
        n_jobs=1,
    ):
        self.bandwidth = bandwidth
        self.eta = eta
        self.alpha = alpha
        self.grid_step = grid_step
        self.scale_mode = scale_mode
        self.threshold = threshold
        self.n_mc = n_mc
        self.mc_seed = mc_seed
        self.variance_floor = variance_floor
        self.true_scale = true_scale
        self.spec = spec
        self.n_jobs = n_jobs

    def to_config(self):
        if isinstance(self.threshold, str):
            kind = self.threshold.replace("-", "_")
            if kind == "linear_mc":
                mode = ThresholdMode.linear_mc(n_mc=self.n_mc, seed=self.mc_seed)
            else:
                mode = ThresholdMode(kind)
        else:
            mode = ThresholdMode.explicit(float(self.threshold))
        return SegmentationConfig(
            bandwidth_h=float(self.bandwidth),
            eta=self.eta,
            alpha=self.alpha,
            grid_step=float(self.grid_step),
            scale_mode=self.scale_mode,
            threshold_mode=mode,
            variance_floor=self.variance_floor,
            true_scale=self.true_scale,
        )

    def _as_data(self, X):
        if isinstance(X, (EventSeries, SampledPath)):
            return X
        values = check_array(X, ensure_min_samples=3, dtype=np.float64)
        step = float(self.grid_step)
        return SampledPath(step, values, step * (values.shape[0] - 1))

    def _run(self, X):
        return segment_with_series(self._as_data(X), self.to_config(), self.spec, self.n_jobs)

    def fit(self, X, y=None):
        result, mosum = self._run(X)
        self.result_ = result
        self.mosum_ = mosum
        self.change_points_ = result.estimates
        self.beta_ = result.beta_used
        self.n_features_in_ = mosum.dim
        return self

    def predict(self, X=None):
        """Change point estimates for ``X`` (or for the fitted data when omitted)."""
        check_is_fitted(self, "result_")
        if X is None:
            return self.change_points_
        return self._run(X)[0].estimates

    def fit_predict(self, X, y=None):
        return self.fit(X).change_points_

    def transform(self, X=None):
        """Columns ``m_1..m_p, norm, quadform`` of the statistic on the interior grid."""
        check_is_fitted(self, "result_")
        mosum = self.mosum_ if X is None else self._run(X)[1]
        return np.column_stack([mosum.vectors, mosum.norms, mosum.quadform])

    def confidence_intervals(self, alpha=0.1, n_mc=10000, seed=0):
        """Limit-law intervals ``(low, high)`` for each fitted estimate.

        Estimates without a usable drift or variance estimate get ``(nan, nan)``.
        """
        check_is_fitted(self, "result_")
        out = []
        for rec in self.result_.records:
            if rec.sigma_params is None or rec.d_hat is None:
                out.append((np.nan, np.nan))
                continue
            try:
                law = simulate_argmax_limit(rec.sigma_params, n_mc=n_mc, seed=seed)
                out.append(confidence_interval(rec.time, rec.d_hat, law, alpha, self.result_.horizon_T))
            except ValidationError:
                out.append((np.nan, np.nan))
        return out
