"""Moving-sum statistic, its quadratic form, and the deterministic signal term."""

import csv
from dataclasses import dataclass, replace

import numpy as np

from ._validation import ValidationError, grid_index
from .model import SampledPath

__all__ = [
    "MosumSeries",
    "mosum_statistic",
    "quadratic_form_series",
    "signal_term",
]


@dataclass(frozen=True, eq=False)
class MosumSeries:
    """MOSUM vectors on the grid points of ``[h, T - h]``.

    Attributes
    ----------
    times : ndarray of shape (n,)
        Grid points ``h, h + delta, ..., T - h``.
    vectors : ndarray of shape (n, p)
        ``M_t`` at each grid point.
    norms : ndarray of shape (n,)
        Euclidean norms of ``vectors``.
    quadform : ndarray of shape (n,) or None
        ``M_t' A_t^{-1} M_t`` once a scale has been applied.
    """

    grid_step: float
    bandwidth: float
    times: np.ndarray
    vectors: np.ndarray
    norms: np.ndarray
    quadform: np.ndarray = None

    @property
    def t_start(self):
        return float(self.times[0])

    @property
    def t_end(self):
        return float(self.times[-1])

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.times.size

    def to_csv(self, path_or_buffer):
        """Write ``t, m_1..m_p, norm, quadform`` rows."""
        header = ["t"] + [f"m_{j + 1}" for j in range(self.dim)] + ["norm", "quadform"]
        quad = self.quadform if self.quadform is not None else np.full(len(self), np.nan)
        rows = np.column_stack([self.times, self.vectors, self.norms, quad])
        _write_rows(path_or_buffer, header, rows)


def _write_rows(path_or_buffer, header, rows):
    if hasattr(path_or_buffer, "write"):
        writer = csv.writer(path_or_buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows((repr(float(x)) for x in row) for row in rows)
        return
    with open(path_or_buffer, "w", newline="") as fh:
        _write_rows(fh, header, rows)


def mosum_statistic(path, h):
    """Compute ``M_t = (Z_{t+h} - 2 Z_t + Z_{t-h}) / sqrt(2h)`` on ``[h, T - h]``."""
    if not isinstance(path, SampledPath):
        raise ValidationError("mosum_statistic expects a SampledPath")
    k = grid_index(h, path.grid_step, "bandwidth")
    if k < 1:
        raise ValidationError("bandwidth must be at least one grid step")
    if 2 * k >= path.n_steps:
        raise ValidationError(f"bandwidth must satisfy 2h < T (h={h}, T={path.horizon_T})")
    Z = path.values
    second_diff = Z[2 * k :] - 2.0 * Z[k:-k] + Z[: -2 * k]
    vectors = second_diff / np.sqrt(2.0 * h)
    times = path.times[k:-k]
    return MosumSeries(
        grid_step=path.grid_step,
        bandwidth=float(h),
        times=times,
        vectors=vectors,
        norms=np.linalg.norm(vectors, axis=1),
    )


def signal_term(spec, h, t):
    """Deterministic tent-shaped part of the MOSUM statistic.

    Returns ``sum_i max(h - |t - c_i|, 0) d_i / sqrt(2h)``, which is the exact
    second difference of the integrated piecewise-constant drift. For scalar
    ``t`` a ``(p,)`` vector is returned, otherwise ``(len(t), p)``.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    weights = np.maximum(h - np.abs(t_arr[:, None] - spec.change_points[None, :]), 0.0)
    out = weights @ spec.drift_changes() / np.sqrt(2.0 * h)
    if np.ndim(t) == 0:
        return out[0]
    return out


def quadratic_form_series(mosum, scale):
    """Fill ``quadform`` with ``M_t' A_t^{-1} M_t`` using ``scale`` at every grid point.

    Diagonal scales use elementwise division; full scales use a Cholesky
    factorisation and a triangular solve per grid point.
    """
    M = mosum.vectors
    if scale.diagonal:
        diag = scale.at(mosum.times)
        bad = np.flatnonzero(~np.all(diag > 0, axis=1))
        if bad.size:
            raise ValidationError(
                f"scale matrix is not positive definite at t={float(mosum.times[bad[0]])!r}"
            )
        quad = np.sum(M * M / diag, axis=1)
    else:
        mats = scale.at(mosum.times)
        chol = _batched_cholesky(mats, mosum.times)
        y = np.linalg.solve(chol, M[:, :, None])[:, :, 0]
        quad = np.sum(y * y, axis=1)
    return replace(mosum, quadform=quad)


def _batched_cholesky(mats, times):
    try:
        return np.linalg.cholesky(mats)
    except np.linalg.LinAlgError:
        pass
    for i, m in enumerate(mats):
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValidationError(
                f"scale matrix is not positive definite at t={float(times[i])!r}"
            ) from None
    raise AssertionError("unreachable")  # pragma: no cover
