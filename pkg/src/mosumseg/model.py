"""Domain types, path construction and configuration checks."""

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._validation import (
    ValidationError,
    check_open_unit,
    check_positive,
    check_sorted_strict,
    check_spd,
    grid_index,
)

__all__ = [
    "ChangeSpec",
    "ConfigWarning",
    "EventSeries",
    "SampledPath",
    "ScaleMode",
    "SegmentationConfig",
    "ThresholdMode",
    "counting_path",
    "validate_config",
]


# Events within this fraction of a grid step above a grid point count toward it.
GRID_SNAP = 1e-9


class ConfigWarning(UserWarning):
    """A configuration is structurally valid but outside the asymptotic comfort zone."""


class ScaleMode(str, Enum):
    LOCAL_DIAGONAL_ESTIMATE = "local_diag"
    TRUE_DIAGONAL = "true_diag"
    TRUE_FULL = "true_full"
    IDENTITY = "identity"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"A": "local_diag", "B": "true_diag", "C": "true_full"}
        value = aliases.get(value, value)
        try:
            return cls(value)
        except ValueError:
            try:
                return cls[str(value).upper()]
            except KeyError:
                choices = ", ".join(m.value for m in cls)
                raise ValidationError(f"unknown scale mode {value!r}; choose from {choices}") from None


@dataclass(frozen=True)
class ThresholdMode:
    """How the significance threshold is obtained.

    ``kind`` is one of ``"gumbel"`` (sublinear bandwidth, extreme-value limit),
    ``"linear_mc"`` (Monte Carlo quantile of the Brownian functional for
    ``h = gamma * T``) or ``"explicit"`` (use ``beta`` as given).
    """

    kind: str = "gumbel"
    n_mc: int = 5000
    seed: int = 0
    grid_points_per_unit: int = 2000
    beta: float = None

    KINDS = ("gumbel", "linear_mc", "explicit")

    def __post_init__(self):
        kind = self.kind.replace("-", "_").lower()
        if kind not in self.KINDS:
            raise ValidationError(f"unknown threshold mode {self.kind!r}; choose from {self.KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "explicit":
            if self.beta is None:
                raise ValidationError("explicit threshold mode requires beta")
            check_positive(self.beta, "beta")
        if kind == "linear_mc" and self.n_mc < 100:
            raise ValidationError("linear_mc threshold needs n_mc >= 100")

    @classmethod
    def gumbel(cls):
        return cls("gumbel")

    @classmethod
    def linear_mc(cls, n_mc=5000, seed=0, grid_points_per_unit=2000):
        return cls("linear_mc", n_mc=n_mc, seed=seed, grid_points_per_unit=grid_points_per_unit)

    @classmethod
    def explicit(cls, beta):
        return cls("explicit", beta=beta)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls(value)
        if isinstance(value, dict):
            return cls(**value)
        raise ValidationError(f"cannot interpret threshold mode {value!r}")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.kind == "linear_mc":
            out.update(n_mc=self.n_mc, seed=self.seed, grid_points_per_unit=self.grid_points_per_unit)
        elif self.kind == "explicit":
            out["beta"] = self.beta
        return out


@dataclass(frozen=True, eq=False)
class EventSeries:
    """Event times of a ``p``-variate point process observed on ``(0, T]``."""

    components: tuple
    horizon_T: float

    def __post_init__(self):
        T = check_positive(self.horizon_T, "horizon_T")
        comps = self.components
        if isinstance(comps, np.ndarray) and comps.ndim == 1 and comps.dtype != object:
            comps = [comps]
        comps = tuple(check_sorted_strict(c, f"component {j + 1}") for j, c in enumerate(comps))
        if len(comps) < 1:
            raise ValidationError("an EventSeries needs at least one component")
        for j, c in enumerate(comps):
            if c.size and (c[0] <= 0 or c[-1] > T):
                raise ValidationError(f"component {j + 1} has event times outside (0, {T}]")
            c.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "horizon_T", T)

    @property
    def dim(self):
        return len(self.components)

    def counts(self):
        return np.array([c.size for c in self.components])

    def __eq__(self, other):
        if not isinstance(other, EventSeries):
            return NotImplemented
        return self.horizon_T == other.horizon_T and len(self.components) == len(
            other.components
        ) and all(np.array_equal(a, b) for a, b in zip(self.components, other.components))


@dataclass(frozen=True, eq=False)
class SampledPath:
    """A ``p``-variate cumulative path on the uniform grid ``0, delta, ..., T``."""

    grid_step: float
    values: np.ndarray
    horizon_T: float

    def __post_init__(self):
        step = check_positive(self.grid_step, "grid_step")
        T = check_positive(self.horizon_T, "horizon_T")
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValidationError("path values must be an (n + 1, p) array")
        n = grid_index(T, step, "horizon_T")
        if values.shape[0] != n + 1:
            raise ValidationError(
                f"path has {values.shape[0]} entries but T / grid_step + 1 = {n + 1}"
            )
        if np.any(values[0] != 0):
            raise ValidationError("path must start at the zero vector")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "grid_step", step)
        object.__setattr__(self, "horizon_T", T)
        object.__setattr__(self, "values", values)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def n_steps(self):
        return self.values.shape[0] - 1

    @property
    def times(self):
        return np.arange(self.values.shape[0]) * self.grid_step

    def __eq__(self, other):
        if not isinstance(other, SampledPath):
            return NotImplemented
        return (
            self.grid_step == other.grid_step
            and self.horizon_T == other.horizon_T
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class ChangeSpec:
    """True change points and per-regime drift and covariance.

    ``regime_labels[k]`` (1-based) names the regime active on the ``k``-th
    segment ``(c_k, c_{k+1}]``; ``drifts[j - 1]`` and ``covariances[j - 1]``
    describe regime ``j``.
    """

    change_points: np.ndarray
    regime_labels: tuple
    drifts: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        cps = check_sorted_strict(np.atleast_1d(np.asarray(self.change_points, dtype=float)), "change_points")
        drifts = np.atleast_2d(np.array(self.drifts, dtype=float))
        covs = np.array(self.covariances, dtype=float)
        if covs.ndim == 2:
            covs = covs[None]
        labels = tuple(int(x) for x in self.regime_labels)
        P, p = drifts.shape
        if covs.shape != (P, p, p):
            raise ValidationError(f"covariances must have shape {(P, p, p)}, got {covs.shape}")
        if len(labels) != cps.size + 1:
            raise ValidationError("need exactly one regime label per segment (q + 1 labels)")
        if any(not 1 <= lab <= P for lab in labels):
            raise ValidationError(f"regime labels must lie in 1..{P}")
        for j in range(P):
            check_spd(covs[j], f"covariance of regime {j + 1}")
        seg = drifts[np.asarray(labels) - 1]
        d = np.diff(seg, axis=0)
        if np.any(np.all(d == 0, axis=1)):
            raise ValidationError("consecutive regimes must have distinct drifts")
        for a in (cps, drifts, covs):
            a.setflags(write=False)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "drifts", drifts)
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "regime_labels", labels)

    @property
    def dim(self):
        return self.drifts.shape[1]

    @property
    def n_changes(self):
        return self.change_points.size

    def segment_index(self, t):
        """Segment index ``k`` with ``c_k < t <= c_{k+1}`` (right-closed)."""
        return np.searchsorted(self.change_points, t, side="left")

    def segment_drifts(self):
        return self.drifts[np.asarray(self.regime_labels) - 1]

    def segment_covariances(self):
        return self.covariances[np.asarray(self.regime_labels) - 1]

    def drift_changes(self):
        """Array of shape (q, p) holding ``mu_after - mu_before`` per change."""
        return np.diff(self.segment_drifts(), axis=0)

    def covariance_at(self, t):
        return self.segment_covariances()[self.segment_index(t)]

    def min_spacing(self, horizon_T):
        edges = np.concatenate([[0.0], self.change_points, [horizon_T]])
        return np.diff(edges)

    def to_dict(self):
        return {
            "change_points": self.change_points.tolist(),
            "regime_labels": list(self.regime_labels),
            "drifts": self.drifts.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            change_points=data["change_points"],
            regime_labels=data["regime_labels"],
            drifts=data["drifts"],
            covariances=data["covariances"],
        )


@dataclass(frozen=True)
class SegmentationConfig:
    bandwidth_h: float
    eta: float = 0.75
    alpha: float = 0.05
    grid_step: float = 1.0
    scale_mode: ScaleMode = ScaleMode.LOCAL_DIAGONAL_ESTIMATE
    threshold_mode: ThresholdMode = field(default_factory=ThresholdMode.gumbel)
    variance_floor: float = 1e-8
    true_scale: str = "window_average"

    TRUE_SCALE_RULES = ("window_average", "piecewise")

    def __post_init__(self):
        if self.true_scale not in self.TRUE_SCALE_RULES:
            raise ValidationError(f"true_scale must be one of {self.TRUE_SCALE_RULES}")
        object.__setattr__(self, "scale_mode", ScaleMode.parse(self.scale_mode))
        object.__setattr__(self, "threshold_mode", ThresholdMode.parse(self.threshold_mode))
        check_positive(self.bandwidth_h, "bandwidth_h")
        check_positive(self.grid_step, "grid_step")
        check_positive(self.variance_floor, "variance_floor")
        check_open_unit(self.eta, "eta")
        check_open_unit(self.alpha, "alpha")

    def to_dict(self):
        return {
            "bandwidth_h": self.bandwidth_h,
            "eta": self.eta,
            "alpha": self.alpha,
            "grid_step": self.grid_step,
            "scale_mode": self.scale_mode.value,
            "threshold_mode": self.threshold_mode.to_dict(),
            "variance_floor": self.variance_floor,
            "true_scale": self.true_scale,
        }

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


def counting_path(events, grid_step=1.0):
    """Counting process of ``events`` sampled at ``0, delta, ..., T``.

    Entry ``k`` of component ``j`` is the number of events of component ``j``
    in ``(0, k * delta]``; an event exactly on a grid point counts toward it.
    """
    if not isinstance(events, EventSeries):
        raise ValidationError("counting_path expects an EventSeries")
    step = check_positive(grid_step, "grid_step")
    T = events.horizon_T
    n = grid_index(T, step, "horizon_T")
    grid = np.arange(n + 1) * step
    # absorbs representation error in k * delta so on-grid events stay right-closed
    grid = grid + GRID_SNAP * step
    values = np.column_stack(
        [np.searchsorted(c, grid, side="right") for c in events.components]
    ).astype(float)
    return SampledPath(step, values, T)



def validate_config(config, T, p):
    """Check ``config`` against the horizon ``T`` and dimension ``p``.

    Structural violations raise :class:`ValidationError`. Conditions that
    only matter asymptotically are returned as a list of warning strings
    (and also emitted as :class:`ConfigWarning`).
    """
    T = check_positive(T, "T")
    if int(p) < 1:
        raise ValidationError("dimension p must be >= 1")
    h, step, eta = config.bandwidth_h, config.grid_step, config.eta
    if 2 * h >= T:
        raise ValidationError(f"bandwidth must satisfy 2h < T (h={h}, T={T})")
    grid_index(h, step, "bandwidth_h")
    grid_index(T, step, "horizon_T")
    if h < 2 * step:
        raise ValidationError("bandwidth must cover at least two grid steps")
    if eta * h < step * (1 - 1e-9):
        raise ValidationError("eta * h must be at least one grid step")
    kind = config.threshold_mode.kind
    if kind == "gumbel" and T / h <= math.e:
        raise ValidationError("the Gumbel threshold needs T / h > e; use linear_mc instead")

    found = []
    ratio = math.log(T / h)
    if h < 10 * ratio:
        found.append(
            f"bandwidth h={h:g} is small relative to log(T/h)={ratio:.2f}; "
            "only large drift changes are detectable"
        )
    if kind == "gumbel" and h / T > 0.1:
        found.append(
            f"h/T={h / T:.3f} is not small; the Gumbel threshold may be inaccurate, "
            "consider the linear_mc threshold"
        )
    if kind == "linear_mc" and h / T < 0.01:
        found.append(f"h/T={h / T:.4f} is small; the Gumbel threshold is the natural choice")
    if T / step > 5e6:
        found.append("very fine grid; memory use grows with T / grid_step")
    for msg in found:
        warnings.warn(msg, ConfigWarning, stacklevel=2)
    return found
