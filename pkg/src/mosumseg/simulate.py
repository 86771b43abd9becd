"""Regime-switching simulators and the renewal scenario presets."""

import json
import math
from dataclasses import dataclass

import numpy as np

from ._validation import ValidationError, check_positive, check_spd, grid_index
from .model import ChangeSpec, EventSeries, SampledPath
from .scale import renewal_asymptotic_covariance

__all__ = [
    "PRESET_NAMES",
    "RenewalScenario",
    "noiseless_path",
    "scenario_preset",
    "simulate_partial_sum_regimes",
    "simulate_renewal_regimes",
    "simulate_wiener_drift",
]


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class RenewalScenario:
    """Piecewise-stationary multivariate renewal process.

    ``means[k, j]`` and ``sds[k, j]`` are the mean and standard deviation of
    the inter-event times of component ``j`` on segment ``k``. Inter-event
    times are gamma distributed with shape ``mean**2 / sd**2`` and rate
    ``mean / sd**2`` (exponential when ``sd == mean``). In the ``dependent``
    flavour every component shares one gamma summand per event index, which
    gives pairwise correlation ``target_corr`` between inter-event times.
    """

    change_points: tuple
    means: np.ndarray
    sds: np.ndarray
    horizon_T: float
    dependence: str = "independent"
    target_corr: float = 0.2
    family: str = "gamma"
    seed: int = 0
    name: str = None

    def __post_init__(self):
        cps = tuple(float(c) for c in self.change_points)
        means = np.atleast_2d(np.array(self.means, dtype=float))
        sds = np.atleast_2d(np.array(self.sds, dtype=float))
        T = check_positive(self.horizon_T, "horizon_T")
        if means.shape != sds.shape or means.shape[0] != len(cps) + 1:
            raise ValidationError("means and sds need shape (n_segments, p)")
        if any(b <= a for a, b in zip((0.0,) + cps, cps + (T,))):
            raise ValidationError("change points must be increasing inside (0, T)")
        if np.any(means <= 0) or np.any(sds <= 0):
            raise ValidationError("inter-event means and sds must be positive")
        if self.family not in ("gamma", "exponential"):
            raise ValidationError("family must be 'gamma' or 'exponential'")
        if self.family == "exponential" and not np.allclose(means, sds):
            raise ValidationError("exponential inter-event times need sd == mean")
        if self.dependence not in ("independent", "dependent"):
            raise ValidationError("dependence must be 'independent' or 'dependent'")
        if self.dependence == "dependent":
            if not 0 < self.target_corr < 1:
                raise ValidationError("target_corr must lie in (0, 1)")
            if not (np.allclose(means, means[:, :1]) and np.allclose(sds, sds[:, :1])):
                raise ValidationError("dependent scenarios need identical components per segment")
        for a in (means, sds):
            a.setflags(write=False)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sds", sds)
        object.__setattr__(self, "horizon_T", T)

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_segments(self):
        return self.means.shape[0]

    def gamma_params(self):
        """``(shape, rate)`` arrays of the marginal inter-event distribution."""
        return self.means**2 / self.sds**2, self.means / self.sds**2

    def covariance(self, k):
        """Asymptotic covariance per unit time of the counting process on segment ``k``."""
        mu, sd = self.means[k], self.sds[k]
        if self.dependence == "dependent":
            corr = np.full((self.dim, self.dim), self.target_corr)
            np.fill_diagonal(corr, 1.0)
            return renewal_asymptotic_covariance(mu, sd**2, sigma_iet=corr * np.outer(sd, sd))
        return renewal_asymptotic_covariance(mu, sd**2)

    def change_spec(self):
        """True :class:`ChangeSpec` (drift ``1 / mean`` per component, one regime per segment)."""
        return ChangeSpec(
            change_points=list(self.change_points),
            regime_labels=list(range(1, self.n_segments + 1)),
            drifts=1.0 / self.means,
            covariances=np.stack([self.covariance(k) for k in range(self.n_segments)]),
        )

    def scaled(self, k):
        """Stretch time by ``k`` (horizon and change points), keeping the distributions."""
        return RenewalScenario(
            change_points=tuple(k * c for c in self.change_points),
            means=self.means,
            sds=self.sds,
            horizon_T=k * self.horizon_T,
            dependence=self.dependence,
            target_corr=self.target_corr,
            family=self.family,
            seed=self.seed,
            name=None if self.name is None else f"{self.name}-x{k:g}",
        )

    def to_dict(self):
        return {
            "name": self.name,
            "change_points": list(self.change_points),
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
            "horizon_T": self.horizon_T,
            "dependence": self.dependence,
            "target_corr": self.target_corr,
            "family": self.family,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


TABLE_T = 1600.0
TABLE_CHANGES = (250.0, 500.0, 900.0, 1150.0)
TABLE_MEANS = (1.3, 0.9, 0.6, 0.8, 1.3)
TABLE_DIM = 3

# a 32-unit burst only small bandwidths resolve, then two weak changes only large ones detect
MULTISCALE_T = 1300.0
MULTISCALE_CHANGES = (100.0, 132.0, 450.0, 700.0, 1000.0)
MULTISCALE_MEANS = (1.0, 0.2, 1.0, 0.66, 1.0, 0.66)

_SD_RULES = {
    "constvar": lambda mu: 0.7,
    "smallvar": lambda mu: 5.0 / 6.0 * mu,
    "poisson": lambda mu: mu,
}

PRESET_NAMES = tuple(
    f"{kind}-{dep}" for kind in ("constvar", "smallvar", "poisson") for dep in ("independent", "dependent")
) + ("multiscale",)


def scenario_preset(name, seed=0):
    """Named scenario: ``{constvar,smallvar,poisson}-{independent,dependent}`` or ``multiscale``.

    The table presets are three-dimensional gamma renewal processes on
    ``T = 1600`` with changes at 250, 500, 900 and 1150 and mean inter-event
    times 1.3, 0.9, 0.6, 0.8, 1.3. The ``multiscale`` preset has a short,
    strong burst followed by weak, well separated changes, all exponential.
    """
    if name == "multiscale":
        means = np.repeat(np.array(MULTISCALE_MEANS)[:, None], TABLE_DIM, axis=1)
        return RenewalScenario(
            change_points=MULTISCALE_CHANGES,
            means=means,
            sds=means,
            horizon_T=MULTISCALE_T,
            family="exponential",
            seed=seed,
            name=name,
        )
    try:
        kind, dep = name.split("-")
        rule = _SD_RULES[kind]
    except (ValueError, KeyError):
        raise ValidationError(f"unknown scenario {name!r}; choose from {PRESET_NAMES}") from None
    if dep not in ("independent", "dependent"):
        raise ValidationError(f"unknown scenario {name!r}; choose from {PRESET_NAMES}")
    means = np.repeat(np.array(TABLE_MEANS)[:, None], TABLE_DIM, axis=1)
    sds = np.vectorize(rule, otypes=[float])(means)
    return RenewalScenario(
        change_points=TABLE_CHANGES,
        means=means,
        sds=sds,
        horizon_T=TABLE_T,
        dependence=dep,
        target_corr=0.2,
        family="exponential" if kind == "poisson" else "gamma",
        seed=seed,
        name=name,
    )


def _draw_gaps(rng, scenario, k, n):
    """``n`` rows of inter-event times for segment ``k``, shape ``(n, p)``."""
    shape, rate = scenario.gamma_params()
    shape, rate = shape[k], rate[k]
    p = scenario.dim
    if scenario.dependence == "independent":
        return rng.gamma(shape, 1.0 / rate, size=(n, p))
    rho = scenario.target_corr
    own = rng.gamma((1.0 - rho) * shape[0], 1.0 / rate[0], size=(n, p))
    shared = rng.gamma(rho * shape[0], 1.0 / rate[0], size=(n, 1))
    return own + shared


def simulate_renewal_regimes(scenario, seed=None):
    """Simulate event times of ``scenario``.

    The renewal clock restarts at every change point: on segment ``(a, b]``
    fresh inter-event times are accumulated from ``a`` and events after ``b``
    are discarded.
    """
    rng = _rng(scenario.seed if seed is None else seed)
    edges = (0.0,) + scenario.change_points + (scenario.horizon_T,)
    p = scenario.dim
    pieces = [[] for _ in range(p)]
    for k in range(scenario.n_segments):
        a, b = edges[k], edges[k + 1]
        mean = float(scenario.means[k].min())
        sd = float(scenario.sds[k].max())
        expect = (b - a) / mean
        n = int(expect + 6.0 * math.sqrt(expect) * max(sd / mean, 1.0) + 10)
        times = a + np.cumsum(_draw_gaps(rng, scenario, k, n), axis=0)
        while np.any(times[-1] <= b):
            more = times[-1] + np.cumsum(_draw_gaps(rng, scenario, k, n), axis=0)
            times = np.concatenate([times, more])
        for j in range(p):
            col = times[:, j]
            pieces[j].append(col[col <= b])
    return EventSeries(tuple(np.concatenate(pc) for pc in pieces), scenario.horizon_T)


def noiseless_path(spec, horizon_T, grid_step=1.0):
    """Exact integrated drift ``Z_t = int_0^t mu(s) ds`` on the grid."""
    n = grid_index(horizon_T, grid_step, "horizon_T")
    t = np.arange(n + 1) * grid_step
    edges = np.concatenate([[0.0], spec.change_points, [horizon_T]])
    drifts = spec.segment_drifts()
    # time spent in each segment up to t
    overlap = np.clip(t[:, None] - edges[None, :-1], 0.0, np.diff(edges)[None, :])
    return SampledPath(grid_step, overlap @ drifts, horizon_T)


def _check_covariances(spec):
    return np.stack([check_spd(c, f"covariance of regime {j + 1}") for j, c in enumerate(spec.covariances)])


def simulate_partial_sum_regimes(spec, horizon_T, innovation="gaussian", df=None, seed=None):
    """Partial sums ``Z_k = sum_{i<=k} (mu_i + Sigma_i^{1/2} X_i)`` on the unit grid.

    ``innovation`` is ``"gaussian"`` or ``"student_t"`` (unit-variance
    rescaled, needs ``df > 2``). Increment ``i`` uses the regime active at time ``i``.
    """
    chol = _check_covariances(spec)
    rng = _rng(seed)
    n = grid_index(horizon_T, 1.0, "horizon_T")
    p = spec.dim
    if innovation == "gaussian":
        X = rng.standard_normal((n, p))
    elif innovation == "student_t":
        if df is None or df <= 2:
            raise ValidationError("student_t innovations need df > 2")
        X = rng.standard_t(df, size=(n, p)) / math.sqrt(df / (df - 2.0))
    else:
        raise ValidationError("innovation must be 'gaussian' or 'student_t'")
    seg = spec.segment_index(np.arange(1, n + 1, dtype=float))
    labels = np.asarray(spec.regime_labels)[seg] - 1
    incr = spec.drifts[labels] + np.einsum("nij,nj->ni", chol[labels], X)
    values = np.vstack([np.zeros((1, p)), np.cumsum(incr, axis=0)])
    return SampledPath(1.0, values, horizon_T)


def simulate_wiener_drift(spec, horizon_T, grid_step=1.0, seed=None):
    """Brownian motion with piecewise-constant drift and covariance on the grid.

    Drift increments are exact (integrated across change points inside a
    step); the Gaussian part of step ``(t - delta, t]`` uses the covariance of
    the regime active at ``t``.
    """
    chol = _check_covariances(spec)
    rng = _rng(seed)
    base = noiseless_path(spec, horizon_T, grid_step)
    n = base.n_steps
    seg = spec.segment_index(base.times[1:])
    labels = np.asarray(spec.regime_labels)[seg] - 1
    X = rng.standard_normal((n, spec.dim)) * math.sqrt(grid_step)
    noise = np.einsum("nij,nj->ni", chol[labels], X)
    values = base.values.copy()
    values[1:] += np.cumsum(noise, axis=0)
    return SampledPath(grid_step, values, horizon_T)

