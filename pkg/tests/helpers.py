"""Shared generators for tests."""

import numpy as np

from mosumseg import ChangeSpec, threshold_sublinear


def random_separated_spec(rng, margin=2.0):
    """Random grid-aligned spec whose changes are at least ``2h`` apart (and ``2h`` from the ends).

    Drift changes are large enough that the noiseless peak of the quadratic
    form under an identity covariance exceeds ``margin`` times the Gumbel
    threshold. Returns ``(spec, T, h)``.
    """
    p = int(rng.integers(1, 5))
    q = int(rng.integers(1, 6))
    h = float(rng.integers(5, 60))
    gaps = 2 * h + rng.integers(0, 3 * int(h), size=q + 1)
    cps = np.cumsum(gaps)[:-1].astype(float)
    T = float(np.sum(gaps))
    beta = threshold_sublinear(T, h, p, 0.05).beta
    drifts = [rng.normal(size=p)]
    for _ in range(q):
        u = rng.normal(size=p)
        u /= np.linalg.norm(u)
        size = np.sqrt(margin * beta * 2.0 / h * (1.0 + rng.random()))
        drifts.append(drifts[-1] + size * u)
    spec = ChangeSpec(
        change_points=cps,
        regime_labels=list(range(1, q + 2)),
        drifts=np.array(drifts),
        covariances=np.stack([np.eye(p)] * (q + 1)),
    )
    return spec, T, h
