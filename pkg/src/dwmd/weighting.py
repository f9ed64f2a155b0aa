"""Dimensional weighting between two domains.

The weight vector tau holds, per feature dimension, the absolute gap between
outlier-trimmed means of the source and target samples. Its max-normalization
tau_normalized drives the per-order exponential weights of the discrepancy
series; the constant C of the series is resolved here as well.

The trimming estimator: per dimension, drop the ceil(alpha * m) samples
farthest from that dimension's median, then average the rest. A 1-D one-class
decision boundary is an interval, so this matches one-class outlier removal on
each dimension while staying deterministic and dependency-free.
"""

from dataclasses import dataclass

import numpy as np

from .moments import check_same_width, validate_samples

__all__ = ["WeightProfile", "robust_dim_means", "weight_profile", "TAU_FLOOR", "C_FLOOR"]

# Floor for normalized weights: a zero-gap dimension gets weight
# exp(-psi*n/TAU_FLOOR) ~ 0 instead of a division by zero.
TAU_FLOOR = 1e-6
# Floor for C under the tau-derived policies (C must stay strictly positive).
C_FLOOR = 1e-8


@dataclass(frozen=True)
class WeightProfile:
    """Per-dimension weighting state shared by the discrepancy functions.

    tau:            d-vector of robust-mean gaps (nonnegative).
    tau_normalized: tau / tau_max, floored at TAU_FLOOR, every entry in (0, 1];
                    all-ones when tau_max == 0 (no dimensional signal).
    tau_max:        max of tau.
    c_resolved:     scalar or d-vector, strictly positive.
    alpha:          trimming fraction used to build tau.
    """

    tau: np.ndarray
    tau_normalized: np.ndarray
    tau_max: float
    c_resolved: float | np.ndarray
    alpha: float

    @property
    def d(self):
        return self.tau.shape[0]


def robust_dim_means(samples, alpha):
    """Trimmed column means: per dimension, discard the ceil(alpha*m) samples
    farthest (in absolute distance) from the column median, average the rest.

    alpha = 0 returns plain column means.
    """
    x = validate_samples(samples)
    if not 0.0 <= alpha < 0.5:
        raise ValueError(f"alpha must be in [0, 0.5), got {alpha}")
    m = x.shape[0]
    n_drop = int(np.ceil(alpha * m))
    n_keep = m - n_drop
    if n_keep < 1:
        raise ValueError(f"trimming with alpha={alpha} would discard all {m} samples")
    if n_drop == 0:
        return x.mean(axis=0)
    dist = np.abs(x - np.median(x, axis=0))
    # Stable argsort keeps ties deterministic under row permutation-free input.
    order = np.argsort(dist, axis=0, kind="stable")
    kept = np.take_along_axis(x, order[:n_keep], axis=0)
    return kept.mean(axis=0)


def resolve_c(tau, c_policy, c_value=None):
    """Resolve the series constant C from the weight vector per policy.

    scalar:     the user-supplied constant (must be > 0).
    tau_first:  the first component of tau, floored at C_FLOOR.
    tau_vector: tau elementwise, floored at C_FLOOR.
    """
    if c_policy == "scalar":
        if c_value is None or not c_value > 0.0:
            raise ValueError(f"scalar C policy needs a positive constant, got {c_value}")
        return float(c_value)
    if c_policy == "tau_first":
        return max(float(tau[0]), C_FLOOR)
    if c_policy == "tau_vector":
        return np.maximum(tau, C_FLOOR)
    raise ValueError(f"unknown c_policy {c_policy!r}")


def weight_profile(source, target, alpha=0.1, c_policy="scalar", c_value=0.05):
    """Build the WeightProfile for a source/target pair.

    Symmetric in its two sample arguments. When all robust-mean gaps are zero
    the normalized vector degenerates to all-ones (uniform weighting).
    """
    s = validate_samples(source, "source")
    t = validate_samples(target, "target")
    check_same_width(s, t)
    tau = np.abs(robust_dim_means(s, alpha) - robust_dim_means(t, alpha))
    tau_max = float(tau.max())
    if tau_max > 0.0:
        tau_normalized = np.maximum(tau / tau_max, TAU_FLOOR)
    else:
        tau_normalized = np.ones_like(tau)
    return WeightProfile(
        tau=tau,
        tau_normalized=tau_normalized,
        tau_max=tau_max,
        c_resolved=resolve_c(tau, c_policy, c_value),
        alpha=alpha,
    )
