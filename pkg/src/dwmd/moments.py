"""Empirical moment sequences of sample matrices.

A sample matrix is an (m, d) array of real feature activations, one row per
sample. All statistics are computed per dimension (per column) in double
precision, whatever the storage dtype of the input.
"""

import numpy as np

__all__ = [
    "MomentOverflowError",
    "validate_samples",
    "raw_moments",
    "central_moments",
    "standardize_pooled",
]


class MomentOverflowError(FloatingPointError):
    """A moment computation produced a non-finite value (overflow at high order)."""


def validate_samples(samples, name="samples"):
    """Coerce to a float64 (m, d) matrix and check the sample-matrix invariants.

    Raises ValueError on wrong rank, empty axes, or non-finite entries.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name}: expected a 2-D (m, d) matrix, got shape {arr.shape}")
    m, d = arr.shape
    if m < 1 or d < 1:
        raise ValueError(f"{name}: need m >= 1 and d >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        i, j = np.argwhere(~np.isfinite(arr))[0]
        raise ValueError(f"{name}: non-finite entry at row {i}, column {j}")
    return arr


def check_same_width(source, target):
    """Raise if two sample matrices do not share the feature dimension d."""
    if source.shape[1] != target.shape[1]:
        raise ValueError(
            f"feature-dimension mismatch: source has d={source.shape[1]}, "
            f"target has d={target.shape[1]}"
        )


def _check_finite_order(values, order, what):
    if not np.all(np.isfinite(values)):
        j = int(np.argwhere(~np.isfinite(values))[0, 0])
        raise MomentOverflowError(
            f"non-finite {what} moment at order {order}, dimension {j}; "
            "consider standardizing the inputs"
        )


def raw_moments(samples, n):
    """Per-dimension empirical raw moments E[X^k] for k = 1..n.

    Returns an (n, d) array where row k-1 holds the column means of the k-th
    elementwise power. Deterministic and independent of row order (numpy's
    pairwise summation over a fixed-length axis).
    """
    x = validate_samples(samples)
    if n < 1:
        raise ValueError(f"moment order must be >= 1, got {n}")
    d = x.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    power = np.ones_like(x)
    with np.errstate(over="ignore"):
        for k in range(1, n + 1):
            power = power * x
            out[k - 1] = power.mean(axis=0)
            _check_finite_order(out[k - 1], k, "raw")
    return out


def central_moments(samples, n):
    """Per-dimension central moments: row 0 is the column mean, row k-1 for
    k >= 2 is the mean of (x - mean)^k."""
    x = validate_samples(samples)
    if n < 1:
        raise ValueError(f"moment order must be >= 1, got {n}")
    d = x.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    mu = x.mean(axis=0)
    out[0] = mu
    if n >= 2:
        centered = x - mu
        power = centered.copy()
        with np.errstate(over="ignore"):
            for k in range(2, n + 1):
                power = power * centered
                out[k - 1] = power.mean(axis=0)
                _check_finite_order(out[k - 1], k, "central")
    return out


def standardize_pooled(source, target):
    """Shift and scale both matrices by the pooled per-dimension mean and
    (population) standard deviation of their union.

    Dimensions with pooled std 0 are shifted only. Returns a new pair; the
    inputs are not modified.
    """
    s = validate_samples(source, "source")
    t = validate_samples(target, "target")
    check_same_width(s, t)
    pooled = np.vstack([s, t])
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    scale = np.where(sd > 0.0, sd, 1.0)
    return (s - mu) / scale, (t - mu) / scale
