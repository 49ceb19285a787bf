"""Sample reduction: summary moments, Gaussian KDE, KS distance.

Summation uses math.fsum throughout, so every reduction is exactly
permutation invariant; parallel producers can hand their samples over
in any order without changing a single bit of the output.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if not np.all(np.isfinite(v)):
            raise ValueError("samples must be finite")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != v.shape or np.any(w < 0):
                raise ValueError("weights must be non-negative, one per sample")
            if abs(math.fsum(w) - 1.0) > 1e-9:
                raise ValueError("weights must sum to 1")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.values)


def summary(s):
    """(mean, unbiased variance, stderr, n); needs n >= 2.

    With weights w (summing to 1): mean = sum w x, variance uses the
    1/(1 - sum w^2) small-sample correction and stderr^2 = var sum w^2,
    which reduce to the usual /(n-1) and var/n for uniform weights.
    """
    n = len(s)
    if n < 2:
        raise ValueError("need at least two samples")
    if s.weights is None:
        mean = math.fsum(s.values) / n
        var = math.fsum((x - mean) ** 2 for x in s.values) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        w = s.weights
        mean = math.fsum(wi * xi for wi, xi in zip(w, s.values))
        w2 = math.fsum(wi * wi for wi in w)
        if w2 >= 1.0:
            raise ValueError("weights are concentrated on a single sample")
        var = math.fsum(
            wi * (xi - mean) ** 2 for wi, xi in zip(w, s.values)
        ) / (1.0 - w2)
        stderr = math.sqrt(var * w2)
    return mean, var, stderr, n


def silverman_bandwidth(s):
    _, var, _, n = summary(s)
    return 1.06 * math.sqrt(var) * n ** (-0.2)


def kde(s, grid):
    """Gaussian kernel density on the grid, Silverman bandwidth.

    A zero-variance sample gets a delta-like narrow kernel instead,
    with a warning; needs n >= 10.
    """
    n = len(s)
    if n < 10:
        raise ValueError("need at least 10 samples for a density estimate")
    grid = np.asarray(grid, dtype=float)
    h = silverman_bandwidth(s)
    if h == 0.0:
        span = grid.max() - grid.min() if len(grid) > 1 else 1.0
        h = max(span, 1.0) * 1e-6
        warnings.warn("degenerate sample: using a delta-like kernel", stacklevel=2)
    w = s.weights if s.weights is not None else np.full(n, 1.0 / n)
    density = np.zeros_like(grid)
    norm = 1.0 / (h * math.sqrt(2 * math.pi))
    for start in range(0, n, 4096):
        x = s.values[start:start + 4096]
        wi = w[start:start + 4096]
        z = (grid[:, None] - x[None, :]) / h
        density += (np.exp(-0.5 * z * z) * wi[None, :]).sum(axis=1)
    return norm * density


def ecdf(s):
    """(sorted values, cumulative probabilities) of the sample set."""
    order = np.argsort(s.values, kind="stable")
    xs = s.values[order]
    if s.weights is None:
        ps = np.arange(1, len(xs) + 1) / len(xs)
    else:
        ps = np.cumsum(s.weights[order])
        ps /= ps[-1]
    return xs, ps


def ks_distance(a, b):
    """sup-norm distance between the two empirical CDFs; in [0,1]."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("need non-empty sample sets")
    xa, pa = ecdf(a)
    xb, pb = ecdf(b)
    pts = np.concatenate([xa, xb])
    fa = np.searchsorted(xa, pts, side="right")
    fb = np.searchsorted(xb, pts, side="right")
    ca = np.where(fa > 0, pa[np.minimum(fa, len(xa)) - 1], 0.0)
    cb = np.where(fb > 0, pb[np.minimum(fb, len(xb)) - 1], 0.0)
    return float(np.abs(ca - cb).max())


def write_density_csv(path, grid, density):
    with open(path, "w") as fh:
        fh.write("x,density\n")
        for x, d in zip(grid, density):
            fh.write(f"{float(x)!r},{float(d)!r}\n")
