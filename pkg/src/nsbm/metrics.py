"""Partition-comparison metrics and posterior summarization."""

from __future__ import annotations

import numpy as np

__all__ = ["nmi", "vi", "pairwise_vi", "min_vi_partition", "summarize_min_vi", "mean_xi_nmi"]


def _contingency(a, b):
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ValueError(f"partitions have different lengths ({a.size} vs {b.size})")
    if a.size == 0:
        raise ValueError("partitions must be nonempty")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    ka = int(ai.max()) + 1
    kb = int(bi.max()) + 1
    c = np.bincount(ai * kb + bi, minlength=ka * kb).reshape(ka, kb)
    return c, a.size


def _entropies(c, n):
    # natural-log entropies and mutual information of the empirical table
    pa = c.sum(axis=1) / n
    pb = c.sum(axis=0) / n
    ha = float(-np.sum(pa * np.log(pa, where=pa > 0, out=np.zeros_like(pa))))
    hb = float(-np.sum(pb * np.log(pb, where=pb > 0, out=np.zeros_like(pb))))
    p = c / n
    outer = np.outer(pa, pb)
    mask = p > 0
    mi = float(np.sum(p[mask] * (np.log(p[mask]) - np.log(outer[mask]))))
    return ha, hb, max(mi, 0.0)


def nmi(a, b, variant: str = "arithmetic") -> float:
    """Normalized mutual information in [0, 1].

    Defined as 1 when both partitions are constant and 0 when exactly one is.
    The default normalizer is the arithmetic mean 2 I / (H(a) + H(b));
    "sqrt" and "max" variants are available.
    """
    c, n = _contingency(a, b)
    ha, hb, mi = _entropies(c, n)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    if ha == 0.0 or hb == 0.0:
        return 0.0
    if variant == "arithmetic":
        val = 2.0 * mi / (ha + hb)
    elif variant == "sqrt":
        val = mi / np.sqrt(ha * hb)
    elif variant == "max":
        val = mi / max(ha, hb)
    else:
        raise ValueError(f"unknown NMI variant {variant!r}")
    if val > 1.0 - 1e-12:  # rounding in the entropy sums
        return 1.0
    return float(min(max(val, 0.0), 1.0))


def vi(a, b) -> float:
    """Variation of information H(a) + H(b) - 2 I(a, b); a metric on partitions."""
    c, n = _contingency(a, b)
    ha, hb, mi = _entropies(c, n)
    return float(max(ha + hb - 2.0 * mi, 0.0))


def pairwise_vi(partitions) -> np.ndarray:
    parts = [np.asarray(p) for p in partitions]
    D = np.zeros((len(parts), len(parts)))
    for i in range(len(parts)):
        for jj in range(i + 1, len(parts)):
            D[i, jj] = D[jj, i] = vi(parts[i], parts[jj])
    return D


def min_vi_partition(partitions) -> np.ndarray:
    """The sampled partition minimizing mean VI to all other samples (medoid).

    Ties break toward the earliest draw.
    """
    parts = list(partitions)
    if not parts:
        raise ValueError("need at least one draw")
    if len(parts) == 1:
        return np.asarray(parts[0]).copy()
    D = pairwise_vi(parts)
    mean_vi = D.sum(axis=1) / (len(parts) - 1)
    return np.asarray(parts[int(np.argmin(mean_vi))]).copy()


def summarize_min_vi(samples, level="z") -> np.ndarray:
    """Posterior point estimate for the class labels or one network's labels.

    level is "z" or ("xi", j). The estimate is the draw minimizing the mean
    VI to every other draw.
    """
    if samples.n_draws == 0:
        raise ValueError("no posterior draws to summarize")
    if level == "z":
        return min_vi_partition(samples.z_draws)
    if isinstance(level, tuple) and len(level) == 2 and level[0] == "xi":
        j = int(level[1])
        return min_vi_partition([d[j] for d in samples.xi_draws])
    raise ValueError(f"unknown summary level {level!r}")


def mean_xi_nmi(est, truth) -> float:
    """Average per-network NMI between estimated and true community labels."""
    est = list(est)
    truth = list(truth)
    if len(est) != len(truth):
        raise ValueError("network counts differ")
    return float(np.mean([nmi(e, t) for e, t in zip(est, truth)]))
