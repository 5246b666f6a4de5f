"""Stick-breaking transforms, log-domain Beta kernels, and seeded RNG streams.

Everything density-related is kept in log space end to end; probabilities are
exponentiated only inside categorical sampling. Ratios of Beta functions with
integer count offsets reduce to rising factorials, which is both faster and
more robust than exponentiating near-zero Beta values on sparse graphs.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "derive_rng",
    "derive_seed",
    "stick_break",
    "log_rising_factorial",
    "log_beta_ratio",
    "sym_prod_logs",
    "tri_sum",
    "sample_categorical_logits",
    "sample_beta",
    "BetaRatioTable",
]


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream for a (seed, path) pair.

    Each worker unit (chain, replicate, network) gets its own path so that
    parallel execution is bit-reproducible regardless of scheduling.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Derived 64-bit seed for a child run (e.g. one replicate of a fit)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def stick_break(v) -> np.ndarray:
    """Map stick proportions v_k to weights v_k * prod_{l<k} (1 - v_l).

    Output sums to <= 1. A final stick of exactly 1 marks the truncation
    convention; its weight then absorbs the full remainder so the weights
    sum to one exactly, rounding included.
    """
    v = np.asarray(v, dtype=float)
    if v.size and (np.any(v < 0.0) or np.any(v > 1.0)):
        raise ValueError("stick proportions must lie in [0, 1]")
    if v.size == 0:
        return v.copy()
    rem = np.concatenate(([1.0], np.cumprod(1.0 - v[:-1])))
    w = v * rem
    if v[-1] == 1.0:
        # correctly rounded 1 - sum(prefix), so the total is one exactly
        w[-1] = max(0.0, math.fsum([1.0] + [-float(x) for x in w[:-1]]))
    return w


def log_rising_factorial(x: float, d: int) -> float:
    """log of x(x+1)...(x+d-1); the empty product (d = 0) gives 0."""
    if x <= 0.0:
        raise ValueError(f"rising factorial needs x > 0, got {x}")
    d = int(d)
    if d < 0:
        raise ValueError(f"rising factorial needs d >= 0, got {d}")
    if d == 0:
        return 0.0
    return float(np.log(x + np.arange(d, dtype=float)).sum())


def _log_gamma_ratio(x: float, d: int) -> float:
    # log Gamma(x+d)/Gamma(x); negative d inverts the ratio.
    if d >= 0:
        return log_rising_factorial(x, d)
    return -log_rising_factorial(x + d, -d)


def log_beta_ratio(alpha: float, beta: float, d: int, dbar: int) -> float:
    """log of B(alpha+d, beta+dbar) / B(alpha, beta) for integer d, dbar.

    Computed as three rising-factorial ratios of log-Gamma terms, which stays
    accurate when the Beta values themselves underflow.
    """
    if alpha <= 0.0 or beta <= 0.0:
        raise ValueError("Beta shapes must be positive")
    if alpha + d <= 0.0 or beta + dbar <= 0.0:
        raise ValueError("shifted Beta shapes must be positive")
    return (
        _log_gamma_ratio(alpha, d)
        + _log_gamma_ratio(beta, dbar)
        - _log_gamma_ratio(alpha + beta, d + dbar)
    )


def sym_prod_logs(logF: np.ndarray, r: int, rp: int) -> float:
    """Sum of logF over upper-triangle entries touching rows/columns {r, rp}.

    For symmetric logF this is the two row sums with the shared entry
    discounted once; the r == rp case collapses to a single row.
    """
    logF = np.asarray(logF, dtype=float)
    if r == rp:
        return float(logF[r].sum())
    return float(logF[r].sum() + logF[rp].sum() - logF[r, rp])


def tri_sum(F: np.ndarray) -> float:
    """Sum over x <= y of a symmetric matrix, counting the diagonal once."""
    F = np.asarray(F)
    return float(0.5 * (F.sum() + np.trace(F)))


def sample_categorical_logits(logw, rng: np.random.Generator) -> int:
    """Draw an index with probability proportional to exp(logw), max-shifted."""
    logw = np.asarray(logw, dtype=float)
    m = np.max(logw) if logw.size else -np.inf
    if not np.isfinite(m):
        raise ValueError("all categorical logits are -inf")
    p = np.exp(logw - m)
    c = np.cumsum(p)
    u = rng.random() * c[-1]
    return int(min(np.searchsorted(c, u, side="right"), logw.size - 1))


def sample_beta(a: float, b: float, rng: np.random.Generator) -> float:
    """Beta(a, b) draw in (0, 1)."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("Beta shapes must be positive")
    return float(rng.beta(a, b))


class BetaRatioTable:
    """Prefix sums of log(a+i) giving log-Beta values at integer offsets in O(1).

    rel_log_beta(m, mbar) returns log B(alpha+m, beta+mbar) - log B(alpha, beta),
    so differences of lookups are exactly the rising-factorial Beta ratios the
    collapsed samplers need, amortized to a few array gathers per ratio.
    """

    def __init__(self, alpha: float, beta: float, capacity: int = 256):
        if alpha <= 0.0 or beta <= 0.0:
            raise ValueError("Beta shapes must be positive")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self._capacity = 0
        self.la = np.zeros(1)
        self.lb = np.zeros(1)
        self.lab = np.zeros(1)
        self.ensure(capacity)

    def _build(self, base: float, size: int) -> np.ndarray:
        out = np.empty(size + 1)
        out[0] = 0.0
        np.cumsum(np.log(base + np.arange(size, dtype=float)), out=out[1:])
        return out

    def ensure(self, max_index: int) -> None:
        """Grow tables so indices up to max_index (inclusive) are valid."""
        need = int(max_index)
        if need <= self._capacity:
            return
        size = max(need, 2 * self._capacity, 256)
        self.la = self._build(self.alpha, size)
        self.lb = self._build(self.beta, size)
        self.lab = self._build(self.alpha + self.beta, size)
        self._capacity = size

    def rel_log_beta(self, m, mbar):
        """log B(alpha+m, beta+mbar) - log B(alpha, beta), elementwise."""
        m = np.asarray(m, dtype=np.int64)
        mbar = np.asarray(mbar, dtype=np.int64)
        return self.la[m] + self.lb[mbar] - self.lab[m + mbar]
