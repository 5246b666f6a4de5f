"""NSBM parameter containers, hyperparameters, and exact log-densities.

The truncated model fixes the final stick proportion at each level to 1 so
that weights sum to one exactly; the prior terms of those forced sticks are
omitted from the log densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

from .netcore import Adjacency, compute_block_sums, validate_labels
from .numerics import stick_break, tri_sum

__all__ = [
    "ETA_CLAMP",
    "Hyper",
    "NetworkCollection",
    "EtaLogs",
    "ModelState",
    "TraceRow",
    "PosteriorSamples",
    "aggregate_block_sums",
    "log_joint",
    "collapsed_log_joint",
    "estimate_eta",
]

# edge probabilities are clamped into [ETA_CLAMP, 1 - ETA_CLAMP] before log
# transforms so extreme Beta draws cannot produce infinities
ETA_CLAMP = 1e-12


@dataclass(frozen=True)
class Hyper:
    """Prior shapes and truncation bounds.

    alpha/beta: Beta prior on edge probabilities; w0/pi0: stick-breaking
    concentrations at the community/class level; K/L: truncation bounds.
    """

    K: int
    L: int
    alpha: float = 1.0
    beta: float = 1.0
    w0: float = 1.0
    pi0: float = 1.0

    def __post_init__(self):
        if self.K < 1 or self.L < 1:
            raise ValueError("truncations K and L must be >= 1")
        if min(self.alpha, self.beta, self.w0, self.pi0) <= 0.0:
            raise ValueError("hyperparameters must be positive")

    @classmethod
    def default_for(cls, J: int, **kw) -> "Hyper":
        """Default truncation K = min(J, 20), L = 20."""
        kw.setdefault("K", max(1, min(int(J), 20)))
        kw.setdefault("L", 20)
        return cls(**kw)


@dataclass
class NetworkCollection:
    """A set of networks with optional ground-truth class and community labels."""

    networks: list[Adjacency]
    z_true: np.ndarray | None = None
    xi_true: list[np.ndarray] | None = None

    def __post_init__(self):
        if self.z_true is not None:
            self.z_true = np.asarray(self.z_true, dtype=np.int64)
            if self.z_true.shape != (self.J,):
                raise ValueError("z_true length does not match network count")
        if self.xi_true is not None:
            if len(self.xi_true) != self.J:
                raise ValueError("xi_true length does not match network count")
            self.xi_true = [
                validate_labels(x, A.n, int(np.max(x)) + 1 if np.asarray(x).size else 1)
                for x, A in zip(self.xi_true, self.networks)
            ]

    @property
    def J(self) -> int:
        return len(self.networks)

    @property
    def n_nodes(self) -> list[int]:
        return [A.n for A in self.networks]

    def equals(self, other: "NetworkCollection") -> bool:
        if self.J != other.J:
            return False
        if not all(a.equals(b) for a, b in zip(self.networks, other.networks)):
            return False
        if (self.z_true is None) != (other.z_true is None):
            return False
        if self.z_true is not None and not np.array_equal(self.z_true, other.z_true):
            return False
        if (self.xi_true is None) != (other.xi_true is None):
            return False
        if self.xi_true is not None and not all(
            np.array_equal(a, b) for a, b in zip(self.xi_true, other.xi_true)
        ):
            return False
        return True


@dataclass
class EtaLogs:
    """Cached log[eta/(1-eta)] and log(1-eta), clamped away from 0 and 1."""

    logit: np.ndarray
    log1m: np.ndarray

    @classmethod
    def from_eta(cls, eta: np.ndarray) -> "EtaLogs":
        p = np.clip(eta, ETA_CLAMP, 1.0 - ETA_CLAMP)
        return cls(logit=np.log(p) - np.log1p(-p), log1m=np.log1p(-p))


@dataclass
class ModelState:
    """All latent variables of the truncated model.

    w and pi are always the stick-breaking images of u and v; the final stick
    at each level is forced to 1 so the weights sum to one exactly.
    """

    z: np.ndarray
    xi: list[np.ndarray]
    eta: np.ndarray
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray = field(default=None)
    pi: np.ndarray = field(default=None)

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.int64)
        self.refresh_weights()

    def refresh_weights(self) -> None:
        self.w = np.stack([stick_break(uk) for uk in self.u])
        self.pi = stick_break(self.v)

    @property
    def K(self) -> int:
        return self.eta.shape[0]

    @property
    def L(self) -> int:
        return self.eta.shape[1]

    def copy(self) -> "ModelState":
        return ModelState(
            z=self.z.copy(),
            xi=[x.copy() for x in self.xi],
            eta=self.eta.copy(),
            u=self.u.copy(),
            v=self.v.copy(),
        )

    def validate(self, data: NetworkCollection, h: Hyper) -> None:
        if self.z.shape != (data.J,):
            raise ValueError("class labels do not match network count")
        if self.z.size and (self.z.min() < 0 or self.z.max() >= h.K):
            raise ValueError("class label out of range")
        for x, A in zip(self.xi, data.networks):
            validate_labels(x, A.n, h.L)
        if self.eta.shape != (h.K, h.L, h.L):
            raise ValueError("eta has wrong shape")


@dataclass
class TraceRow:
    """Per-iteration diagnostics recorded by the chain runner."""

    iter: int
    log_density: float
    occupied_classes: int
    mean_occupied_communities: float
    z_nmi: float | None
    mean_xi_nmi: float | None
    elapsed_ms: float


@dataclass
class PosteriorSamples:
    """Thinned (z, xi) draws plus the per-iteration trace."""

    kind: str
    seed: int
    iters: list[int] = field(default_factory=list)
    z_draws: list[np.ndarray] = field(default_factory=list)
    xi_draws: list[list[np.ndarray]] = field(default_factory=list)
    trace: list[TraceRow] = field(default_factory=list)

    @property
    def n_draws(self) -> int:
        return len(self.iters)


def aggregate_block_sums(z, xi, data: NetworkCollection, K: int, L: int):
    """Class-level block sums (m_k, N_k), each (K, L, L) int64."""
    z = np.asarray(z, dtype=np.int64)
    m = np.zeros((K, L, L), dtype=np.int64)
    N = np.zeros((K, L, L), dtype=np.int64)
    for j, A in enumerate(data.networks):
        bs = compute_block_sums(A, xi[j], L)
        m[z[j]] += bs.m
        N[z[j]] += bs.N
    return m, N


def _safe_count_dot(counts: np.ndarray, logvals: np.ndarray) -> float:
    # sum counts * logvals with the convention 0 * (-inf) = 0
    mask = counts > 0
    if not np.any(mask):
        return 0.0
    return float(np.dot(counts[mask], logvals[mask]))


def _log_label_prior(z, xi, w, pi) -> float:
    z = np.asarray(z, dtype=np.int64)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
        logpi = np.log(pi)
    total = float(logpi[z].sum())
    L = w.shape[1]
    for j, x in enumerate(xi):
        counts = np.bincount(np.asarray(x, dtype=np.int64), minlength=L)
        total += _safe_count_dot(counts, logw[z[j]])
    return total


def _stick_prior(sticks: np.ndarray, conc: float) -> float:
    # Beta(1, conc) log-density over all but the forced terminal stick
    s = np.asarray(sticks, dtype=float)
    free = s[..., :-1] if s.shape[-1] > 1 else s[..., :0]
    return float(np.log(conc) * free.size + (conc - 1.0) * np.log1p(-free).sum())


def log_joint(state: ModelState, data: NetworkCollection, h: Hyper) -> float:
    """Log joint density of (A, eta, xi, z, u, v), up to an additive constant.

    Bernoulli edge terms are evaluated through block sums; clamped logs are
    used so the value stays finite for extreme edge probabilities.
    """
    state.validate(data, h)
    elogs = EtaLogs.from_eta(state.eta)
    total = 0.0
    for j, A in enumerate(data.networks):
        bs = compute_block_sums(A, state.xi[j], h.L)
        k = state.z[j]
        total += tri_sum(bs.m * elogs.logit[k] + bs.N * elogs.log1m[k])
    total += _log_label_prior(state.z, state.xi, state.w, state.pi)
    # Beta priors: eta over x <= y per class, sticks without the terminal one
    iu = np.triu_indices(h.L)
    e = state.eta[:, iu[0], iu[1]]
    total += float(
        ((h.alpha - 1.0) * np.log(e) + (h.beta - 1.0) * np.log1p(-e)).sum()
        - e.size * betaln(h.alpha, h.beta)
    )
    total += _stick_prior(state.u, h.w0)
    total += _stick_prior(state.v, h.pi0)
    return total


def collapsed_log_joint(z, xi, u, v, data: NetworkCollection, h: Hyper) -> float:
    """Log density with eta integrated out, up to an additive constant.

    Sum of log B(m_k + alpha, mbar_k + beta) over classes and block pairs,
    plus the class and community label prior terms.
    """
    m, N = aggregate_block_sums(z, xi, data, h.K, h.L)
    val = 0.0
    for k in range(h.K):
        val += tri_sum(betaln(m[k] + h.alpha, N[k] - m[k] + h.beta))
    w = np.stack([stick_break(uk) for uk in np.asarray(u, dtype=float)])
    pi = stick_break(v)
    val += _log_label_prior(z, xi, w, pi)
    return val


def estimate_eta(z, xi, data: NetworkCollection, h: Hyper) -> np.ndarray:
    """Posterior-mean edge probabilities (m_k + alpha) / (N_k + alpha + beta).

    Empty blocks fall back to the prior mean alpha / (alpha + beta).
    """
    m, N = aggregate_block_sums(z, xi, data, h.K, h.L)
    return (m + h.alpha) / (N + h.alpha + h.beta)
