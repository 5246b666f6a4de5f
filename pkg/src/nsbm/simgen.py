"""Synthetic multi-network generators for the simulation studies."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import NetworkCollection
from .netcore import Adjacency
from .numerics import derive_rng

__all__ = ["SimConfig", "SimOutput", "gen_eta", "ead", "gen_collection", "personality_benchmark"]


@dataclass
class SimConfig:
    """Knobs of the generic generator.

    n may be a single node count or an inclusive (lo, hi) range; L gives the
    community count of each class. gamma interpolates between a perfectly
    assortative connectivity matrix (0) and a random symmetric one (1);
    lam is the target expected average degree; tau is the per-node probability
    of resampling a community label away from its class template.
    """

    J: int
    n: int | tuple[int, int]
    K: int
    L: tuple[int, ...]
    gamma: float = 0.0
    lam: float = 10.0
    tau: float = 0.0
    seed: int = 0
    even_z: bool = True

    def __post_init__(self):
        if self.J < 1 or self.K < 1:
            raise ValueError("J and K must be >= 1")
        if isinstance(self.n, (int, np.integer)):
            self.n = (int(self.n), int(self.n))
        else:
            self.n = (int(self.n[0]), int(self.n[1]))
        if self.n[0] < 1 or self.n[1] < self.n[0]:
            raise ValueError("invalid node-count range")
        if isinstance(self.L, (int, np.integer)):
            self.L = tuple([int(self.L)] * self.K)
        else:
            self.L = tuple(int(v) for v in self.L)
        if len(self.L) != self.K:
            raise ValueError("need one community count per class")
        if any(l < 1 for l in self.L):
            raise ValueError("community counts must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.lam <= 0.0:
            raise ValueError("target degree must be positive")


@dataclass
class SimOutput:
    """Generated networks with truth labels and the realized connectivity matrices."""

    collection: NetworkCollection
    eta: list[np.ndarray]
    alphas: np.ndarray = field(default=None)


def gen_eta(L: int, gamma: float, rng) -> np.ndarray:
    """(1 - gamma) I + gamma U with U symmetric uniform on [0, 1]."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    U = np.zeros((L, L))
    iu = np.triu_indices(L)
    vals = rng.random(len(iu[0]))
    U[iu] = vals
    U[(iu[1], iu[0])] = vals
    return (1.0 - gamma) * np.eye(L) + gamma * U


def ead(n: int, eta: np.ndarray, xi) -> float:
    """Expected average degree of an SBM with the given labels: the mean over
    nodes of the summed edge probabilities to all other nodes."""
    if n < 2:
        return 0.0
    xi = np.asarray(xi, dtype=np.int64)
    counts = np.bincount(xi, minlength=eta.shape[0]).astype(float)
    full = float(counts @ eta @ counts)
    diag = float(np.sum(counts * np.diag(eta)))
    return (full - diag) / n


def _sample_sbm_edges(n: int, probs_of_pair, rng) -> np.ndarray:
    s, t = np.triu_indices(n, 1)
    p = probs_of_pair(s, t)
    keep = rng.random(p.size) < p
    return np.stack([s[keep], t[keep]], axis=1)


def gen_collection(cfg: SimConfig, rng=None) -> SimOutput:
    """Networks from the two-level generative design.

    Classes get independent connectivity matrices; each class has a template
    label vector, each network perturbs it coordinate-wise with probability
    tau, and edge probabilities are rescaled so the expected average degree
    matches lam (clamped into [0, 1] with a warning if the target exceeds
    what the matrix supports). With rng=None each network uses its own stream
    derived from cfg.seed, so generation can run in parallel reproducibly.
    """
    master = rng if rng is not None else derive_rng(cfg.seed, 0)
    eta = [gen_eta(cfg.L[k], cfg.gamma, master) for k in range(cfg.K)]
    if cfg.even_z and cfg.J % cfg.K == 0:
        z = np.tile(np.arange(cfg.K, dtype=np.int64), cfg.J // cfg.K)
    else:
        z = master.integers(0, cfg.K, size=cfg.J).astype(np.int64)
    n_lo, n_hi = cfg.n
    templates = [master.integers(0, cfg.L[k], size=n_hi).astype(np.int64) for k in range(cfg.K)]
    networks = []
    xi_true = []
    alphas = np.empty(cfg.J)
    clamped = False
    for j in range(cfg.J):
        r = master if rng is not None else derive_rng(cfg.seed, 1, j)
        n_j = n_lo if n_lo == n_hi else int(r.integers(n_lo, n_hi + 1))
        k = int(z[j])
        xi = templates[k][:n_j].copy()
        if cfg.tau > 0.0:
            mask = r.random(n_j) < cfg.tau
            xi[mask] = r.integers(0, cfg.L[k], size=int(mask.sum()))
        e = ead(n_j, eta[k], xi)
        if e <= 0.0:
            raise ValueError("expected average degree is zero; cannot rescale to the target degree")
        alphas[j] = cfg.lam / e
        probs = alphas[j] * eta[k]
        if probs.max() > 1.0:
            clamped = True
            probs = np.clip(probs, 0.0, 1.0)
        edges = _sample_sbm_edges(n_j, lambda s, t: probs[xi[s], xi[t]], r)
        networks.append(Adjacency.from_edges(n_j, edges))
        xi_true.append(xi)
    if clamped:
        warnings.warn(
            "edge probabilities exceeded 1 after degree rescaling and were clamped",
            RuntimeWarning,
            stacklevel=2,
        )
    coll = NetworkCollection(networks, z_true=z, xi_true=xi_true)
    return SimOutput(collection=coll, eta=eta, alphas=alphas)


# school-type interaction probabilities between the three personality types
# (extrovert, ambivert, introvert), and per-school type proportions
PERSONALITY_ETA = [
    np.array([[0.9, 0.75, 0.5], [0.75, 0.6, 0.25], [0.5, 0.25, 0.1]]),
    np.array([[0.8, 0.1, 0.3], [0.1, 0.9, 0.2], [0.3, 0.2, 0.7]]),
    np.array([[0.1, 0.4, 0.6], [0.4, 0.3, 0.1], [0.6, 0.1, 0.5]]),
]
PERSONALITY_PROPS = np.array([[0.40, 0.35, 0.25], [0.70, 0.15, 0.15], [0.20, 0.40, 0.40]])


def personality_benchmark(J_per_school: int, n_range=(20, 100), rng=None, seed: int = 0) -> SimOutput:
    """Social networks from three school types with fixed interaction matrices.

    Each school type contributes J_per_school networks; node counts are
    uniform over n_range and personality types are drawn from the per-school
    proportions. Edges use the school's matrix directly (no degree rescaling).
    """
    if rng is None:
        rng = derive_rng(seed, 0)
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    z = np.repeat(np.arange(3, dtype=np.int64), J_per_school)
    networks = []
    xi_true = []
    for j in range(3 * J_per_school):
        k = int(z[j])
        n_j = int(rng.integers(n_lo, n_hi + 1))
        xi = rng.choice(3, size=n_j, p=PERSONALITY_PROPS[k]).astype(np.int64)
        eta_k = PERSONALITY_ETA[k]
        edges = _sample_sbm_edges(n_j, lambda s, t: eta_k[xi[s], xi[t]], rng)
        networks.append(Adjacency.from_edges(n_j, edges))
        xi_true.append(xi)
    coll = NetworkCollection(networks, z_true=z, xi_true=xi_true)
    return SimOutput(collection=coll, eta=[m.copy() for m in PERSONALITY_ETA], alphas=np.ones(3 * J_per_school))
