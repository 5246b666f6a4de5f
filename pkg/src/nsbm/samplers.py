"""The four Gibbs samplers (G, CG, BG, IBG), their update kernels, and the
chain runner.

All label sweeps maintain the block-sum sufficient statistics incrementally
and exactly; the collapsed kernels evaluate Beta-function ratios through
rising-factorial prefix tables instead of exponentiating near-zero Betas.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from . import _kernels
from ._kernels import collapsed_xi_logits, gibbs_xi_logits, marginal_xi_logits  # noqa: F401
from .metrics import nmi
from .model import (
    EtaLogs,
    Hyper,
    ModelState,
    NetworkCollection,
    PosteriorSamples,
    TraceRow,
    collapsed_log_joint,
    log_joint,
)
from .netcore import canonical_relabel, compute_block_sums
from .numerics import BetaRatioTable, derive_rng, sample_categorical_logits

__all__ = [
    "SAMPLERS",
    "SAMPLER_STEPS",
    "STEP_KERNELS",
    "ChainOptions",
    "SuffStats",
    "update_eta",
    "update_xi_gibbs",
    "update_z_gibbs",
    "update_u",
    "update_v",
    "update_xi_collapsed",
    "update_z_collapsed",
    "update_xi_marginal_z",
    "gibbs_z_logits",
    "collapsed_z_logits",
    "run_chain",
    "dpsbm_init",
]

SAMPLERS = ("g", "cg", "bg", "ibg")

# per-iteration update order of each sampler
SAMPLER_STEPS = {
    "g": ("eta", "xi_gibbs", "z_gibbs", "u", "v"),
    "cg": ("xi_collapsed", "z_collapsed", "u", "v"),
    "bg": ("eta", "xi_marginal_z", "z_gibbs", "u", "v"),
    "ibg": ("eta", "z_gibbs", "xi_marginal_z", "u", "v"),
}


@dataclass
class ChainOptions:
    """Run-length, seeding, and initialization knobs for one chain."""

    iterations: int = 1000
    burnin: int = 500
    thin: int = 5
    seed: int = 0
    init: str = "dpsbm-warm"  # or "random"
    init_iterations: int = 100
    record_trace: bool = True

    def __post_init__(self):
        if self.iterations < 0 or self.burnin < 0:
            raise ValueError("iterations and burnin must be nonnegative")
        if self.iterations > 0 and self.burnin >= self.iterations:
            raise ValueError("burnin must be smaller than iterations")
        if self.thin < 1:
            raise ValueError("thinning must be >= 1")
        if self.init not in ("dpsbm-warm", "random"):
            raise ValueError(f"unknown initialization mode {self.init!r}")


class SuffStats:
    """Per-network and per-class block sums plus label counts.

    The label sweeps mutate these arrays in place; move_network shifts a
    network's sums between class aggregates when its class label changes.
    """

    def __init__(self, data: NetworkCollection, z, xi, K: int, L: int):
        J = data.J
        self.K, self.L = K, L
        self.m_net = np.zeros((J, L, L), dtype=np.int64)
        self.N_net = np.zeros((J, L, L), dtype=np.int64)
        self.nlab = np.zeros((J, L), dtype=np.int64)
        for j, A in enumerate(data.networks):
            bs = compute_block_sums(A, xi[j], L)
            self.m_net[j] = bs.m
            self.N_net[j] = bs.N
            self.nlab[j] = np.bincount(np.asarray(xi[j], dtype=np.int64), minlength=L)
        self.m_cls = np.zeros((K, L, L), dtype=np.int64)
        self.N_cls = np.zeros((K, L, L), dtype=np.int64)
        z = np.asarray(z, dtype=np.int64)
        np.add.at(self.m_cls, z, self.m_net)
        np.add.at(self.N_cls, z, self.N_net)

    def move_network(self, j: int, r_old: int, r_new: int) -> None:
        if r_old == r_new:
            return
        self.m_cls[r_old] -= self.m_net[j]
        self.m_cls[r_new] += self.m_net[j]
        self.N_cls[r_old] -= self.N_net[j]
        self.N_cls[r_new] += self.N_net[j]

    def matches_recompute(self, data: NetworkCollection, z, xi) -> bool:
        fresh = SuffStats(data, z, xi, self.K, self.L)
        return (
            np.array_equal(self.m_net, fresh.m_net)
            and np.array_equal(self.N_net, fresh.N_net)
            and np.array_equal(self.nlab, fresh.nlab)
            and np.array_equal(self.m_cls, fresh.m_cls)
            and np.array_equal(self.N_cls, fresh.N_cls)
        )


def _safe_log(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def _count_dot(counts: np.ndarray, logvals: np.ndarray) -> np.ndarray:
    """counts (J, L) x logvals (K, L) -> (J, K) with 0 * (-inf) = 0."""
    finite = np.isfinite(logvals)
    out = counts @ np.where(finite, logvals, 0.0).T
    bad = (counts > 0) @ (~finite).T.astype(np.int64)
    out = np.where(bad > 0, -np.inf, out)
    return out


def _tri_sum_stack(F: np.ndarray) -> np.ndarray:
    """Upper-triangle sums (diagonal once) along the last two axes."""
    diag = np.trace(F, axis1=-2, axis2=-1)
    return 0.5 * (F.sum(axis=(-2, -1)) + diag)


def update_eta(state: ModelState, stats: SuffStats, h: Hyper, rng) -> EtaLogs:
    """Conjugate redraw of all edge probabilities from the aggregate sums."""
    iu = np.triu_indices(h.L)
    a = stats.m_cls[:, iu[0], iu[1]] + h.alpha
    b = (stats.N_cls - stats.m_cls)[:, iu[0], iu[1]] + h.beta
    draws = rng.beta(a, b)
    eta = np.empty((h.K, h.L, h.L))
    eta[:, iu[0], iu[1]] = draws
    eta[:, iu[1], iu[0]] = draws
    state.eta = eta
    return EtaLogs.from_eta(eta)


def update_xi_gibbs(state, data, stats, elogs, h, rng) -> None:
    """Sequential node-label sweep given eta and the stick weights."""
    logw = _safe_log(state.w)
    for j, A in enumerate(data.networks):
        k = int(state.z[j])
        _kernels.gibbs_xi_sweep(
            A.indptr,
            A.indices,
            state.xi[j],
            stats.m_net[j],
            stats.N_net[j],
            stats.m_cls[k],
            stats.N_cls[k],
            stats.nlab[j],
            logw[k],
            elogs.logit[k],
            elogs.log1m[k],
            rng.random(A.n),
        )


def gibbs_z_logits(logpi, logw, nlab_j, m_j, N_j, logit, log1m) -> np.ndarray:
    """Class logits for one network given eta and the stick weights."""
    label = _count_dot(nlab_j[None, :], logw)[0]
    em = _tri_sum_stack(m_j[None] * logit)
    en = _tri_sum_stack(N_j[None] * log1m)
    return logpi + label + em + en


def update_z_gibbs(state, data, stats, elogs, h, rng) -> None:
    """Redraw all class labels from the same pre-update state.

    The conditionals are independent across networks given the global
    parameters, so the draws commute; aggregates are patched afterwards.
    """
    logpi = _safe_log(state.pi)
    logw = _safe_log(state.w)
    label = _count_dot(stats.nlab, logw)
    em = np.einsum("jxy,kxy->jk", stats.m_net, elogs.logit)
    en = np.einsum("jxy,kxy->jk", stats.N_net, elogs.log1m)
    dm = np.einsum("jx,kx->jk", stats.m_net.diagonal(axis1=1, axis2=2), elogs.logit.diagonal(axis1=1, axis2=2))
    dn = np.einsum("jx,kx->jk", stats.N_net.diagonal(axis1=1, axis2=2), elogs.log1m.diagonal(axis1=1, axis2=2))
    logits = logpi[None, :] + label + 0.5 * (em + dm) + 0.5 * (en + dn)
    z_old = state.z.copy()
    for j in range(data.J):
        state.z[j] = sample_categorical_logits(logits[j], rng)
    for j in range(data.J):
        stats.move_network(j, int(z_old[j]), int(state.z[j]))


def update_u(state, stats, h, rng) -> None:
    """Stick proportions of the community weights, pooled within each class."""
    pooled = np.zeros((h.K, h.L), dtype=np.int64)
    np.add.at(pooled, state.z, stats.nlab)
    n_gt = np.concatenate((np.cumsum(pooled[:, ::-1], axis=1)[:, ::-1][:, 1:], np.zeros((h.K, 1), dtype=np.int64)), axis=1)
    u = np.ones((h.K, h.L))
    if h.L > 1:
        u[:, :-1] = rng.beta(pooled[:, :-1] + 1.0, n_gt[:, :-1] + h.w0)
    state.u = u
    state.refresh_weights()


def update_v(state, h, rng) -> None:
    """Stick proportions of the class weights."""
    counts = np.bincount(state.z, minlength=h.K).astype(np.int64)
    n_gt = np.concatenate((np.cumsum(counts[::-1])[::-1][1:], [0]))
    v = np.ones(h.K)
    if h.K > 1:
        v[:-1] = rng.beta(counts[:-1] + 1.0, n_gt[:-1] + h.pi0)
    state.v = v
    state.refresh_weights()


def _table_capacity(data: NetworkCollection) -> int:
    # ceiling over any reachable lookup: all pair counts in one class, plus
    # one network's worth on top (z candidates), plus one node's pairs
    pairs = [A.n * (A.n - 1) // 2 for A in data.networks]
    n_max = max((A.n for A in data.networks), default=1)
    return int(sum(pairs) + max(pairs, default=0) + n_max + 2)


def update_xi_collapsed(state, data, stats, table: BetaRatioTable, h, rng) -> None:
    """Sequential node-label sweep with eta integrated out."""
    logw = _safe_log(state.w)
    table.ensure(_table_capacity(data))
    for j, A in enumerate(data.networks):
        k = int(state.z[j])
        _kernels.collapsed_xi_sweep(
            A.indptr,
            A.indices,
            state.xi[j],
            stats.m_net[j],
            stats.N_net[j],
            stats.m_cls[k],
            stats.N_cls[k],
            stats.nlab[j],
            logw[k],
            table.la,
            table.lb,
            table.lab,
            rng.random(A.n),
        )


def collapsed_z_logits(table, m_cls, N_cls, Dj, Nj, logpi, logw, nlab_j, r0) -> np.ndarray:
    """Class logits for one network with eta integrated out.

    Moving a network only shifts its block sums between the source and the
    candidate class aggregate, so each candidate costs one row of Beta ratios;
    the source-class factor is identical for every candidate and is computed
    once.
    """
    Dbar = Nj - Dj
    qbar = N_cls - m_cls
    rel_cur = table.rel_log_beta(m_cls, qbar)
    rel_add = table.rel_log_beta(m_cls + Dj[None], qbar + Dbar[None])
    ratio = _tri_sum_stack(rel_add - rel_cur)
    rel_rm = table.rel_log_beta(m_cls[r0] - Dj, qbar[r0] - Dbar)
    log_kappa = float(_tri_sum_stack((rel_rm - rel_cur[r0])[None])[0])
    label = _count_dot(nlab_j[None, :], logw)[0]
    logits = logpi + label + log_kappa + ratio
    logits[r0] = logpi[r0] + label[r0]
    return logits


def update_z_collapsed(state, data, stats, table: BetaRatioTable, h, rng) -> None:
    """Sequential class-label redraw with eta integrated out.

    Collapsing couples the networks through the shared aggregate counts, so
    the sweep must update the aggregates between draws.
    """
    logpi = _safe_log(state.pi)
    logw = _safe_log(state.w)
    table.ensure(_table_capacity(data))
    for j in range(data.J):
        r0 = int(state.z[j])
        logits = collapsed_z_logits(
            table,
            stats.m_cls,
            stats.N_cls,
            stats.m_net[j],
            stats.N_net[j],
            logpi,
            logw,
            stats.nlab[j],
            r0,
        )
        r1 = sample_categorical_logits(logits, rng)
        if r1 != r0:
            stats.move_network(j, r0, r1)
            state.z[j] = r1


def update_xi_marginal_z(state, data, stats, elogs, h, rng) -> None:
    """Sequential node-label sweep with each network's class summed out."""
    logpi = _safe_log(state.pi)
    logw = _safe_log(state.w)
    for j, A in enumerate(data.networks):
        k = int(state.z[j])
        _kernels.marginal_xi_sweep(
            A.indptr,
            A.indices,
            state.xi[j],
            stats.m_net[j],
            stats.N_net[j],
            stats.m_cls[k],
            stats.N_cls[k],
            stats.nlab[j],
            logpi,
            logw,
            elogs.logit,
            elogs.log1m,
            rng.random(A.n),
        )


STEP_KERNELS = {
    "eta": update_eta,
    "xi_gibbs": update_xi_gibbs,
    "z_gibbs": update_z_gibbs,
    "xi_collapsed": update_xi_collapsed,
    "z_collapsed": update_z_collapsed,
    "xi_marginal_z": update_xi_marginal_z,
    "u": update_u,
    "v": update_v,
}


def dpsbm_init(A, h: Hyper, rng, iterations: int = 100) -> np.ndarray:
    """Community labels from a single-network collapsed fit (one fixed class).

    This is the per-network warm start: a Dirichlet-process SBM fitted to the
    network alone, alternating collapsed label sweeps with stick updates. The
    final state is polished to its local mode with greedy argmax sweeps (the
    point estimate is wanted here, not one posterior draw), then communities
    are put in canonical index order so that independently fitted networks
    with the same structure come out aligned; class merges in the main chain
    are otherwise blocked by arbitrary label rotations.
    """
    h1 = Hyper(K=1, L=h.L, alpha=h.alpha, beta=h.beta, w0=h.w0, pi0=h.pi0)
    data1 = NetworkCollection([A])
    cap = max(1, min(h.L, 10))
    xi0 = rng.integers(0, cap, size=A.n).astype(np.int64)
    state = ModelState(
        z=np.zeros(1, dtype=np.int64),
        xi=[xi0],
        eta=np.full((1, h.L, h.L), 0.5),
        u=np.ones((1, h.L)),
        v=np.ones(1),
    )
    stats = SuffStats(data1, state.z, state.xi, 1, h.L)
    table = BetaRatioTable(h.alpha, h.beta, capacity=_table_capacity(data1))
    update_u(state, stats, h1, rng)
    for _ in range(iterations):
        update_xi_collapsed(state, data1, stats, table, h1, rng)
        update_u(state, stats, h1, rng)
    logw = _safe_log(state.w)
    none = np.empty(0)
    for _ in range(50):
        moves = _kernels.collapsed_xi_sweep(
            A.indptr,
            A.indices,
            state.xi[0],
            stats.m_net[0],
            stats.N_net[0],
            stats.m_cls[0],
            stats.N_cls[0],
            stats.nlab[0],
            logw[0],
            table.la,
            table.lb,
            table.lab,
            none,
            True,
        )
        if moves == 0:
            break
    return canonical_relabel(state.xi[0], h.L)


def _init_labels(data, h, opts, rng):
    if opts.init == "dpsbm-warm":
        xi = [
            dpsbm_init(A, h, derive_rng(opts.seed, 1, j), iterations=opts.init_iterations)
            for j, A in enumerate(data.networks)
        ]
        z = (np.arange(data.J) % h.K).astype(np.int64)
    else:
        cap = max(1, min(h.L, 10))
        xi = [rng.integers(0, cap, size=A.n).astype(np.int64) for A in data.networks]
        z = rng.integers(0, h.K, size=data.J).astype(np.int64)
    return z, xi


def _init_chain(data, h, opts, rng):
    z, xi = _init_labels(data, h, opts, rng)
    state = ModelState(z=z, xi=xi, eta=np.full((h.K, h.L, h.L), 0.5), u=np.ones((h.K, h.L)), v=np.ones(h.K))
    stats = SuffStats(data, state.z, state.xi, h.K, h.L)
    # continuous parameters start at conditional draws given the labels
    update_u(state, stats, h, rng)
    update_v(state, h, rng)
    elogs = update_eta(state, stats, h, rng)
    table = BetaRatioTable(h.alpha, h.beta, capacity=_table_capacity(data))
    return state, stats, elogs, table


def _trace_row(kind, state, data, stats, h, it, t0) -> TraceRow:
    if kind == "cg":
        ld = _collapsed_density_from_stats(state, stats, h)
    else:
        ld = log_joint(state, data, h)
    z_nmi = None
    xi_nmi = None
    if data.z_true is not None:
        z_nmi = nmi(state.z, data.z_true)
    if data.xi_true is not None:
        xi_nmi = float(np.mean([nmi(x, t) for x, t in zip(state.xi, data.xi_true)]))
    return TraceRow(
        iter=it,
        log_density=float(ld),
        occupied_classes=int(np.unique(state.z).size),
        mean_occupied_communities=float(np.mean([np.unique(x).size for x in state.xi])),
        z_nmi=z_nmi,
        mean_xi_nmi=xi_nmi,
        elapsed_ms=(time.perf_counter() - t0) * 1000.0,
    )


def _collapsed_density_from_stats(state, stats, h) -> float:
    val = float(_tri_sum_stack(betaln(stats.m_cls + h.alpha, stats.N_cls - stats.m_cls + h.beta)).sum())
    logpi = _safe_log(state.pi)
    logw = _safe_log(state.w)
    val += float(logpi[state.z].sum())
    val += float(_count_dot(stats.nlab, logw)[np.arange(len(state.z)), state.z].sum())
    return val


def _snapshot(samples: PosteriorSamples, it: int, state: ModelState) -> None:
    samples.iters.append(it)
    samples.z_draws.append(state.z.copy())
    samples.xi_draws.append([x.copy() for x in state.xi])


def run_chain(kind: str, data: NetworkCollection, h: Hyper, opts: ChainOptions, rng=None) -> PosteriorSamples:
    """Run one chain of the requested sampler and collect thinned draws.

    Draws are recorded after burn-in at every thin-th iteration; a run with
    iterations=0 records the initialization snapshot only. Identical seeds
    and options produce identical output.
    """
    kind = str(kind).lower()
    if kind not in SAMPLERS:
        raise ValueError(f"unknown sampler {kind!r}; expected one of {SAMPLERS}")
    if data.J == 0:
        raise ValueError("network collection is empty")
    if rng is None:
        rng = derive_rng(opts.seed, 0)
    t0 = time.perf_counter()
    state, stats, elogs, table = _init_chain(data, h, opts, rng)
    samples = PosteriorSamples(kind=kind, seed=opts.seed)
    if opts.record_trace:
        samples.trace.append(_trace_row(kind, state, data, stats, h, 0, t0))
    if opts.iterations == 0:
        _snapshot(samples, 0, state)
        return samples
    for it in range(1, opts.iterations + 1):
        for step in SAMPLER_STEPS[kind]:
            fn = STEP_KERNELS[step]
            if step == "eta":
                elogs = fn(state, stats, h, rng)
            elif step in ("xi_gibbs", "xi_marginal_z"):
                fn(state, data, stats, elogs, h, rng)
            elif step == "z_gibbs":
                fn(state, data, stats, elogs, h, rng)
            elif step in ("xi_collapsed", "z_collapsed"):
                fn(state, data, stats, table, h, rng)
            elif step == "u":
                fn(state, stats, h, rng)
            else:
                fn(state, h, rng)
        if opts.record_trace:
            samples.trace.append(_trace_row(kind, state, data, stats, h, it, t0))
        if it > opts.burnin and (it - opts.burnin) % opts.thin == 0:
            _snapshot(samples, it, state)
    return samples
