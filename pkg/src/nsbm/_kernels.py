"""Compiled inner loops for the sequential community-label sweeps.

Each sweep mutates the label vector and all affected sufficient statistics
(per-network block sums, class aggregates, label counts) in place, exactly.
Uniform variates are drawn by the caller so the compiled code stays free of
RNG state and the chain remains bit-reproducible.
"""

import numpy as np
from numba import njit

NEG_INF = -np.inf


@njit(cache=True)
def draw_from_logits(logits, u):
    """Categorical draw from unnormalized log-weights; -1 if all are -inf."""
    L = logits.shape[0]
    m = NEG_INF
    for x in range(L):
        if logits[x] > m:
            m = logits[x]
    if m == NEG_INF:
        return -1
    total = 0.0
    for x in range(L):
        total += np.exp(logits[x] - m)
    target = u * total
    acc = 0.0
    for x in range(L):
        acc += np.exp(logits[x] - m)
        if acc > target:
            return x
    return L - 1


@njit(cache=True)
def node_tau(indptr, indices, xi, s, L):
    """Edge counts from node s into each community."""
    tau = np.zeros(L, dtype=np.int64)
    for i in range(indptr[s], indptr[s + 1]):
        tau[xi[indices[i]]] += 1
    return tau


@njit(cache=True)
def apply_move(xi, s, x1, tau, nu, m_net, N_net, m_cls, N_cls, nlab):
    """Relabel node s to x1 and update all block sums by the exact delta."""
    x0 = xi[s]
    L = tau.shape[0]
    for y in range(L):
        if y != x0 and y != x1:
            m_net[x0, y] -= tau[y]
            m_net[y, x0] = m_net[x0, y]
            m_net[x1, y] += tau[y]
            m_net[y, x1] = m_net[x1, y]
            N_net[x0, y] -= nu[y]
            N_net[y, x0] = N_net[x0, y]
            N_net[x1, y] += nu[y]
            N_net[y, x1] = N_net[x1, y]
            m_cls[x0, y] -= tau[y]
            m_cls[y, x0] = m_cls[x0, y]
            m_cls[x1, y] += tau[y]
            m_cls[y, x1] = m_cls[x1, y]
            N_cls[x0, y] -= nu[y]
            N_cls[y, x0] = N_cls[x0, y]
            N_cls[x1, y] += nu[y]
            N_cls[y, x1] = N_cls[x1, y]
    m_net[x0, x0] -= tau[x0]
    m_net[x1, x1] += tau[x1]
    N_net[x0, x0] -= nu[x0]
    N_net[x1, x1] += nu[x1]
    m_cls[x0, x0] -= tau[x0]
    m_cls[x1, x1] += tau[x1]
    N_cls[x0, x0] -= nu[x0]
    N_cls[x1, x1] += nu[x1]
    dm = tau[x0] - tau[x1]
    dn = nu[x0] - nu[x1]
    m_net[x0, x1] += dm
    m_net[x1, x0] = m_net[x0, x1]
    N_net[x0, x1] += dn
    N_net[x1, x0] = N_net[x0, x1]
    m_cls[x0, x1] += dm
    m_cls[x1, x0] = m_cls[x0, x1]
    N_cls[x0, x1] += dn
    N_cls[x1, x0] = N_cls[x0, x1]
    nlab[x0] -= 1
    nlab[x1] += 1
    xi[s] = x1


@njit(cache=True)
def gibbs_xi_logits(logw, logitk, log1mk, tau, nu):
    """log p(label = x) + const given the class edge-probability logs."""
    L = logw.shape[0]
    logits = np.empty(L)
    for x in range(L):
        acc = logw[x]
        for y in range(L):
            acc += tau[y] * logitk[x, y] + nu[y] * log1mk[x, y]
        logits[x] = acc
    return logits


@njit(cache=True)
def gibbs_xi_sweep(
    indptr, indices, xi, m_net, N_net, m_cls, N_cls, nlab, logw, logitk, log1mk, uniforms
):
    n = xi.shape[0]
    L = logw.shape[0]
    moves = 0
    for s in range(n):
        x0 = xi[s]
        tau = node_tau(indptr, indices, xi, s, L)
        nu = nlab.copy()
        nu[x0] -= 1
        logits = gibbs_xi_logits(logw, logitk, log1mk, tau, nu)
        x1 = draw_from_logits(logits, uniforms[s])
        if x1 < 0:
            x1 = x0
        if x1 != x0:
            apply_move(xi, s, x1, tau, nu, m_net, N_net, m_cls, N_cls, nlab)
            moves += 1
    return moves


@njit(cache=True)
def _rel_log_beta(la, lb, lab, m, mbar):
    return la[m] + lb[mbar] - lab[m + mbar]


@njit(cache=True)
def collapsed_xi_logits(m_cls, N_cls, logw, la, lb, lab, tau, nu, x0):
    """log p(label = x) + const with eta integrated out.

    Every candidate changes only the two class-aggregate rows {x0, x}, so the
    Beta-ratio sum is assembled from one full removal pass for row x0 plus a
    per-candidate row pass, with the shared (x0, x) entry patched to carry the
    combined change. O(L) table lookups per candidate.
    """
    L = logw.shape[0]
    logits = np.empty(L)
    # removal of node s's edges/pairs from row x0, summed over the row
    t0 = 0.0
    for y in range(L):
        mc = m_cls[x0, y]
        mb = N_cls[x0, y] - mc
        t0 += _rel_log_beta(la, lb, lab, mc - tau[y], mb - (nu[y] - tau[y])) - _rel_log_beta(
            la, lb, lab, mc, mb
        )
    for x in range(L):
        if x == x0:
            logits[x] = logw[x]
            continue
        r = 0.0
        for y in range(L):
            mc = m_cls[x, y]
            mb = N_cls[x, y] - mc
            r += _rel_log_beta(la, lb, lab, mc + tau[y], mb + (nu[y] - tau[y])) - _rel_log_beta(
                la, lb, lab, mc, mb
            )
        mc = m_cls[x0, x]
        mb = N_cls[x0, x] - mc
        base = _rel_log_beta(la, lb, lab, mc, mb)
        # the (x0, x) entry appears in both row passes; replace both of its
        # single-sided contributions with the true combined change
        corr = -(_rel_log_beta(la, lb, lab, mc + tau[x0], mb + (nu[x0] - tau[x0])) - base)
        corr -= _rel_log_beta(la, lb, lab, mc - tau[x], mb - (nu[x] - tau[x])) - base
        corr += (
            _rel_log_beta(
                la,
                lb,
                lab,
                mc + tau[x0] - tau[x],
                mb + (nu[x0] - tau[x0]) - (nu[x] - tau[x]),
            )
            - base
        )
        logits[x] = logw[x] + t0 + r + corr
    return logits


@njit(cache=True)
def collapsed_xi_sweep(
    indptr, indices, xi, m_net, N_net, m_cls, N_cls, nlab, logw, la, lb, lab, uniforms, greedy=False
):
    n = xi.shape[0]
    L = logw.shape[0]
    moves = 0
    for s in range(n):
        x0 = xi[s]
        tau = node_tau(indptr, indices, xi, s, L)
        nu = nlab.copy()
        nu[x0] -= 1
        logits = collapsed_xi_logits(m_cls, N_cls, logw, la, lb, lab, tau, nu, x0)
        if greedy:
            x1 = int(np.argmax(logits))
            if logits[x1] == NEG_INF:
                x1 = x0
        else:
            x1 = draw_from_logits(logits, uniforms[s])
            if x1 < 0:
                x1 = x0
        if x1 != x0:
            apply_move(xi, s, x1, tau, nu, m_net, N_net, m_cls, N_cls, nlab)
            moves += 1
    return moves


@njit(cache=True)
def marginal_xi_logits(m_net, N_net, nlab, logpi, logw, logit, log1m, tau, nu, x0):
    """log p(label = x) + const with the network's class summed out.

    Combines, for every class k, the weight of the rest of the network under
    class k with the candidate node's own edge terms, then log-sum-exps over
    classes.
    """
    K = logpi.shape[0]
    L = logw.shape[1]
    base = np.empty(K)
    for k in range(K):
        full_m = 0.0
        full_n = 0.0
        diag_m = 0.0
        diag_n = 0.0
        for x in range(L):
            for y in range(L):
                full_m += m_net[x, y] * logit[k, x, y]
                full_n += N_net[x, y] * log1m[k, x, y]
            diag_m += m_net[x, x] * logit[k, x, x]
            diag_n += N_net[x, x] * log1m[k, x, x]
        tri = 0.5 * (full_m + diag_m) + 0.5 * (full_n + diag_n)
        rm = 0.0
        for y in range(L):
            rm += tau[y] * logit[k, x0, y] + nu[y] * log1m[k, x0, y]
        lab_term = 0.0
        for x in range(L):
            c = nlab[x] - 1 if x == x0 else nlab[x]
            if c > 0:
                lab_term += c * logw[k, x]
        base[k] = logpi[k] + lab_term + tri - rm
    logits = np.empty(L)
    vals = np.empty(K)
    for x in range(L):
        vmax = NEG_INF
        for k in range(K):
            node = logw[k, x]
            for y in range(L):
                node += tau[y] * logit[k, x, y] + nu[y] * log1m[k, x, y]
            vals[k] = base[k] + node
            if vals[k] > vmax:
                vmax = vals[k]
        if vmax == NEG_INF:
            logits[x] = NEG_INF
        else:
            acc = 0.0
            for k in range(K):
                acc += np.exp(vals[k] - vmax)
            logits[x] = vmax + np.log(acc)
    return logits


@njit(cache=True)
def marginal_xi_sweep(
    indptr,
    indices,
    xi,
    m_net,
    N_net,
    m_cls,
    N_cls,
    nlab,
    logpi,
    logw,
    logit,
    log1m,
    uniforms,
):
    n = xi.shape[0]
    L = logw.shape[1]
    moves = 0
    for s in range(n):
        x0 = xi[s]
        tau = node_tau(indptr, indices, xi, s, L)
        nu = nlab.copy()
        nu[x0] -= 1
        logits = marginal_xi_logits(m_net, N_net, nlab, logpi, logw, logit, log1m, tau, nu, x0)
        x1 = draw_from_logits(logits, uniforms[s])
        if x1 < 0:
            x1 = x0
        if x1 != x0:
            apply_move(xi, s, x1, tau, nu, m_net, N_net, m_cls, N_cls, nlab)
            moves += 1
    return moves
