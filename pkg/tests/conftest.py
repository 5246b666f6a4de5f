import numpy as np
import pytest

from nsbm.model import Hyper, ModelState, NetworkCollection
from nsbm.netcore import Adjacency


def random_adjacency(rng, n, p=0.5):
    iu = np.stack(np.triu_indices(n, 1), axis=1)
    edges = iu[rng.random(len(iu)) < p]
    return Adjacency.from_edges(n, edges)


def random_small_instance(rng, J=2, K=2, L=2, n_lo=3, n_hi=4):
    """A random tiny model state for kernel-exactness checks."""
    nets = [random_adjacency(rng, int(rng.integers(n_lo, n_hi + 1))) for _ in range(J)]
    data = NetworkCollection(nets)
    h = Hyper(
        K=K,
        L=L,
        alpha=float(rng.uniform(0.5, 2.0)),
        beta=float(rng.uniform(0.5, 2.0)),
        w0=float(rng.uniform(0.5, 2.0)),
        pi0=float(rng.uniform(0.5, 2.0)),
    )
    iu = np.triu_indices(L)
    eta = np.zeros((K, L, L))
    for k in range(K):
        vals = rng.uniform(0.1, 0.9, len(iu[0]))
        eta[k][iu] = vals
        eta[k][(iu[1], iu[0])] = vals
    u = np.ones((K, L))
    u[:, :-1] = rng.uniform(0.2, 0.8, (K, L - 1))
    v = np.ones(K)
    v[:-1] = rng.uniform(0.2, 0.8, K - 1)
    state = ModelState(
        z=rng.integers(0, K, J),
        xi=[rng.integers(0, L, A.n) for A in nets],
        eta=eta,
        u=u,
        v=v,
    )
    return data, h, state


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
