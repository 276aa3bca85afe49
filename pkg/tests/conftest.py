import numpy as np
import pytest

from edgeflow.manifold import Subspace


def random_orthonormal(m, n, gen):
    """One random complex Stiefel point (m x n, Haar via phase-fixed QR)."""
    z = gen.standard_normal((m, n)) + 1j * gen.standard_normal((m, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * np.where(np.abs(d) == 0, 1.0, d.conj() / np.abs(d))


def random_stiefel_batch(m, n, count, gen):
    """Batch of random tall unitary matrices, shape (count, m, n)."""
    z = gen.standard_normal((count, m, n)) + 1j * gen.standard_normal((count, m, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    phases = np.where(np.abs(d) == 0, 1.0, d.conj() / np.abs(d))
    return q * phases[:, None, :]


def stiefel_objective(candidates, bases):
    """sum_k d_F^2(U_k, A) for every candidate A, via the overlap identity."""
    n = candidates.shape[2]
    total = np.zeros(candidates.shape[0])
    for u in bases:
        basis = u.basis if isinstance(u, Subspace) else u
        overlap = np.einsum("cmi,mj->cij", candidates.conj(), basis)
        total += 2.0 * (n - np.sum(np.abs(overlap) ** 2, axis=(1, 2)))
    return total


@pytest.fixture
def gen():
    return np.random.default_rng(20240817)
