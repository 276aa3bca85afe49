"""Complex linear algebra and Grassmann-manifold geometry.

Subspaces of C^m with orthonormal bases are compared through their
projection matrices P = B B^H, which are invariant to the basis choice.
Two projection-norm distances are provided (spectral and Frobenius),
plus the closed-form Frobenius centroid of a set of equal-dimension
subspaces: the top eigenvectors of the summed projectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidInput, NumericalFailure

ORTHO_TOL = 1e-10
RECON_TOL = 1e-8
EIG_TIE_TOL = 1e-9


def _as_complex_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"{name} must be a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise InvalidInput(f"{name} contains non-finite entries")
    return a


def canonicalize_phases(columns: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Removes the per-column unit-phase freedom of SVD/eigendecompositions so
    repeated runs produce identical matrices.
    """
    out = np.array(columns, copy=True)
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        mag = np.abs(col[i])
        if mag > 0:
            out[:, j] = col * (col[i].conjugate() / mag)
    return out


@dataclass(frozen=True)
class SvdTriple:
    """Thin SVD ``U @ diag(singular_values) @ V^H`` with canonical phases."""

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of C^m given by an orthonormal basis (m x n)."""

    basis: np.ndarray

    def __post_init__(self):
        b = _as_complex_matrix(self.basis, "basis")
        m, n = b.shape
        if n > m:
            raise DimensionMismatch(f"basis is {m}x{n}; need n <= m")
        gram = b.conj().T @ b
        if np.max(np.abs(gram - np.eye(n))) > 100 * ORTHO_TOL:
            raise InvalidInput("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def subspace_dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


class CentroidResult(NamedTuple):
    subspace: Subspace
    non_unique: bool


def svd(matrix) -> SvdTriple:
    """Thin SVD with nonincreasing singular values and canonical phases.

    Raises InvalidInput on non-finite entries and NumericalFailure if the
    underlying iteration does not converge.
    """
    a = _as_complex_matrix(matrix)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    v = vh.conj().T
    # One shared phase per column pair keeps U diag(s) V^H unchanged.
    for j in range(u.shape[1]):
        col = u[:, j]
        i = int(np.argmax(np.abs(col)))
        mag = np.abs(col[i])
        if mag > 0:
            phase = col[i].conjugate() / mag
            u[:, j] = col * phase
            v[:, j] = v[:, j] * phase
    return SvdTriple(U=u, singular_values=s, V=v)


def _check_pair(u: Subspace, a: Subspace):
    if u.ambient_dim != a.ambient_dim or u.subspace_dim != a.subspace_dim:
        raise DimensionMismatch(
            f"subspaces are {u.ambient_dim}x{u.subspace_dim} and "
            f"{a.ambient_dim}x{a.subspace_dim}; need equal dimensions"
        )


def proj_dist_2(u: Subspace, a: Subspace) -> float:
    """Projection 2-norm distance: spectral norm of UU^H - AA^H."""
    _check_pair(u, a)
    return float(np.linalg.norm(u.projector() - a.projector(), 2))


def proj_dist_fro(u: Subspace, a: Subspace) -> float:
    """Projection Frobenius distance ||UU^H - AA^H||_F.

    Computed through the exact identity d^2 = 2 (n - ||A^H U||_F^2), which
    avoids forming the m x m projectors.
    """
    _check_pair(u, a)
    overlap = a.basis.conj().T @ u.basis
    d2 = 2.0 * (u.subspace_dim - np.sum(np.abs(overlap) ** 2))
    return float(np.sqrt(max(d2, 0.0)))


def hermitian_eig(g) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues nonincreasing.

    Returns (eigenvalues, eigenvectors) with orthonormal, phase-canonical
    eigenvector columns; ``g @ v_i == lam_i * v_i`` within 1e-8.
    """
    a = _as_complex_matrix(g, "G")
    m, n = a.shape
    if m != n:
        raise InvalidInput(f"G must be square, got {m}x{n}")
    if not np.allclose(a, a.conj().T, atol=ORTHO_TOL):
        raise InvalidInput("G is not Hermitian within 1e-10")
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    w = np.ascontiguousarray(w[order])
    v = canonicalize_phases(v[:, order])
    return w, v


def grassmann_centroid(subspaces: Sequence[Subspace], n: int) -> CentroidResult:
    """Frobenius centroid of equal-ambient subspaces.

    The minimizer of sum_k d_F^2(U_k, A) over tall unitary A (the Ky Fan
    property) is the span of the first ``n`` principal eigenvectors of
    G = sum_k U_k U_k^H. ``non_unique`` is set when the n-th and (n+1)-th
    eigenvalues of G tie within 1e-9, in which case the minimizer is a
    valid but non-unique choice.
    """
    if len(subspaces) == 0:
        raise InvalidInput("need at least one subspace")
    ambient = subspaces[0].ambient_dim
    for s in subspaces:
        if s.ambient_dim != ambient:
            raise DimensionMismatch("subspaces must share the ambient dimension")
    if n < 1:
        raise InvalidInput("n must be positive")
    if n > ambient:
        raise DimensionMismatch(f"n={n} exceeds ambient dimension {ambient}")

    g = np.zeros((ambient, ambient), dtype=np.complex128)
    for s in subspaces:
        g += s.projector()
    w, v = hermitian_eig(g)
    non_unique = n < ambient and abs(w[n - 1] - w[n]) < EIG_TIE_TOL
    return CentroidResult(Subspace(v[:, :n]), non_unique)
