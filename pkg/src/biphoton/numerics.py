"""Small dense complex linear algebra.

Vectors and matrices are plain ``numpy`` complex128 arrays. Every function
here returns a fresh read-only array, so results can be shared freely.
"""

import numpy as np

MAX_DIM = 16

HERMITIAN_TOL = 1e-10


class DimensionError(ValueError):
    pass


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def as_vector(entries):
    """Validate and freeze a complex vector."""
    v = np.asarray(entries, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return _frozen(v)


def as_matrix(entries):
    """Validate and freeze a complex matrix."""
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim != 2 or m.size == 0:
        raise DimensionError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return _frozen(m)


def tensor_product(a, b, max_dim=MAX_DIM):
    """Kronecker product of two vectors or two matrices.

    Raises DimensionError if the result would exceed ``max_dim`` along any
    axis.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.ndim != b.ndim:
        raise DimensionError("cannot mix vectors and matrices in a tensor product")
    shape = tuple(x * y for x, y in zip(a.shape, b.shape))
    if max(shape) > max_dim:
        raise DimensionError(f"tensor product of shape {shape} exceeds max dim {max_dim}")
    return _frozen(np.kron(a, b))


def adjoint(a):
    return _frozen(np.conj(np.asarray(a, dtype=np.complex128)).T)


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T)) <= tol


def hermitian_eigensystem(h):
    """Eigen-decomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray of float, descending
    eigenvectors : ndarray, eigenvector ``k`` in column ``k``
    """
    h = as_matrix(h)
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian within 1e-10")
    # symmetrize so LAPACK sees exactly Hermitian input
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    order = np.argsort(vals, kind="stable")[::-1]
    vals = np.array(vals[order], dtype=float)
    vals.setflags(write=False)
    return vals, _frozen(vecs[:, order])


def svd_small(m):
    """Singular value decomposition ``m = left @ diag(s) @ adjoint(right)``.

    Singular values are returned descending. ``left`` is ``rows x k`` and
    ``right`` is ``cols x k`` with ``k = min(rows, cols)``.
    """
    m = as_matrix(m)
    if max(m.shape) > 4:
        raise DimensionError(f"svd_small handles at most 4x4, got {m.shape}")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    s = np.array(s, dtype=float)
    s.setflags(write=False)
    return _frozen(u), s, _frozen(vh.conj().T)


def unitarity_error(u):
    """Max-norm distance of ``u^dagger u`` from the identity."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))
