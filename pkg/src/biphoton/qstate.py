"""Pure states, density operators and the bipartite toolkit.

States live on a :class:`SubsystemLayout`, an ordered list of labelled
subsystems whose tensor basis is big-endian (the first label is the most
significant index).
"""

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .numerics import (
    MAX_DIM,
    as_matrix,
    as_vector,
    hermitian_eigensystem,
    is_hermitian,
    svd_small,
)

NORM_TOL = 1e-12
DENSITY_TOL = 1e-10


@dataclass(frozen=True)
class SubsystemLayout:
    dims: tuple
    labels: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        labels = tuple(str(x) for x in self.labels)
        if len(dims) != len(labels):
            raise ValueError("dims and labels must have the same length")
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid subsystem dims {dims}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"subsystem labels must be unique, got {labels}")
        if prod(dims) > MAX_DIM:
            raise ValueError(f"total dimension {prod(dims)} exceeds {MAX_DIM}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return prod(self.dims)

    def index(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}; have {self.labels}") from None

    def only(self, label):
        i = self.index(label)
        return SubsystemLayout((self.dims[i],), (label,))

    @classmethod
    def single(cls, dim, label="S"):
        return cls((dim,), (label,))


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over ``layout``'s tensor basis."""

    amplitudes: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        amps = as_vector(self.amplitudes)
        if amps.size != self.layout.dim:
            raise ValueError(f"{amps.size} amplitudes for a layout of dim {self.layout.dim}")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero vector is not a state")
        if abs(norm - 1) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes, layout):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero vector is not a state")
        return cls(amps / norm, layout)

    @classmethod
    def basis(cls, index, layout):
        amps = np.zeros(layout.dim, dtype=np.complex128)
        amps[index] = 1
        return cls(amps, layout)

    def fidelity(self, other):
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    layout: SubsystemLayout

    def __post_init__(self):
        m = as_matrix(self.matrix)
        n = self.layout.dim
        if m.shape != (n, n):
            raise ValueError(f"matrix shape {m.shape} does not match layout dim {n}")
        if not is_hermitian(m, DENSITY_TOL):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > DENSITY_TOL:
            raise ValueError(f"density matrix trace {tr} is not 1")
        vals, _ = hermitian_eigensystem(m)
        if vals[-1] < -DENSITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {vals[-1]}")
        object.__setattr__(self, "matrix", m)

    def expectation(self, observable):
        return complex(np.trace(self.matrix @ np.asarray(observable)))

    def eigenvalues(self):
        return hermitian_eigensystem(self.matrix)[0]


@dataclass(frozen=True)
class SchmidtForm:
    coefficients: np.ndarray
    s_basis: tuple
    a_basis: tuple
    degenerate: bool = field(default=False)

    def reconstruct(self):
        return sum(
            c * np.kron(s, a) for c, s, a in zip(self.coefficients, self.s_basis, self.a_basis)
        )


def densify(psi):
    amps = psi.amplitudes
    return DensityOperator(np.outer(amps, amps.conj()), psi.layout)


def partial_trace(rho, keep):
    """Reduce ``rho`` to the subsystem labelled ``keep``."""
    layout = rho.layout
    if len(layout.dims) < 2:
        raise ValueError("partial trace needs at least two subsystems")
    k = layout.index(keep)
    n = len(layout.dims)
    t = rho.matrix.reshape(layout.dims + layout.dims)
    # row index letters a.., column letters A..; traced axes share a letter
    rows = [chr(ord("a") + i) for i in range(n)]
    cols = [r if i != k else r.upper() for i, r in enumerate(rows)]
    spec = "".join(rows) + "".join(cols) + "->" + rows[k] + cols[k]
    reduced = np.einsum(spec, t)
    return DensityOperator(reduced, layout.only(keep))


def _amplitude_matrix(psi):
    if len(psi.layout.dims) != 2:
        raise ValueError(f"Schmidt decomposition needs a bipartite layout, got {psi.layout.labels}")
    return psi.amplitudes.reshape(psi.layout.dims)


def schmidt(psi, degeneracy_tol=1e-9):
    """Schmidt decomposition of a bipartite pure state.

    The first nonzero component of every left vector is made real and
    positive, with the phase moved onto the matching right vector. When two
    coefficients coincide the bases are not unique and ``degenerate`` is set.
    """
    m = _amplitude_matrix(psi)
    left, singulars, right = svd_small(m)
    s_basis, a_basis = [], []
    for k in range(singulars.size):
        u = np.array(left[:, k])
        v = np.array(right[:, k].conj())  # m = sum_k s_k u_k v_k^T
        pivot = u[np.argmax(np.abs(u) > 1e-12)]
        phase = pivot / abs(pivot)
        s_basis.append(as_vector(u / phase))
        a_basis.append(as_vector(v * phase))
    nonzero = singulars[singulars > degeneracy_tol]
    degenerate = bool(np.any(np.abs(np.diff(nonzero)) <= degeneracy_tol))
    return SchmidtForm(singulars, tuple(s_basis), tuple(a_basis), degenerate)


def von_neumann_entropy(rho):
    """Entropy in bits; eigenvalues below 1e-15 count as zero."""
    vals = np.clip(rho.eigenvalues(), 0, None)
    vals = vals[vals > 1e-15]
    return float(max(0.0, -np.sum(vals * np.log2(vals))))


def purity(rho):
    m = rho.matrix
    return float(np.real(np.trace(m @ m)))


def rebase(rho, basis, tol=1e-10):
    """Matrix elements ``<r_i|rho|r_j>`` in an orthonormal ``basis``."""
    r = np.column_stack([np.asarray(b, dtype=np.complex128) for b in basis])
    n = rho.layout.dim
    if r.shape != (n, n):
        raise ValueError(f"basis must have {n} vectors of dim {n}")
    if np.max(np.abs(r.conj().T @ r - np.eye(n))) > tol:
        raise ValueError("basis is not orthonormal")
    return as_matrix(r.conj().T @ rho.matrix @ r)


def measurement_state(c1, c2, apparatus_dim=2):
    """``c1|s1 a1> + c2|s2 a2>`` on an S (dim 2) x A layout.

    With ``apparatus_dim == 3`` the pointers occupy slots 1 and 2 and slot 0
    is the ready state.
    """
    layout = SubsystemLayout((2, apparatus_dim), ("S", "A"))
    offset = apparatus_dim - 2
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[0 * apparatus_dim + offset] = c1
    amps[1 * apparatus_dim + offset + 1] = c2
    return PureState(amps, layout)


# JSON-compatible encoding: nested lists of [re, im] pairs


def encode_complex(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [encode_complex(x) for x in a]


def decode_complex(data):
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_json(obj):
    layout = {"dims": list(obj.layout.dims), "labels": list(obj.layout.labels)}
    if isinstance(obj, PureState):
        return {"kind": "pure", "layout": layout, "amplitudes": encode_complex(obj.amplitudes)}
    return {"kind": "density", "layout": layout, "matrix": encode_complex(obj.matrix)}


def state_from_json(data):
    layout = SubsystemLayout(tuple(data["layout"]["dims"]), tuple(data["layout"]["labels"]))
    if data["kind"] == "pure":
        return PureState(decode_complex(data["amplitudes"]), layout)
    if data["kind"] == "density":
        return DensityOperator(decode_complex(data["matrix"]), layout)
    raise ValueError(f"unknown state kind {data['kind']!r}")
