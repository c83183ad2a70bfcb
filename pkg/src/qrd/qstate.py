"""Finite-dimensional quantum states: construction, tensor products, partial
traces, purification and distances.

Subsystems are tracked by an ordered tuple of dimensions; index sets select
subsystems by position. Labels are carried along as metadata only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import get_tolerances

__all__ = [
    "DensityMatrix",
    "PureState",
    "as_indices",
    "ptrace",
    "tensor",
    "partial_trace",
    "purify",
    "mirror_purification",
    "trace_distance",
    "entanglement_fidelity",
    "maximally_mixed",
    "basis_ket",
    "bell_state",
    "random_density",
    "random_pure",
]


def as_indices(idx, n: int | None = None) -> tuple[int, ...]:
    """Normalise an int or iterable of ints to a sorted tuple, checking range."""
    if isinstance(idx, (int, np.integer)):
        out = (int(idx),)
    else:
        out = tuple(sorted({int(i) for i in idx}))
    if n is not None:
        for i in out:
            if not 0 <= i < n:
                raise IndexError(f"subsystem index {i} out of range for {n} subsystems")
    return out


def _check_dims(dims: Sequence[int], side: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != side:
        raise ValueError(f"dims {dims} do not multiply to {side}")
    if side > get_tolerances().max_dim:
        raise ValueError(f"total dimension {side} exceeds cap {get_tolerances().max_dim}")
    return dims


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray
    dims: tuple[int, ...] = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        dims = _check_dims(self.dims if self.dims is not None else (m.shape[0],), m.shape[0])
        tol = get_tolerances()
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol.hermitian:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > tol.trace:
            raise ValueError(f"trace {np.trace(m).real} != 1")
        m = (m + m.conj().T) / 2
        if np.linalg.eigvalsh(m)[0] < -tol.psd:
            raise ValueError("matrix is not positive semidefinite")
        if self.labels is not None and len(self.labels) != len(dims):
            raise ValueError("one label per subsystem required")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def rank(self, tol: float = 1e-12) -> int:
        return int(np.sum(self.eigvalsh() > tol))

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray
    dims: tuple[int, ...] = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).reshape(-1)
        dims = _check_dims(self.dims if self.dims is not None else (v.size,), v.size)
        if abs(np.linalg.norm(v) - 1.0) > get_tolerances().norm:
            raise ValueError(f"state vector has norm {np.linalg.norm(v)}")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "dims", dims)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.vector.size

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.vector, self.vector.conj()), self.dims, self.labels)

    def __repr__(self):
        return f"PureState(dims={self.dims})"


def _as_density(state) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.density()
    if isinstance(state, DensityMatrix):
        return state
    raise TypeError(f"expected a quantum state, got {type(state).__name__}")


# ---------------------------------------------------------------------------
# raw-array helpers (no validation; used in inner loops)


def ptrace(mat: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Partial trace of a raw operator, keeping ``keep`` subsystems in order."""
    dims = list(dims)
    keep = sorted(keep)
    n = len(dims)
    if len(keep) == n:
        return mat
    t = mat.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace from the highest axis down so earlier axis numbers stay valid
    for k, i in enumerate(sorted(traced, reverse=True)):
        t = np.trace(t, axis1=i, axis2=i + n - k)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def permute_op(mat: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder subsystems of an operator; ``order[k]`` is the old index placed at k."""
    dims = list(dims)
    n = len(dims)
    t = mat.reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = mat.shape[0]
    return t.reshape(d, d)


# ---------------------------------------------------------------------------


def tensor(a, b):
    """Kronecker product, subsystems of ``a`` first."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        labels = a.labels + b.labels if a.labels and b.labels else None
        return PureState(np.kron(a.vector, b.vector), a.dims + b.dims, labels)
    a, b = _as_density(a), _as_density(b)
    labels = a.labels + b.labels if a.labels and b.labels else None
    return DensityMatrix(np.kron(a.matrix, b.matrix), a.dims + b.dims, labels)


def partial_trace(rho, keep) -> DensityMatrix:
    rho = _as_density(rho)
    keep = as_indices(keep, len(rho.dims))
    mat = ptrace(rho.matrix, rho.dims, keep)
    labels = tuple(rho.labels[i] for i in keep) if rho.labels else None
    return DensityMatrix(mat, tuple(rho.dims[i] for i in keep), labels)


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of every column real positive
    idx = np.argmax(np.abs(vecs) - 1e-12 * np.arange(vecs.shape[0])[:, None], axis=0)
    ph = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.abs(ph) / np.where(ph == 0, 1, ph))[None, :]


def purify(rho) -> PureState:
    """Canonical purification with the reference system first.

    Returns ``sum_k sqrt(l_k) |k>_R |v_k>`` over the eigenpairs of ``rho`` with
    eigenvalues sorted descending and phase-fixed eigenvectors. The reference
    has the same total dimension as ``rho``.
    """
    rho = _as_density(rho)
    w, v = np.linalg.eigh(rho.matrix)
    order = np.argsort(-w, kind="stable")
    w = np.clip(w[order], 0.0, None)
    v = _fix_phase(v[:, order])
    d = rho.dim
    psi = np.zeros((d, d), dtype=complex)
    psi[:, :] = (v * np.sqrt(w)[None, :]).T
    psi /= np.linalg.norm(psi)
    labels = ("R",) + rho.labels if rho.labels else None
    return PureState(psi.reshape(-1), (d,) + rho.dims, labels)


def mirror_purification(rho) -> PureState:
    """Purification ``(1_R (x) sqrt(rho)) sum_i |i>_R |i>``.

    The reference mirrors the computational basis of the source, so a
    diagonal source ``sum_x p(x)|x><x|`` purifies to ``sum_x sqrt(p(x))|x>|x>``
    and the maximally mixed state to the maximally entangled state. This is
    the purification against which distortion observables are evaluated.
    """
    rho = _as_density(rho)
    w, v = np.linalg.eigh(rho.matrix)
    sq = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    # |psi> = sum_ij sqrt(rho)[j, i] |i>_R |j>  ->  amplitude matrix sqrt(rho)^T
    psi = sq.T
    labels = ("R",) + rho.labels if rho.labels else None
    return PureState(psi.reshape(-1) / np.linalg.norm(psi), (rho.dim,) + rho.dims, labels)


def trace_distance(a, b) -> float:
    """``Tr|a - b|`` (no factor 1/2), in [0, 2] for states."""
    a, b = _as_density(a), _as_density(b)
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch {a.dims} vs {b.dims}")
    return float(np.sum(np.abs(np.linalg.eigvalsh(a.matrix - b.matrix))))


def entanglement_fidelity(rho, channel, method: str = "kraus") -> float:
    """Entanglement fidelity ``<psi|(id (x) N)(psi)|psi>`` of a channel on a source.

    ``method="kraus"`` evaluates ``sum_x |Tr(rho A_x)|^2``; ``"purification"``
    applies the channel to a purification and takes the overlap.
    """
    rho = _as_density(rho)
    if channel.d_in != rho.dim:
        raise ValueError(f"channel input dimension {channel.d_in} != state dimension {rho.dim}")
    if channel.d_out != channel.d_in:
        raise ValueError("entanglement fidelity needs matching input and output dimensions")
    if method == "kraus":
        return float(sum(abs(np.trace(rho.matrix @ a)) ** 2 for a in channel.kraus))
    if method == "purification":
        psi = purify(rho).vector
        d = rho.dim
        amp = psi.reshape(d, d)
        # components of (1 (x) A)|psi>
        total = 0.0
        for a in channel.kraus:
            out = amp @ a.T
            total += abs(np.vdot(amp.reshape(-1), out.reshape(-1))) ** 2
        return float(total)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# constructors


def maximally_mixed(d: int = 2) -> DensityMatrix:
    return DensityMatrix(np.eye(d) / d, (d,))


def basis_ket(i: int, d: int = 2) -> PureState:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return PureState(v, (d,))


_BELL = {
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


def bell_state(name: str = "phi+") -> PureState:
    """One of the Bell states ``phi+``, ``phi-``, ``psi+``, ``psi-`` on two qubits."""
    return PureState(_BELL[name.lower()], (2, 2))


def random_pure(dims: Sequence[int], seed=None) -> PureState:
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(v / np.linalg.norm(v), tuple(dims))


def random_density(dims: Sequence[int], rank: int | None = None, seed=None) -> DensityMatrix:
    """Random state of the given rank (Hilbert-Schmidt measure when full rank)."""
    rng = np.random.default_rng(seed)
    d = int(np.prod(dims))
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, tuple(dims))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, mats)
