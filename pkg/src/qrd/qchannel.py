"""Quantum channels held as Kraus families with a cached Choi matrix.

Choi convention: ``J(N) = sum_ij |i><j| (x) N(|i><j|)`` with the input factor
first, so ``Tr_out J = 1_in``. Stinespring isometries place the output first
and the environment second: ``V = sum_k A_k (x) |k>_E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import get_tolerances
from .qstate import DensityMatrix, PureState, _as_density, as_indices

__all__ = [
    "QuantumChannel",
    "Isometry",
    "PAULI",
    "identity_channel",
    "unitary_channel",
    "depolarizing",
    "replacer",
    "dephasing_measurement",
    "bit_flip",
    "choi_to_kraus",
    "apply",
    "apply_to_pure",
    "stinespring",
    "complementary",
    "split_environment",
    "twirl_unitaries",
    "clifford_twirl",
    "bell_weights",
    "random_channel",
    "random_isometry",
    "mix",
]

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (I2, X, Y, Z)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    kraus: tuple[np.ndarray, ...]
    d_in: int = None
    d_out: int = None

    def __post_init__(self):
        ks = [np.array(k, dtype=complex) for k in self.kraus]
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ks[0].shape
        if any(k.shape != shape for k in ks) or len(shape) != 2:
            raise ValueError("Kraus operators must be matrices of equal shape")
        d_out, d_in = shape
        if self.d_in is not None and self.d_in != d_in or self.d_out is not None and self.d_out != d_out:
            raise ValueError("declared dimensions disagree with Kraus shapes")
        resid = sum(k.conj().T @ k for k in ks) - np.eye(d_in)
        if np.max(np.abs(resid)) > get_tolerances().completeness:
            raise ValueError(f"Kraus family is not trace preserving (residual {np.max(np.abs(resid)):.2e})")
        for k in ks:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", tuple(ks))
        object.__setattr__(self, "d_in", d_in)
        object.__setattr__(self, "d_out", d_out)

    @cached_property
    def choi(self) -> np.ndarray:
        vecs = np.array([k.T.reshape(-1) for k in self.kraus])  # rows: (1 (x) A)|Gamma>
        j = vecs.T @ vecs.conj()
        j.setflags(write=False)
        return j

    @property
    def n_kraus(self) -> int:
        return len(self.kraus)

    def __call__(self, mat: np.ndarray) -> np.ndarray:
        """Apply to a raw ``d_in x d_in`` operator."""
        return sum(k @ mat @ k.conj().T for k in self.kraus)

    def compose(self, other: "QuantumChannel") -> "QuantumChannel":
        """``self o other``."""
        return QuantumChannel(tuple(a @ b for a in self.kraus for b in other.kraus)).compressed()

    def compressed(self, cutoff: float = 1e-12) -> "QuantumChannel":
        """Minimal Kraus family from the Choi eigendecomposition."""
        return choi_to_kraus(self.choi, self.d_in, self.d_out, cutoff)

    def __repr__(self):
        return f"QuantumChannel(d_in={self.d_in}, d_out={self.d_out}, n_kraus={self.n_kraus})"


@dataclass(frozen=True, eq=False)
class Isometry:
    matrix: np.ndarray
    out_dims: tuple[int, ...] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] < m.shape[1]:
            raise ValueError("an isometry maps into a space at least as large as its input")
        resid = m.conj().T @ m - np.eye(m.shape[1])
        if np.max(np.abs(resid)) > get_tolerances().isometry:
            raise ValueError(f"V^dag V != 1 (residual {np.max(np.abs(resid)):.2e})")
        out_dims = tuple(self.out_dims) if self.out_dims is not None else (m.shape[0],)
        if int(np.prod(out_dims)) != m.shape[0]:
            raise ValueError("out_dims do not match the output dimension")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "out_dims", out_dims)

    @property
    def d_in(self) -> int:
        return self.matrix.shape[1]

    @property
    def d_out(self) -> int:
        return self.matrix.shape[0]

    def channel(self, keep: Sequence[int] = (0,)) -> QuantumChannel:
        """Channel obtained by keeping the output factors ``keep`` and tracing the rest."""
        keep = as_indices(keep, len(self.out_dims))
        n = len(self.out_dims)
        rest = [i for i in range(n) if i not in keep]
        t = self.matrix.reshape(tuple(self.out_dims) + (self.d_in,))
        t = t.transpose(list(keep) + rest + [n])
        dk = int(np.prod([self.out_dims[i] for i in keep]))
        t = t.reshape(dk, -1, self.d_in)
        return QuantumChannel(tuple(t[:, e, :] for e in range(t.shape[1]))).compressed()


def choi_to_kraus(choi: np.ndarray, d_in: int, d_out: int, cutoff: float = 1e-12) -> QuantumChannel:
    choi = (choi + choi.conj().T) / 2
    w, v = np.linalg.eigh(choi)
    ks = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam <= cutoff:
            continue
        ks.append(np.sqrt(lam) * vec.reshape(d_in, d_out).T)
    if not ks:
        raise ValueError("Choi matrix has no positive part")
    # absorb the dropped weight so completeness holds to machine precision
    s = sum(k.conj().T @ k for k in ks)
    w2, v2 = np.linalg.eigh(s)
    inv_sqrt = (v2 / np.sqrt(w2)) @ v2.conj().T
    return QuantumChannel(tuple(k @ inv_sqrt for k in ks))


# ---------------------------------------------------------------------------
# named channels


def identity_channel(d: int = 2) -> QuantumChannel:
    return QuantumChannel((np.eye(d),))


def unitary_channel(u: np.ndarray) -> QuantumChannel:
    return QuantumChannel((np.asarray(u, dtype=complex),))


def depolarizing(p: float) -> QuantumChannel:
    """``(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)``; p = 3/4 replaces every input by 1/2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {p}")
    return QuantumChannel((np.sqrt(1 - p) * I2, np.sqrt(p / 3) * X, np.sqrt(p / 3) * Y, np.sqrt(p / 3) * Z))


def replacer(state, d_in: int) -> QuantumChannel:
    """Discard the input and prepare ``state``."""
    sigma = _as_density(state).matrix
    w, v = np.linalg.eigh(sigma)
    ks = []
    for lam, vec in zip(w, v.T):
        if lam <= 1e-14:
            continue
        for j in range(d_in):
            e = np.zeros(d_in)
            e[j] = 1.0
            ks.append(np.sqrt(lam) * np.outer(vec, e))
    return QuantumChannel(tuple(ks))


def dephasing_measurement(d: int = 2) -> QuantumChannel:
    """Measure in the computational basis and prepare the outcome."""
    return QuantumChannel(tuple(np.diag(np.eye(d)[i]).astype(complex) for i in range(d)))


def bit_flip(q: float) -> QuantumChannel:
    return QuantumChannel((np.sqrt(1 - q) * I2, np.sqrt(q) * X))


def mix(channels: Sequence[QuantumChannel], weights: Sequence[float]) -> QuantumChannel:
    """Convex combination of channels with common dimensions."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("weights must form a probability vector")
    ks = [np.sqrt(w) * k for w, c in zip(weights, channels) if w > 0 for k in c.kraus]
    return QuantumChannel(tuple(ks)).compressed()


# ---------------------------------------------------------------------------
# action on states


def _apply_raw(kraus, mat: np.ndarray, dims: Sequence[int], on: tuple[int, ...]):
    n = len(dims)
    rest = [i for i in range(n) if i not in on]
    order = list(on) + rest
    d_t = int(np.prod([dims[i] for i in on]))
    d_r = int(np.prod([dims[i] for i in rest])) if rest else 1
    t = mat.reshape(list(dims) * 2).transpose(order + [n + i for i in order])
    t = t.reshape(d_t, d_r, d_t, d_r)
    out = sum(np.einsum("ai,ixjy,bj->axby", k, t, k.conj(), optimize=True) for k in kraus)
    d_o = kraus[0].shape[0]
    # put the output where the first targeted subsystem was
    pos = on[0]
    rest_dims = [dims[i] for i in rest]
    new_dims = [dims[i] for i in rest if i < pos] + [d_o] + [dims[i] for i in rest if i > pos]
    out = out.reshape([d_o] + rest_dims + [d_o] + rest_dims)
    m = len(rest_dims)
    n_before = sum(1 for i in rest if i < pos)
    perm = list(range(1, 1 + n_before)) + [0] + list(range(1 + n_before, 1 + m))
    out = out.transpose(perm + [p + 1 + m for p in perm])
    d = d_o * d_r
    return out.reshape(d, d), tuple(new_dims)


def apply(channel: QuantumChannel, rho, on=0) -> DensityMatrix:
    """Apply ``channel`` to the subsystems ``on`` of ``rho`` (identity elsewhere).

    The targeted subsystems are replaced by a single output subsystem of
    dimension ``d_out`` at the position of the first target.
    """
    rho = _as_density(rho)
    on = as_indices(on, len(rho.dims))
    d_t = int(np.prod([rho.dims[i] for i in on]))
    if d_t != channel.d_in:
        raise ValueError(f"targeted dimension {d_t} != channel input dimension {channel.d_in}")
    mat, dims = _apply_raw(channel.kraus, rho.matrix, rho.dims, on)
    return DensityMatrix(mat, dims)


def apply_to_pure(v: np.ndarray, psi) -> PureState:
    """Apply an isometry (raw matrix or :class:`Isometry`) to subsystem 1 of ``psi`` = R (x) A.

    Returns a pure state on ``R (x) out_dims``.
    """
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    mat = v.matrix if isinstance(v, Isometry) else np.asarray(v)
    out_dims = v.out_dims if isinstance(v, Isometry) else (mat.shape[0],)
    d_r = psi.dims[0]
    amp = psi.vector.reshape(d_r, -1)
    if amp.shape[1] != mat.shape[1]:
        raise ValueError("isometry input dimension does not match the state")
    return PureState((amp @ mat.T).reshape(-1), (d_r,) + tuple(out_dims))


def stinespring(channel: QuantumChannel) -> Isometry:
    """Isometric extension ``A -> B (x) E`` with ``dim E`` = number of Kraus operators."""
    v = np.stack(channel.kraus, axis=1).reshape(channel.d_out * channel.n_kraus, channel.d_in)
    return Isometry(v, (channel.d_out, channel.n_kraus))


def complementary(channel: QuantumChannel) -> QuantumChannel:
    return stinespring(channel).channel(keep=(1,))


def split_environment(v: Isometry, w: Isometry) -> Isometry:
    """Compose ``V: A -> B (x) E`` with ``W: E -> E_A (x) E_B`` into ``A -> B (x) E_A (x) E_B``."""
    if len(v.out_dims) != 2:
        raise ValueError("V must have output factors (B, E)")
    d_b, d_e = v.out_dims
    if w.d_in != d_e:
        raise ValueError(f"splitting isometry input {w.d_in} != environment dimension {d_e}")
    if len(w.out_dims) != 2:
        raise ValueError("W must have output factors (E_A, E_B)")
    m = np.kron(np.eye(d_b), w.matrix) @ v.matrix
    return Isometry(m, (d_b,) + tuple(w.out_dims))


# ---------------------------------------------------------------------------
# twirling


def twirl_unitaries() -> tuple[np.ndarray, ...]:
    """Twelve single-qubit unitaries acting on the Bloch sphere as the tetrahedral group.

    Products of the Paulis with powers of ``C = (1 - i(X+Y+Z))/2``, the
    2pi/3 rotation about (1,1,1) that cycles X -> Y -> Z.
    """
    c = (I2 - 1j * (X + Y + Z)) / 2
    cs = (I2, c, c @ c)
    return tuple(p @ ck for ck in cs for p in PAULI)


def clifford_twirl(channel: QuantumChannel) -> QuantumChannel:
    """``rho -> (1/12) sum_i s_i^dag N(s_i rho s_i^dag) s_i`` over :func:`twirl_unitaries`."""
    if channel.d_in != 2 or channel.d_out != 2:
        raise ValueError("the twirl is defined for qubit channels")
    ks = [s.conj().T @ a @ s / np.sqrt(12) for s in twirl_unitaries() for a in channel.kraus]
    return QuantumChannel(tuple(ks)).compressed()


_BELL_VECS = np.array(
    [[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, -1, 0], [1, 0, 0, -1]], dtype=complex
) / np.sqrt(2)  # phi+, psi+, psi-, phi-


def bell_weights(choi: np.ndarray) -> tuple[np.ndarray, float]:
    """Weights of a two-qubit Choi matrix (normalised) on Phi+, Psi+, Psi-, Phi-.

    Returns ``(weights, residual)`` where the residual is the max-norm of the
    off-diagonal part in the Bell basis.
    """
    m = _BELL_VECS.conj() @ (choi / np.trace(choi).real) @ _BELL_VECS.T
    weights = np.real(np.diag(m))
    resid = float(np.max(np.abs(m - np.diag(np.diag(m)))))
    return weights, resid


# ---------------------------------------------------------------------------
# random sampling


def random_isometry(d_in: int, d_out: int, rng) -> np.ndarray:
    """Haar-random isometry from QR of a complex Ginibre matrix."""
    g = rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_channel(d_in: int, d_out: int, n_kraus: int = None, seed=None) -> QuantumChannel:
    if d_in < 1 or d_out < 1:
        raise ValueError("dimensions must be positive")
    n_kraus = d_in * d_out if n_kraus is None else n_kraus
    if d_out * n_kraus < d_in:
        raise ValueError("not enough Kraus operators for a trace-preserving map")
    rng = np.random.default_rng(seed)
    v = random_isometry(d_in, d_out * n_kraus, rng).reshape(d_out, n_kraus, d_in)
    return QuantumChannel(tuple(v[:, k, :] for k in range(n_kraus)))
