"""Distortion observables and the distortion they assign to channels.

The distortion of ``N`` on a source ``rho`` is ``Tr[Delta (id_R (x) N)(psi^rho)]``
where ``psi^rho`` is the mirror purification (reference in the source's
computational basis), see :func:`qrd.qstate.mirror_purification`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import get_tolerances
from .qchannel import QuantumChannel
from .qstate import DensityMatrix, _as_density, entanglement_fidelity, mirror_purification, permute_op, ptrace

__all__ = [
    "DistortionObservable",
    "source_output",
    "choi_output",
    "distortion",
    "distortion_from_choi",
    "fidelity_observable",
    "entanglement_fidelity_distortion",
    "classical_distortion_observable",
    "qc_distortion_observable",
    "average_block_distortion",
    "marginal_channel",
]


@dataclass(frozen=True, eq=False)
class DistortionObservable:
    delta: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        m = np.array(self.delta, dtype=complex)
        d_r, d_b = (int(x) for x in self.dims)
        if m.shape != (d_r * d_b, d_r * d_b):
            raise ValueError(f"observable shape {m.shape} does not match dims {self.dims}")
        tol = get_tolerances()
        if np.max(np.abs(m - m.conj().T)) > tol.hermitian:
            raise ValueError("distortion observable must be Hermitian")
        m = (m + m.conj().T) / 2
        if np.linalg.eigvalsh(m)[0] < -tol.psd:
            raise ValueError("distortion observable must be non-negative")
        m.setflags(write=False)
        object.__setattr__(self, "delta", m)
        object.__setattr__(self, "dims", (d_r, d_b))

    @property
    def norm(self) -> float:
        return float(np.linalg.eigvalsh(self.delta)[-1])


def _sqrt_transpose(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    return ((v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T).T


def choi_output(choi: np.ndarray, rho: np.ndarray, d_out: int) -> np.ndarray:
    """``(id_R (x) N)(psi^rho)`` as a raw matrix from the Choi matrix of ``N``.

    Linear in ``choi``: ``(M (x) 1) J (M (x) 1)`` with ``M = sqrt(rho)^T``.
    """
    m = np.kron(_sqrt_transpose(rho), np.eye(d_out))
    return m @ choi @ m


def source_output(rho, channel: QuantumChannel) -> DensityMatrix:
    """The state ``omega_RB`` obtained by sending the source half of its purification through the channel."""
    rho = _as_density(rho)
    if channel.d_in != rho.dim:
        raise ValueError(f"channel input dimension {channel.d_in} != source dimension {rho.dim}")
    return DensityMatrix(choi_output(channel.choi, rho.matrix, channel.d_out), (rho.dim, channel.d_out))


def _check(rho: DensityMatrix, channel: QuantumChannel, obs: DistortionObservable):
    if channel.d_in != rho.dim:
        raise ValueError(f"channel input dimension {channel.d_in} != source dimension {rho.dim}")
    if obs.dims != (rho.dim, channel.d_out):
        raise ValueError(f"observable dims {obs.dims} != (source {rho.dim}, output {channel.d_out})")


def distortion(rho, channel: QuantumChannel, obs: DistortionObservable) -> float:
    rho = _as_density(rho)
    _check(rho, channel, obs)
    return distortion_from_choi(channel.choi, rho.matrix, obs)


def distortion_from_choi(choi: np.ndarray, rho: np.ndarray, obs: DistortionObservable) -> float:
    omega = choi_output(choi, rho, obs.dims[1])
    return float(np.real(np.sum(obs.delta.T * omega)))


def fidelity_observable(rho) -> DistortionObservable:
    """``Delta = 1 - psi^rho``: distortion equals one minus entanglement fidelity."""
    rho = _as_density(rho)
    psi = mirror_purification(rho).vector
    d = rho.dim
    return DistortionObservable(np.eye(d * d) - np.outer(psi, psi.conj()), (d, d))


def entanglement_fidelity_distortion(rho, channel: QuantumChannel) -> float:
    """``1 - F_e(rho, N)``."""
    return 1.0 - entanglement_fidelity(rho, channel)


def classical_distortion_observable(table) -> DistortionObservable:
    """``sum_xy d(x,y) |x><x| (x) |y><y|`` from a non-negative distortion table ``d[x, y]``."""
    t = np.asarray(table, dtype=float)
    if t.ndim != 2:
        raise ValueError("distortion table must be a matrix")
    if np.any(t < 0):
        raise ValueError("distortion table entries must be non-negative")
    return DistortionObservable(np.diag(t.reshape(-1)).astype(complex), t.shape)


def qc_distortion_observable(deltas: Sequence[np.ndarray]) -> DistortionObservable:
    """``sum_y Delta_y (x) |y><y|`` for a classical output register ``y``."""
    blocks = [np.asarray(d, dtype=complex) for d in deltas]
    d_r = blocks[0].shape[0]
    tol = get_tolerances()
    for b in blocks:
        if b.shape != (d_r, d_r):
            raise ValueError("all blocks must act on the same reference space")
        if np.max(np.abs(b - b.conj().T)) > tol.hermitian or np.linalg.eigvalsh((b + b.conj().T) / 2)[0] < -tol.psd:
            raise ValueError("each block must be positive semidefinite")
    n = len(blocks)
    delta = sum(np.kron(b, np.diag(np.eye(n)[y])) for y, b in enumerate(blocks))
    return DistortionObservable(delta, (d_r, n))


def _block_sizes(rho: DensityMatrix, channel: QuantumChannel, obs: DistortionObservable, n: int | None):
    d = rho.dim
    if n is None:
        n = int(round(np.log(channel.d_in) / np.log(d))) if d > 1 else 1
    if n > 3:
        raise ValueError("block evaluation is limited to n <= 3")
    if d**n != channel.d_in:
        raise ValueError(f"channel input {channel.d_in} is not {d}^{n}")
    if obs.dims[0] != d or obs.dims[1] ** n != channel.d_out:
        raise ValueError("observable dims do not match the block channel")
    return n, obs.dims[1]


def marginal_channel(rho, channel: QuantumChannel, i: int, n: int, d_b: int) -> QuantumChannel:
    """``xi -> Tr_{B_j, j != i} F(rho^(i) (x) xi (x) rho^(n-i-1))`` as a channel (0-based ``i``)."""
    from .qchannel import choi_to_kraus

    rho = _as_density(rho)
    d = rho.dim
    choi = np.zeros((d * d_b, d * d_b), dtype=complex)
    for j in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[j, k] = 1.0
            parts = [rho.matrix] * i + [e] + [rho.matrix] * (n - i - 1)
            inp = parts[0]
            for p in parts[1:]:
                inp = np.kron(inp, p)
            out = ptrace(channel(inp), [d_b] * n, [i])
            choi += np.kron(e, out)
    return choi_to_kraus(choi, d, d_b)


def average_block_distortion(rho, channel: QuantumChannel, obs: DistortionObservable, n: int | None = None,
                             method: str = "marginal") -> float:
    """Per-copy average distortion of a block map ``F_n`` acting on ``n`` copies.

    ``method="marginal"`` averages the distortion of the marginal channels;
    ``method="average_observable"`` evaluates the averaged observable on
    ``(id (x) F_n)(psi^(x)n)``. Both agree for every ``F_n``.
    """
    rho = _as_density(rho)
    n, d_b = _block_sizes(rho, channel, obs, n)
    if method == "marginal":
        return float(np.mean([distortion(rho, marginal_channel(rho, channel, i, n, d_b), obs) for i in range(n)]))
    if method != "average_observable":
        raise ValueError(f"unknown method {method!r}")
    d = rho.dim
    rho_n = rho.matrix
    for _ in range(n - 1):
        rho_n = np.kron(rho_n, rho.matrix)
    # mirror purification of rho^(x)n has the reference ordered R_1..R_n
    omega = choi_output(channel.choi, rho_n, channel.d_out)
    dims = [d] * n + [d_b] * n
    delta_bar = np.zeros_like(omega)
    rest_dim = (d * d_b) ** (n - 1)
    for i in range(n):
        op = np.kron(obs.delta, np.eye(rest_dim))
        # op acts on (R_i, B_i, R_others..., B_others...); move factors into place
        others_r = [j for j in range(n) if j != i]
        src = [i, n + i] + others_r + [n + j for j in others_r]
        src_dims = [dims[s] for s in src]
        order = [src.index(k) for k in range(2 * n)]
        delta_bar += permute_op(op, src_dims, order) / n
    return float(np.real(np.sum(delta_bar.T * omega)))
