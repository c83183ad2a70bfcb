"""Entanglement of formation and entanglement of purification.

``eof_two_qubit`` is exact (concurrence formula). The two ``*_search``
functions minimise over explicit feasible points and therefore return upper
bounds on the measure they name.
"""

from __future__ import annotations

import numpy as np

from .entropy import binary_entropy
from .qchannel import Y as _PAULI_Y
from .qstate import DensityMatrix, _as_density, bell_state, purify
from .search import SearchConfig, multistart

__all__ = [
    "DecompositionSearchConfig",
    "concurrence",
    "eof_two_qubit",
    "eof_search",
    "ensemble_objective",
    "eop_search",
    "eop_ladder",
    "bell_mixture",
]

DecompositionSearchConfig = SearchConfig

_YY = np.kron(_PAULI_Y, _PAULI_Y)
EOF_DIM_CAP = 36
EOP_DIM_CAP = 16


def bell_mixture(D: float) -> DensityMatrix:
    """``(1-D) Phi+ + D/3 (Psi+ + Psi- + Phi-)``: the depolarized maximally entangled state."""
    if not 0.0 <= D <= 1.0:
        raise ValueError(f"D={D} outside [0, 1]")
    p = [bell_state(k).density().matrix for k in ("phi+", "psi+", "psi-", "phi-")]
    return DensityMatrix((1 - D) * p[0] + D / 3 * (p[1] + p[2] + p[3]), (2, 2))


def concurrence(rho) -> float:
    m = _as_density(rho).matrix if not isinstance(rho, np.ndarray) else rho
    if m.shape != (4, 4):
        raise ValueError("concurrence is defined here for two-qubit states")
    flipped = _YY @ m.conj() @ _YY
    lam = np.sqrt(np.clip(np.real(np.linalg.eigvals(m @ flipped)), 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def eof_two_qubit(rho) -> float:
    """Entanglement of formation of a two-qubit state from its concurrence."""
    if isinstance(rho, DensityMatrix) and rho.dims != (2, 2):
        raise ValueError(f"expected a two-qubit state, got dims {rho.dims}")
    c = concurrence(rho)
    return binary_entropy(min(1.0, (1 + np.sqrt(max(0.0, 1 - c * c))) / 2))


def _ensemble_weights(rho: DensityMatrix, split: int):
    """Columns ``sqrt(l_k) v_k`` reshaped to ``(d_A, d_B)`` amplitude matrices."""
    w, v = np.linalg.eigh(rho.matrix)
    keep = w > 1e-12
    d_a = int(np.prod(rho.dims[:split]))
    d_b = rho.dim // d_a
    cols = (v[:, keep] * np.sqrt(w[keep])).T
    return cols.reshape(-1, d_a, d_b)


def ensemble_objective(amps: np.ndarray, u: np.ndarray) -> float:
    """``sum_x p(x) H(A)_{psi_x}`` for the ensemble ``psi_x ~ sum_k u[x,k] amps[k]``."""
    psi = np.einsum("xk,kab->xab", u, amps)
    if psi.shape[1] <= psi.shape[2]:
        g = psi @ psi.conj().transpose(0, 2, 1)
    else:
        g = psi.conj().transpose(0, 2, 1) @ psi
    s = np.clip(np.linalg.eigvalsh(g), 0.0, None)
    p = s.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(s > 1e-300, s * np.log2(np.where(s > 1e-300, s, 1.0)), 0.0), axis=1)
        ent += np.where(p > 1e-300, p * np.log2(np.where(p > 1e-300, p, 1.0)), 0.0)
    return float(np.sum(ent))


def eof_search(rho, cfg: SearchConfig = SearchConfig(), split: int = 1) -> float:
    """Upper bound on the entanglement of formation by searching ensembles.

    Ensembles of size ``m`` are parameterised by an ``m x r`` isometry on the
    purifying register (``r`` = rank) followed by a computational-basis
    measurement; ``split`` is the number of leading subsystems forming ``A``.
    """
    rho = _as_density(rho)
    if rho.dim > EOF_DIM_CAP:
        raise ValueError(f"eof_search is limited to total dimension {EOF_DIM_CAP}")
    amps = _ensemble_weights(rho, split)
    r = amps.shape[0]
    if r == 1:
        return ensemble_objective(amps, np.ones((1, 1)))
    m = cfg.ensemble_size or r * r
    if m < r:
        raise ValueError(f"ensemble_size {m} below the rank {r}")
    start = np.eye(m, r, dtype=complex)
    res = multistart(lambda u: ensemble_objective(amps, u), (m, r), cfg, starts=[start], phases=False)
    return res.value


# ---------------------------------------------------------------------------


def _eop_setup(rho: DensityMatrix):
    if len(rho.dims) != 2:
        raise ValueError("entanglement of purification needs a bipartite state (d_A, d_B)")
    if rho.dim > EOP_DIM_CAP:
        raise ValueError(f"eop_search is limited to total dimension {EOP_DIM_CAP}")
    d_a, d_b = rho.dims
    w = np.linalg.eigvalsh(rho.matrix)
    rank = int(np.sum(w > 1e-12))
    phi = purify(rho).vector.reshape(rho.dim, d_a, d_b)  # (E, A, B); E = purifier
    return phi[:rank].transpose(1, 2, 0), rank  # (A, B, E) restricted to the support


def _eop_value(amp: np.ndarray, v: np.ndarray, d_e2: int) -> float:
    """``H(B E')`` after applying ``V: E -> E' (x) F`` to the pure state ``amp[a, b, e]``."""
    d_a, d_b, d_e = amp.shape
    d_f = v.shape[0] // d_e2
    out = np.einsum("abe,pe->abp", amp, v).reshape(d_a, d_b, d_e2, d_f)
    mat = out.transpose(1, 2, 0, 3).reshape(d_b * d_e2, d_a * d_f)
    s = np.linalg.svd(mat, compute_uv=False) ** 2
    s = s[s > 1e-15]
    return float(-np.sum(s * np.log2(s)))


def eop_ladder(rho, max_d_eprime: int, cfg: SearchConfig = SearchConfig()) -> list[float]:
    """EoP upper bounds for ``d_E' = 1 .. max_d_eprime``.

    Channels ``E -> E'`` are Stinespring isometries ``E -> E' (x) F`` with
    ``dim F = dim E`` (enough for every extreme channel). Each rung starts
    from the previous optimum padded with zeros, so the values never increase.
    """
    if max_d_eprime < 1:
        raise ValueError("d_eprime must be at least 1")
    rho = _as_density(rho)
    amp, d_e = _eop_setup(rho)
    v = np.eye(d_e, dtype=complex)  # E' trivial, F = E
    out = [_eop_value(amp, v, 1)]
    for d2 in range(2, max_d_eprime + 1):
        if d_e == 1:
            out.append(out[-1])
            continue
        start = np.zeros((d2 * d_e, d_e), dtype=complex)
        start[: v.shape[0]] = v
        res = multistart(lambda w: _eop_value(amp, w, d2), (d2 * d_e, d_e), cfg, starts=[start])
        v = res.isometry
        out.append(min(res.value, out[-1]))
    return out


def eop_search(rho, d_eprime: int, cfg: SearchConfig = SearchConfig()) -> float:
    """Upper bound on ``E_p = min_N H((id_B (x) N_{E->E'})(sigma_BE))`` with ``dim E' = d_eprime``.

    ``rho`` must carry dims ``(d_A, d_B)``.
    """
    if d_eprime < 1:
        raise ValueError("d_eprime must be at least 1")
    return eop_ladder(rho, d_eprime, cfg)[-1]
