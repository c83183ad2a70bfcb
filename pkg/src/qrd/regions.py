"""(Q, E) rate regions at k = 1 and the side-information rate quantities.

Regions are stored as half-spaces ``a*Q + b*E >= c``. Code states for the
side-information problems use the mirror purification ``phi_RAB`` of
``rho_AB`` and the Stinespring isometry of the channel, with the
environment optionally split by ``W: E -> E_A (x) E_B``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .entropy import entropy_of
from .qchannel import Isometry, QuantumChannel, stinespring
from .qstate import DensityMatrix, PureState, _as_density, as_indices, mirror_purification, ptrace
from .search import SearchConfig, multistart

__all__ = [
    "RateRegion",
    "qsr_region",
    "tradeoff_region",
    "qrst_qsi_feedback",
    "qrst_qsi_nonfeedback_Ip",
    "ip_search",
    "IpSearchResult",
    "max_identity_check",
    "code_state",
]

_ALLOWED = {(1.0, 0.0), (1.0, 1.0)}


@dataclass(frozen=True)
class RateRegion:
    halfspaces: tuple[tuple[float, float, float], ...]
    corner: tuple[float, float]
    extras: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        hs = tuple((float(a), float(b), float(c)) for a, b, c in self.halfspaces)
        for a, b, c in hs:
            # positive multiples of (1, 0) and (1, 1) only
            if a <= 0 or (a / a, b / a) not in _ALLOWED:
                raise ValueError(f"unsupported half-space coefficients ({a}, {b})")
        object.__setattr__(self, "halfspaces", hs)
        object.__setattr__(self, "corner", tuple(float(x) for x in self.corner))
        if self.slack(*self.corner) < -1e-9:
            raise ValueError("corner violates a half-space")

    def slack(self, q: float, e: float) -> float:
        """Smallest ``a*q + b*e - c`` over the half-spaces (``>= 0`` inside)."""
        return min(a * q + b * e - c for a, b, c in self.halfspaces)

    def contains(self, q: float, e: float, tol: float = 1e-9) -> bool:
        return self.slack(q, e) >= -tol

    def to_json(self) -> dict:
        return {"halfspaces": [list(h) for h in self.halfspaces], "corner": list(self.corner)}


def _from_bounds(q_min: float, total_min: float, **extras) -> RateRegion:
    # lexicographic corner: least Q, then least E at that Q
    return RateRegion(((1, 0, q_min), (1, 1, total_min)), (q_min, total_min - q_min), extras)


def _h(mat, dims, keep) -> float:
    keep = sorted(keep)
    if not keep:
        return 0.0
    return entropy_of(ptrace(mat, dims, keep))


def _cmi(mat, dims, a, b, c) -> float:
    return _h(mat, dims, a + c) + _h(mat, dims, b + c) - _h(mat, dims, c) - _h(mat, dims, a + b + c)


# ---------------------------------------------------------------------------
# state redistribution


def qsr_region(psi: PureState, partition: Sequence[Sequence[int]]) -> RateRegion:
    """``Q >= 1/2 I(R;C|B)``, ``Q + E >= H(C|B)`` for a pure state on groups (A, B, C, R).

    ``extras`` records the ebit balance ``1/2 (I(B;C) - I(A;C))`` (ebits
    generated, i.e. minus the corner's ``E``) and the consumption form
    ``1/2 (I(A;C) - I(B;C))`` which must equal the corner ``E``.
    """
    if not isinstance(psi, PureState):
        raise TypeError("state redistribution regions are defined for pure states")
    n = len(psi.dims)
    groups = [list(as_indices(g, n)) for g in partition]
    if len(groups) != 4:
        raise ValueError("partition must list four groups A, B, C, R")
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(n)):
        raise ValueError("groups must partition the subsystems")
    a, b, c, r = groups
    mat = np.outer(psi.vector, psi.vector.conj())
    dims = psi.dims
    q = 0.5 * _cmi(mat, dims, r, c, b)
    total = _h(mat, dims, c + b) - _h(mat, dims, b)

    def mi(x, y):
        return _h(mat, dims, x) + _h(mat, dims, y) - _h(mat, dims, x + y)

    consumption = 0.5 * (mi(a, c) - mi(b, c))
    if abs(consumption - (total - q)) > 1e-9:
        raise ArithmeticError(f"ebit balance mismatch {consumption} vs {total - q}")
    return _from_bounds(q, total, ebit_gain=-consumption, ebit_consumption=consumption)


# ---------------------------------------------------------------------------
# code states


def _identity_split(d_e: int, trivial: str) -> Isometry:
    """``E -> E_A (x) E_B`` sending all of ``E`` to one side."""
    if trivial == "B":
        return Isometry(np.eye(d_e), (d_e, 1))
    return Isometry(np.eye(d_e), (1, d_e))


def _code_tensor(rho_ab, channel: QuantumChannel, split: Isometry | None) -> np.ndarray:
    """Amplitude tensor with axes ``(R, B', E_A, E_B, B)``."""
    rho_ab = _as_density(rho_ab)
    if len(rho_ab.dims) > 2:
        raise ValueError("source must have dims (d_A,) or (d_A, d_B)")
    d_a, d_b = rho_ab.dims if len(rho_ab.dims) == 2 else (rho_ab.dim, 1)
    if channel.d_in != d_a:
        raise ValueError(f"channel input {channel.d_in} != source dimension {d_a}")
    amp = mirror_purification(rho_ab).vector.reshape(d_a * d_b, d_a, d_b)
    v = stinespring(channel)
    d_o, d_e = v.out_dims
    split = split or _identity_split(d_e, "B")
    if split.d_in != d_e or len(split.out_dims) != 2:
        raise ValueError(f"splitting isometry must map {d_e} -> (E_A, E_B)")
    return _contract(amp, v.matrix.reshape(d_o, d_e, d_a), split.matrix.reshape(*split.out_dims, d_e))


def _contract(amp, vt, wt):
    return np.einsum("rab,oea,xye->roxyb", amp, vt, wt, optimize=True)


def code_state(rho_ab, channel: QuantumChannel, split: Isometry | None = None) -> PureState:
    """Pure code state on ``(R, B', E_A, E_B, B)``.

    ``rho_ab`` has dims ``(d_A,)`` or ``(d_A, d_B)``; the reference ``R``
    purifies all of it. ``split=None`` keeps the whole environment in ``E_A``.
    """
    t = _code_tensor(rho_ab, channel, split)
    return PureState(t.reshape(-1), t.shape)


def _hp(t: np.ndarray, keep) -> float:
    """Entropy of the marginal on axes ``keep`` of the pure amplitude tensor ``t``."""
    keep = sorted(keep)
    rest = [i for i in range(t.ndim) if i not in keep]
    if not keep or not rest:
        return 0.0
    dk = int(np.prod([t.shape[i] for i in keep]))
    m = t.transpose(keep + rest).reshape(dk, -1)
    s = np.linalg.svd(m, compute_uv=False) ** 2
    s = s[s > 1e-14]
    s = s / s.sum()
    return float(-np.sum(s * np.log2(s)))


def _cmip(t, a, b, c) -> float:
    return _hp(t, a + c) + _hp(t, b + c) - _hp(t, c) - _hp(t, a + b + c)


# indices into code_state dims
_R, _BP, _EA, _EB, _B = 0, 1, 2, 3, 4


def tradeoff_region(rho, channel: QuantumChannel, split: Isometry | None = None, k: int = 1) -> RateRegion:
    """``Q >= 1/2 I(R; B E_B)``, ``Q + E >= H(B E_B)`` for one use of the channel.

    ``split=None`` leaves ``E_B`` trivial.
    """
    if k != 1:
        raise ValueError("only k = 1 is evaluated")
    rho = _as_density(rho)
    if len(rho.dims) != 1:
        rho = DensityMatrix(rho.matrix, (rho.dim,))
    t = _code_tensor(rho, channel, split)
    q = 0.5 * (_hp(t, [_R]) + _hp(t, [_BP, _EB]) - _hp(t, [_R, _BP, _EB]))
    return _from_bounds(q, _hp(t, [_BP, _EB]))


def qrst_qsi_feedback(rho_ab, channel: QuantumChannel, E: float) -> float:
    """``max{1/2 I(R;B'|B), H(B'|B) - E}`` on ``N(phi_RAB)``."""
    if E < 0:
        raise ValueError("entanglement rate must be non-negative")
    t = _code_tensor(rho_ab, channel, None)
    cond = _hp(t, [_BP, _B]) - _hp(t, [_B])
    return max(0.5 * _cmip(t, [_R], [_BP], [_B]), cond - E)


def qrst_qsi_nonfeedback_Ip(rho_ab, channel: QuantumChannel, split: Isometry | None = None) -> float:
    """``max{1/2 I(R;B'E_B|B), H(B'E_B|B)}`` for a fixed environment split."""
    return _ip_value(_code_tensor(rho_ab, channel, split))


def _ip_value(t: np.ndarray) -> float:
    cmi = 0.5 * _cmip(t, [_R], [_BP, _EB], [_B])
    cond = _hp(t, [_BP, _EB, _B]) - _hp(t, [_B])
    return max(cmi, cond)


@dataclass
class IpSearchResult:
    value: float
    split: Isometry
    endpoint_values: tuple[float, float]
    restart_values: list


def ip_search(rho_ab, channel: QuantumChannel, cfg: SearchConfig = SearchConfig(restarts=2, max_iters=30, step_tolerance=1e-3)) -> IpSearchResult:
    """Upper bound on ``I_p`` by searching splits ``E -> E_A (x) E_B`` with both factors of size ``dim E``.

    The better of the two degenerate splits (whole environment to either
    side) seeds the search, so the result never exceeds either of them.
    """
    d_e = channel.n_kraus
    ends = (
        qrst_qsi_nonfeedback_Ip(rho_ab, channel, _identity_split(d_e, "B")),
        qrst_qsi_nonfeedback_Ip(rho_ab, channel, _identity_split(d_e, "A")),
    )
    to_a = np.zeros((d_e * d_e, d_e), dtype=complex)
    to_b = np.zeros((d_e * d_e, d_e), dtype=complex)
    for e in range(d_e):
        to_a[e * d_e, e] = 1.0
        to_b[e, e] = 1.0

    base = _code_tensor(rho_ab, channel, _identity_split(d_e, "B"))[:, :, :, 0, :]  # (R, B', E, B)

    def f(w):
        t = np.einsum("roeb,xye->roxyb", base, w.reshape(d_e, d_e, d_e), optimize=True)
        return _ip_value(t)

    # start from the better degenerate split; the other can only be worse
    res = multistart(f, (d_e * d_e, d_e), cfg, starts=[to_a if ends[0] <= ends[1] else to_b])
    return IpSearchResult(res.value, Isometry(res.isometry, (d_e, d_e)), ends, res.restart_values)


# ---------------------------------------------------------------------------
# max-identity check


def _unit(x: np.ndarray) -> np.ndarray:
    n = x.size // 2
    v = x[:n] + 1j * x[n:]
    return v / max(np.linalg.norm(v), 1e-300)


def _info_rb(channel: QuantumChannel, v: np.ndarray, d_r: int, d_b: int) -> float:
    """``I(R;B'|B)`` of ``N`` applied to A of the pure state ``v`` on ``R (x) A (x) B``."""
    d_a = channel.d_in
    amp = v.reshape(d_r, d_a, d_b)
    kr = np.array(channel.kraus)  # (n, d_o, d_a)
    out = np.einsum("noa,rab->nrob", kr, amp)
    d_o = channel.d_out
    # omega_{R B' B} = sum_n |out_n><out_n|
    flat = out.reshape(out.shape[0], -1)
    m = flat.T @ flat.conj()
    dims = [d_r, d_o, d_b]
    if d_b == 1:
        return _h(m, dims, [0]) + _h(m, dims, [1]) - _h(m, dims, [0, 1])
    return _cmi(m, dims, [0], [1], [2])


def _maximise(f, dim: int, cfg: SearchConfig, seeds: list[np.ndarray]) -> tuple[float, np.ndarray]:
    best_val, best_x = -np.inf, None
    inits = [np.concatenate([s.real, s.imag]) for s in seeds]
    for k in range(cfg.restarts):
        inits.append(np.random.default_rng(cfg.seed + k).normal(size=2 * dim))
    for x0 in inits:
        res = minimize(lambda x: -f(_unit(x)), x0, method="L-BFGS-B",
                       options={"maxiter": cfg.max_iters, "ftol": 1e-13, "gtol": 1e-9})
        if -res.fun > best_val:
            best_val, best_x = -res.fun, _unit(res.x)
    return best_val, best_x


def max_identity_check(channel: QuantumChannel, d_r: int, d_b: int,
                       cfg: SearchConfig = SearchConfig(restarts=4)) -> tuple[float, float]:
    """Maximise ``I(R;B')`` over pure ``psi_RA`` and ``I(R;B'|B)`` over pure ``phi_RAB``.

    The right-hand search is seeded with the left optimum tensored with a
    fixed state of ``B``, so ``rhs >= lhs`` up to rounding by construction.
    """
    if max(d_r, d_b, channel.d_in, channel.d_out) > 3:
        raise ValueError("max-identity check is limited to dimension 3 per system")
    d_a = channel.d_in
    lhs, v_lhs = _maximise(lambda v: _info_rb(channel, v, d_r, 1), d_r * d_a, cfg, [])
    seed = np.kron(v_lhs, np.eye(d_b)[0])
    rhs, _ = _maximise(lambda v: _info_rb(channel, v, d_r, d_b), d_r * d_a * d_b, cfg, [seed])
    return lhs, rhs
