"""Entropic functionals in bits, plus the continuity bound used in converse
arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import get_tolerances
from .qstate import _as_density, as_indices, ptrace

__all__ = [
    "EntropyReport",
    "entropy_of",
    "von_neumann",
    "entropy_report",
    "marginal_entropy",
    "conditional",
    "mutual_information",
    "conditional_mutual_information",
    "binary_entropy",
    "shannon",
    "alicki_fannes_bound",
]


@dataclass(frozen=True)
class EntropyReport:
    value: float
    subsystems: tuple[int, ...]
    clamp_count: int


def _clamped_eigs(mat: np.ndarray) -> tuple[np.ndarray, int]:
    tol = get_tolerances()
    w = np.linalg.eigvalsh(mat)
    if w[0] < -tol.psd:
        raise ValueError(f"eigenvalue {w[0]:.3e} below -{tol.psd}: not a valid state")
    small = w < tol.entropy_clamp
    w = np.where(small, 0.0, w)
    s = w.sum()
    return w / s, int(np.count_nonzero(small))


def entropy_of(mat: np.ndarray) -> float:
    """Entropy in bits of a raw positive operator (normalised to unit trace)."""
    w, _ = _clamped_eigs(mat)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def von_neumann(rho) -> float:
    """``-Tr rho log2 rho``."""
    return entropy_of(_as_density(rho).matrix)


def entropy_report(rho, subsystems=None) -> EntropyReport:
    rho = _as_density(rho)
    keep = tuple(range(len(rho.dims))) if subsystems is None else as_indices(subsystems, len(rho.dims))
    w, clamped = _clamped_eigs(ptrace(rho.matrix, rho.dims, keep))
    w = w[w > 0]
    return EntropyReport(float(-np.sum(w * np.log2(w))), keep, clamped)


def marginal_entropy(rho, subsystems) -> float:
    """``H`` of the marginal on ``subsystems`` (empty set gives 0)."""
    rho = _as_density(rho)
    keep = as_indices(subsystems, len(rho.dims))
    if not keep:
        return 0.0
    return entropy_of(ptrace(rho.matrix, rho.dims, keep))


def _disjoint(n, *sets):
    out = [as_indices(s, n) for s in sets]
    seen = set()
    for s in out:
        if seen & set(s):
            raise ValueError("subsystem sets must be disjoint")
        seen |= set(s)
    return out


def conditional(rho, a, b) -> float:
    """``H(A|B) = H(AB) - H(B)``."""
    rho = _as_density(rho)
    a, b = _disjoint(len(rho.dims), a, b)
    return marginal_entropy(rho, a + b) - marginal_entropy(rho, b)


def mutual_information(rho, a, b) -> float:
    """``I(A;B) = H(A) + H(B) - H(AB)``."""
    rho = _as_density(rho)
    a, b = _disjoint(len(rho.dims), a, b)
    return marginal_entropy(rho, a) + marginal_entropy(rho, b) - marginal_entropy(rho, a + b)


def conditional_mutual_information(rho, a, b, c) -> float:
    """``I(A;B|C) = H(AC) + H(BC) - H(C) - H(ABC)``."""
    rho = _as_density(rho)
    a, b, c = _disjoint(len(rho.dims), a, b, c)
    h = lambda s: marginal_entropy(rho, s)  # noqa: E731
    return h(a + c) + h(b + c) - h(c) - h(a + b + c)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def shannon(dist) -> float:
    """Shannon entropy in bits of a probability vector."""
    p = np.asarray(dist, dtype=float)
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("not a probability vector")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def alicki_fannes_bound(eps: float, dim_a: int) -> float:
    """``4 eps log|A| + 2 h2(eps)``, bounding ``|H(A|B)_rho - H(A|B)_sigma|`` when ``||rho - sigma||_1 <= eps``.

    ``h2`` is evaluated at ``min(eps, 1/2)`` so the bound stays monotone in eps.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if dim_a < 2:
        raise ValueError("dim_a must be at least 2")
    return 4 * eps * np.log2(dim_a) + 2 * binary_entropy(min(eps, 0.5))
