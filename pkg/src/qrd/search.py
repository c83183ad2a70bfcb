"""Derivative-free search over isometries by Givens-rotation sweeps.

An ``n x m`` isometry is updated by left-multiplying two-row rotations.
Each sweep tries every generator (real rotation, complex rotation and,
optionally, a row phase) at ``+step`` and ``-step``; accepted moves are
repeated while they keep improving. A sweep without any accepted move
halves the step. Used both for ensemble decompositions (entanglement of
formation), channel searches and environment-splitting isometries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .qchannel import random_isometry

__all__ = ["SearchConfig", "SearchResult", "givens_search", "multistart"]


@dataclass(frozen=True)
class SearchConfig:
    """Optimizer control shared by all non-convex searches.

    ``ensemble_size`` is only read by decomposition searches (``None`` picks
    rank squared there).
    """

    ensemble_size: int | None = None
    restarts: int = 4
    max_iters: int = 5000
    step_tolerance: float = 1e-7
    seed: int = 0
    initial_step: float = 0.5
    decay: float = 0.5

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")


@dataclass
class SearchResult:
    value: float
    isometry: np.ndarray
    sweeps: int
    evaluations: int
    restart_values: list


def _rotate(v: np.ndarray, i: int, j: int, kind: int, angle: float) -> np.ndarray:
    out = v.copy()
    c, s = np.cos(angle), np.sin(angle)
    if kind == 0:
        out[i] = c * v[i] - s * v[j]
        out[j] = s * v[i] + c * v[j]
    elif kind == 1:
        out[i] = c * v[i] - 1j * s * v[j]
        out[j] = -1j * s * v[i] + c * v[j]
    else:
        out[i] = np.exp(1j * angle) * v[i]
    return out


def _generators(n: int, phases: bool):
    gens = [(i, j, kind) for i in range(n) for j in range(i + 1, n) for kind in (0, 1)]
    if phases:
        gens += [(i, i, 2) for i in range(n)]
    return gens


def givens_search(f: Callable[[np.ndarray], float], v0: np.ndarray, cfg: SearchConfig,
                  phases: bool = True) -> SearchResult:
    """Minimise ``f`` over isometries reachable from ``v0`` by row rotations."""
    v = np.array(v0, dtype=complex)
    best = f(v)
    evals = 1
    gens = _generators(v.shape[0], phases)
    step = cfg.initial_step
    sweeps = 0
    while sweeps < cfg.max_iters and step >= cfg.step_tolerance and gens:
        sweeps += 1
        moved = False
        for i, j, kind in gens:
            for sign in (1.0, -1.0):
                cand = _rotate(v, i, j, kind, sign * step)
                val = f(cand)
                evals += 1
                if val < best - 1e-15:
                    # keep going in the accepted direction while it helps
                    while val < best - 1e-15:
                        v, best, moved = cand, val, True
                        cand = _rotate(v, i, j, kind, sign * step)
                        val = f(cand)
                        evals += 1
                    break
        if not moved:
            step *= cfg.decay
    return SearchResult(best, v, sweeps, evals, [best])


def multistart(f: Callable[[np.ndarray], float], shape: tuple[int, int], cfg: SearchConfig,
               starts: list[np.ndarray] | None = None, phases: bool = True) -> SearchResult:
    """Run :func:`givens_search` from supplied starts plus ``cfg.restarts`` random isometries.

    Restart ``k`` draws its start from ``seed + k``, so results are
    reproducible and independent of evaluation order; the minimum is kept.
    """
    n, m = shape
    inits = list(starts or [])
    for k in range(cfg.restarts):
        inits.append(random_isometry(m, n, np.random.default_rng(cfg.seed + k)))
    best = None
    values = []
    sweeps = evals = 0
    for v0 in inits:
        res = givens_search(f, v0, cfg, phases)
        values.append(res.value)
        sweeps += res.sweeps
        evals += res.evaluations
        if best is None or res.value < best.value:
            best = res
    return SearchResult(best.value, best.isometry, sweeps, evals, values)
