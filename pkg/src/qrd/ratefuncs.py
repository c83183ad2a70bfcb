"""Rate-distortion functions: isotropic-qubit closed forms, the convex
entanglement-assisted evaluator, and the k=1 classically-assisted search.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distortion import DistortionObservable, _sqrt_transpose, distortion_from_choi, fidelity_observable
from .eaopt import (
    InfeasibleDistortion,
    OptimizerOptions,
    OptimizerResult,
    ea_problem,
    ea_qsi_rate_optimize,
    ea_rate_optimize,
    qsi_problem,
)
from .entropy import binary_entropy, shannon, von_neumann
from .measures import eof_search, eof_two_qubit
from .qchannel import QuantumChannel, choi_to_kraus
from .qstate import DensityMatrix, _as_density
from .search import SearchConfig, multistart

__all__ = [
    "TAGS",
    "RateCurve",
    "OptimizerOptions",
    "OptimizerResult",
    "InfeasibleDistortion",
    "ea_isotropic_closed_form",
    "cl_isotropic_closed_form",
    "ea_rate_optimize",
    "ea_qsi_rate_optimize",
    "ea_problem",
    "qsi_problem",
    "ClassicalSearchResult",
    "cl_rate_search",
    "cl_rate_single_letter",
    "convex_hull",
    "sample_curve",
    "write_curve_csv",
    "thread_count",
]

TAGS = ("closed_form", "optimized", "upper_bound")

# outer channel search: 20 restarts, coarser step floor than the measure searches
CL_SEARCH = SearchConfig(restarts=20, step_tolerance=1e-4)


@dataclass(frozen=True)
class RateCurve:
    points: tuple[tuple[float, float, str], ...]
    convexified: bool = False

    def __post_init__(self):
        pts = tuple((float(d), float(r), str(t)) for d, r, t in self.points)
        ds = np.array([p[0] for p in pts])
        if np.any(np.diff(ds) <= 0):
            raise ValueError("distortion values must be strictly increasing")
        for d, r, t in pts:
            if r < -1e-9:
                raise ValueError(f"negative rate {r} at D={d}")
            if t not in TAGS:
                raise ValueError(f"unknown tag {t!r}")
        object.__setattr__(self, "points", pts)
        if self.convexified:
            r = self.rates
            if len(r) >= 3:
                dd = self.distortions
                slopes = np.diff(r) / np.diff(dd)
                if np.any(np.diff(slopes) < -1e-6):
                    raise ValueError("curve marked convex has a negative second difference")

    @property
    def distortions(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def tags(self) -> list[str]:
        return [p[2] for p in self.points]

    def __len__(self):
        return len(self.points)


def _check_unit(D: float):
    if not 0.0 <= D <= 1.0:
        raise ValueError(f"distortion {D} outside [0, 1]")


def ea_isotropic_closed_form(D: float) -> float:
    """``1 - H({1-D, D/3, D/3, D/3})/2`` below 3/4, zero above."""
    _check_unit(D)
    if D >= 0.75:
        return 0.0
    return max(0.0, 1.0 - 0.5 * shannon([1 - D, D / 3, D / 3, D / 3]))


def cl_isotropic_closed_form(D: float) -> float:
    """``h2(1/2 + sqrt(D(1-D)))`` below 1/2, zero above."""
    _check_unit(D)
    if D >= 0.5:
        return 0.0
    return binary_entropy(min(1.0, 0.5 + np.sqrt(D * (1 - D))))


# ---------------------------------------------------------------------------
# classically assisted, k = 1


@dataclass
class ClassicalSearchResult:
    rate: float
    channel: QuantumChannel
    distortion: float
    restart_values: list = field(default_factory=list)
    evaluations: int = 0


def _choi_from_isometry(v: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    # J = sum_e vec(A_e) vec(A_e)^dag with input index first
    n_env = v.shape[0] // d_out
    a = v.reshape(d_out, n_env, d_in).transpose(1, 2, 0).reshape(n_env, d_in * d_out)
    return a.T @ a.conj()


def _anchor_choi(rho: np.ndarray, obs: DistortionObservable, d_in: int, cfg: SearchConfig):
    """A channel of (numerically) minimal distortion, used to repair infeasible points."""
    d_out = obs.dims[1]
    res = multistart(lambda v: distortion_from_choi(_choi_from_isometry(v, d_in, d_out), rho, obs),
                     (d_out * d_in * d_out, d_in), SearchConfig(restarts=2, seed=cfg.seed, step_tolerance=1e-9))
    choi = _choi_from_isometry(res.isometry, d_in, d_out)
    return choi, distortion_from_choi(choi, rho, obs)


def _eof_of(omega: np.ndarray, dims, eof_cfg: SearchConfig) -> float:
    if tuple(dims) == (2, 2):
        return eof_two_qubit(omega)
    return eof_search(DensityMatrix(omega, dims), eof_cfg)


def cl_rate_search(rho, obs: DistortionObservable, D: float, cfg: SearchConfig = CL_SEARCH,
                   eof_cfg: SearchConfig = SearchConfig(restarts=1, max_iters=200)) -> ClassicalSearchResult:
    """Search channels ``N`` with ``d(rho, N) <= D`` minimising ``E_F(omega_RB)``.

    Channels are Stinespring isometries with ``d_in * d_out`` environment
    dimensions. A candidate whose distortion exceeds ``D`` is mixed with a
    minimal-distortion anchor channel at the smallest weight that restores
    feasibility, so every evaluated point is feasible and the result is an
    upper bound.
    """
    rho = _as_density(rho)
    d_in, d_out = rho.dim, obs.dims[1]
    if obs.dims[0] != d_in:
        raise ValueError(f"observable reference dimension {obs.dims[0]} != source dimension {d_in}")
    if d_in > 4 or d_out > 4:
        raise ValueError("classically assisted search is limited to dimension 4")
    if D < 0:
        raise InfeasibleDistortion("distortion must be non-negative")
    m = rho.matrix
    lift = np.kron(_sqrt_transpose(m), np.eye(d_out))
    pulled = (lift @ obs.delta @ lift).T  # distortion is <pulled, J> entrywise
    anchor, d_min = _anchor_choi(m, obs, d_in, cfg)
    if D < d_min - 1e-9:
        raise InfeasibleDistortion(f"distortion {D} below the smallest found value {d_min:.3g}")

    def feasible_choi(v):
        choi = _choi_from_isometry(v, d_in, d_out)
        d = float(np.real(np.sum(pulled * choi)))
        if d <= D:
            return choi
        t = min(1.0, (d - D) / max(d - d_min, 1e-15))
        return (1 - t) * choi + t * anchor

    def objective(v):
        return _eof_of(lift @ feasible_choi(v) @ lift, (d_in, d_out), eof_cfg)

    # the identity channel is always a natural start when input and output match
    starts = [_identity_isometry(d_in, d_in * d_out)] if d_in == d_out else []
    res = multistart(objective, (d_out * d_in * d_out, d_in), cfg, starts=starts)
    choi = feasible_choi(res.isometry)
    channel = choi_to_kraus(choi, d_in, d_out)
    return ClassicalSearchResult(res.value, channel, distortion_from_choi(choi, m, obs), res.restart_values,
                                 res.evaluations)


def _identity_isometry(d: int, n_env: int) -> np.ndarray:
    v = np.zeros((d * n_env, d), dtype=complex)
    for i in range(d):
        v[i * n_env, i] = 1.0
    return v


def cl_rate_single_letter(rho, obs: DistortionObservable, D: float,
                          cfg: SearchConfig = CL_SEARCH) -> float:
    """Upper bound on ``min_{d(rho,N) <= D} E_F(omega_RB)`` (the k = 1 term).

    ``D = 0`` with the entanglement-fidelity observable forces the identity
    channel, giving ``E_F`` of the purification, i.e. ``H(rho)``.
    """
    rho = _as_density(rho)
    if D <= 1e-12 and obs.dims == (rho.dim, rho.dim) and np.allclose(
        obs.delta, fidelity_observable(rho).delta, atol=1e-12
    ):
        return von_neumann(rho)
    return cl_rate_search(rho, obs, D, cfg).rate


# ---------------------------------------------------------------------------
# curves


def convex_hull(curve: RateCurve) -> RateCurve:
    """Lower convex envelope evaluated on the curve's own grid.

    Points strictly above the envelope take the time-sharing value and the
    ``upper_bound`` tag.
    """
    if len(curve) < 2:
        raise ValueError("convex hull needs at least two points")
    d, r = curve.distortions, curve.rates
    hull: list[int] = []
    for i in range(len(d)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b if it lies on or above the chord a -> i
            if (r[b] - r[a]) * (d[i] - d[a]) >= (r[i] - r[a]) * (d[b] - d[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    env = np.interp(d, d[hull], r[hull])
    pts = []
    for k, (dk, rk, tag) in enumerate(curve.points):
        if env[k] < rk - 1e-12:
            pts.append((dk, float(env[k]), "upper_bound"))
        else:
            pts.append((dk, rk, tag))
    return RateCurve(tuple(pts), convexified=True)


def thread_count() -> int:
    """Worker threads for grid evaluation, capped by ``QRD_THREADS``."""
    raw = os.environ.get("QRD_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"QRD_THREADS must be an integer, got {raw!r}") from None
    return min(4, os.cpu_count() or 1)


def sample_curve(fn: Callable[[float], float], grid: Sequence[float], tag: str, threads: int | None = None) -> RateCurve:
    """Evaluate ``fn`` on ``grid`` (in parallel); rows come back ordered by ``D``."""
    grid = sorted(float(g) for g in grid)
    n = threads or thread_count()
    if n == 1:
        vals = [fn(g) for g in grid]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            vals = list(ex.map(fn, grid))
    return RateCurve(tuple((g, max(v, 0.0), tag) for g, v in zip(grid, vals)))


def write_curve_csv(curve: RateCurve, dest, header_lines: Sequence[str] = ()):
    """Write ``D,rate,tag`` rows (9 significant digits) to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(curve, dest, header_lines)
    else:
        with open(dest, "w", newline="") as fh:
            _write_rows(curve, fh, header_lines)


def _write_rows(curve, fh, header_lines):
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["D", "rate", "tag"])
    for d, r, t in curve.points:
        w.writerow([f"{d:.9g}", f"{r:.9g}", t])
