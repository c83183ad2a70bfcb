"""Entanglement-assisted rate-distortion optimizer.

The program ``min 1/2 I(R;B'|S) subject to Tr[Delta sigma] <= D`` is solved
over output states ``sigma_{XB'} = (K (x) 1) J (K (x) 1)^dag``, where ``J`` is
the Choi matrix of the channel and ``K`` maps the channel input to its
purifying system ``X`` (``X = R`` without side information, ``X = RB`` with
it). As ``J`` ranges over channels, ``sigma`` ranges over all states with the
fixed marginal ``sigma_X = K K^dag``, so we optimise ``sigma`` directly on
``supp(sigma_X) (x) B'``.

For a multiplier ``lam >= 0`` the Lagrangian ``1/2 I + lam Tr[Delta sigma]``
is minimised by entropic mirror descent: each step takes
``log sigma <- (1-a) log sigma + a (log sigma_{SB'} (x) 1 - 2 ln2 lam Delta) - Y (x) 1``
and chooses the Hermitian ``Y`` (a Newton solve) so the marginal constraint
holds exactly, i.e. a relative-entropy projection. The full step ``a = 1`` is
the Blahut-Arimoto update and never increases the objective. ``lam`` is then
root-found so the distortion constraint is tight.

Every solve carries a certificate: the returned channel is feasible (upper
bound), and ``f(sigma) + <G, s - sigma>`` minimised over the feasible set,
bounded below through a dual matrix ``Y`` with ``G - Y (x) 1 >= 0``, gives a
Lagrangian lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .distortion import DistortionObservable, fidelity_observable
from .entropy import von_neumann
from .qchannel import QuantumChannel, choi_to_kraus, identity_channel
from .qstate import _as_density, mirror_purification, permute_op, ptrace

__all__ = [
    "OptimizerOptions",
    "OptimizerResult",
    "InfeasibleDistortion",
    "RateProblem",
    "ea_problem",
    "qsi_problem",
    "ea_rate_optimize",
    "ea_qsi_rate_optimize",
    "solve",
]

LN2 = np.log(2.0)
_LOG_FLOOR = 1e-30


class InfeasibleDistortion(ValueError):
    """The requested distortion is below what any channel achieves."""


@dataclass(frozen=True)
class OptimizerOptions:
    gap_tolerance: float = 1e-4
    max_iters: int = 20000
    inner_tol: float = 2e-6
    lam_max: float | None = None
    lam_cap: float = 1e8
    armijo: float = 0.5
    distortion_tol: float = 1e-9


@dataclass
class OptimizerResult:
    rate: float
    channel: QuantumChannel
    lam: float
    iterations: int
    kkt_residual: float
    lower_bound: float
    distortion: float
    converged: bool
    history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return self.rate - self.lower_bound


# ---------------------------------------------------------------------------
# Hermitian matrix functions


def _logm(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    return (v * np.log(np.maximum(w, _LOG_FLOOR))) @ v.conj().T


def _expm(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    return (v * np.exp(w)) @ v.conj().T


def _entropy_bits(a: np.ndarray) -> float:
    w = np.linalg.eigvalsh(a)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def _herm_basis(r: int) -> np.ndarray:
    basis = []
    for j in range(r):
        e = np.zeros((r, r), dtype=complex)
        e[j, j] = 1
        basis.append(e)
    for j in range(r):
        for k in range(j + 1, r):
            e = np.zeros((r, r), dtype=complex)
            e[j, k] = e[k, j] = 1 / np.sqrt(2)
            basis.append(e)
            e = np.zeros((r, r), dtype=complex)
            e[j, k] = -1j / np.sqrt(2)
            e[k, j] = 1j / np.sqrt(2)
            basis.append(e)
    return np.array(basis)


# ---------------------------------------------------------------------------


@dataclass
class RateProblem:
    """``1/2 [H(tau) - H(tau_S)] + 1/2 [H(sigma_{S B'}) - H(sigma_{X B'})]`` over ``sigma``.

    ``kmap`` is the ``d_X x d_in`` amplitude matrix of the purification
    (``|phi> = (K (x) 1)|Gamma>``), ``x_dims`` the factor dims of ``X``,
    ``side`` the indices of ``X`` factors conditioned on, ``delta`` the
    distortion observable embedded on ``X (x) B'``.
    """

    kmap: np.ndarray
    x_dims: tuple[int, ...]
    side: tuple[int, ...]
    d_out: int
    delta: np.ndarray

    def __post_init__(self):
        tau = self.kmap @ self.kmap.conj().T
        w, v = np.linalg.eigh(tau)
        keep = w > 1e-12
        self.proj = v[:, keep]  # d_X x r
        self.tau_c = np.diag(w[keep]).astype(complex)
        self.r = int(keep.sum())
        self.d_x = int(np.prod(self.x_dims))
        self.pk = np.kron(self.proj, np.eye(self.d_out))  # (d_X d_out) x (r d_out)
        self.delta_c = self.pk.conj().T @ self.delta @ self.pk
        self.basis = _herm_basis(self.r)
        self.basis_big = np.array([np.kron(b, np.eye(self.d_out)) for b in self.basis])
        self.rest = tuple(i for i in range(len(self.x_dims)) if i not in self.side)
        self.const = 0.5 * (_entropy_bits(tau) - (self._side_entropy(tau) if self.side else 0.0))

    def _side_entropy(self, tau):
        return _entropy_bits(ptrace(tau, self.x_dims, self.side))

    # embedding ------------------------------------------------------------
    def embed(self, sc: np.ndarray) -> np.ndarray:
        return self.pk @ sc @ self.pk.conj().T

    def compress(self, full: np.ndarray) -> np.ndarray:
        return self.pk.conj().T @ full @ self.pk

    def side_marginal(self, full: np.ndarray) -> np.ndarray:
        dims = list(self.x_dims) + [self.d_out]
        return ptrace(full, dims, list(self.side) + [len(self.x_dims)])

    def lift_side(self, op: np.ndarray) -> np.ndarray:
        """``op`` on (side factors, B') tensored with identity on the rest of X, in X-then-B' order."""
        d_rest = int(np.prod([self.x_dims[i] for i in self.rest])) if self.rest else 1
        big = np.kron(np.eye(d_rest), op)
        src = list(self.rest) + list(self.side) + [len(self.x_dims)]
        dims = list(self.x_dims) + [self.d_out]
        src_dims = [dims[s] for s in src]
        order = [src.index(k) for k in range(len(dims))]
        return permute_op(big, src_dims, order)

    # objective --------------------------------------------------------------
    def info(self, sc: np.ndarray) -> float:
        """``1/2 I(R;B'|S)`` in bits of the compressed state ``sc``."""
        full = self.embed(sc)
        return self.const + 0.5 * (_entropy_bits(self.side_marginal(full)) - _entropy_bits(sc))

    def dist(self, sc: np.ndarray) -> float:
        return float(np.real(np.sum(self.delta_c.T * sc)))

    def gradient(self, sc: np.ndarray, lam: float) -> np.ndarray:
        full = self.embed(sc)
        side_log = self.compress(self.lift_side(_logm(self.side_marginal(full))))
        g = (_logm(sc) - side_log) / (2 * LN2) + lam * self.delta_c
        return (g + g.conj().T) / 2

    # choi <-> sigma -----------------------------------------------------------
    def sigma_from_choi(self, choi: np.ndarray) -> np.ndarray:
        k = np.kron(self.kmap, np.eye(self.d_out))
        return k @ choi @ k.conj().T

    def choi_value(self, choi: np.ndarray, lam: float = 0.0) -> float:
        """Lagrangian ``1/2 I + lam * distortion`` as a function of the Choi matrix."""
        sc = self.compress(self.sigma_from_choi(choi))
        return self.info(sc) + lam * self.dist(sc)

    def choi_gradient(self, choi: np.ndarray, lam: float = 0.0) -> np.ndarray:
        """Gradient of :meth:`choi_value`: the output-space gradient pulled back through ``J -> sigma``."""
        sc = self.compress(self.sigma_from_choi(choi))
        k = self.pk.conj().T @ np.kron(self.kmap, np.eye(self.d_out))
        return k.conj().T @ self.gradient(sc, lam) @ k

    def channel_from_sigma(self, sc: np.ndarray) -> QuantumChannel:
        d_in = self.kmap.shape[1]
        kc = self.proj.conj().T @ self.kmap  # r x d_in, full row rank
        kp = np.linalg.pinv(kc)
        big = np.kron(kp, np.eye(self.d_out))
        choi = big @ sc @ big.conj().T
        comp = np.eye(d_in) - kp @ kc
        if np.linalg.norm(comp) > 1e-10:
            choi = choi + np.kron(comp, np.eye(self.d_out) / self.d_out)
        return choi_to_kraus(choi, d_in, self.d_out)

    def product_state(self, out: np.ndarray | None = None) -> np.ndarray:
        out = np.eye(self.d_out) / self.d_out if out is None else out
        return np.kron(self.tau_c, out).astype(complex)

    # projection -------------------------------------------------------------
    def project(self, log_target: np.ndarray, y0: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Find Hermitian ``Y`` with ``Tr_B' exp(L - Y (x) 1) = tau``; return ``(sigma, Y)``.

        Newton's method on the convex dual ``Tr exp(L - Y (x) 1) + Tr[tau Y]``.
        """
        d = self.d_out
        eye_d = np.eye(d)
        eye_r = np.eye(self.r)
        tau = self.tau_c

        def evaluate(y):
            w, v = np.linalg.eigh(log_target - np.kron(y, eye_d))
            if not np.all(np.isfinite(w)) or w.max() > 700:
                return None
            ew = np.exp(w)
            omega = (v * ew) @ v.conj().T
            marg = ptrace(omega, [self.r, d], [0])
            phi = float(np.sum(ew) + np.real(np.trace(tau @ y)))
            return w, v, ew, marg, phi

        # fix the overall scale first so the exponential has unit trace
        w = np.linalg.eigvalsh(log_target - np.kron(y0, eye_d))
        top = w.max()
        y = y0 + (top + np.log(np.sum(np.exp(w - top)))) * eye_r
        res = evaluate(y)
        w, v, ew, marg, phi = res
        for _ in range(200):
            grad_m = tau - marg
            if np.max(np.abs(grad_m)) < 1e-14:
                break
            g = np.real(np.einsum("kij,ji->k", self.basis, grad_m))
            diff = w[:, None] - w[None, :]
            same = np.abs(diff) < 1e-10
            safe = np.where(same, 1.0, diff)
            gamma = np.where(same, ew[:, None], ew[None, :] * np.expm1(np.clip(diff, -700, 700)) / safe)
            bt = np.einsum("ia,kab,bj->kij", v.conj().T, self.basis_big, v, optimize=True)
            hess = np.real(np.einsum("kij,ij,lij->kl", bt.conj(), gamma, bt, optimize=True))
            step = -np.linalg.lstsq(hess, g, rcond=1e-14)[0]
            ystep = np.einsum("k,kij->ij", step, self.basis)
            t = 1.0
            while True:
                cand = evaluate(y + t * ystep)
                if cand is not None and cand[4] <= phi + 1e-4 * t * float(g @ step):
                    break
                t *= 0.5
                if t < 1e-10:
                    cand = None
                    break
            if cand is None:
                break
            y = y + t * ystep
            w, v, ew, marg, phi = cand
            if t * np.max(np.abs(ystep)) < 1e-15:
                break
        sigma = (v * ew) @ v.conj().T
        sigma = (sigma + sigma.conj().T) / 2
        return sigma, y

    # certificate --------------------------------------------------------------
    def inner_gap(self, sc: np.ndarray, lam: float) -> tuple[float, np.ndarray]:
        """Frank-Wolfe style gap ``<G, sigma> - min_feasible <G, s>`` (upper estimate).

        Returns ``(gap, G)``.
        """
        g = self.gradient(sc, lam)
        d = self.d_out
        best = np.inf
        lin = float(np.real(np.sum(g.T * sc)))
        for y0 in (
            ptrace(g, [self.r, d], [0]) / d,
            _weighted_dual(g, sc, self.tau_c, self.r, d),
        ):
            mu = np.linalg.eigvalsh(g - np.kron(y0, np.eye(d)))[0]
            lb = float(np.real(np.trace(y0 @ self.tau_c))) + mu
            best = min(best, lin - lb)
        return max(best, 0.0), g


def _weighted_dual(g, sc, tau, r, d):
    m = ptrace(g @ sc, [r, d], [0])
    tinv = np.diag(1.0 / np.real(np.diag(tau)))
    y = m @ tinv
    return (y + y.conj().T) / 2


# ---------------------------------------------------------------------------
# problem builders


def _check_obs(obs: DistortionObservable, d_ref: int):
    if obs.dims[0] != d_ref:
        raise ValueError(f"observable reference dimension {obs.dims[0]} != {d_ref}")


def ea_problem(rho, obs: DistortionObservable) -> RateProblem:
    """Entanglement-assisted program ``1/2 I(R;B)`` on the mirror purification of ``rho``."""
    rho = _as_density(rho)
    _check_obs(obs, rho.dim)
    kmap = mirror_purification(rho).vector.reshape(rho.dim, rho.dim)
    return RateProblem(kmap, (rho.dim,), (), obs.dims[1], obs.delta)


def qsi_problem(rho_ab, obs: DistortionObservable) -> RateProblem:
    """Program ``1/2 I(R;B'|B)`` with ``phi_RAB`` the mirror purification of ``rho_AB``.

    ``rho_ab`` must carry dims ``(d_A, d_B)``; the observable acts on
    ``R (x) B'`` with ``d_R = d_A d_B``.
    """
    rho_ab = _as_density(rho_ab)
    if len(rho_ab.dims) != 2:
        raise ValueError("side-information source must have dims (d_A, d_B)")
    d_a, d_b = rho_ab.dims
    d_r = d_a * d_b
    _check_obs(obs, d_r)
    amp = mirror_purification(rho_ab).vector.reshape(d_r, d_a, d_b)
    # K: A -> R (x) B with K[(r, b), a] = amp[r, a, b]
    kmap = amp.transpose(0, 2, 1).reshape(d_r * d_b, d_a)
    d_out = obs.dims[1]
    # Delta on (R, B') lifted to (R, B, B')
    big = np.kron(obs.delta, np.eye(d_b))  # order R, B', B
    delta = permute_op(big, [d_r, d_out, d_b], [0, 2, 1])
    return RateProblem(kmap, (d_r, d_b), (1,), d_out, delta)


# ---------------------------------------------------------------------------
# solver


@dataclass
class _Solve:
    sigma: np.ndarray
    y: np.ndarray
    info: float
    dist: float
    gap: float
    iters: int


def _solve_lagrangian(prob: RateProblem, lam: float, sigma0, y0, opts: OptimizerOptions, budget: int) -> _Solve:
    sc = sigma0
    y = y0
    c = 2 * LN2 * lam
    lagr = prob.info(sc) + lam * prob.dist(sc)
    gap = np.inf
    it = 0
    log_sc = _logm(sc)
    while it < budget:
        it += 1
        full = prob.embed(sc)
        side_log = prob.compress(prob.lift_side(_logm(prob.side_marginal(full))))
        target = side_log - c * prob.delta_c
        step = 1.0
        while True:
            new, y_new = prob.project((1 - step) * log_sc + step * target, y)
            new_l = prob.info(new) + lam * prob.dist(new)
            if new_l <= lagr + 1e-13 or step < 1e-3:
                break
            step *= opts.armijo
        improvement = lagr - new_l
        sc, y, lagr = new, y_new, new_l
        log_sc = _logm(sc)
        if it % 10 == 0 or improvement < 1e-12:
            gap, _ = prob.inner_gap(sc, lam)
            if gap < opts.inner_tol or improvement < 1e-15:
                break
    if not np.isfinite(gap):
        gap, _ = prob.inner_gap(sc, lam)
    return _Solve(sc, y, prob.info(sc), prob.dist(sc), gap, it)


def solve(prob: RateProblem, D: float, opts: OptimizerOptions = OptimizerOptions()) -> OptimizerResult:
    """Minimise ``1/2 I`` subject to distortion ``<= D`` for a prepared problem."""
    d_out = prob.d_out
    # zero-rate test: best product output
    marg = ptrace(prob.delta_c @ np.kron(prob.tau_c, np.eye(d_out)), [prob.r, d_out], [1])
    w, v = np.linalg.eigh((marg + marg.conj().T) / 2)
    if D >= w[0] - opts.distortion_tol:
        ground = np.outer(v[:, 0], v[:, 0].conj())
        sc = prob.product_state(ground)
        return OptimizerResult(
            rate=max(prob.info(sc), 0.0), channel=prob.channel_from_sigma(sc), lam=0.0, iterations=0,
            kkt_residual=0.0, lower_bound=0.0, distortion=prob.dist(sc), converged=True,
        )

    history = []
    total = 0
    y0 = np.zeros((prob.r, prob.r), dtype=complex)
    start = prob.product_state()
    cache: dict[float, _Solve] = {}

    def run(lam):
        nonlocal total
        if lam in cache:
            return cache[lam]
        # warm start from the nearest multiplier already solved
        if cache:
            near = min(cache, key=lambda l: abs(np.log1p(l) - np.log1p(lam)))
            s0, yy = cache[near].sigma, cache[near].y
        else:
            s0, yy = start, y0
        res = _solve_lagrangian(prob, lam, s0, yy, opts, opts.max_iters)
        total += res.iters
        cache[lam] = res
        history.append((lam, res.info, res.dist, res.gap))
        return res

    lam_hi = opts.lam_max if opts.lam_max is not None else 10.0 * np.log2(max(prob.d_x, 2))
    lam_lo = 0.0
    while run(lam_hi).dist > D:
        lam_lo = lam_hi
        lam_hi *= 10.0
        if lam_hi > opts.lam_cap:
            raise InfeasibleDistortion(f"distortion {D} not reachable (best {run(lam_lo).dist:.3g})")

    if run(lam_hi).dist < D - opts.distortion_tol:
        f = lambda l: run(l).dist - D  # noqa: E731
        if lam_lo == 0.0 and f(0.0) <= 0:
            lam_star = 0.0
        else:
            lam_star = brentq(f, lam_lo, lam_hi, xtol=1e-12, rtol=1e-12, maxiter=200)
    else:
        lam_star = lam_hi

    # feasible candidate: the solved multiplier with the largest distortion still <= D
    feasible = [(l, s) for l, s in cache.items() if s.dist <= D + opts.distortion_tol]
    lam_f, best = min(feasible, key=lambda t: t[1].info)
    lower = max(prob.const + (s.info - prob.const) + l * (s.dist - D) - s.gap for l, s in cache.items())
    upper = best.info
    gap = upper - lower
    channel = prob.channel_from_sigma(best.sigma)
    return OptimizerResult(
        rate=upper, channel=channel, lam=lam_f, iterations=total, kkt_residual=max(gap, 0.0),
        lower_bound=lower, distortion=best.dist, converged=bool(gap < opts.gap_tolerance), history=history,
    )


def ea_rate_optimize(rho, obs: DistortionObservable, D: float, opts: OptimizerOptions = OptimizerOptions()) -> OptimizerResult:
    """Entanglement-assisted rate ``1/2 min_{d(rho,N) <= D} I(R;B)``."""
    rho = _as_density(rho)
    if D < 0:
        raise InfeasibleDistortion("distortion must be non-negative")
    if D <= opts.distortion_tol and obs.dims == (rho.dim, rho.dim) and np.allclose(
        obs.delta, fidelity_observable(rho).delta, atol=1e-12
    ):
        # only the identity channel has zero entanglement-fidelity distortion
        rate = von_neumann(rho)
        return OptimizerResult(rate, identity_channel(rho.dim), np.inf, 0, 0.0, rate, 0.0, True)
    return solve(ea_problem(rho, obs), D, opts)


def ea_qsi_rate_optimize(rho_ab, obs: DistortionObservable, D: float, opts: OptimizerOptions = OptimizerOptions()) -> OptimizerResult:
    """Entanglement-assisted rate with quantum side information, ``1/2 min I(R;B'|B)``."""
    if D < 0:
        raise InfeasibleDistortion("distortion must be non-negative")
    return solve(qsi_problem(rho_ab, obs), D, opts)
