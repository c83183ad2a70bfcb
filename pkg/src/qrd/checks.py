"""Seeded invariant suites run by ``qrd check``.

Each suite walks random instances and returns on the first violation with a
dict describing it (``None`` when everything holds).
"""

from __future__ import annotations

import numpy as np

from . import entropy as ent
from .distortion import DistortionObservable, distortion, fidelity_observable, source_output
from .eaopt import ea_problem, qsi_problem
from .qchannel import apply, bell_weights, clifford_twirl, random_channel
from .qstate import (
    DensityMatrix,
    entanglement_fidelity,
    maximally_mixed,
    partial_trace,
    random_density,
    random_pure,
    trace_distance,
)
from .ratefuncs import ea_isotropic_closed_form, ea_rate_optimize
from .regions import qrst_qsi_feedback, qrst_qsi_nonfeedback_Ip, qsr_region

__all__ = ["SUITES", "run_suite"]


def _fail(name, **info):
    return {"check": name, **{k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in info.items()}}


def lemmas(n: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    for i in range(n):
        da, db, dc = (int(x) for x in rng.integers(2, 4, size=3))
        s = int(rng.integers(1 << 30))
        # data processing on B
        sigma = random_density([da, db], seed=s)
        ch = random_channel(db, db, seed=s + 1)
        slack = ent.mutual_information(sigma, [0], [1]) - ent.mutual_information(apply(ch, sigma, 1), [0], [1])
        if slack < -1e-9:
            return _fail("data_processing", instance=i, slack=slack)
        # continuity of conditional entropy
        rho = random_density([2, 2], seed=s + 2)
        mix = float(rng.uniform(0, 0.3))
        other = DensityMatrix((1 - mix) * rho.matrix + mix * random_density([2, 2], seed=s + 3).matrix, (2, 2))
        eps = trace_distance(rho, other)
        diff = abs(ent.conditional(rho, [0], [1]) - ent.conditional(other, [0], [1]))
        if diff > ent.alicki_fannes_bound(eps, 2) + 1e-12:
            return _fail("alicki_fannes", instance=i, eps=eps, diff=diff)
        # superadditivity of mutual information
        psi1 = random_pure([2, 2], seed=s + 4).density()
        psi2 = random_pure([2, 2], seed=s + 5).density()
        joint = DensityMatrix(np.kron(psi1.matrix, psi2.matrix), (2, 2, 2, 2))
        big = random_channel(4, 4, seed=s + 6)
        out = apply(big, joint, [1, 3])  # (R1, B1B2, R2)
        out = DensityMatrix(out.matrix, (2, 2, 2, 2))  # split B1B2 back into (B1, B2)
        lhs = ent.mutual_information(out, [0, 3], [1, 2])
        rhs = ent.mutual_information(partial_trace(out, [0, 1]), [0], [1]) + ent.mutual_information(
            partial_trace(out, [2, 3]), [1], [0])
        if lhs - rhs < -1e-9:
            return _fail("superadditivity", instance=i, slack=lhs - rhs)
        # duality of conditional entropy on pure tripartite states
        psi = random_pure([da, db, dc], seed=s + 7)
        resid = ent.conditional(psi, [0], [1]) + ent.conditional(psi, [0], [2])
        if abs(resid) > 1e-9:
            return _fail("duality", instance=i, residual=resid)
    return None


def twirl(n: int = 200, seed: int = 0):
    pi = maximally_mixed(2)
    for i in range(n):
        ch = random_channel(2, 2, seed=seed + i)
        tw = clifford_twirl(ch)
        w, resid = bell_weights(tw.choi)
        spread = float(np.ptp(w[1:]))
        if resid > 1e-9 or spread > 1e-9:
            return _fail("bell_diagonal", instance=i, residual=resid, spread=spread)
        df = abs(entanglement_fidelity(pi, ch) - entanglement_fidelity(pi, tw))
        if df > 1e-10:
            return _fail("fidelity_preserved", instance=i, diff=df)
        slack = ent.mutual_information(source_output(pi, ch), [0], [1]) - ent.mutual_information(
            source_output(pi, tw), [0], [1])
        if slack < -1e-9:
            return _fail("twirl_information", instance=i, slack=slack)
    return None


def regions(n: int = 100, seed: int = 0):
    for i in range(n):
        psi = random_pure([2, 2, 2, 2], seed=seed + i)
        reg = qsr_region(psi, [[0], [1], [2], [3]])
        gain = reg.extras["ebit_gain"]
        if abs(-gain - reg.corner[1]) > 1e-9:
            return _fail("ebit_balance", instance=i, residual=-gain - reg.corner[1])
        if reg.slack(*reg.corner) < -1e-9:
            return _fail("corner", instance=i)
        rho = random_density([2, 2], seed=seed + 1000 + i)
        ch = random_channel(2, 2, seed=seed + 2000 + i)
        diff = abs(qrst_qsi_feedback(rho, ch, 0.0) - qrst_qsi_nonfeedback_Ip(rho, ch))
        if diff > 1e-12:
            return _fail("feedback_slice", instance=i, diff=diff)
    return None


def _fd_check(prob, choi, lam, rng):
    g = prob.choi_gradient(choi, lam)
    n = choi.shape[0]
    h = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = (h + h.conj().T) / 2
    h /= np.linalg.norm(h)  # unit direction keeps the truncation error small near the boundary
    eps = 1e-6
    fd = (prob.choi_value(choi + eps * h, lam) - prob.choi_value(choi - eps * h, lam)) / (2 * eps)
    an = float(np.real(np.sum(g.T * h)))
    return abs(fd - an) / max(abs(an), 1e-8)


def optimizer(n: int = 10, seed: int = 0):
    rng = np.random.default_rng(seed)
    rho = random_density([2], seed=seed)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    obs = DistortionObservable(a @ a.conj().T / 4, (2, 2))
    rab = random_density([2, 2], seed=seed + 1)
    b = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    obs_q = DistortionObservable(b @ b.conj().T / 8, (4, 2))
    for family, prob in (("ea", ea_problem(rho, obs)), ("qsi", qsi_problem(rab, obs_q))):
        for i in range(n):
            choi = random_channel(2, 2, seed=seed + 100 + i).choi
            err = _fd_check(prob, choi, float(rng.uniform(0, 2)), rng)
            if err > 1e-5:
                return _fail("gradient", family=family, instance=i, relative_error=err)
    pi = maximally_mixed(2)
    fid = fidelity_observable(pi)
    for D in (0.1, 0.3, 0.5):
        res = ea_rate_optimize(pi, fid, D)
        err = abs(res.rate - ea_isotropic_closed_form(D))
        if err > 1e-3 or res.gap > 1e-4:
            return _fail("closed_form", D=D, error=err, gap=res.gap)
        if distortion(pi, res.channel, fid) > D + 1e-6:
            return _fail("feasibility", D=D)
    return None


SUITES = {"lemmas": lemmas, "twirl": twirl, "regions": regions, "optimizer": optimizer}


def run_suite(name: str, seed: int = 0):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed=seed)
