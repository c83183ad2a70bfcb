"""One test per acceptance criterion; each records a PASS/FAIL line shown in the terminal summary."""

import time

import numpy as np
from scipy.stats import entropy as scipy_entropy

from qrd import cli
from qrd.checks import _fd_check
from qrd.distortion import DistortionObservable, fidelity_observable, source_output
from qrd.eaopt import ea_problem, qsi_problem
from qrd.entropy import alicki_fannes_bound, conditional, mutual_information
from qrd.measures import bell_mixture, eof_two_qubit
from qrd.qchannel import apply, clifford_twirl, random_channel
from qrd.qstate import (
    DensityMatrix,
    entanglement_fidelity,
    maximally_mixed,
    partial_trace,
    random_density,
    random_pure,
    trace_distance,
)
from qrd.ratefuncs import CL_SEARCH, cl_rate_single_letter, ea_rate_optimize
from qrd.regions import max_identity_check, qrst_qsi_feedback, qrst_qsi_nonfeedback_Ip, qsr_region

from oracles import eig_entropy

PI = maximally_mixed(2)
FID = fidelity_observable(PI)
BELL = np.array([[1, 0, 0, 1], [0, 1, 1, 0], [0, 1, -1, 0], [1, 0, 0, -1]]) / np.sqrt(2)


def h2(p):
    return float(scipy_entropy([p, 1 - p], base=2))


def ea_reference(D):
    # closed form, computed here from scipy entropies
    return max(0.0, 1 - 0.5 * float(scipy_entropy([1 - D, D / 3, D / 3, D / 3], base=2))) if D < 0.75 else 0.0


def cl_reference(D):
    return h2(0.5 + np.sqrt(D * (1 - D))) if D < 0.5 else 0.0


def line(n, ok, text):
    return f"[{n}] {'PASS' if ok else 'FAIL'}  {text}"


def test_ea_rate_matches_closed_form(report):
    grid = np.round(np.arange(0.05, 0.7001, 0.05), 10)
    t0 = time.perf_counter()
    res = [ea_rate_optimize(PI, FID, float(D)) for D in grid]
    elapsed = time.perf_counter() - t0
    err = max(abs(r.rate - ea_reference(D)) for r, D in zip(res, grid))
    gap = max(r.gap for r in res)
    ok = err < 1e-3 and gap < 1e-4 and elapsed < 300
    report(line(1, ok, f"EA optimizer vs closed form on {len(grid)} points: max err {err:.2e}, "
                       f"max gap {gap:.2e}, {elapsed:.1f}s"))
    assert ok


def test_classically_assisted_rate_matches_closed_form(report):
    assert CL_SEARCH.restarts >= 20
    grid = np.round(np.arange(0.05, 0.4501, 0.05), 10)
    vals = [cl_rate_single_letter(PI, FID, float(D)) for D in grid]
    err = max(abs(v - cl_reference(D)) for v, D in zip(vals, grid))
    tail = [cl_rate_single_letter(PI, FID, D) for D in (0.5, 0.6)]
    ok = err < 5e-3 and max(tail) < 5e-3
    report(line(2, ok, f"classically assisted search vs closed form on {len(grid)} points: max err {err:.2e}; "
                       f"D=0.5, 0.6 values {tail[0]:.1e}, {tail[1]:.1e}"))
    assert ok


def test_bell_mixture_formation_identity(report):
    grid = np.linspace(0.0, 0.49, 50)
    err = max(abs(eof_two_qubit(bell_mixture(D)) - cl_reference(D)) for D in grid)
    ok = err < 1e-9
    report(line(3, ok, f"E_F of Bell mixtures vs h2(1/2 + sqrt(D(1-D))) on 50 points: max err {err:.1e}"))
    assert ok


def test_twirl_reduction(report):
    worst_resid = worst_fid = 0.0
    worst_slack = np.inf
    for i in range(200):
        ch = random_channel(2, 2, seed=10_000 + i)
        tw = clifford_twirl(ch)
        j = tw.choi / 2
        m = BELL @ j @ BELL.T
        off = np.max(np.abs(m - np.diag(np.diag(m))))
        spread = np.ptp(np.real(np.diag(m))[1:])
        worst_resid = max(worst_resid, off, spread)
        worst_fid = max(worst_fid, abs(entanglement_fidelity(PI, ch) - entanglement_fidelity(PI, tw)))
        slack = mutual_information(source_output(PI, ch), [0], [1]) - mutual_information(source_output(PI, tw), [0], [1])
        worst_slack = min(worst_slack, slack)
    ok = worst_resid < 1e-9 and worst_fid < 1e-10 and worst_slack >= -1e-9
    report(line(4, ok, f"twirl on 200 channels: Bell residual {worst_resid:.1e}, fidelity change {worst_fid:.1e}, "
                       f"min I(R;B) slack {worst_slack:.2e}"))
    assert ok


def test_entropy_lemmas(report):
    rng = np.random.default_rng(2024)
    dp = sa = np.inf
    af_violations = 0
    duality = 0.0
    n = 200
    for i in range(n):
        da, db, dc = (int(x) for x in rng.integers(2, 4, size=3))
        s = int(rng.integers(1 << 30))
        sigma = random_density([da, db], seed=s)
        ch = random_channel(db, db, seed=s + 1)
        dp = min(dp, mutual_information(sigma, [0], [1]) - mutual_information(apply(ch, sigma, 1), [0], [1]))

        rho = random_density([da, db], seed=s + 2)
        mix = float(rng.uniform(0, 0.3))
        other = DensityMatrix((1 - mix) * rho.matrix + mix * random_density([da, db], seed=s + 3).matrix, (da, db))
        eps = trace_distance(rho, other)
        if abs(conditional(rho, [0], [1]) - conditional(other, [0], [1])) > alicki_fannes_bound(eps, da) + 1e-12:
            af_violations += 1

        p1, p2 = random_pure([da, db], seed=s + 4), random_pure([da, db], seed=s + 5)
        joint = DensityMatrix(np.kron(p1.density().matrix, p2.density().matrix), (da, db, da, db))
        out = apply(random_channel(db * db, db * db, n_kraus=2, seed=s + 6), joint, [1, 3])
        out = DensityMatrix(out.matrix, (da, db, db, da))  # (R1, B1, B2, R2)
        whole = mutual_information(out, [0, 3], [1, 2])
        parts = mutual_information(partial_trace(out, [0, 1]), [0], [1]) + mutual_information(
            partial_trace(out, [2, 3]), [1], [0])
        sa = min(sa, whole - parts)

        psi = random_pure([da, db, dc], seed=s + 7)
        duality = max(duality, abs(conditional(psi, [0], [1]) + conditional(psi, [0], [2])))
    ok = dp >= -1e-9 and sa >= -1e-9 and af_violations == 0 and duality < 1e-9
    report(line(5, ok, f"lemmas on {n} instances each: data processing slack {dp:.1e}, superadditivity slack "
                       f"{sa:.1e}, Alicki-Fannes violations {af_violations}, duality residual {duality:.1e}"))
    assert ok


def _h(psi, keep):
    return eig_entropy(partial_trace(psi, keep).matrix) if keep else 0.0


def test_region_corner_algebra(report):
    literal = corrected = 0.0
    feedback = 0.0
    for i in range(100):
        psi = random_pure([2, 2, 2, 2], seed=30_000 + i)
        a, b, c, r = 0, 1, 2, 3
        mi = lambda x, y: _h(psi, [x]) + _h(psi, [y]) - _h(psi, sorted([x, y]))  # noqa: E731
        cond = _h(psi, [b, c]) - _h(psi, [b])
        cmi = _h(psi, [b, r]) + _h(psi, [b, c]) - _h(psi, [b]) - _h(psi, [b, c, r])
        rhs = cond - 0.5 * cmi
        lhs = 0.5 * (mi(b, c) - mi(a, c))
        literal = max(literal, abs(lhs - rhs))
        corrected = max(corrected, abs(-lhs - rhs))
        reg = qsr_region(psi, [[a], [b], [c], [r]])
        corrected = max(corrected, abs(reg.corner[1] - rhs), abs(reg.extras["ebit_gain"] - lhs))

        rho = random_density([2, 2], seed=31_000 + i)
        ch = random_channel(2, 2, seed=32_000 + i)
        feedback = max(feedback, abs(qrst_qsi_feedback(rho, ch, 0.0) - qrst_qsi_nonfeedback_Ip(rho, ch)))
    ok = corrected < 1e-9 and feedback < 1e-12
    report(line(6, literal < 1e-9, f"corner identity as written, 1/2(I(B;C)-I(A;C)) = H(C|B) - 1/2 I(R;C|B): "
                                   f"max residual {literal:.2e} (the two sides differ by sign)"))
    report(line(6, ok, f"sign-corrected corner identity, 1/2(I(A;C)-I(B;C)) = H(C|B) - 1/2 I(R;C|B), on 100 "
                       f"states: max residual {corrected:.1e}; feedback vs degenerate split {feedback:.1e}"))
    assert ok
    # the as-written form is its negation; recorded as a conflict rather than asserted
    assert literal > 1e-3


def test_side_information_max_identity(report):
    worst = 0.0
    for i in range(20):
        lhs, rhs = max_identity_check(random_channel(2, 2, seed=40_000 + i), 2, 2)
        worst = max(worst, abs(lhs - rhs))
    ok = worst < 2e-3
    report(line(7, ok, f"max I(R;B') vs max I(R;B'|B) on 20 channels: max difference {worst:.1e}"))
    assert ok


def test_rd_compare_figure(report, tmp_path):
    dest = tmp_path / "rd_compare.csv"
    code = cli.main(["figure", "--out", str(dest)])
    rows = [ln for ln in dest.read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "D,cl_lower,ea_lower,eop_upper"
    vals = np.array([[float(x) for x in ln.split(",")] for ln in rows[1:]])
    d, cl, ea, up = vals.T
    exact = max(max(abs(cl[k] - cl_reference(d[k])), abs(ea[k] - ea_reference(d[k]))) for k in range(len(d)))
    slack = float(np.min(up - np.maximum(cl, ea)))
    second = float(np.min(np.diff(up, 2))) if len(up) > 2 else 0.0
    end_ok = abs(d[-1] - 0.75) < 1e-12 and up[-1] == 0.0
    ok = (code == 0 and exact < 1e-8 and slack >= -5e-3 and abs(up[0] - 1) < 5e-3 and end_ok and second >= -1e-6
          and abs(d[1] - d[0] - (d[2] - d[1])) < 1e-12)
    report(line(8, ok, f"figure CSV ({len(d)} rows): closed-form err {exact:.1e}, dominance slack {slack:.2e}, "
                       f"E_p(0) = {up[0]:.4f}, E_p(3/4) = {up[-1]:g}, min second difference {second:.1e}"))
    assert ok


def test_gradient_against_finite_differences(report):
    rng = np.random.default_rng(9)
    rho = random_density([2], seed=90)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    ea = ea_problem(rho, DistortionObservable(a @ a.conj().T / 4, (2, 2)))
    rab = random_density([2, 2], seed=91)
    b = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    qsi = qsi_problem(rab, DistortionObservable(b @ b.conj().T / 8, (4, 2)))
    worst = {}
    for name, prob in (("ea", ea), ("qsi", qsi)):
        errs = [_fd_check(prob, random_channel(2, 2, seed=900 + i).choi, float(rng.uniform(0, 2)), rng)
                for i in range(10)]
        worst[name] = max(errs)
    ok = max(worst.values()) < 1e-5
    report(line(9, ok, f"gradient vs central differences at 10 Choi points: max relative error "
                       f"ea {worst['ea']:.1e}, qsi {worst['qsi']:.1e}"))
    assert ok


def test_asymptotic_claims_out_of_scope(report):
    report("[10] N/A   asymptotic coding claims are not evaluated at desk scale; covered by the entropy and "
           "inequality checks above")
