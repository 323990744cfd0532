"""End-to-end acceptance checks, one test per criterion.

Each test prints a single pass/fail line for its criterion in addition to the
usual pytest verdict.
"""

import time

import numpy as np
import pytest

from qwent import accumulate, photonic, qstate, qwalk, transfer
from qwent.qstate import PureState, SubsystemLayout


def report(num, desc, ok):
    print(f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {desc}", flush=True)
    assert ok, f"criterion {num} failed: {desc}"


def pair_state(coefs):
    m = np.asarray(coefs, dtype=complex)
    m = m / np.linalg.norm(m)
    return PureState(SubsystemLayout((("c", 2), ("w", 2))), m.reshape(-1))


def random_state(rng, layout):
    v = rng.standard_normal(layout.total_dim) + 1j * rng.standard_normal(layout.total_dim)
    return PureState(layout, v / np.linalg.norm(v))


def test_criterion_01_deterministic_single_step_transfer():
    t0 = time.monotonic()
    spec = qwalk.WalkSpec.make(1, qwalk.NamedCoin("hadamard"))
    state = transfer.bell_walk_state(spec)
    outs = accumulate.measure_coins(state)
    ok = len(outs) == 4
    total = sum(o.probability for o in outs)
    ok &= abs(total - 1.0) < 1e-10
    for o in outs:
        n = qstate.log_negativity(o.post_state, ("w1", "w2"))
        ok &= abs(n - 1.0) < 1e-9
    ok &= (time.monotonic() - t0) < 1.0
    report(1, "single-step transfer: four branches at one ebit, unit probability",
           bool(ok))


def test_criterion_02_double_projection_map_and_probability():
    t0 = time.monotonic()
    spec = qwalk.WalkSpec.make(4, qwalk.NamedCoin("hadamard"), lattice_size=6)
    state = transfer.bell_walk_state(spec)
    spots, total = transfer.maximum_logneg_spots(state, grid=(181, 361))
    ok = len(spots) >= 1
    ok &= all(abs(r.logneg - 1.0) < 1e-6 for r in spots)
    ok &= abs(total - 0.43) <= 0.01
    ok &= (time.monotonic() - t0) < 300.0
    report(2, "four-step map: unit-entanglement spots aggregate to 0.43 +- 0.01",
           bool(ok))


def test_criterion_03_four_step_overlap_zeros():
    spec = qwalk.WalkSpec.make(4, qwalk.NamedCoin("hadamard"), lattice_size=6)
    up, down = transfer.pair_outputs(spec)
    zeros = transfer.find_overlap_zeros(up, down, grid=(181, 361))
    ok = len(zeros) == 2
    if ok:
        (g1, r1), (g2, r2) = zeros
        ok &= abs(np.vdot(g1, g2)) < 1e-6
        for r in (r1, r2):
            ok &= r.overlap < 1e-12
            ok &= abs(r.p_up - r.p_down) > 1e-3
            ok &= r.entropy < np.log(2) - 1e-6
    report(3, "four-step scan: two orthogonal overlap zeros, both unbalanced",
           bool(ok))


def test_criterion_04_identity_accumulation():
    ok = True
    for n in range(1, 5):
        trace, branches = accumulate.accumulate_identity(n)
        ok &= len(branches) == 4 ** n
        ok &= [r.steps_used for r in trace.records] == [2 ** k for k in range(n)]
        ok &= all(abs(r.success_probability - 1.0) < 1e-9 for r in trace.records)
        for b in branches:
            w = accumulate._walker_state(b.state)
            ok &= abs(qstate.log_negativity(w, ("w1", "w2")) - n) < 1e-9
    report(4, "identity accumulation: one ebit per round on every branch, steps 1,2,4,8",
           bool(ok))


def test_criterion_05_worked_projection_fixtures():
    u1 = pair_state([[0, np.sqrt(2)], [1, 1]])
    v1 = pair_state([[1, 1], [0, -np.sqrt(2)]])
    m1 = transfer.compute_M(u1, v1, "c").matrix
    expected = np.array([[1, -np.sqrt(2)], [np.sqrt(2), -1]]) / (2 * np.sqrt(2))
    ok = np.max(np.abs(m1 - expected)) < 1e-12
    for sign in (+1, -1):
        g = transfer.coin_state(np.pi / 4, 0.0 if sign > 0 else np.pi)
        _, pu = transfer.project_onto(u1, "c", g)
        _, pv = transfer.project_onto(v1, "c", g)
        ok &= abs(pu - (2 + sign * np.sqrt(2)) / 4) < 1e-12
        ok &= abs(pv - (2 - sign * np.sqrt(2)) / 4) < 1e-12
    u2 = pair_state([[0, np.sqrt(2)], [1, 1]])
    v2 = pair_state([[1, -1], [np.sqrt(2), 0]])
    for phi in (0.0, np.pi / 2, np.pi):
        g = transfer.coin_state(np.pi / 4, phi)
        _, pu = transfer.project_onto(u2, "c", g)
        _, pv = transfer.project_onto(v2, "c", g)
        p_expect = (2 + np.sqrt(2) * np.cos(phi)) / 4
        ok &= abs(pu - p_expect) < 1e-12
        ok &= abs(pv - p_expect) < 1e-12
    report(5, "worked fixtures: M matrices and projection probabilities reproduced",
           bool(ok))


def test_criterion_06_majorization_and_monotonicity():
    rng = np.random.default_rng(2024)
    ok = True
    for _ in range(1000):
        d = rng.integers(2, 7)
        k = rng.integers(1, d + 1)
        p = rng.random(k)
        p /= p.sum()
        m = np.zeros((d, d), dtype=complex)
        for pi in p:
            v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            v /= np.linalg.norm(v)
            m += pi * np.outer(v, v.conj())
        ok &= qstate.majorizes(m, p)
    layout = SubsystemLayout((("c1", 2), ("w1", 4), ("c2", 2), ("w2", 4)))
    for _ in range(500):
        s = random_state(rng, layout)
        pre = qstate.log_negativity(s, (["c1", "w1"], ["c2", "w2"]))
        g = transfer.coin_state(rng.uniform(0, np.pi / 2), rng.uniform(0, 2 * np.pi))
        rep = transfer.check_tc(s, g, "c1", (["w1"], ["c2", "w2"]))
        ok &= rep.post_logneg <= pre + 1e-9
    report(6, "mixtures majorize their weights; projections never gain entanglement",
           bool(ok))


def test_criterion_07_projection_construction_property():
    rng = np.random.default_rng(4096)
    ok = True
    for i in range(1000):
        if i % 3 == 0:
            u = qwalk.haar_random_coin(rng).matrix
            lam = rng.standard_normal()
            m = transfer.MMatrix(u @ np.diag([lam, -lam]) @ u.conj().T)
        else:
            a, b, c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            m = transfer.MMatrix(np.array([[a, b], [c, -a]]))
        sol = transfer.find_gamma(m)
        for g in sol.gammas:
            ok &= abs(m.expectation(g)) < 1e-10
    # grid oracle: coarse minima of |<g|M|g>| coincide with constructed gammas
    thetas = np.linspace(0, np.pi / 2, 121)
    phis = np.linspace(0, 2 * np.pi, 241)
    for _ in range(5):
        a, b, c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        m = transfer.MMatrix(np.array([[a, b], [c, -a]]))
        comm = m.matrix @ m.matrix.conj().T - m.matrix.conj().T @ m.matrix
        if np.max(np.abs(comm)) < 1e-3:
            continue
        sol = transfer.find_gamma(m)
        vals = np.array([[abs(m.expectation(transfer.coin_state(th, ph)))
                          for ph in phis] for th in thetas])
        cut = np.partition(vals.reshape(-1), 4)[4]
        for i, j in zip(*np.nonzero(vals <= cut)):
            g = transfer.coin_state(thetas[i], phis[j])
            ok &= max(abs(np.vdot(g, cand)) for cand in sol.gammas) > 0.99
    report(7, "constructed projections null the M form; grid minima agree", bool(ok))


def test_criterion_08_spectral_and_schmidt_verdicts_agree():
    rng = np.random.default_rng(515)
    layout = SubsystemLayout((("c1", 2), ("w1", 4), ("c2", 2), ("w2", 4)))
    ok = True
    for _ in range(500):
        s = random_state(rng, layout)
        g = transfer.coin_state(rng.uniform(0, np.pi / 2), rng.uniform(0, 2 * np.pi))
        # check_tc raises internally if the two verdicts ever disagree
        transfer.check_tc(s, g, "c1", (["w1"], ["c2", "w2"]))
    report(8, "spectral transfer verdict matches Schmidt comparison on 500 states",
           bool(ok))


def test_criterion_09_photonic_reload():
    ok = True
    total = 0.0
    for sign in (+1, -1):
        out, prob = photonic.reload_chain(sign)
        total += prob
        ok &= abs(prob - 0.5) < 1e-12
        st = photonic.to_four_partite(out)
        ok &= photonic.fidelity_mod_signs(st, photonic.reload_target(sign)) > 1 - 1e-10
    ok &= abs(total - 1.0) < 1e-12
    report(9, "photonic reload: probability one half per sign, unit fidelity, "
              "branches combine to one", bool(ok))


def test_criterion_10_retrieval():
    lat = 4
    w = np.zeros((lat, lat), dtype=complex)
    w[0, 0] = w[1, 1] = 1 / np.sqrt(2)
    layout = SubsystemLayout((("w1", lat), ("w2", lat)))
    outs = accumulate.retrieve(PureState(layout, w.reshape(-1)))
    ok = len(outs) == 4
    ok &= abs(sum(o.probability for o in outs) - 1.0) < 1e-10
    for o in outs:
        n = qstate.log_negativity(o.post_state, (["c1", "c2"], ["w2"]))
        ok &= abs(n - 1.0) < 1e-9
    report(10, "retrieval: four outcomes, one coin ebit each", bool(ok))
