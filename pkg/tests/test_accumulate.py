import numpy as np
import pytest

from qwent import accumulate, qstate, qwalk
from qwent.accumulate import (accumulate_generic, accumulate_identity,
                              bell_coins_product, measure_coins, reload_coins,
                              retrieve, state_from_sign_pattern, walk_span)
from qwent.qstate import PureState, SubsystemLayout, basis_state


def walker_state(mat):
    m = np.asarray(mat, dtype=complex)
    m = m / np.linalg.norm(m)
    layout = SubsystemLayout((("w1", m.shape[0]), ("w2", m.shape[1])))
    return PureState(layout, m.reshape(-1))


def diag_walker(signs, lattice=None):
    n = len(signs)
    lattice = lattice or n
    m = np.zeros((lattice, lattice))
    for k, s in enumerate(signs):
        m[k, k] = s
    return walker_state(m)


class TestReloadCoins:
    def test_plus_plus_coins_replaced(self):
        w = diag_walker([1, 1])
        coins = PureState(SubsystemLayout((("c1", 2), ("c2", 2))), np.ones(4) / 2)
        s = qstate.tensor(coins, w)
        # reorder to canonical (c1, w1, c2, w2)
        amp = s.tensor_view.transpose(s.layout.axes(("c1", "w1", "c2", "w2")))
        s = PureState(SubsystemLayout((("c1", 2), ("w1", 2), ("c2", 2), ("w2", 2))),
                      amp.reshape(-1))
        out = reload_coins(s)
        expected = bell_coins_product(w)
        assert out.fidelity(expected) == pytest.approx(1, abs=1e-12)

    def test_basis_coins_replaced(self):
        s = basis_state(SubsystemLayout((("c1", 2), ("w1", 2), ("c2", 2), ("w2", 2))),
                        {"c1": 0, "w1": 0, "c2": 0, "w2": 0})
        out = reload_coins(s)
        t = out.tensor_view
        assert t[0, 0, 0, 0] == pytest.approx(1 / np.sqrt(2))
        assert t[1, 0, 1, 0] == pytest.approx(1 / np.sqrt(2))

    def test_entangled_coins_refused(self):
        spec = qwalk.WalkSpec.make(1, qwalk.NamedCoin("hadamard"))
        from qwent import transfer
        s = transfer.bell_walk_state(spec)  # coins entangled with walkers
        with pytest.raises(ValueError):
            reload_coins(s)


class TestWalkSpan:
    def test_two_site_diagonal(self):
        assert walk_span(diag_walker([1, 0, 1])) == 2

    def test_single_site(self):
        assert walk_span(diag_walker([1], lattice=3)) == 0

    def test_four_site_uniform(self):
        assert walk_span(diag_walker([0.5, 0.5, 0.5, 0.5])) == 3

    def test_threshold_excludes_negligible_amplitude(self):
        m = np.zeros((4, 4))
        m[0, 0] = 1.0
        m[3, 3] = 1e-8
        assert walk_span(walker_state(m)) == 0


class TestMeasureCoins:
    def test_four_outcomes_sum_to_one(self):
        from qwent import transfer
        spec = qwalk.WalkSpec.make(2, qwalk.NamedCoin("haar_random", seed=3))
        s = transfer.bell_walk_state(spec)
        outs = measure_coins(s)
        assert len(outs) == 4
        assert sum(o.probability for o in outs) == pytest.approx(1, abs=1e-10)
        for o in outs:
            assert o.post_state.layout.labels == ("w1", "w2")


class TestAccumulateIdentity:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_every_branch_gains_one_ebit_per_round(self, n):
        trace, branches = accumulate_identity(n)
        assert len(branches) == 4 ** n
        assert [r.steps_used for r in trace.records] == [2 ** k for k in range(n)]
        for b in branches:
            w = accumulate._walker_state(b.state)
            assert qstate.log_negativity(w, ("w1", "w2")) == pytest.approx(n, abs=1e-9)
            spec2 = qstate.schmidt(w, ("w1", "w2")).coefficients ** 2
            assert np.allclose(spec2[: 2 ** n], 2.0 ** -n, atol=1e-12)
        assert sum(b.cumulative_probability for b in branches) == pytest.approx(1, abs=1e-9)

    def test_first_round_signs_follow_coin_agreement(self):
        _, branches = accumulate_identity(1)
        for b in branches:
            (label,) = b.branch_history
            agree = label in ("++", "--")
            assert b.sign_pattern == (1, 1 if agree else -1)

    def test_sign_pattern_reconstructs_branch_state(self):
        _, branches = accumulate_identity(3)
        for b in branches:
            w = accumulate._walker_state(b.state)
            rebuilt = state_from_sign_pattern(b.sign_pattern, w.layout.dim("w1"))
            assert w.fidelity(rebuilt) == pytest.approx(1, abs=1e-12)

    def test_cumulative_probability_is_product_of_branch_probs(self):
        _, branches = accumulate_identity(2)
        for b in branches:
            assert b.cumulative_probability == pytest.approx(
                np.prod(b.branch_probabilities), abs=1e-10)

    def test_trace_success_probability_is_one(self):
        trace, _ = accumulate_identity(3)
        for r in trace.records:
            assert r.success_probability == pytest.approx(1, abs=1e-9)


class TestAccumulateGeneric:
    def test_identity_coins_reproduce_exhaustive_protocol(self):
        ref, _ = accumulate_identity(3)
        tr = accumulate_generic(3, coin=qwalk.NamedCoin("identity"),
                                strategy="fixed-basis")
        for a, b in zip(ref.records, tr.records):
            assert a.steps_used == b.steps_used
            assert a.log_negativity == pytest.approx(b.log_negativity, abs=1e-9)
            assert a.success_probability == pytest.approx(b.success_probability, abs=1e-9)

    def test_hadamard_first_round_reaches_one_ebit(self):
        tr = accumulate_generic(1, coin=qwalk.NamedCoin("hadamard"),
                                strategy="fixed-basis")
        assert tr.records[0].log_negativity == pytest.approx(1, abs=1e-9)
        assert tr.records[0].success_probability == pytest.approx(1, abs=1e-9)

    def test_hadamard_falls_below_one_ebit_per_round(self):
        tr = accumulate_generic(3, coin=qwalk.NamedCoin("hadamard"),
                                strategy="fixed-basis")
        for r in tr.records[1:]:
            assert r.log_negativity < r.iteration - 1e-6

    def test_optimized_projections_match_fixed_basis_for_identity(self):
        tr = accumulate_generic(2, coin=qwalk.NamedCoin("identity"),
                                strategy="best-grid-projection")
        assert [round(r.log_negativity, 9) for r in tr.records] == [1.0, 2.0]

    def test_walk_specs_length_validated(self):
        spec = qwalk.WalkSpec.make(1, qwalk.NamedCoin("hadamard"))
        with pytest.raises(ValueError):
            accumulate_generic(2, walk_specs=[spec], strategy="fixed-basis")

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            accumulate_generic(1, strategy="bogus")


class TestRetrieve:
    def test_entangled_walkers_yield_one_ebit_on_every_outcome(self):
        outs = retrieve(diag_walker([1, 1], lattice=4))
        assert len(outs) == 4
        for o in outs:
            assert o.probability == pytest.approx(0.25, abs=1e-10)
            n = qstate.log_negativity(o.post_state, (["c1", "c2"], ["w2"]))
            assert n == pytest.approx(1, abs=1e-9)

    def test_product_walkers_yield_nothing(self):
        outs = retrieve(diag_walker([1], lattice=4))
        assert sum(o.probability for o in outs) == pytest.approx(1, abs=1e-10)
        for o in outs:
            if o.post_state is not None and o.probability > 1e-12:
                n = qstate.log_negativity(o.post_state, (["c1", "c2"], ["w2"]))
                assert n == pytest.approx(0, abs=1e-9)

    def test_round_trip_with_one_accumulation_round(self):
        _, branches = accumulate_identity(1)
        for b in branches:
            w = accumulate._walker_state(b.state)
            for o in retrieve(w):
                n = qstate.log_negativity(o.post_state, (["c1", "c2"], ["w2"]))
                assert n == pytest.approx(1, abs=1e-9)

    def test_entangled_coin_input_refused(self):
        from qwent import transfer
        spec = qwalk.WalkSpec.make(1, qwalk.NamedCoin("hadamard"))
        s = transfer.bell_walk_state(spec)
        with pytest.raises(ValueError):
            retrieve(s)

    def test_wide_walker_occupation_refused(self):
        with pytest.raises(ValueError):
            retrieve(diag_walker([1, 0, 1], lattice=4))
