import numpy as np
import pytest

from qwent import accumulate, photonic, qstate
from qwent.photonic import (EmptyBranchError, TwoPhotonState, bell_oam_input,
                            fidelity_mod_signs, half_waveplate,
                            polarizing_beamsplitter, postselect_coincidence,
                            reload_chain, reload_target, to_four_partite,
                            two_photon)


def random_two_photon(rng, n_modes=6):
    modes = [(p, pol, k) for p in ("a", "b") for pol in ("+", "-") for k in (1, 2)]
    modes = modes[:n_modes]
    amps = {}
    for i, m in enumerate(modes):
        for n in modes[i:]:
            amps[(m, n)] = rng.standard_normal() + 1j * rng.standard_normal()
    return two_photon(amps)


class TestTwoPhotonState:
    def test_normalization_enforced(self):
        with pytest.raises(ValueError):
            TwoPhotonState({(("a", "+", 1), ("b", "+", 1)): 0.7})

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            two_photon({(("c", "+", 1), ("b", "+", 1)): 1.0})
        with pytest.raises(ValueError):
            two_photon({(("a", "x", 1), ("b", "+", 1)): 1.0})
        with pytest.raises(ValueError):
            two_photon({(("a", "+", 0), ("b", "+", 1)): 1.0})

    def test_unordered_pairs_canonicalized(self):
        m, n = ("a", "+", 1), ("b", "+", 2)
        s1 = two_photon({(m, n): 1.0})
        s2 = two_photon({(n, m): 1.0})
        assert s1.fidelity(s2) == pytest.approx(1)

    def test_doubled_mode_normalization_weight(self):
        s = two_photon({(("a", "+", 1), ("a", "+", 1)): 1.0})
        assert abs(s.amplitudes[(("a", "+", 1), ("a", "+", 1))]) == pytest.approx(
            1 / np.sqrt(2))


class TestOpticalElements:
    def test_waveplate_zero_angle_is_identity(self):
        s = bell_oam_input(+1)
        assert half_waveplate(s, "a", 0.0).fidelity(s) == pytest.approx(1, abs=1e-12)

    def test_waveplate_inverse(self):
        s = bell_oam_input(-1)
        out = half_waveplate(half_waveplate(s, "b", 0.61), "b", -0.61)
        assert out.fidelity(s) == pytest.approx(1, abs=1e-12)

    def test_waveplate_balanced_split(self):
        s = two_photon({(("a", "+", 1), ("b", "+", 1)): 1.0})
        out = half_waveplate(s, "a", np.pi / 4)
        c1 = out.amplitudes[(("a", "+", 1), ("b", "+", 1))]
        c2 = out.amplitudes[(("a", "-", 1), ("b", "+", 1))]
        assert abs(c1) == pytest.approx(1 / np.sqrt(2))
        assert c2 == pytest.approx(1j / np.sqrt(2))

    def test_elements_preserve_norm_on_random_states(self):
        rng = np.random.default_rng(44)
        for _ in range(25):
            s = random_two_photon(rng)
            for op in (lambda x: half_waveplate(x, "a", rng.uniform(0, np.pi)),
                       lambda x: half_waveplate(x, "b", rng.uniform(0, np.pi)),
                       polarizing_beamsplitter):
                s = op(s)  # constructor revalidates normalization
        assert isinstance(s, TwoPhotonState)

    def test_beamsplitter_swaps_minus_port(self):
        s = two_photon({(("a", "-", 1), ("b", "+", 2)): 1.0})
        out = polarizing_beamsplitter(s)
        expected = two_photon({(("b", "-", 1), ("b", "+", 2)): 1.0})
        assert out.fidelity(expected) == pytest.approx(1, abs=1e-12)


class TestPostselection:
    def test_invariant_coincident_state_kept_fully(self):
        s = two_photon({(("a", "+", 1), ("b", "+", 1)): 1.0})
        kept, prob = postselect_coincidence(s)
        assert prob == pytest.approx(1, abs=1e-12)
        assert kept.fidelity(s) == pytest.approx(1, abs=1e-12)

    def test_empty_branch_signaled(self):
        s = two_photon({(("a", "+", 1), ("a", "+", 2)): 1.0})
        with pytest.raises(EmptyBranchError):
            postselect_coincidence(s)


class TestToFourPartite:
    def test_basis_pair_maps_to_plus_plus(self):
        s = two_photon({(("a", "+", 1), ("b", "+", 1)): 1.0})
        st = to_four_partite(s)
        expected = np.zeros((2, 1, 2, 1))
        expected[:, 0, :, 0] = 0.5
        assert np.allclose(st.tensor_view, expected)

    def test_same_port_input_rejected(self):
        with pytest.raises(ValueError):
            to_four_partite(two_photon({(("a", "+", 1), ("a", "-", 1)): 1.0}))


class TestReloadChain:
    @pytest.mark.parametrize("sign", [+1, -1])
    def test_probability_half_and_target_fidelity(self, sign):
        out, prob = reload_chain(sign)
        assert prob == pytest.approx(0.5, abs=1e-12)
        st = to_four_partite(out)
        assert fidelity_mod_signs(st, reload_target(sign)) > 1 - 1e-10

    @pytest.mark.parametrize("sign", [+1, -1])
    def test_restores_bell_coins_equivalent_to_ideal_reload(self, sign):
        out, _ = reload_chain(sign)
        st = to_four_partite(out)
        w = np.zeros((2, 2), dtype=complex)
        w[0, 0], w[1, 1] = 1 / np.sqrt(2), sign / np.sqrt(2)
        ideal = accumulate.bell_coins_product(
            qstate.PureState(qstate.SubsystemLayout((("w1", 2), ("w2", 2))),
                             w.reshape(-1)))
        assert fidelity_mod_signs(st, ideal, coin_flip=True) > 1 - 1e-10
        # entanglement structure matches exactly: one coin ebit, one walker ebit
        assert qstate.log_negativity(st, (["c1", "c2"], ["w1", "w2"])) == pytest.approx(
            0, abs=1e-9)
        assert qstate.log_negativity(st, (["c1", "w1"], ["c2", "w2"])) == pytest.approx(
            2, abs=1e-9)

    def test_both_branches_double_usable_probability(self):
        total = sum(reload_chain(sign)[1] for sign in (+1, -1))
        assert total == pytest.approx(1, abs=1e-12)
