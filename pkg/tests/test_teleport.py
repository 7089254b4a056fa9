import numpy as np
import pytest

from chsh_verify import netsim, teleport
from chsh_verify import quantum as q

import oracles


def make_pair(state, pair_id=0):
    return netsim.StoredPair(
        pair_id=pair_id, state=state, created_at=0.0, alice_slot=0, bob_slot=0
    )


class TestTeleportThrough:
    def test_perfect_resource_is_identity_channel(self, rng):
        rho = q.bell_state_phi_plus()
        for sigma in teleport.PAULI_EIGENSTATES:
            out = teleport.teleport_through(rho, sigma)
            assert np.allclose(out, sigma, atol=1e-12)
        # also on a random mixed input
        mixed = 0.3 * teleport.PAULI_EIGENSTATES[0] + 0.7 * teleport.PAULI_EIGENSTATES[2]
        assert np.allclose(teleport.teleport_through(rho, mixed), mixed, atol=1e-12)

    def test_maximally_mixed_resource_erases_input(self):
        rho = q.maximally_mixed()
        for sigma in teleport.PAULI_EIGENSTATES:
            out = teleport.teleport_through(rho, sigma)
            assert np.allclose(out, np.eye(2) / 2, atol=1e-12)

    def test_output_is_valid_state(self, rng):
        for _ in range(20):
            rho = q.random_mixed_state(rng)
            sigma = teleport.PAULI_EIGENSTATES[int(rng.integers(6))]
            out = teleport.teleport_through(rho, sigma)
            assert np.trace(out).real == pytest.approx(1.0, abs=1e-10)
            assert np.allclose(out, out.conj().T, atol=1e-10)
            assert np.linalg.eigvalsh(out).min() > -1e-10

    def test_linear_in_input(self, rng):
        rho = q.werner_state(0.8)
        s1, s2 = teleport.PAULI_EIGENSTATES[0], teleport.PAULI_EIGENSTATES[4]
        lam = 0.37
        combined = teleport.teleport_through(rho, lam * s1 + (1 - lam) * s2)
        separate = lam * teleport.teleport_through(rho, s1) + (
            1 - lam
        ) * teleport.teleport_through(rho, s2)
        assert np.allclose(combined, separate, atol=1e-12)

    def test_rejects_bad_shapes(self):
        with pytest.raises(q.InvalidStateError):
            teleport.teleport_through(np.eye(4), teleport.PAULI_EIGENSTATES[0])


class TestQubitFidelity:
    def test_pure_state_overlap(self):
        plus = teleport.PAULI_EIGENSTATES[2]
        zero = teleport.PAULI_EIGENSTATES[0]
        assert teleport.qubit_fidelity(zero, zero) == pytest.approx(1.0)
        assert teleport.qubit_fidelity(zero, plus) == pytest.approx(0.5, abs=1e-12)

    def test_symmetry(self, rng):
        a = 0.6 * teleport.PAULI_EIGENSTATES[0] + 0.4 * teleport.PAULI_EIGENSTATES[3]
        b = 0.2 * teleport.PAULI_EIGENSTATES[1] + 0.8 * teleport.PAULI_EIGENSTATES[4]
        assert teleport.qubit_fidelity(a, b) == pytest.approx(
            teleport.qubit_fidelity(b, a), abs=1e-10
        )


class TestAverageFidelity:
    @pytest.mark.parametrize("w", [0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    def test_werner_closed_form(self, w):
        # oracle: for a Bell-diagonal isotropic resource the average over the six
        # Pauli eigenstates equals (2F + 1)/3 with F the entanglement fidelity
        rho = q.werner_state(w)
        f = oracles.fidelity_phi_plus(oracles.werner(w))
        avg = teleport.average_teleport_fidelity(rho)
        assert avg == pytest.approx((2 * f + 1) / 3, abs=1e-12)
        assert avg >= f - 1e-12

    def test_baseline_network_pair(self, rng):
        cfg = netsim.NetworkConfig()
        pairs = netsim.generate_pairs(cfg, 1, netsim.SimClock(), rng)
        f = q.entanglement_fidelity(pairs[0].state)
        avg = teleport.average_teleport_fidelity(pairs[0].state)
        assert f == pytest.approx(0.9706, abs=1e-3)
        assert avg == pytest.approx((2 * f + 1) / 3, abs=1e-12)
        assert avg == pytest.approx(0.9804, abs=1e-3)
        assert avg > f


class TestTeleportReport:
    def test_identical_pairs(self, rng):
        cfg = netsim.NetworkConfig()
        pairs = netsim.generate_pairs(cfg, 500, netsim.SimClock(), rng)
        report = teleport.teleport_report(pairs)
        f = q.entanglement_fidelity(pairs[0].state)
        assert report.channel_entanglement_fidelity == pytest.approx(f, abs=1e-12)
        assert report.average_fidelity == pytest.approx((2 * f + 1) / 3, abs=1e-12)
        assert len(report.per_input_fidelity) == 6

    def test_perfect_pairs(self):
        pairs = [make_pair(q.bell_state_phi_plus(), i) for i in range(3)]
        report = teleport.teleport_report(pairs)
        assert report.average_fidelity == pytest.approx(1.0, abs=1e-12)
        assert report.channel_entanglement_fidelity == pytest.approx(1.0, abs=1e-12)

    def test_mixed_batch_averages(self):
        good = q.bell_state_phi_plus()
        bad = q.werner_state(0.6)
        pairs = [make_pair(good, 0), make_pair(bad, 1)]
        report = teleport.teleport_report(pairs)
        f_mean = (1.0 + q.entanglement_fidelity(bad)) / 2
        assert report.channel_entanglement_fidelity == pytest.approx(f_mean, abs=1e-12)
        assert report.average_fidelity == pytest.approx((2 * f_mean + 1) / 3, abs=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            teleport.teleport_report([])
