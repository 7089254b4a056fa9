import math

import numpy as np
import pytest

from chsh_verify import netsim
from chsh_verify import quantum as q

import oracles


def baseline(**overrides):
    return netsim.NetworkConfig(**overrides)


class TestNetworkConfig:
    def test_baseline_derived_quantities(self):
        cfg = baseline()
        assert cfg.transit_time_s == pytest.approx(5e-6)
        assert cfg.transit_depolar_probability == pytest.approx(
            1 - math.exp(-0.04), abs=1e-12
        )
        assert cfg.loss_probability == pytest.approx(1 - math.exp(-1 / 20), abs=1e-12)
        assert cfg.classical_delay_s == pytest.approx(5e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            baseline(distance_km=0)
        with pytest.raises(ValueError):
            baseline(channel_depolar_rate_hz=-1)
        with pytest.raises(ValueError):
            baseline(attempt_rate_hz=0)


class TestSimClock:
    def test_ties_fire_in_insertion_order(self):
        clock = netsim.SimClock()
        fired = []
        clock.schedule_at(1.0, lambda: fired.append("first"))
        clock.schedule_at(1.0, lambda: fired.append("second"))
        clock.schedule_at(0.5, lambda: fired.append("early"))
        clock.run()
        assert fired == ["early", "first", "second"]
        assert clock.now == 1.0

    def test_rejects_past_events(self):
        clock = netsim.SimClock()
        clock.schedule_at(1.0, lambda: None)
        clock.run()
        with pytest.raises(ValueError):
            clock.schedule_at(0.5, lambda: None)

    def test_time_is_monotone(self):
        clock = netsim.SimClock()
        times = []
        for t in [3.0, 1.0, 2.0]:
            clock.schedule_at(t, lambda t=t: times.append(clock.now))
        clock.run()
        assert times == sorted(times)


class TestGeneratePairs:
    def test_delivered_fidelity_closed_form(self, rng):
        # oracle: p computed in-test, F = 1 - 3p/4 via the reference channel
        for distance in (1.0, 2.0):
            cfg = baseline(distance_km=distance)
            p = 1 - math.exp(-8000 * distance / 2e5)
            pairs = netsim.generate_pairs(cfg, 50, netsim.SimClock(), rng)
            expected = oracles.depolarize_bob(q.bell_state_phi_plus(), p)
            for pair in pairs:
                assert np.allclose(pair.state, expected, atol=1e-12)
                assert q.entanglement_fidelity(pair.state) == pytest.approx(
                    1 - 0.75 * p, abs=1e-12
                )

    def test_baseline_fidelity_value(self, rng):
        pairs = netsim.generate_pairs(baseline(), 10, netsim.SimClock(), rng)
        assert q.entanglement_fidelity(pairs[0].state) == pytest.approx(0.97059, abs=1e-4)

    def test_noiseless_channel(self, rng):
        cfg = baseline(channel_depolar_rate_hz=0.0)
        pairs = netsim.generate_pairs(cfg, 20, netsim.SimClock(), rng)
        for pair in pairs:
            assert q.entanglement_fidelity(pair.state) == pytest.approx(1.0, abs=1e-12)

    def test_unique_ids_and_timestamps(self, rng):
        pairs = netsim.generate_pairs(baseline(), 200, netsim.SimClock(), rng)
        assert len(pairs) == 200
        assert len({p.pair_id for p in pairs}) == 200
        times = [p.created_at for p in pairs]
        assert times == sorted(times)
        for pair in pairs:
            q.validate_state(pair.state)

    def test_determinism(self):
        def trace(seed):
            pairs = netsim.generate_pairs(
                baseline(), 100, netsim.SimClock(), np.random.default_rng(seed)
            )
            return [(p.pair_id, p.created_at, p.alice_slot, p.bob_slot) for p in pairs]

        assert trace(11) == trace(11)
        assert trace(11) != trace(12)

    def test_lossless_fiber_delivers_at_attempt_rate(self, rng):
        cfg = baseline(attenuation_length_km=math.inf)
        clock = netsim.SimClock()
        pairs = netsim.generate_pairs(cfg, 10, clock, rng)
        interval = 1 / cfg.attempt_rate_hz
        gaps = np.diff([p.created_at for p in pairs])
        assert np.allclose(gaps, interval, atol=1e-15)

    def test_monotone_degradation(self, rng):
        def mean_f(**kw):
            pairs = netsim.generate_pairs(baseline(**kw), 5, netsim.SimClock(), rng)
            return q.entanglement_fidelity(pairs[0].state)

        by_distance = [mean_f(distance_km=d) for d in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)]
        assert all(a > b for a, b in zip(by_distance, by_distance[1:]))
        by_rate = [mean_f(channel_depolar_rate_hz=r) for r in (1000, 4000, 8000, 16000)]
        assert all(a > b for a, b in zip(by_rate, by_rate[1:]))


class TestMemoryDecoherence:
    def make_pair(self, rng, **kw):
        return netsim.generate_pairs(baseline(**kw), 1, netsim.SimClock(), rng)[0]

    def test_zero_rate_is_identity(self, rng):
        pair = self.make_pair(rng)
        out = netsim.apply_memory_decoherence(pair, pair.created_at + 1.0, baseline())
        assert out.state is pair.state

    def test_zero_elapsed_is_identity(self, rng):
        cfg = baseline(memory_depolar_rate_hz=100.0)
        pair = self.make_pair(rng)
        out = netsim.apply_memory_decoherence(pair, pair.created_at, cfg)
        assert out.state is pair.state

    def test_decay_toward_quarter(self, rng):
        cfg = baseline(memory_depolar_rate_hz=50.0)
        pair = self.make_pair(rng)
        fidelities = [
            q.entanglement_fidelity(
                netsim.apply_memory_decoherence(pair, pair.created_at + dt, cfg).state
            )
            for dt in (0.0, 0.01, 0.05, 0.2, 1.0)
        ]
        assert all(a > b for a, b in zip(fidelities, fidelities[1:]))
        assert fidelities[-1] > 0.25 - 1e-9
        # oracle: one depolarizing step per side with p = 1 - exp(-r*dt)
        p = 1 - math.exp(-50.0 * 0.01)
        expected = oracles.depolarize_bob(pair.state, p)
        expected = np.kron(np.eye(2) / 2, np.einsum("ijil->jl", (p * expected).reshape(2, 2, 2, 2))) + (1 - p) * expected
        got = netsim.apply_memory_decoherence(pair, pair.created_at + 0.01, cfg).state
        assert np.allclose(got, expected, atol=1e-12)

    def test_time_regression_rejected(self, rng):
        pair = self.make_pair(rng)
        with pytest.raises(ValueError):
            netsim.apply_memory_decoherence(pair, pair.created_at - 1e-9, baseline())


class TestClassicalMessages:
    def test_delay_one_km(self):
        clock = netsim.SimClock()
        msg = netsim.exchange_message("basis", clock, baseline())
        assert msg.deliver_at - msg.sent_at == pytest.approx(5e-6)

    def test_delay_half_km(self):
        clock = netsim.SimClock()
        msg = netsim.exchange_message("basis", clock, baseline(distance_km=0.5))
        assert msg.deliver_at - msg.sent_at == pytest.approx(2.5e-6)

    def test_same_instant_messages_deliver_in_send_order(self):
        clock = netsim.SimClock()
        received = []
        netsim.exchange_message("one", clock, baseline(), received.append)
        netsim.exchange_message("two", clock, baseline(), received.append)
        clock.run()
        assert [m.payload for m in received] == ["one", "two"]
        assert clock.now == pytest.approx(5e-6)


class TestNetworkPairSource:
    def test_batch_request(self, rng):
        src = netsim.network_pair_source(baseline(), netsim.SimClock(), rng)
        pairs = src.take_pairs(1200)
        assert len({p.pair_id for p in pairs}) == 1200
        mean_f = np.mean([q.entanglement_fidelity(p.state) for p in pairs])
        assert mean_f == pytest.approx(0.9706, abs=1e-3)
        assert src.consumed == 1200

    def test_zero_request(self, rng):
        src = netsim.network_pair_source(baseline(), netsim.SimClock(), rng)
        assert src.take_pairs(0) == []
        assert src.consumed == 0

    def test_capacity_enforced(self, rng):
        src = netsim.network_pair_source(
            baseline(), netsim.SimClock(), rng, capacity=10
        )
        with pytest.raises(netsim.MemoryCapacityError):
            src.generate(11)

    def test_slots_freed_on_consumption(self, rng):
        src = netsim.network_pair_source(
            baseline(), netsim.SimClock(), rng, capacity=10
        )
        src.generate(10)
        src.take_pairs(10)
        src.generate(10)  # would raise if slots were not recycled
        assert src.stored == 10

    def test_feeds_protocols(self, rng):
        from chsh_verify.protocols import estimate_chsh

        src = netsim.network_pair_source(baseline(), netsim.SimClock(), rng)
        est = estimate_chsh(src, 500, rng)
        assert src.consumed == 2000
        assert est.s_bar == pytest.approx(2 * math.sqrt(2) * math.exp(-0.04), abs=0.15)
