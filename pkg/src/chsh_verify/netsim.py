"""Minimal discrete-event simulation of a two-node entanglement-distribution link:
an EPR source local to Alice, a lossy depolarizing fiber to Bob, quantum memories,
and a classical message channel with propagation delay.

Noise semantics: a depolarization *rate* r (Hz) acting for a duration t is applied
as a single depolarizing channel with probability p = 1 - exp(-r * t). During
transit only the flying (Bob-bound) qubit is affected.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from itertools import count as _counter
from typing import Callable, Optional

import numpy as np

from .protocols import PairSource
from .quantum import bell_state_phi_plus, depolarize_one_qubit

MAX_GENERATION_ATTEMPTS = 10**9


class MemoryCapacityError(RuntimeError):
    """More live pairs than the configured memory can hold."""


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters of the two-node link.

    Distances in km, rates in Hz, speeds in km/s. Memory decoherence defaults
    to off; the fiber attenuation length defaults to 20 km.
    """

    distance_km: float = 1.0
    channel_depolar_rate_hz: float = 8000.0
    fiber_speed_km_per_s: float = 2e5
    attenuation_length_km: float = 20.0
    memory_depolar_rate_hz: float = 0.0
    attempt_rate_hz: float = 1e6
    classical_speed_km_per_s: float = 2e5

    def __post_init__(self) -> None:
        if self.distance_km <= 0:
            raise ValueError(f"distance_km must be > 0, got {self.distance_km}")
        for name in ("fiber_speed_km_per_s", "classical_speed_km_per_s",
                     "attempt_rate_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("channel_depolar_rate_hz", "memory_depolar_rate_hz"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.attenuation_length_km <= 0 and not math.isinf(self.attenuation_length_km):
            raise ValueError("attenuation_length_km must be > 0")

    @property
    def transit_time_s(self) -> float:
        return self.distance_km / self.fiber_speed_km_per_s

    @property
    def loss_probability(self) -> float:
        if math.isinf(self.attenuation_length_km):
            return 0.0
        return 1.0 - math.exp(-self.distance_km / self.attenuation_length_km)

    @property
    def transit_depolar_probability(self) -> float:
        return 1.0 - math.exp(-self.channel_depolar_rate_hz * self.transit_time_s)

    @property
    def classical_delay_s(self) -> float:
        return self.distance_km / self.classical_speed_km_per_s

    def delivered_fidelity(self) -> float:
        """Closed-form fidelity of a freshly delivered pair: 1 - 3p/4."""
        return 1.0 - 0.75 * self.transit_depolar_probability


class SimClock:
    """Event queue with a monotone clock; same-time events fire in insertion order."""

    def __init__(self) -> None:
        self.now = 0.0
        self._queue: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = _counter()

    def schedule_at(self, time: float, action: Callable[[], None]) -> None:
        if time < self.now:
            raise ValueError(f"cannot schedule event at {time} before now={self.now}")
        heapq.heappush(self._queue, (time, next(self._seq), action))

    def schedule_after(self, delay: float, action: Callable[[], None]) -> None:
        self.schedule_at(self.now + delay, action)

    def step(self) -> bool:
        """Run the earliest pending event; returns False when the queue is empty."""
        if not self._queue:
            return False
        time, _, action = heapq.heappop(self._queue)
        self.now = time
        action()
        return True

    def run(self) -> None:
        while self.step():
            pass

    def pending(self) -> int:
        return len(self._queue)


@dataclass(frozen=True)
class StoredPair:
    """A live EPR pair: its exact state plus where each half sits in memory."""

    pair_id: int
    state: np.ndarray
    created_at: float
    alice_slot: int
    bob_slot: int


@dataclass(frozen=True)
class ClassicalMessage:
    payload: object
    sent_at: float
    deliver_at: float


def exchange_message(
    payload: object,
    clock: SimClock,
    config: NetworkConfig,
    on_deliver: Optional[Callable[[ClassicalMessage], None]] = None,
) -> ClassicalMessage:
    """Send a classical message; its delivery event fires after the propagation delay."""
    msg = ClassicalMessage(
        payload=payload,
        sent_at=clock.now,
        deliver_at=clock.now + config.classical_delay_s,
    )
    if on_deliver is not None:
        clock.schedule_at(msg.deliver_at, lambda: on_deliver(msg))
    return msg


class _SlotAllocator:
    """Reuses freed memory indices before growing; capacity optional."""

    def __init__(self, capacity: Optional[int]) -> None:
        self._capacity = capacity
        self._next = 0
        self._free: list[int] = []

    def acquire(self) -> int:
        if self._free:
            return heapq.heappop(self._free)
        if self._capacity is not None and self._next >= self._capacity:
            raise MemoryCapacityError(
                f"memory capacity {self._capacity} exceeded"
            )
        slot = self._next
        self._next += 1
        return slot

    def release(self, slot: int) -> None:
        heapq.heappush(self._free, slot)


def generate_pairs(
    config: NetworkConfig,
    count: int,
    clock: SimClock,
    rng: np.random.Generator,
    alice_slots: Optional[_SlotAllocator] = None,
    bob_slots: Optional[_SlotAllocator] = None,
    start_pair_id: int = 0,
) -> list[StoredPair]:
    """Run generation attempts on the event queue until ``count`` pairs are stored.

    Each attempt fires at the source's attempt rate; the flying qubit is lost
    with the fiber's attenuation probability, otherwise it arrives one transit
    time later already depolarized by the channel. Pairs are timestamped at
    arrival.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if alice_slots is None:
        alice_slots = _SlotAllocator(None)
    if bob_slots is None:
        bob_slots = _SlotAllocator(None)

    p_loss = config.loss_probability
    interval = 1.0 / config.attempt_rate_hz
    transit = config.transit_time_s
    # All delivered pairs see the identical channel; the state is immutable and
    # shared across StoredPair records.
    delivered_state = depolarize_one_qubit(
        bell_state_phi_plus(), "bob", config.transit_depolar_probability
    )
    delivered_state.setflags(write=False)

    pairs: list[StoredPair] = []
    pair_ids = _counter(start_pair_id)
    state = {"launched": 0, "attempts": 0}

    def arrival() -> None:
        pairs.append(
            StoredPair(
                pair_id=next(pair_ids),
                state=delivered_state,
                created_at=clock.now,
                alice_slot=alice_slots.acquire(),
                bob_slot=bob_slots.acquire(),
            )
        )

    def attempt() -> None:
        state["attempts"] += 1
        if state["attempts"] > MAX_GENERATION_ATTEMPTS:
            raise RuntimeError(
                "generation attempt cap reached; check loss configuration"
            )
        if rng.random() >= p_loss:
            state["launched"] += 1
            clock.schedule_after(transit, arrival)
        if state["launched"] < count:
            clock.schedule_after(interval, attempt)

    clock.schedule_after(interval, attempt)
    clock.run()
    return pairs


def apply_memory_decoherence(
    pair: StoredPair, until: float, config: NetworkConfig
) -> StoredPair:
    """Depolarize both stored halves for the time elapsed since the pair's creation."""
    if until < pair.created_at:
        raise ValueError(
            f"until={until} precedes pair creation at {pair.created_at}"
        )
    rate = config.memory_depolar_rate_hz
    if rate == 0.0 or until == pair.created_at:
        return pair
    p = 1.0 - math.exp(-rate * (until - pair.created_at))
    state = depolarize_one_qubit(pair.state, "alice", p)
    state = depolarize_one_qubit(state, "bob", p)
    return replace(pair, state=state)


class NetworkPairSource(PairSource):
    """Adapts the simulated link to the PairSource interface.

    Pairs are generated in batches on demand; measuring a pair consumes it and
    frees its memory slots. Memory decoherence is applied for the time a pair
    spent stored before being taken.
    """

    def __init__(
        self,
        config: NetworkConfig,
        clock: SimClock,
        rng: np.random.Generator,
        capacity: Optional[int] = None,
        batch_size: int = 64,
    ) -> None:
        super().__init__()
        self.config = config
        self.clock = clock
        self.rng = rng
        self._alice_slots = _SlotAllocator(capacity)
        self._bob_slots = _SlotAllocator(capacity)
        self._buffer: list[StoredPair] = []
        self._batch_size = batch_size
        self._next_pair_id = 0

    def generate(self, count: int) -> None:
        """Fill the memories with ``count`` fresh pairs."""
        pairs = generate_pairs(
            self.config,
            count,
            self.clock,
            self.rng,
            alice_slots=self._alice_slots,
            bob_slots=self._bob_slots,
            start_pair_id=self._next_pair_id,
        )
        self._next_pair_id += count
        self._buffer.extend(pairs)

    @property
    def stored(self) -> int:
        return len(self._buffer)

    def take_pairs(self, count: int) -> list[StoredPair]:
        """Consume ``count`` stored pairs (generating more as needed), decohered
        up to the current simulation time. Counts toward ``consumed``."""
        pairs = self._pop_pairs(count)
        self._consumed += len(pairs)
        return pairs

    def _pop_pairs(self, count: int) -> list[StoredPair]:
        if count == 0:
            return []
        if count > len(self._buffer):
            self.generate(count - len(self._buffer))
        taken, self._buffer = self._buffer[:count], self._buffer[count:]
        out = []
        for pair in taken:
            out.append(apply_memory_decoherence(pair, self.clock.now, self.config))
            self._alice_slots.release(pair.alice_slot)
            self._bob_slots.release(pair.bob_slot)
        return out

    def _next_states(self, count: int) -> list[np.ndarray]:
        return [pair.state for pair in self._pop_pairs(count)]


def network_pair_source(
    config: NetworkConfig,
    clock: SimClock,
    rng: np.random.Generator,
    capacity: Optional[int] = None,
) -> NetworkPairSource:
    return NetworkPairSource(config, clock, rng, capacity=capacity)
