"""Lockstep advancement of all federates under a synchronization contract.

Federates run freely for ``tg`` internal timesteps, then barrier:
boundary values are collected from every federate (read phase) before
any consumer's foreign inputs are written (write phase), so no federate
ever sees a mix of pre- and post-exchange values.  Between sync
instants no information crosses federate boundaries.

Events are delivered at their exact internal timestep, retractions
before applications, ties broken by network order then node index.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .disruption import DisruptionEvent
from .errors import ScheduleError
from .federate import FederateState
from .metrics import MoPTrace
from .topology import NETWORK_ORDER, InterdependencyMap, NetworkId


@dataclass(frozen=True)
class SyncSchedule:
    tg: int
    horizon: int

    def __post_init__(self):
        if self.tg < 1:
            raise ValueError(f"tg must be a positive integer, got {self.tg}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    def sync_times(self) -> list[int]:
        """Multiples of tg in (0, horizon]."""
        return list(range(self.tg, self.horizon + 1, self.tg))


class Federation:
    """Federate states plus the coupling wiring between them."""

    def __init__(self, federates: dict[NetworkId, FederateState],
                 interdependencies: InterdependencyMap | None = None):
        # Canonical ordering makes the result independent of the
        # registration order of the federates.
        self.order = [n for n in NETWORK_ORDER if n in federates]
        extra = set(federates) - set(self.order)
        if extra:
            raise ValueError(f"unknown network ids: {extra}")
        self.federates = federates
        self.t = 0

        # Slot k of each consumer federate's foreign_inputs is fed by
        # (producer network, producer node) stored here.
        self._producers: dict[NetworkId, list[tuple[NetworkId, int]]] = {
            n: [] for n in self.order}
        consumer_nodes: dict[NetworkId, list[int]] = {n: [] for n in self.order}
        couplings = interdependencies.couplings if interdependencies else ()
        for c in couplings:
            consumer_nodes[c.consumer_network].append(c.consumer_node)
            self._producers[c.consumer_network].append(
                (c.producer_network, c.producer_node))
        for net in self.order:
            fed = federates[net]
            fed.consumer_nodes = np.array(consumer_nodes[net], dtype=int)
            fed.foreign_inputs = np.ones(len(fed.consumer_nodes))
            fed.coupling_count = np.bincount(
                fed.consumer_nodes, minlength=fed.node_count).astype(float)

    def exchange(self) -> None:
        """Two-phase barrier: read all boundaries, then write all consumers."""
        read: dict[NetworkId, np.ndarray] = {
            net: self.federates[net].performance.copy() for net in self.order}
        for net in self.order:
            fed = self.federates[net]
            for slot, (prod_net, prod_node) in enumerate(self._producers[net]):
                fed.foreign_inputs[slot] = read[prod_net][prod_node]


def _deliver(federation: Federation, actions: list) -> None:
    # kind 0 = retract, 1 = apply; retractions first, then network order.
    net_rank = {n: i for i, n in enumerate(NETWORK_ORDER)}
    for kind, net, nodes in sorted(
            actions, key=lambda a: (a[0], net_rank[a[1]], a[2])):
        fed = federation.federates[net]
        if kind == 0:
            fed.retract_disruption(nodes)
        else:
            fed.apply_disruption(nodes)


def run(federation: Federation, schedule: SyncSchedule,
        events: list[DisruptionEvent], parallel: bool = False) -> MoPTrace:
    """Advance the federation to the horizon and return the full MoP trace.

    With ``parallel`` the federates are stepped concurrently between
    barriers; the trace is bit-identical to the sequential reference
    either way because no state is shared between barriers.
    """
    horizon = schedule.horizon
    actions_at: dict[int, list] = {}
    for ev in events:
        if ev.apply_time > horizon or ev.retract_time > horizon:
            raise ScheduleError(
                f"event at {ev.apply_time}/{ev.retract_time} exceeds horizon {horizon}")
        nodes = tuple(sorted(ev.nodes))
        actions_at.setdefault(ev.apply_time, []).append((1, ev.network_id, nodes))
        actions_at.setdefault(ev.retract_time, []).append((0, ev.network_id, nodes))

    feds = [federation.federates[n] for n in federation.order]
    baselines = {n: float(federation.federates[n].performance.sum())
                 for n in federation.order}
    series = {n: np.empty(horizon + 1) for n in federation.order}
    for net in federation.order:
        series[net][0] = 100.0 * federation.federates[net].performance.sum() / baselines[net]

    federation.t = 0
    federation.exchange()  # seed foreign inputs with true initial values

    pool = ThreadPoolExecutor(max_workers=len(feds)) if parallel and len(feds) > 1 else None
    try:
        for t in range(1, horizon + 1):
            if t in actions_at:
                _deliver(federation, actions_at[t])
            if pool is not None:
                list(pool.map(lambda f: f.step(), feds))
            else:
                for fed in feds:
                    fed.step()
            federation.t = t
            for net in federation.order:
                series[net][t] = (100.0 * federation.federates[net].performance.sum()
                                  / baselines[net])
            if t % schedule.tg == 0:
                federation.exchange()
    finally:
        if pool is not None:
            pool.shutdown()

    return MoPTrace(networks=tuple(federation.order), series=series,
                    baselines=baselines)


def run_sequential_reference(federation: Federation, schedule: SyncSchedule,
                             events: list[DisruptionEvent]) -> MoPTrace:
    """Single-threaded round-robin reference; the determinism oracle."""
    return run(federation, schedule, events, parallel=False)
