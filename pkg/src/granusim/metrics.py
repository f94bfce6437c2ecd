"""Measure-of-performance traces and derived outcome metrics."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroBaseline
from .topology import NETWORK_ORDER, NetworkId

# Propagated disruptions count as visible when the target network drops
# below 95% of baseline, i.e. SPDS strictly greater than 5 percentage
# points.  Equality is classified not-visible.
VISIBILITY_THRESHOLD_PCT = 5.0

# A network counts as recovered when its MoP is back at 99% of baseline.
RECOVERY_LEVEL_PCT = 99.0


def mop(performance_sum: float, baseline_sum: float) -> float:
    """Network performance as a percentage of its pre-disruption baseline."""
    if baseline_sum == 0:
        raise ZeroBaseline("baseline performance sum is zero")
    return 100.0 * performance_sum / baseline_sum


@dataclass(frozen=True)
class MoPTrace:
    """Per-timestep MoP series for every network, t = 0..horizon."""

    networks: tuple[NetworkId, ...]
    series: dict[NetworkId, np.ndarray]
    baselines: dict[NetworkId, float]

    @property
    def horizon(self) -> int:
        return len(next(iter(self.series.values()))) - 1

    def to_csv(self) -> str:
        cols = [n for n in NETWORK_ORDER if n in self.series]
        header = "t," + ",".join(f"mop_{n.value}" for n in cols)
        lines = [header]
        for t in range(self.horizon + 1):
            row = ",".join(f"{self.series[n][t]:.6f}" for n in cols)
            lines.append(f"{t},{row}")
        return "\n".join(lines) + "\n"


def compute_spds(trace: MoPTrace, network: NetworkId, apply_time: int) -> float:
    """Propagated disruption size: 100 minus the lowest MoP from apply_time on."""
    series = trace.series[network]
    if not 0 <= apply_time <= trace.horizon:
        raise ValueError(f"apply_time {apply_time} outside trace [0, {trace.horizon}]")
    return 100.0 - float(series[apply_time:].min())


def compute_sprt(trace: MoPTrace, network: NetworkId,
                 retract_time: int) -> int | None:
    """Propagated recovery time, or None when censored.

    Smallest t >= retract_time with MoP >= 99%, returned relative to
    retract_time; None if the level is never reached within the horizon.
    """
    series = trace.series[network]
    if not 0 <= retract_time <= trace.horizon:
        raise ValueError(f"retract_time {retract_time} outside trace [0, {trace.horizon}]")
    recovered = np.nonzero(series[retract_time:] >= RECOVERY_LEVEL_PCT)[0]
    if len(recovered) == 0:
        return None
    return int(recovered[0])


def classify_visibility(spds: float) -> bool:
    """True iff the propagated dip exceeds the 5% visibility threshold."""
    return spds > VISIBILITY_THRESHOLD_PCT


@dataclass(frozen=True)
class RunOutcome:
    """Derived metrics of one simulation run."""

    tg: int
    rt: int
    ds: int
    spds: float
    sprt: int | None  # None = censored
    visible: bool = field(default=False)
    sec_per_step: float = 0.0

    @property
    def censored(self) -> bool:
        return self.sprt is None
