"""Factorial experiment layout, execution, and persistence.

The shipped default levels are the published 5x5x5 design; fresh
designs can be drawn with ``lhs_levels``.  Runs are independent and may
execute in parallel; the results file is always in layout order and all
columns except sec_per_step are a pure function of (seed, config,
layout).
"""

import concurrent.futures
import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass

from .coordinator import Federation, SyncSchedule, run
from .disruption import DisruptionEvent, fixed_pattern
from .errors import RangeTooSmall, ScenarioError
from .federate import FederateState
from .metrics import MoPTrace, RunOutcome, classify_visibility, compute_spds, compute_sprt
from .rng import stream
from .topology import (NetworkId, Topology, generate_interdependencies,
                       generate_topology)

RESULTS_HEADER = ("run_id,tg,rt,ds,spds_pct,sprt_steps,visible,censored,"
                  "sec_per_step,pattern_hash,status")

#: Steps the horizon must leave after retraction for recovery to settle.
RECOVERY_HEADROOM = 200


@dataclass(frozen=True)
class FactorLevels:
    tg_levels: tuple[int, ...] = (2, 12, 14, 21, 27)
    rt_levels: tuple[int, ...] = (2, 9, 13, 17, 22)
    ds_levels: tuple[int, ...] = (8, 12, 14, 18, 21)

    def __post_init__(self):
        for name in ("tg_levels", "rt_levels", "ds_levels"):
            levels = getattr(self, name)
            if not levels:
                raise ValueError(f"{name} must be non-empty")
            if list(levels) != sorted(set(levels)) or min(levels) < 1:
                raise ValueError(f"{name} must be ascending positive integers, got {levels}")


@dataclass(frozen=True)
class NetworkSpec:
    network_id: NetworkId
    node_count: int
    edge_count: int
    weights: tuple[float, float, float] = (0.3, 0.4, 0.3)
    lag: int = 1


DEFAULT_NETWORKS = (
    NetworkSpec(NetworkId.WATER, 22, 77, lag=1),
    NetworkSpec(NetworkId.POWER, 21, 77, lag=1),
    NetworkSpec(NetworkId.BUSINESS, 20, 75, lag=2),
)


@dataclass(frozen=True)
class ScenarioConfig:
    master_seed: int = 20200831
    horizon: int = 400
    warmup: int = 50
    networks: tuple[NetworkSpec, ...] = DEFAULT_NETWORKS
    couplings_per_node: int = 1
    origin: NetworkId = NetworkId.WATER
    target: NetworkId = NetworkId.BUSINESS
    align_sync: bool = False

    def __post_init__(self):
        ids = [n.network_id for n in self.networks]
        if len(set(ids)) != len(ids):
            raise ScenarioError("networks: duplicate network ids")
        if self.origin not in ids or self.target not in ids:
            raise ScenarioError("origin/target must name configured networks")
        if self.warmup < 1:
            raise ScenarioError("warmup: must be positive")
        if self.horizon < 1:
            raise ScenarioError("horizon: must be positive")

    def network(self, network_id: NetworkId) -> NetworkSpec:
        for spec in self.networks:
            if spec.network_id == network_id:
                return spec
        raise KeyError(network_id)

    def to_json(self) -> str:
        doc = {
            "master_seed": self.master_seed,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "couplings_per_node": self.couplings_per_node,
            "origin": self.origin.value,
            "target": self.target.value,
            "align_sync": self.align_sync,
            "networks": [
                {"id": n.network_id.value, "nodes": n.node_count,
                 "edges": n.edge_count, "weights": list(n.weights),
                 "lag": n.lag}
                for n in self.networks
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"line {exc.lineno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ScenarioError("top level: expected an object")
        kwargs = {}
        simple = {"master_seed": int, "horizon": int, "warmup": int,
                  "couplings_per_node": int, "align_sync": bool}
        for name, typ in simple.items():
            if name in doc:
                if not isinstance(doc[name], typ) or isinstance(doc[name], bool) != (typ is bool):
                    raise ScenarioError(f"field '{name}': expected {typ.__name__}")
                kwargs[name] = doc[name]
        for name in ("origin", "target"):
            if name in doc:
                try:
                    kwargs[name] = NetworkId(doc[name])
                except ValueError:
                    raise ScenarioError(f"field '{name}': unknown network {doc[name]!r}")
        if "networks" in doc:
            specs = []
            for i, net in enumerate(doc["networks"]):
                try:
                    specs.append(NetworkSpec(
                        network_id=NetworkId(net["id"]),
                        node_count=int(net["nodes"]),
                        edge_count=int(net["edges"]),
                        weights=tuple(net.get("weights", (0.3, 0.4, 0.3))),
                        lag=int(net.get("lag", 1)),
                    ))
                except (KeyError, TypeError, ValueError) as exc:
                    raise ScenarioError(f"field 'networks[{i}]': {exc}") from exc
            kwargs["networks"] = tuple(specs)
        return cls(**kwargs)


def lhs_levels(k: int, lo: int, hi: int, seed: int) -> list[int]:
    """Stratified draw: one integer from each of k equal strata of [lo, hi]."""
    if k < 1:
        raise ValueError(f"level count must be positive, got {k}")
    if lo > hi:
        raise ValueError(f"empty range [{lo}, {hi}]")
    if hi - lo + 1 < k:
        raise RangeTooSmall(f"range [{lo}, {hi}] cannot hold {k} strata")
    rng = stream(seed, f"lhs:{k}:{lo}:{hi}")
    span = (hi - lo + 1) / k
    levels = []
    for i in range(k):
        first = lo + int(-(-i * span // 1))      # ceil(lo + i*span)
        last = lo + int(-(-(i + 1) * span // 1)) - 1
        levels.append(rng.randint(first, last))
    return sorted(levels)


def build_layout(levels: FactorLevels) -> list[tuple[int, int, int]]:
    """Cartesian product of the levels in lexicographic (ds, rt, tg) order."""
    return [(tg, rt, ds)
            for ds in levels.ds_levels
            for rt in levels.rt_levels
            for tg in levels.tg_levels]


def build_topologies(config: ScenarioConfig) -> list[Topology]:
    return [generate_topology(n.network_id, n.node_count, n.edge_count,
                              config.master_seed)
            for n in config.networks]


def build_federation(config: ScenarioConfig) -> Federation:
    topologies = build_topologies(config)
    interdeps = generate_interdependencies(
        topologies, config.couplings_per_node, config.master_seed)
    federates = {}
    for spec, topo in zip(config.networks, topologies):
        federates[spec.network_id] = FederateState(
            topo, weights=spec.weights, lag=spec.lag)
    return Federation(federates, interdeps)


def disruption_onset(config: ScenarioConfig, tg: int) -> int:
    """First disrupted timestep: right after warm-up, optionally
    aligned to the next sync instant."""
    t0 = config.warmup + 1
    if config.align_sync and t0 % tg != 0:
        t0 += tg - t0 % tg
    return t0


def pattern_hash(nodes: tuple[int, ...]) -> str:
    return hashlib.sha256(json.dumps(list(nodes)).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class ResultRow:
    run_id: int
    tg: int
    rt: int
    ds: int
    outcome: RunOutcome | None
    pattern: tuple[int, ...] = ()
    status: str = "ok"

    def to_csv_fields(self) -> list[str]:
        out = self.outcome
        return [
            str(self.run_id), str(self.tg), str(self.rt), str(self.ds),
            f"{out.spds:.6f}" if out else "",
            "" if out is None or out.sprt is None else str(out.sprt),
            "" if out is None else ("true" if out.visible else "false"),
            "" if out is None else ("true" if out.censored else "false"),
            f"{out.sec_per_step:.9f}" if out else "",
            pattern_hash(self.pattern) if self.pattern else "",
            self.status,
        ]


def run_single(config: ScenarioConfig, tg: int, rt: int, ds: int,
               parallel_federates: bool = False) -> tuple[RunOutcome, MoPTrace, tuple[int, ...]]:
    """Run one (tg, rt, ds) configuration from a fresh deterministic federation."""
    t0 = disruption_onset(config, tg)
    if config.horizon < t0 + rt + RECOVERY_HEADROOM:
        raise ScenarioError(
            f"horizon {config.horizon} below onset {t0} + rt {rt} "
            f"+ headroom {RECOVERY_HEADROOM}")
    federation = build_federation(config)
    origin_topo = federation.federates[config.origin].topology
    pattern = fixed_pattern(ds, origin_topo, config.master_seed)
    event = DisruptionEvent(apply_time=t0, retract_time=t0 + rt,
                            network_id=config.origin, nodes=pattern)
    schedule = SyncSchedule(tg=tg, horizon=config.horizon)

    started = time.perf_counter()
    trace = run(federation, schedule, [event], parallel=parallel_federates)
    elapsed = time.perf_counter() - started

    spds = compute_spds(trace, config.target, t0)
    sprt = compute_sprt(trace, config.target, t0 + rt)
    outcome = RunOutcome(tg=tg, rt=rt, ds=ds, spds=spds, sprt=sprt,
                         visible=classify_visibility(spds),
                         sec_per_step=elapsed / config.horizon)
    return outcome, trace, pattern


def _run_indexed(args) -> ResultRow:
    index, config, triple = args
    tg, rt, ds = triple
    try:
        outcome, _, pattern = run_single(config, tg, rt, ds)
        return ResultRow(index, tg, rt, ds, outcome, pattern)
    except Exception as exc:  # per-run failures recorded, batch continues
        return ResultRow(index, tg, rt, ds, None, (), f"error: {exc}")


def run_experiment(config: ScenarioConfig, layout: list[tuple[int, int, int]],
                   jobs: int = 1, traces_dir=None) -> list[ResultRow]:
    """Execute a layout; rows come back in layout order regardless of
    completion order.  jobs=1 is the sequential reference path."""
    tasks = [(i, config, triple) for i, triple in enumerate(layout)]
    if jobs <= 1:
        rows = [_run_indexed(task) for task in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_indexed, tasks))
    rows.sort(key=lambda r: r.run_id)
    if traces_dir is not None:
        for row in rows:
            if row.status != "ok":
                continue
            _, trace, _ = run_single(config, row.tg, row.rt, row.ds)
            path = traces_dir / f"run_{row.run_id:03d}.csv"
            path.write_text(trace.to_csv())
    return rows


def results_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULTS_HEADER.split(","))
    for row in rows:
        writer.writerow(row.to_csv_fields())
    return buf.getvalue()


def timing_profile(config: ScenarioConfig, tg_list: list[int],
                   rt: int, ds: int, repeats: int = 3) -> list[tuple[int, float]]:
    """Seconds-per-timestep at fixed (rt, ds) for each granularity.

    Takes the fastest of ``repeats`` runs to suppress scheduler noise;
    only the simulation loop is timed.
    """
    profile = []
    for tg in tg_list:
        best = min(run_single(config, tg, rt, ds)[0].sec_per_step
                   for _ in range(repeats))
        profile.append((tg, best))
    return profile
