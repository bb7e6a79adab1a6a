"""Time-slotted simulation loop and the two evaluation metrics.

Each time step has three sub-slots.  First every node senses the channel
given by its current action; the sensing outcome is sampled from the
detection/false-alarm probabilities, with the diversity order m set by
how many cohort members (the node plus neighbors on the same channel)
sense that channel.  Second, nodes exchange (action, observation) tuples
and OR-fuse them into decision vectors, pick their next action, then
exchange decision vectors and fuse those into super-decision vectors.
Third, every node transmits on a channel it believes vacant (chosen
uniformly among candidates) or skips the step when it has none.

Metrics: the jammer detection ratio (JDR) counts, over occupied
channel-steps, the fraction on which at least one node raw-observed the
jammer; the transmission success rate (TSR) counts successful over
attempted transmissions, with skipped node-steps excluded.

A run is strictly sequential and fully determined by its seed; batches
of replications may execute in parallel since every replication owns its
entire world state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import rng as rngmod
from .fusion import (
    Belief,
    Observation,
    SuperDecisionVector,
    candidate_channels,
    fuse_decisions,
    fuse_observations,
)
from .jammers import JammerChain, init_chains, step as step_chain
from .network import (
    Placement,
    build_neighbor_graph,
    default_placement,
    snr_at_node,
)
from .policies import (
    PolicyInput,
    PolicyKind,
    QParams,
    choose_action_pseudo_random,
    choose_action_qlearning,
    choose_action_uniform,
    update_q,
)
from .sensing import (
    DetectionParams,
    FadingKind,
    FalseAlarmTable,
    build_awgn_grid,
    build_rayleigh_grid,
    false_alarm_probability,
    p_d_awgn,
    p_d_rayleigh_single,
)

# Transmission outcomes.
SKIPPED = 0
SUCCESSFUL = 1
JAMMED = 2


@dataclass
class SimConfig:
    """Full description of one simulation scenario."""

    n_wn: int = 10
    n_fb: int = 10
    horizon: int = 2000
    fading: FadingKind = FadingKind.AWGN
    policy: PolicyKind = PolicyKind.PSEUDO_RANDOM
    epsilon_n: float = 0.1
    q_learning_rate: float = 0.1
    q_discount: float = 0.9
    q_epsilon: float = 0.1
    detection: DetectionParams = field(default_factory=DetectionParams)
    false_alarm: FalseAlarmTable = field(default_factory=FalseAlarmTable.defaults)
    placement: Optional[Placement] = None  # None -> default two-ring layout
    jammer_bounds: Tuple[float, float] = (0.85, 0.98)
    use_super_decision: bool = True
    seed: int = 0
    replications: int = 100
    grid_lookup: bool = True    # detection probabilities via snapped lookup table
    shared_draw: bool = True    # one sensing draw per channel-step (see README)
    global_cohort: bool = False  # count all co-sensing nodes, not just neighbors
    grid_snr_min_db: float = 0.0
    grid_snr_max_db: float = 15.0
    grid_snr_step_db: float = 1.0
    grid_m_max: int = 6

    def validate(self) -> None:
        if self.n_wn < 1:
            raise ValueError(f"n_wn must be >= 1, got {self.n_wn}")
        if self.n_fb < 1:
            raise ValueError(f"n_fb must be >= 1, got {self.n_fb}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 <= self.epsilon_n <= 1.0:
            raise ValueError(f"epsilon_n={self.epsilon_n} outside [0, 1]")
        lo, hi = self.jammer_bounds
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"jammer_bounds {self.jammer_bounds} invalid")
        if self.grid_snr_step_db <= 0:
            raise ValueError("grid_snr_step_db must be > 0")
        if self.grid_snr_max_db < self.grid_snr_min_db:
            raise ValueError("grid SNR range is empty")
        if self.grid_m_max < 1:
            raise ValueError("grid_m_max must be >= 1")
        if not 0.0 < self.q_learning_rate <= 1.0:
            raise ValueError(f"q_learning_rate={self.q_learning_rate} outside (0, 1]")
        if not 0.0 <= self.q_discount < 1.0:
            raise ValueError(f"q_discount={self.q_discount} outside [0, 1)")
        if not 0.0 <= self.q_epsilon <= 1.0:
            raise ValueError(f"q_epsilon={self.q_epsilon} outside [0, 1]")
        if self.placement is not None and self.placement.n_nodes != self.n_wn:
            raise ValueError(
                f"placement has {self.placement.n_nodes} nodes but n_wn={self.n_wn}"
            )

    def resolved_placement(self) -> Placement:
        return self.placement if self.placement is not None else default_placement(self.n_wn)


@dataclass
class StepRecord:
    """Per-step view of a run: truth plus every node's sub-slot data."""

    time: int
    truth: np.ndarray          # (n_fb,) bool
    actions: np.ndarray        # (n_wn,) sensed channel
    observations: np.ndarray   # (n_wn,) Belief verdict
    cohorts: np.ndarray        # (n_wn,) diversity order m
    decisions: np.ndarray      # (n_wn, n_fb) beliefs
    supers: Optional[np.ndarray]  # (n_wn, n_fb) beliefs, None if disabled
    transmits: np.ndarray      # (n_wn,) channel or -1 when skipped
    outcomes: np.ndarray       # (n_wn,) SKIPPED / SUCCESSFUL / JAMMED


@dataclass
class RunRecord:
    """Everything one run produced, enough to recompute any metric."""

    config: SimConfig
    replication: int
    run_seed: int
    chain_params: Tuple[Tuple[float, float, bool], ...]  # (stay_idle, stay_active, initial)
    snr_db: Tuple[float, ...]  # per node, before any grid clamping
    edges: Tuple[Tuple[int, int], ...]
    truth: np.ndarray
    actions: np.ndarray
    observations: np.ndarray
    cohorts: np.ndarray
    decisions: np.ndarray
    supers: Optional[np.ndarray]
    transmits: np.ndarray
    outcomes: np.ndarray

    def __len__(self) -> int:
        return self.truth.shape[0]

    def step(self, t: int) -> StepRecord:
        return StepRecord(
            time=t,
            truth=self.truth[t],
            actions=self.actions[t],
            observations=self.observations[t],
            cohorts=self.cohorts[t],
            decisions=self.decisions[t],
            supers=None if self.supers is None else self.supers[t],
            transmits=self.transmits[t],
            outcomes=self.outcomes[t],
        )


class _World:
    """Resolved per-run state: geometry, probability tables, substreams."""

    def __init__(self, config: SimConfig, run_seed: int,
                 chains: Optional[List[JammerChain]] = None):
        self.config = config
        self.run_seed = run_seed
        self.placement = config.resolved_placement()
        self.graph = build_neighbor_graph(self.placement)
        self.chains = (
            chains
            if chains is not None
            else init_chains(config.n_fb, config.jammer_bounds, run_seed)
        )
        if len(self.chains) != config.n_fb:
            raise ValueError("one jammer chain per channel is required")
        self.sensing_rng = rngmod.substream(run_seed, rngmod.SENSING)
        self.policy_rng = rngmod.substream(run_seed, rngmod.POLICY)
        self.transmit_rng = rngmod.substream(run_seed, rngmod.TRANSMIT)

        n = config.n_wn
        sigma2 = config.detection.sigma2
        self.snr_linear = np.array(
            [snr_at_node(self.placement, i, sigma2) for i in range(n)]
        )
        self.snr_db = 10.0 * np.log10(self.snr_linear)

        # Detection probability per (node, m); m capped at the node count.
        m_cap = n
        if config.grid_lookup:
            if config.fading is FadingKind.AWGN:
                grid = build_awgn_grid(
                    config.detection,
                    config.grid_snr_min_db,
                    config.grid_snr_max_db,
                    config.grid_snr_step_db,
                    config.grid_m_max,
                )
                self.pd = np.array(
                    [
                        [grid.lookup(self.snr_db[i], m) for m in range(1, m_cap + 1)]
                        for i in range(n)
                    ]
                )
            else:
                grid = build_rayleigh_grid(
                    config.detection,
                    config.grid_snr_min_db,
                    config.grid_snr_max_db,
                    config.grid_snr_step_db,
                )
                self.pbar = np.array(
                    [grid.lookup(self.snr_db[i], 1) for i in range(n)]
                )
        else:
            if config.fading is FadingKind.AWGN:
                self.pd = np.array(
                    [
                        [
                            p_d_awgn(config.detection, self.snr_linear[i], m)
                            for m in range(1, m_cap + 1)
                        ]
                        for i in range(n)
                    ]
                )
            else:
                self.pbar = np.array(
                    [
                        p_d_rayleigh_single(config.detection, self.snr_linear[i])
                        for i in range(n)
                    ]
                )
        if config.fading is FadingKind.RAYLEIGH:
            # log(1 - pbar) per node; cohort combining sums these.
            with np.errstate(divide="ignore"):
                self.log_miss = np.log1p(-self.pbar)
            self.log_miss_list = self.log_miss.tolist()
        else:
            self.pd_rows = [row.tolist() for row in self.pd]

        self.fa = np.array(
            [
                false_alarm_probability(config.false_alarm, config.fading, m)
                for m in range(1, m_cap + 1)
            ]
        )
        self.fa_list = self.fa.tolist()


def _cohort(world: _World, actions: Sequence[int], node: int) -> List[int]:
    """Nodes whose simultaneous sensing defines m for this node's channel."""
    channel = actions[node]
    if world.config.global_cohort:
        mates = [j for j in range(world.config.n_wn) if actions[j] == channel]
        return mates
    mates = [node]
    mates.extend(j for j in world.graph.neighbors[node] if actions[j] == channel)
    return mates


def _detection_probability(world: _World, cohort: List[int], node: int) -> float:
    if world.config.fading is FadingKind.AWGN:
        row = world.pd_rows[node]
        m = min(len(cohort), len(row))
        return row[m - 1]
    # Rayleigh: combine the cohort members' individual averages.
    log_miss = world.log_miss_list
    return -math.expm1(sum(log_miss[j] for j in cohort))


def _run_world(world: _World) -> RunRecord:
    config = world.config
    n, n_fb, horizon = config.n_wn, config.n_fb, config.horizon
    chain_params = tuple(
        (c.stay_idle, c.stay_active, c.active) for c in world.chains
    )

    truth_log = np.zeros((horizon, n_fb), dtype=bool)
    action_log = np.zeros((horizon, n), dtype=np.int16)
    obs_log = np.zeros((horizon, n), dtype=np.int8)
    cohort_log = np.zeros((horizon, n), dtype=np.int16)
    decision_log = np.zeros((horizon, n, n_fb), dtype=np.int8)
    super_log = (
        np.zeros((horizon, n, n_fb), dtype=np.int8)
        if config.use_super_decision
        else None
    )
    transmit_log = np.full((horizon, n), -1, dtype=np.int16)
    outcome_log = np.zeros((horizon, n), dtype=np.int8)

    # Initial actions: one uniform channel per node.
    actions = [int(a) for a in world.policy_rng.integers(0, n_fb, size=n)]
    q = (
        QParams.create(
            n, n_fb, config.q_learning_rate, config.q_discount, config.q_epsilon
        )
        if config.policy is PolicyKind.QLEARNING
        else None
    )
    neighbors = world.graph.neighbors
    occupied, vacant = int(Belief.OCCUPIED), int(Belief.VACANT)
    fa_list = world.fa_list
    n_fa = len(fa_list)
    chains = world.chains
    policy_rng = world.policy_rng
    transmit_rng = world.transmit_rng

    for t in range(horizon):
        # Jammer transitions happen once per step, before sensing; the
        # initial states are the step-0 truth.
        if t > 0:
            for chain in chains:
                step_chain(chain)
        truth = [chain.active for chain in chains]

        # Sensing sub-slot.  In shared-draw mode one uniform per channel
        # decides every co-sensing node's verdict (comonotone coupling:
        # cohort mates with equal probabilities get one shared verdict);
        # otherwise each node draws independently.
        draws = world.sensing_rng.random(n_fb if config.shared_draw else n).tolist()
        observations = []
        cohorts = []
        for i in range(n):
            cohort = _cohort(world, actions, i)
            m = len(cohort)
            cohorts.append(m)
            channel = actions[i]
            if truth[channel]:
                p = _detection_probability(world, cohort, i)
            else:
                p = fa_list[m - 1 if m <= n_fa else n_fa - 1]
            u = draws[channel] if config.shared_draw else draws[i]
            observations.append(occupied if u < p else vacant)

        # Collaboration sub-slot: exchange observations, fuse decisions.
        obs_objects = [
            Observation(node=i, channel=actions[i], verdict=observations[i], time=t)
            for i in range(n)
        ]
        decisions = [
            fuse_observations(
                obs_objects[i], [obs_objects[j] for j in neighbors[i]], n_fb
            )
            for i in range(n)
        ]

        # Next actions from this step's observations and neighbor actions.
        if q is not None:
            for i in range(n):
                update_q(q, i, actions[i], 1.0 if observations[i] == occupied else 0.0)
                for j in neighbors[i]:
                    update_q(q, i, actions[j], 1.0 if observations[j] == occupied else 0.0)
        next_actions = []
        for i in range(n):
            inp = PolicyInput(
                node=i,
                own_action=actions[i],
                observation=observations[i],
                neighbor_actions=tuple((j, actions[j]) for j in neighbors[i]),
                n_channels=n_fb,
                rng=policy_rng,
            )
            if config.policy is PolicyKind.PSEUDO_RANDOM:
                next_actions.append(choose_action_pseudo_random(inp, config.epsilon_n))
            elif config.policy is PolicyKind.UNIFORM:
                next_actions.append(choose_action_uniform(inp))
            else:
                next_actions.append(choose_action_qlearning(inp, q))

        # Second-stage fusion: exchange decision vectors.
        supers: Optional[List[SuperDecisionVector]] = None
        if config.use_super_decision:
            supers = [
                fuse_decisions(decisions[i], [decisions[j] for j in neighbors[i]])
                for i in range(n)
            ]

        # Transmission sub-slot.
        governing = supers if supers is not None else decisions
        for i in range(n):
            cands = candidate_channels(governing[i])
            if not cands:
                continue  # outcome stays SKIPPED, no transmit draw
            channel = cands[int(transmit_rng.integers(len(cands)))]
            transmit_log[t, i] = channel
            outcome_log[t, i] = JAMMED if truth[channel] else SUCCESSFUL

        truth_log[t] = truth
        action_log[t] = actions
        obs_log[t] = observations
        cohort_log[t] = cohorts
        for i in range(n):
            decision_log[t, i] = decisions[i].beliefs
            if super_log is not None:
                super_log[t, i] = supers[i].beliefs
        actions = next_actions

    return RunRecord(
        config=config,
        replication=0,
        run_seed=world.run_seed,
        chain_params=chain_params,
        snr_db=tuple(float(s) for s in world.snr_db),
        edges=world.graph.edges(),
        truth=truth_log,
        actions=action_log,
        observations=obs_log,
        cohorts=cohort_log,
        decisions=decision_log,
        supers=super_log,
        transmits=transmit_log,
        outcomes=outcome_log,
    )


def run(config: SimConfig, replication: int = 0) -> RunRecord:
    """Execute one seeded run; `replication` selects the derived seed."""
    config.validate()
    run_seed = rngmod.derive_seed(config.seed, rngmod.REPLICATION, replication)
    record = _run_world(_World(config, run_seed))
    record.replication = replication
    return record


# ---------------------------------------------------------------------------
# Metrics


def detection_counts(record: RunRecord) -> Tuple[np.ndarray, np.ndarray]:
    """Per-step (detected, total) occupied-channel counts.

    A channel-step counts as detected when at least one node sensed that
    channel and raw-observed it occupied; fused beliefs do not count.
    """
    occupied = record.truth
    sensed_occupied = np.zeros_like(occupied)
    hit = record.observations == Belief.OCCUPIED
    t_idx = np.nonzero(hit)[0]
    sensed_occupied[t_idx, record.actions[hit]] = True
    detected = (occupied & sensed_occupied).sum(axis=1)
    total = occupied.sum(axis=1)
    return detected, total


def jammer_detection_ratio(record: RunRecord, upto: Optional[int] = None) -> float:
    """Detected over total jamming channel-steps in the first `upto` steps.

    Returns 0.0 when no jamming occurred (degenerate denominator; see
    `detection_counts` to distinguish that case).
    """
    upto = len(record) if upto is None else upto
    if not 0 <= upto <= len(record):
        raise ValueError(f"upto={upto} outside [0, {len(record)}]")
    detected, total = detection_counts(record)
    denom = int(total[:upto].sum())
    return (int(detected[:upto].sum()) / denom) if denom else 0.0


def transmission_counts(record: RunRecord) -> Tuple[np.ndarray, np.ndarray]:
    """Per-step (successful, attempted) transmission counts; skips excluded."""
    successful = (record.outcomes == SUCCESSFUL).sum(axis=1)
    attempted = successful + (record.outcomes == JAMMED).sum(axis=1)
    return successful, attempted


def transmission_success_rate(record: RunRecord, upto: Optional[int] = None) -> float:
    """Successful over attempted transmissions in the first `upto` steps.

    Node-steps with an empty candidate set are excluded; returns 0.0
    when nothing was attempted at all.
    """
    upto = len(record) if upto is None else upto
    if not 0 <= upto <= len(record):
        raise ValueError(f"upto={upto} outside [0, {len(record)}]")
    successful, attempted = transmission_counts(record)
    denom = int(attempted[:upto].sum())
    return (int(successful[:upto].sum()) / denom) if denom else 0.0


def _prefix_ratio(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    num = np.cumsum(numer, dtype=float)
    den = np.cumsum(denom, dtype=float)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def jdr_curve(record: RunRecord) -> np.ndarray:
    """Cumulative JDR after each step (zero where no jamming occurred yet)."""
    detected, total = detection_counts(record)
    return _prefix_ratio(detected, total)


def tsr_curve(record: RunRecord) -> np.ndarray:
    """Cumulative TSR after each step (zero where nothing attempted yet)."""
    successful, attempted = transmission_counts(record)
    return _prefix_ratio(successful, attempted)


# ---------------------------------------------------------------------------
# Replication batches


@dataclass
class BatchResult:
    """Mean/std metric curves over independent replications."""

    config: SimConfig
    replications: int
    jdr_mean: np.ndarray
    jdr_std: np.ndarray
    tsr_mean: np.ndarray
    tsr_std: np.ndarray
    jdr_final: np.ndarray  # per-replication final values
    tsr_final: np.ndarray
    jamming_occurred: bool  # False flags a degenerate JDR denominator
    transmissions_attempted: bool

    @property
    def jdr_final_mean(self) -> float:
        return float(self.jdr_final.mean())

    @property
    def tsr_final_mean(self) -> float:
        return float(self.tsr_final.mean())

    def jdr_final_se(self) -> float:
        if self.replications < 2:
            return 0.0
        return float(self.jdr_final.std(ddof=1) / np.sqrt(self.replications))

    def tsr_final_se(self) -> float:
        if self.replications < 2:
            return 0.0
        return float(self.tsr_final.std(ddof=1) / np.sqrt(self.replications))


def _replicate(args: Tuple[SimConfig, int]) -> Tuple[np.ndarray, np.ndarray, bool, bool]:
    config, r = args
    record = run(config, replication=r)
    detected, total = detection_counts(record)
    successful, attempted = transmission_counts(record)
    return (
        jdr_curve(record),
        tsr_curve(record),
        bool(total.sum() > 0),
        bool(attempted.sum() > 0),
    )


def run_batch(config: SimConfig, workers: int = 1) -> BatchResult:
    """Run `config.replications` independent runs and average the curves.

    Replication r uses the derived seed H(seed, replication_tag, r), so
    results are independent of `workers`; curves are aggregated in
    replication order.
    """
    config.validate()
    reps = config.replications
    tasks = [(config, r) for r in range(reps)]
    if workers > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_replicate, tasks)
    else:
        results = [_replicate(task) for task in tasks]

    jdr = np.stack([res[0] for res in results])
    tsr = np.stack([res[1] for res in results])
    ddof = 1 if reps > 1 else 0
    return BatchResult(
        config=config,
        replications=reps,
        jdr_mean=jdr.mean(axis=0),
        jdr_std=jdr.std(axis=0, ddof=ddof),
        tsr_mean=tsr.mean(axis=0),
        tsr_std=tsr.std(axis=0, ddof=ddof),
        jdr_final=jdr[:, -1].copy(),
        tsr_final=tsr[:, -1].copy(),
        jamming_occurred=all(res[2] for res in results),
        transmissions_attempted=all(res[3] for res in results),
    )
