"""Deterministic discrete-event loop tying detection, scheduling, and
checkpointing together.

Time is an integer tick clock.  Events execute in (time, sequence) order
with sequence numbers assigned at insertion, so identical (config, seed)
pairs replay identical event logs.  All randomness is drawn from streams
derived from the single scenario seed; topology, workload, and the fault
trace come from policy-independent streams so different policies can be
compared on identical inputs.

Every virtual-node incarnation carries a tick ledger that attributes each
active tick to exactly one of: work, checkpoint pause, or restore time;
rolled-back progress moves from work to lost work, so

    useful work + lost work + pause + restore == total active node time

holds exactly in integer ticks.
"""

from __future__ import annotations

import copy
import heapq
import math
import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .checkpoint import (
    CheckpointStore,
    TccActionKind,
    independent_gap,
    rollback_loss,
    tcc_round,
)
from .config import SimConfig
from .fsm import (
    Action,
    MonitorObservation,
    byzantine_fsm_step,
    checksum_oracle,
    classify_delay,
    next_interval,
)
from .metrics import MetricsReport
from .model import (
    ChecksumResult,
    CheckpointStatus,
    DelayClass,
    FailureKind,
    Job,
    NodeState,
    Server,
    Task,
    VirtualNode,
    split_application,
)
from .scheduler import (
    mesf_assign,
    random_assign,
    rank_servers,
    record_failure,
    select_servers,
)


class EventKind(Enum):
    MONITOR_ROUND = "monitor"
    TASK_COMPLETE = "complete"
    FAULT_INJECTION = "fault"
    CONTAMINATION_EXCHANGE = "exchange"
    CHECKPOINT_ROUND = "checkpoint"
    MIGRATION_COMPLETE = "migration_done"
    HORIZON_END = "horizon_end"


class FaultKind(Enum):
    BYZANTINE = "byzantine"
    CRASH = "crash"
    DELAY_SPIKE = "delay"


@dataclass(frozen=True)
class SimEvent:
    time: int
    seq: int
    kind: EventKind
    target: int | None = None
    payload: tuple = ()


@dataclass(frozen=True)
class FaultSpec:
    kind: FaultKind
    time: int
    target_task: int | None = None   # resolved to the task's current node
    target_vn: int | None = None     # or an explicit node id
    magnitude: float = 0.0           # delay spike size, fraction of the SLA bound


class CausalityError(RuntimeError):
    pass


class ScenarioError(RuntimeError):
    pass


class EventQueue:
    """Min-heap of events keyed by (time, insertion sequence)."""

    def __init__(self):
        self._heap: list[tuple[int, int, SimEvent]] = []
        self._seq = 0
        self.clock = 0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, time: int, kind: EventKind, target: int | None = None,
             payload: tuple = ()) -> SimEvent:
        if time < self.clock:
            raise CausalityError(
                f"causality violation: insert at t={time} after clock reached {self.clock}")
        ev = SimEvent(time, self._seq, kind, target, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time, ev.seq, ev))
        return ev

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def advance(self) -> SimEvent:
        """Pop the next event and move the clock to it; empty queue ends the run."""
        if not self._heap:
            return self.synthesize(EventKind.HORIZON_END, self.clock)
        _, _, ev = heapq.heappop(self._heap)
        self.clock = ev.time
        return ev

    def synthesize(self, kind: EventKind, time: int) -> SimEvent:
        ev = SimEvent(time, self._seq, kind)
        self._seq += 1
        return ev


@dataclass
class Workload:
    tasks: list[Task]
    jobs: list[Job]


def generate_workload(task_count: int, job_count: int, demand_min: int,
                      demand_max: int, sla_bound: int,
                      rng: random.Random) -> Workload:
    """Seeded workload: balanced jobs of tasks with uniform integer demands."""
    jobs = split_application(task_count, job_count)
    job_of = {}
    for job in jobs:
        for tid in job.task_ids:
            job_of[tid] = job.job_id
    tasks = [Task(task_id=i, job_id=job_of[i],
                  demand=rng.randint(demand_min, demand_max),
                  sla_bound=sla_bound)
             for i in range(task_count)]
    return Workload(tasks=tasks, jobs=jobs)


def load_utilization_trace(path: str | Path, period: int = 300) -> list[tuple[int, int]]:
    """Parse a utilization trace: one integer percentage (0-100) per line.

    Returns (tick, percent) samples spaced ``period`` ticks apart.
    """
    path = Path(path)
    if not path.exists():
        raise ValueError(f"trace file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    samples = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text:
            continue
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: not an integer: {text!r}") from None
        if not 0 <= value <= 100:
            raise ValueError(f"{path}:{lineno}: out of range 0-100: {value}")
        samples.append((len(samples) * period, value))
    if not samples:
        raise ValueError(f"{path}: empty trace")
    return samples


def scale_demands(workload: Workload, series: list[tuple[int, int]]) -> None:
    """Scale task demands by the utilization series, cycling samples."""
    for task in workload.tasks:
        pct = series[task.task_id % len(series)][1]
        task.demand = max(1, round(task.demand * pct / 100))


def propagate_contamination(clean_ids: list[int], prop_prob: float,
                            rng: random.Random) -> list[int]:
    """One exchange round: each clean node catches contamination independently."""
    if prop_prob <= 0.0:
        return []
    return [vid for vid in clean_ids if rng.random() < prop_prob]


_PAUSE, _RESTORE = "pause", "restore"


class VnLedger:
    """Tick ledger of one node incarnation.

    Every tick between start and stop is attributed to exactly one mode;
    blocks (checkpoint pauses, restores) are served FIFO before work
    resumes.  Progress advances one unit per worked tick.
    """

    def __init__(self, start: int, progress: int):
        self.start = start
        self.anchor = start
        self.progress = progress
        self.initial_progress = progress
        self.work = 0
        self.pause = 0
        self.restore = 0
        self.blocks: deque[list] = deque()   # [kind, remaining]
        self.stopped: int | None = None

    def settle(self, t: int) -> None:
        if self.stopped is not None:
            return
        a = self.anchor
        while a < t and self.blocks:
            kind, remaining = self.blocks[0]
            step = min(remaining, t - a)
            if kind == _PAUSE:
                self.pause += step
            else:
                self.restore += step
            a += step
            if step == remaining:
                self.blocks.popleft()
            else:
                self.blocks[0][1] = remaining - step
        if a < t:
            self.work += t - a
            self.progress += t - a
            a = t
        self.anchor = a

    def add_block(self, t: int, kind: str, cost: int) -> None:
        if cost <= 0:
            return
        self.settle(t)
        self.blocks.append([kind, cost])

    def resume_time(self) -> int:
        return self.anchor + sum(remaining for _, remaining in self.blocks)

    def completion_time(self, demand: int) -> int:
        return self.resume_time() + (demand - self.progress)

    def stop(self, t: int) -> None:
        if self.stopped is not None:
            return
        self.settle(t)
        self.blocks.clear()   # unserved block time is never charged
        self.stopped = t

    @property
    def span(self) -> int:
        end = self.stopped if self.stopped is not None else self.anchor
        return end - self.start


@dataclass
class VnRuntime:
    """One live incarnation of a virtual node executing a task."""
    vn: VirtualNode
    task: Task
    job: Job
    ledger: VnLedger
    ft_interval: int
    spike_delay: float = 0.0
    completion_gen: int = 0
    last_obs_time: int = 0
    crashed_at: int | None = None


def _scenario_id(cfg: SimConfig, faults: list[FaultSpec]) -> str:
    return (f"s{cfg.server_count}c{cfg.server_capacity}"
            f"-t{cfg.task_count}j{cfg.job_count}"
            f"-seed{cfg.seed}-f{len(faults)}-h{cfg.horizon}")


def generate_faults(cfg: SimConfig) -> list[FaultSpec]:
    """Seeded fault trace over the configured injection window."""
    rng = random.Random(f"{cfg.seed}:faults")
    specs = []
    for kind, count in ((FaultKind.BYZANTINE, cfg.byzantine_faults),
                        (FaultKind.CRASH, cfg.crash_faults),
                        (FaultKind.DELAY_SPIKE, cfg.delay_faults)):
        for _ in range(count):
            specs.append(FaultSpec(
                kind=kind,
                time=rng.randrange(cfg.fault_window_start, cfg.fault_window_end),
                target_task=rng.randrange(cfg.task_count),
                magnitude=cfg.delay_magnitude if kind is FaultKind.DELAY_SPIKE else 0.0,
            ))
    specs.sort(key=lambda s: (s.time, s.kind.value, s.target_task))
    return specs


class Scenario:
    """Policy-independent scenario inputs: topology, workload, fault trace."""

    def __init__(self, cfg: SimConfig, workload: Workload,
                 faults: list[FaultSpec], latencies: list[float]):
        self.cfg = cfg
        self.workload = workload
        self.faults = faults
        self.latencies = latencies
        self.scenario_id = _scenario_id(cfg, faults)

    @classmethod
    def from_config(cls, cfg: SimConfig, faults: list[FaultSpec] | None = None) -> "Scenario":
        topo_rng = random.Random(f"{cfg.seed}:topology")
        latencies = [topo_rng.uniform(cfg.latency_mean_min, cfg.latency_mean_max)
                     for _ in range(cfg.server_count)]
        wl_rng = random.Random(f"{cfg.seed}:workload")
        workload = generate_workload(cfg.task_count, cfg.job_count,
                                     cfg.demand_min, cfg.demand_max,
                                     cfg.sla_bound, wl_rng)
        if cfg.trace_path:
            series = load_utilization_trace(cfg.trace_path, cfg.trace_period)
            scale_demands(workload, series)
        if faults is None:
            faults = generate_faults(cfg)
        for spec in faults:
            if spec.time >= cfg.horizon:
                raise ScenarioError(f"fault at t={spec.time} is not below horizon {cfg.horizon}")
        return cls(cfg, workload, faults, latencies)

    def run(self, scheduler: str | None = None, checkpoint_policy: str | None = None,
            collect_log: bool = True) -> tuple[MetricsReport, list[str]]:
        sim = Simulation(self, scheduler=scheduler, checkpoint_policy=checkpoint_policy,
                         collect_log=collect_log)
        return sim.run()


class Simulation:
    """One policy run over a scenario."""

    def __init__(self, scenario: Scenario, scheduler: str | None = None,
                 checkpoint_policy: str | None = None, collect_log: bool = True):
        cfg = scenario.cfg
        self.cfg = cfg
        self.scheduler = scheduler or cfg.scheduler
        self.checkpoint_policy = checkpoint_policy or cfg.checkpoint_policy
        self.collect_log = collect_log

        self.workload = copy.deepcopy(scenario.workload)
        self.faults = scenario.faults
        self.tasks = {t.task_id: t for t in self.workload.tasks}
        self.jobs = {j.job_id: j for j in self.workload.jobs}

        self.servers = [Server(server_id=i + 1, capacity=cfg.server_capacity,
                               latency_mean=scenario.latencies[i],
                               latency_sigma=cfg.latency_sigma)
                        for i in range(cfg.server_count)]
        self.server_by_id = {s.server_id: s for s in self.servers}

        self.rng = random.Random(f"{cfg.seed}:run")
        self.queue = EventQueue()
        self.store = CheckpointStore()
        self.report = MetricsReport(scenario.scenario_id, cfg.seed,
                                    self.scheduler, self.checkpoint_policy)
        self.log_lines: list[str] = []

        self.runtimes: dict[int, VnRuntime] = {}    # vn id -> live incarnation
        self.task_vn: dict[int, int] = {}           # task id -> current vn id
        self._next_vn_id = 1
        self._wave_delay = 0

        self.thresholds = (cfg.delay_low_frac, cfg.delay_normal_frac, cfg.delay_high_frac)
        self.detection_pending: dict[int, int] = {}  # task id -> fault time

        self.completed_migrations = 0
        self.failed_workloads = 0
        self.checkpoint_count = 0
        self.rollback_count = 0
        self.migration_count = 0
        self.replacement_count = 0
        self.lost_work = 0
        self.work_total = 0
        self.pause_total = 0
        self.restore_total = 0
        self.span_total = 0
        self.corrupted_completions = 0
        self.jobs_completed = 0
        self.obs_count = 0
        self.over_count = 0
        self.excess_sum = 0.0
        self.server_obs_time: dict[int, int] = {}
        self.server_over_time: dict[int, int] = {}

    # -- logging ----------------------------------------------------------

    def _log(self, ev: SimEvent, detail: str) -> None:
        if self.collect_log:
            target = "" if ev.target is None else str(ev.target)
            self.log_lines.append(f"{ev.time},{ev.seq},{ev.kind.value},{target},{detail}")

    # -- placement ----------------------------------------------------------

    def _free_slots(self) -> dict[int, int]:
        return {s.server_id: s.free_slots for s in self.servers}

    def _initial_placement(self) -> dict[int, int]:
        task_ids = sorted(self.tasks)
        total = sum(s.free_slots for s in self.servers)
        if total < len(task_ids):
            raise ScenarioError(
                f"infeasible placement: capacity shortfall of {len(task_ids) - total} tasks")
        if self.scheduler == "mesf":
            assignment = mesf_assign(task_ids, self.servers, self.cfg.preeval_cost)
            self.report.record("exec_time_vm_selection", assignment.preeval_cost)
            self.report.record("exec_time_total", assignment.preeval_cost)
            self._wave_delay = math.ceil(assignment.preeval_cost)
            return assignment.mapping
        if self.scheduler == "random":
            assignment = random_assign(task_ids, self.servers, self.rng)
            self.report.record("exec_time_vm_selection", 0.0)
            self.report.record("exec_time_total", 0.0)
            return assignment.mapping
        # wsss: rank once, first fit in rank order, no pre-evaluation charge
        ranking = rank_servers(self.servers)
        free = self._free_slots()
        mapping = {}
        for tid in task_ids:
            for sid in ranking.ordered_ids():
                if free[sid] > 0:
                    mapping[tid] = sid
                    free[sid] -= 1
                    break
        self.report.record("exec_time_vm_selection", 0.0)
        self.report.record("exec_time_total", 0.0)
        return mapping

    def _pick_replacement_server(self, exclude_id: int) -> tuple[int | None, float]:
        """Choose a server for a restarted node; returns (id, selection cost)."""
        if self.scheduler == "wsss":
            ranking = rank_servers(self.servers, self.queue.clock)
            picked, _ = select_servers(ranking, 1, self._free_slots(), exclude=(exclude_id,))
            return (picked[0] if picked else None), 0.0
        if self.scheduler == "mesf":
            # re-evaluates and packs onto servers already in use; never opens an
            # idle server for a single replacement
            in_use = [s for s in self.servers if s.active_vns and s.server_id != exclude_id]
            cost = self.cfg.preeval_cost * len(in_use)
            for s in sorted(in_use, key=lambda s: (s.latency_mean, s.server_id)):
                if s.free_slots > 0:
                    return s.server_id, cost
            return None, cost
        choices = sorted(s.server_id for s in self.servers
                         if s.free_slots > 0 and s.server_id != exclude_id)
        if not choices:
            return None, 0.0
        return self.rng.choice(choices), 0.0

    # -- node lifecycle ----------------------------------------------------------

    def _spawn(self, task: Task, server_id: int, start: int, progress: int,
               restore_cost: int, last_confirmed: int | None) -> VnRuntime:
        vn = VirtualNode(vn_id=self._next_vn_id, server_id=server_id,
                         gap=self.cfg.base_interval,
                         next_monitor=start + self.cfg.base_interval,
                         task_id=task.task_id, last_confirmed=last_confirmed)
        self._next_vn_id += 1
        ledger = VnLedger(start, progress)
        if restore_cost > 0:
            ledger.add_block(start, _RESTORE, restore_cost)
        rt = VnRuntime(vn=vn, task=task, job=self.jobs[task.job_id],
                       ledger=ledger, ft_interval=self.cfg.ft_interval,
                       last_obs_time=start)
        self.runtimes[vn.vn_id] = rt
        self.task_vn[task.task_id] = vn.vn_id
        self.server_by_id[server_id].active_vns.add(vn.vn_id)
        if vn.next_monitor <= self.cfg.horizon:
            self.queue.push(vn.next_monitor, EventKind.MONITOR_ROUND, vn.vn_id)
        self._schedule_completion(rt)
        if self.checkpoint_policy == "independent":
            gap = independent_gap(self.rng, self.cfg.indep_mean_gap)
            if start + gap <= self.cfg.horizon:
                self.queue.push(start + gap, EventKind.CHECKPOINT_ROUND, vn.vn_id)
        return rt

    def _schedule_completion(self, rt: VnRuntime) -> None:
        rt.completion_gen += 1
        when = rt.ledger.completion_time(rt.task.demand)
        if when <= self.cfg.horizon:
            self.queue.push(when, EventKind.TASK_COMPLETE, rt.vn.vn_id,
                            payload=(rt.completion_gen,))

    def _retire(self, rt: VnRuntime, t: int) -> None:
        """Stop an incarnation and fold its ledger into the totals."""
        stop_at = rt.crashed_at if rt.crashed_at is not None else t
        rt.ledger.stop(min(stop_at, self.cfg.horizon))
        self.work_total += rt.ledger.work
        self.pause_total += rt.ledger.pause
        self.restore_total += rt.ledger.restore
        self.span_total += rt.ledger.span
        self.runtimes.pop(rt.vn.vn_id, None)
        if self.task_vn.get(rt.task.task_id) == rt.vn.vn_id:
            self.task_vn.pop(rt.task.task_id)
        self.server_by_id[rt.vn.server_id].active_vns.discard(rt.vn.vn_id)

    def _rollback_target(self, rt: VnRuntime, before: int | None = None):
        task_id = rt.task.task_id
        if self.checkpoint_policy == "independent":
            latest = self.store.latest(task_id)
            if latest is not None and latest.tainted:
                return None   # no trusted image: back to the initial state
            return latest
        return self.store.latest_clean(task_id, before)

    def _restart_vn(self, rt: VnRuntime, t: int, reason: str) -> str:
        """Replace one node from its previous trusted checkpoint."""
        target = self._rollback_target(rt)
        if rt.crashed_at is None:
            rt.ledger.settle(t)
        lost = rollback_loss(rt.ledger.progress, target, t)
        self.lost_work += lost
        self.rollback_count += 1
        old_server = rt.vn.server_id
        birth = rt.ledger.start
        self._retire(rt, t)
        rt.task.contaminated_output = False   # erroneous output discarded with the rollback
        new_sid, selection_cost = self._pick_replacement_server(old_server)
        self.report.record("exec_time_host_selection", selection_cost)
        if new_sid is None:
            self.failed_workloads += 1
            return f"reason={reason};lost={lost};placement=failed"
        restore = self.cfg.restart_cost + math.ceil(selection_cost)
        new_rt = self._spawn(rt.task, new_sid, start=t,
                             progress=target.progress if target else 0,
                             restore_cost=restore,
                             last_confirmed=target.ckpt_id if target else None)
        self.completed_migrations += 1
        self.replacement_count += 1
        self.report.record("time_before_migration", float(t - birth))
        self.report.record("exec_time_reallocation", float(restore))
        self.report.record("exec_time_total", selection_cost + restore)
        return (f"reason={reason};lost={lost};from=s{old_server};"
                f"to=s{new_sid};vn=v{new_rt.vn.vn_id}")

    def _migrate_job(self, job: Job, t: int) -> str:
        """Halt every node of the job and restart it from a job-consistent image."""
        rts = sorted((rt for rt in self.runtimes.values() if rt.job.job_id == job.job_id),
                     key=lambda r: r.vn.vn_id)
        if not rts:
            return "empty"
        newest_times = []
        for rt in rts:
            newest = self.store.latest_clean(rt.task.task_id)
            newest_times.append(newest.time if newest else 0)
        consistent_at = min(newest_times)
        moves = []
        for rt in rts:
            target = self.store.latest_clean(rt.task.task_id, before=consistent_at)
            if rt.crashed_at is None:
                rt.ledger.settle(t)
            lost = rollback_loss(rt.ledger.progress, target, t)
            self.lost_work += lost
            self.rollback_count += 1
            moves.append((rt, target, rt.ledger.start))
            self._retire(rt, t)
            rt.task.contaminated_output = False
        if self.scheduler == "mesf":
            wave_cost = self.cfg.preeval_cost * sum(1 for s in self.servers if s.active_vns)
        else:
            wave_cost = 0.0
        self.report.record("exec_time_vm_selection", wave_cost)
        ranking = rank_servers(self.servers, t)
        free = self._free_slots()
        picked, _ = select_servers(ranking, len(moves), free)
        slots = []
        for sid in picked:
            while free[sid] > 0 and len(slots) < len(moves):
                slots.append(sid)
                free[sid] -= 1
        placed = 0
        for (rt, target, birth), slot in zip(moves, slots + [None] * (len(moves) - len(slots))):
            if slot is None:
                self.failed_workloads += 1
                continue
            restore = self.cfg.migration_cost + math.ceil(wave_cost)
            self._spawn(rt.task, slot, start=t,
                        progress=target.progress if target else 0,
                        restore_cost=restore,
                        last_confirmed=target.ckpt_id if target else None)
            self.completed_migrations += 1
            self.replacement_count += 1
            placed += 1
            # bulk moves are collateral of the job halt; the per-VM
            # time-before-migration metric samples reactive restarts only
            self.report.record("exec_time_reallocation", float(restore))
            self.report.record("exec_time_total", wave_cost + restore)
        self.migration_count += 1
        job.restart_count = 0
        done_at = t + self.cfg.migration_cost
        if done_at <= self.cfg.horizon:
            self.queue.push(done_at, EventKind.MIGRATION_COMPLETE, job.job_id)
        return (f"job=j{job.job_id};moved={placed};"
                f"shortfall={len(moves) - placed};consistent_at={consistent_at}")

    # -- checkpoints ----------------------------------------------------------

    def _take_vn_checkpoint(self, rt: VnRuntime, t: int, status: CheckpointStatus,
                            scope: str = "vn", scope_id: int | None = None) -> None:
        rt.ledger.settle(t)
        ckpt = self.store.take(rt.vn, t, status, cost=self.cfg.checkpoint_write_cost,
                               progress=rt.ledger.progress, scope=scope,
                               scope_id=scope_id, lineage_id=rt.task.task_id)
        rt.vn.last_confirmed = ckpt.ckpt_id
        rt.ledger.add_block(t, _PAUSE, self.cfg.checkpoint_write_cost)
        self.checkpoint_count += 1
        self._schedule_completion(rt)

    # -- observation pipeline ----------------------------------------------------

    def _observe(self, rt: VnRuntime, t: int) -> tuple[MonitorObservation, bool]:
        cfg = self.cfg
        server = self.server_by_id[rt.vn.server_id]
        delay = max(0.0, self.rng.gauss(server.latency_mean, server.latency_sigma))
        delay += rt.spike_delay
        sla = rt.task.sla_bound
        if rt.crashed_at is not None:
            checksum = ChecksumResult.ERROR   # challenge unanswered
        else:
            checksum = checksum_oracle(rt.vn.contaminated, cfg.detect_prob, self.rng)
        if (rt.vn.contaminated and checksum is ChecksumResult.NO_ERROR
                and cfg.high_delay_fallback):
            # a missed detection surfaces as high delay variation
            delay = max(delay, (cfg.delay_normal_frac + cfg.delay_high_frac) / 2 * sla)
        dclass = classify_delay(delay, sla, self.thresholds)
        obs = MonitorObservation(rt.vn.vn_id, t, delay, dclass, checksum)
        flagged = checksum is ChecksumResult.ERROR or dclass >= DelayClass.HIGH

        weight = t - rt.last_obs_time
        rt.last_obs_time = t
        self.obs_count += 1
        self.excess_sum += max(0.0, delay - sla)
        self.server_obs_time[server.server_id] = \
            self.server_obs_time.get(server.server_id, 0) + weight
        if dclass >= DelayClass.HIGH:
            self.over_count += 1
            self.server_over_time[server.server_id] = \
                self.server_over_time.get(server.server_id, 0) + weight
        if checksum is ChecksumResult.ERROR:
            record_failure(server, FailureKind.ERRONEOUS)
        elif dclass >= DelayClass.HIGH:
            record_failure(server, FailureKind.DELAY_SENSITIVE)
        if flagged and rt.task.task_id in self.detection_pending:
            since = self.detection_pending.pop(rt.task.task_id)
            self.report.record("detection_latency", float(t - since))
        if cfg.monitor_cost > 0 and rt.crashed_at is None:
            rt.ledger.add_block(t, _PAUSE, cfg.monitor_cost)
            self._schedule_completion(rt)
        return obs, flagged

    def _apply_policy(self, rt: VnRuntime, t: int, obs: MonitorObservation,
                      in_monitor: bool) -> str:
        prior = rt.vn.state
        post = byzantine_fsm_step(prior, obs.delay_class, obs.checksum)
        decision = next_interval(rt.vn, post, self.cfg)
        rt.vn.state = post
        rt.vn.suspect_rounds = decision.suspect_rounds if post is NodeState.BYZANTINE else 0
        outcome = f"state={prior.value}>{post.value}"

        if self.checkpoint_policy == "tcc":
            action = tcc_round(rt.vn, rt.ft_interval, decision.next_gap, rt.job,
                               self.cfg.migration_threshold)
            if action.kind is TccActionKind.CONFIRMED_CHECKPOINT:
                rt.ft_interval = action.new_ft_interval
                if in_monitor:
                    self._take_vn_checkpoint(rt, t, CheckpointStatus.CONFIRMED)
                    self._advance_monitor(rt, t, decision.next_gap)
                return outcome + f";tcc=confirmed;delta={rt.ft_interval}"
            if action.kind is TccActionKind.PREVIOUS_RESTART:
                return outcome + ";tcc=previous_restart;" + self._restart_vn(rt, t, "tcc_restart")
            return outcome + ";tcc=job_migration;" + self._migrate_job(rt.job, t)

        if decision.action is Action.REPLACE_NODE:
            return outcome + ";" + self._restart_vn(rt, t, "replace")
        if not in_monitor:
            # rejected final output outside a monitor round: the suspicion
            # machinery cannot hold a finished node, so replace it outright
            return outcome + ";" + self._restart_vn(rt, t, "verify_reject")
        self._advance_monitor(rt, t, decision.next_gap)
        return outcome + f";action={decision.action.value};q={rt.vn.suspect_rounds}"

    def _advance_monitor(self, rt: VnRuntime, t: int, gap: int) -> None:
        rt.vn.gap = gap
        rt.vn.next_monitor = t + gap
        if rt.vn.next_monitor <= self.cfg.horizon:
            self.queue.push(rt.vn.next_monitor, EventKind.MONITOR_ROUND, rt.vn.vn_id)

    # -- completion ----------------------------------------------------------

    def _task_finished(self, rt: VnRuntime, t: int) -> bool:
        if rt.crashed_at is not None:
            return False
        rt.ledger.settle(t)
        return rt.ledger.progress >= rt.task.demand and not rt.ledger.blocks

    def _complete_task(self, rt: VnRuntime, t: int) -> str:
        task = rt.task
        task.completed = True
        if task.contaminated_output:
            self.corrupted_completions += 1
        self._retire(rt, t)
        job = self.jobs[task.job_id]
        if all(self.tasks[tid].completed for tid in job.task_ids):
            self.jobs_completed += 1
            return f"task={task.task_id};job=j{job.job_id};job_complete=1"
        return f"task={task.task_id}"

    # -- fault injection ----------------------------------------------------------

    def inject_fault(self, spec: FaultSpec, t: int) -> str:
        rt = None
        if spec.target_vn is not None:
            rt = self.runtimes.get(spec.target_vn)
        elif spec.target_task is not None:
            vn_id = self.task_vn.get(spec.target_task)
            rt = self.runtimes.get(vn_id) if vn_id is not None else None
        if rt is None or rt.vn.state is NodeState.FAIL_STOP:
            return f"kind={spec.kind.value};target=none;noop=1"
        if spec.kind is FaultKind.BYZANTINE:
            rt.vn.contaminated = True
            rt.task.contaminated_output = True
            self.detection_pending[rt.task.task_id] = t
            return f"kind=byzantine;vn=v{rt.vn.vn_id}"
        if spec.kind is FaultKind.CRASH:
            rt.ledger.settle(t)
            rt.ledger.stop(t)
            rt.vn.state = NodeState.FAIL_STOP
            rt.crashed_at = t
            self.detection_pending[rt.task.task_id] = t
            return f"kind=crash;vn=v{rt.vn.vn_id}"
        rt.spike_delay += spec.magnitude * rt.task.sla_bound
        return f"kind=delay;vn=v{rt.vn.vn_id};magnitude={spec.magnitude}"

    # -- event handlers ----------------------------------------------------------

    def _handle_monitor(self, ev: SimEvent) -> str:
        rt = self.runtimes.get(ev.target)
        if rt is None or ev.time != rt.vn.next_monitor:
            return "stale=1"
        obs, flagged = self._observe(rt, ev.time)
        detail = (f"server=s{rt.vn.server_id};delay={obs.delay:.3f};"
                  f"class={obs.delay_class.name.lower()};checksum={obs.checksum.value};")
        finished = self._task_finished(rt, ev.time)
        if finished and not flagged:
            return detail + self._complete_task(rt, ev.time)
        return detail + self._apply_policy(rt, ev.time, obs, in_monitor=not finished)

    def _handle_complete(self, ev: SimEvent) -> str:
        rt = self.runtimes.get(ev.target)
        if rt is None or rt.crashed_at is not None:
            return "stale=1"
        if ev.payload and ev.payload[0] != rt.completion_gen:
            return "stale=1"
        if not self._task_finished(rt, ev.time):
            return "stale=1"
        obs, flagged = self._observe(rt, ev.time)
        detail = (f"server=s{rt.vn.server_id};verify=1;delay={obs.delay:.3f};"
                  f"class={obs.delay_class.name.lower()};checksum={obs.checksum.value};")
        if flagged:
            # output rejected at final verification: re-execute from checkpoint
            return detail + self._apply_policy(rt, ev.time, obs, in_monitor=False)
        return detail + self._complete_task(rt, ev.time)

    def _handle_checkpoint_round(self, ev: SimEvent) -> str:
        if self.checkpoint_policy == "sync":
            job = self.jobs.get(ev.target)
            if job is None:
                return "stale=1"
            taken = 0
            for rt in sorted((r for r in self.runtimes.values()
                              if r.job.job_id == job.job_id and r.crashed_at is None),
                             key=lambda r: r.vn.vn_id):
                self._take_vn_checkpoint(rt, ev.time, CheckpointStatus.CONFIRMED,
                                         scope="job", scope_id=job.job_id)
                taken += 1
            nxt = ev.time + self.cfg.ft_interval
            if nxt <= self.cfg.horizon and any(not self.tasks[tid].completed
                                               for tid in job.task_ids):
                self.queue.push(nxt, EventKind.CHECKPOINT_ROUND, job.job_id)
            return f"job=j{job.job_id};taken={taken}"
        rt = self.runtimes.get(ev.target)
        if rt is None or rt.crashed_at is not None:
            return "stale=1"
        self._take_vn_checkpoint(rt, ev.time, CheckpointStatus.CONFIRMED)
        gap = independent_gap(self.rng, self.cfg.indep_mean_gap)
        if ev.time + gap <= self.cfg.horizon:
            self.queue.push(ev.time + gap, EventKind.CHECKPOINT_ROUND, rt.vn.vn_id)
        return f"vn=v{rt.vn.vn_id};gap={gap}"

    def _handle_exchange(self, ev: SimEvent) -> str:
        spread = []
        for job_id in sorted(self.jobs):
            members = sorted((rt for rt in self.runtimes.values()
                              if rt.job.job_id == job_id),
                             key=lambda r: r.vn.vn_id)
            # a fail-stopped node no longer exchanges outputs
            if not any(rt.vn.contaminated and rt.vn.state is not NodeState.FAIL_STOP
                       for rt in members):
                continue
            clean = [rt for rt in members if not rt.vn.contaminated
                     and rt.vn.state is not NodeState.FAIL_STOP]
            newly = propagate_contamination([rt.vn.vn_id for rt in clean],
                                            self.cfg.propagation_prob, self.rng)
            for rt in clean:
                if rt.vn.vn_id in newly:
                    rt.vn.contaminated = True
                    rt.task.contaminated_output = True
                    self.detection_pending.setdefault(rt.task.task_id, ev.time)
                    spread.append(rt.vn.vn_id)
        nxt = ev.time + self.cfg.base_interval
        if nxt <= self.cfg.horizon:
            self.queue.push(nxt, EventKind.CONTAMINATION_EXCHANGE)
        return "spread=" + ("|".join(f"v{v}" for v in spread) if spread else "-")

    # -- main loop ----------------------------------------------------------

    def run(self) -> tuple[MetricsReport, list[str]]:
        cfg = self.cfg
        mapping = self._initial_placement()
        start = self._wave_delay
        for tid in sorted(mapping):
            self._spawn(self.tasks[tid], mapping[tid], start=start, progress=0,
                        restore_cost=0, last_confirmed=None)
        if self.checkpoint_policy == "sync" and cfg.ft_interval <= cfg.horizon:
            for job_id in sorted(self.jobs):
                self.queue.push(cfg.ft_interval, EventKind.CHECKPOINT_ROUND, job_id)
        if cfg.propagation_prob > 0 and cfg.base_interval <= cfg.horizon:
            self.queue.push(cfg.base_interval, EventKind.CONTAMINATION_EXCHANGE)
        for i, spec in enumerate(self.faults):
            self.queue.push(spec.time, EventKind.FAULT_INJECTION, i)

        dispatch = {
            EventKind.MONITOR_ROUND: self._handle_monitor,
            EventKind.TASK_COMPLETE: self._handle_complete,
            EventKind.CHECKPOINT_ROUND: self._handle_checkpoint_round,
            EventKind.CONTAMINATION_EXCHANGE: self._handle_exchange,
        }
        while self.jobs_completed < len(self.jobs):
            next_time = self.queue.peek_time()
            if next_time is None or next_time > cfg.horizon:
                break
            ev = self.queue.advance()
            if ev.kind is EventKind.FAULT_INJECTION:
                detail = self.inject_fault(self.faults[ev.target], ev.time)
            elif ev.kind is EventKind.MIGRATION_COMPLETE:
                detail = f"job=j{ev.target}"
            else:
                detail = dispatch[ev.kind](ev)
            self._log(ev, detail)

        end = self.queue.clock if self.jobs_completed == len(self.jobs) else cfg.horizon
        for rt in sorted(self.runtimes.values(), key=lambda r: r.vn.vn_id):
            self._retire(rt, end)
        self._log(self.queue.synthesize(EventKind.HORIZON_END, end),
                  f"jobs_completed={self.jobs_completed}")
        self._finalize()
        return self.report, self.log_lines

    # -- report ----------------------------------------------------------

    def _finalize(self) -> None:
        rep = self.report
        rep.set_scalar("host_count", len(self.servers))
        rep.set_scalar("vn_count", len(self.tasks))
        rep.set_scalar("completed_migrations", self.completed_migrations)
        rep.set_scalar("failed_workloads", self.failed_workloads)
        rep.set_scalar("checkpoint_count", self.checkpoint_count)
        rep.set_scalar("rollback_count", self.rollback_count)
        rep.set_scalar("migration_count", self.migration_count)
        rep.set_scalar("replacement_count", self.replacement_count)
        rep.set_scalar("useful_work_total", self.work_total - self.lost_work)
        rep.set_scalar("lost_work_total", self.lost_work)
        rep.set_scalar("pause_time_total", self.pause_total)
        rep.set_scalar("restore_time_total", self.restore_total)
        rep.set_scalar("active_time_total", self.span_total)
        rep.set_scalar("corrupted_completions", self.corrupted_completions)
        rep.set_scalar("jobs_completed", self.jobs_completed)

        pdm = 100.0 * self.lost_work / self.work_total if self.work_total else 0.0
        fractions = [self.server_over_time.get(sid, 0) / obs_time
                     for sid, obs_time in sorted(self.server_obs_time.items())
                     if obs_time > 0]
        slatah = 100.0 * sum(fractions) / len(fractions) if fractions else 0.0
        over_rate = 100.0 * self.over_count / self.obs_count if self.obs_count else 0.0
        overall = slatah * over_rate / 100.0
        mean_sla = (sum(t.sla_bound for t in self.tasks.values()) / len(self.tasks)
                    if self.tasks else 1.0)
        avg = 100.0 * (self.excess_sum / self.obs_count) / mean_sla if self.obs_count else 0.0
        rep.set_scalar("sla_degradation_migration_pct", min(100.0, pdm))
        rep.set_scalar("sla_time_per_active_host_pct", min(100.0, slatah))
        rep.set_scalar("overall_sla_violation_pct", min(100.0, overall))
        rep.set_scalar("avg_sla_violation_pct", min(100.0, avg))


def run_scenario(cfg: SimConfig, faults: list[FaultSpec] | None = None,
                 scheduler: str | None = None, checkpoint_policy: str | None = None,
                 collect_log: bool = True) -> tuple[MetricsReport, list[str]]:
    """Build the scenario from config and run it once."""
    scenario = Scenario.from_config(cfg, faults)
    return scenario.run(scheduler=scheduler, checkpoint_policy=checkpoint_policy,
                        collect_log=collect_log)
