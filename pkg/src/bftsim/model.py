"""Domain types shared by every other module.

The simulated world is a set of physical servers hosting virtual nodes
(VNs).  Each VN executes one task of one job.  Node health is tracked by a
three-state machine (fail-safe / Byzantine-suspect / fail-stop); fail-stop
is absorbing everywhere.  All times are integer simulation ticks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum


class NodeState(Enum):
    FAIL_SAFE = "S0"
    BYZANTINE = "S1"
    FAIL_STOP = "S2"


class DelayClass(IntEnum):
    # Totally ordered: LOW < NORMAL < HIGH < EXTREME.
    LOW = 0
    NORMAL = 1
    HIGH = 2
    EXTREME = 3


class ChecksumResult(Enum):
    NO_ERROR = "noerror"
    ERROR = "error"


class CheckpointStatus(Enum):
    NULL = "null"
    CONFIRMED = "confirmed"
    PREVIOUS = "previous"
    COMPLETE = "complete"


class PerformanceClass(Enum):
    NOT_PERFORMING = "notperforming"
    PERFORMING = "performing"
    WARY = "wary"


class FailureKind(Enum):
    ERRONEOUS = "W"          # erroneous output (bad checksum, crash)
    DELAY_SENSITIVE = "Y"    # delay exceeded the SLA bound


# token <-> enum maps used by the report format and the fsm-trace format
STATE_TOKENS = {s.value: s for s in NodeState}
DELAY_TOKENS = {d.name.lower(): d for d in DelayClass}
CHECKSUM_TOKENS = {c.value: c for c in ChecksumResult}
STATUS_TOKENS = {s.value: s for s in CheckpointStatus}
PERFORMANCE_TOKENS = {p.value: p for p in PerformanceClass}


@dataclass
class Task:
    task_id: int
    job_id: int
    demand: int                  # nominal service demand, ticks
    sla_bound: int               # SLA delay bound D, ticks
    contaminated_output: bool = False
    completed: bool = False


@dataclass
class Job:
    job_id: int
    task_ids: list[int] = field(default_factory=list)
    restart_count: int = 0       # previous-checkpoint restarts since last migration


@dataclass
class VirtualNode:
    vn_id: int
    server_id: int
    state: NodeState = NodeState.FAIL_SAFE
    gap: int = 0                 # current monitoring gap, multiple of the base interval
    next_monitor: int = 0
    suspect_rounds: int = 0      # consecutive Byzantine-state observations
    contaminated: bool = False
    last_confirmed: int | None = None   # checkpoint id
    task_id: int | None = None


@dataclass
class Server:
    server_id: int
    capacity: int
    latency_mean: float = 0.0
    latency_sigma: float = 0.0
    fail_count: int = 0
    w_count: int = 0
    y_count: int = 0
    active_vns: set[int] = field(default_factory=set)

    @property
    def free_slots(self) -> int:
        return self.capacity - len(self.active_vns)


@dataclass
class Checkpoint:
    ckpt_id: int
    scope: str                   # "vn" or "job"
    target_id: int               # vn id or job id
    time: int
    status: CheckpointStatus
    size: int = 1                # abstract storage units
    cost: int = 0                # write pause, ticks
    progress: int = 0            # task progress captured in the image
    tainted: bool = False        # ground truth: target was contaminated when imaged


def split_application(task_count: int, job_count: int) -> list[Job]:
    """Partition ``task_count`` tasks into ``job_count`` balanced jobs.

    Tasks are assigned in id order as contiguous blocks; block sizes differ
    by at most one, with the larger blocks first.  Deterministic.
    """
    if task_count < 1:
        raise ValueError("task_count must be >= 1")
    if job_count < 1:
        raise ValueError("job_count must be >= 1")
    if job_count > task_count:
        raise ValueError("job_count must not exceed task_count")
    base, rem = divmod(task_count, job_count)
    jobs = []
    next_task = 0
    for j in range(job_count):
        size = base + (1 if j < rem else 0)
        jobs.append(Job(job_id=j, task_ids=list(range(next_task, next_task + size))))
        next_task += size
    return jobs
