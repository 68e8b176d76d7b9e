"""Checkpoint policies: the hybrid interval-tracking policy and two baselines.

The hybrid policy (tag ``tcc``) compares the job's fault-tolerance interval
against the monitoring gap a node just earned.  A grown gap means the node
performed: take a fresh confirmed checkpoint and stretch the interval.  A
collapsed gap means trouble: restart the node from its previous confirmed
checkpoint, and once a job accumulates more restarts than the migration
threshold, halt and migrate the whole job from a job-consistent image.

Baselines: ``sync`` images every node of a job at a fixed cadence
regardless of health; ``independent`` images each node at uncoordinated
seeded-random times and can only fall back to the initial state when its
latest image is untrusted.
"""

from __future__ import annotations

import io
import csv
import random
from dataclasses import dataclass
from enum import Enum

from .model import Checkpoint, CheckpointStatus, Job, NodeState, VirtualNode


class TccActionKind(Enum):
    CONFIRMED_CHECKPOINT = "confirmed_checkpoint"
    PREVIOUS_RESTART = "previous_restart"
    JOB_MIGRATION = "job_migration"


@dataclass(frozen=True)
class TccAction:
    kind: TccActionKind
    target_id: int               # vn id, or job id for migrations
    new_ft_interval: int | None = None


def tcc_round(vn: VirtualNode, ft_interval: int, gap: int, job: Job,
              migration_threshold: int) -> TccAction:
    """Decide the checkpoint action for one node after its monitor round.

    ``gap`` is the monitoring gap just assigned by the interval update.
    Mutates ``job.restart_count``: restarts increment it, a migration resets
    it to zero.
    """
    if ft_interval < gap:
        return TccAction(TccActionKind.CONFIRMED_CHECKPOINT, vn.vn_id, new_ft_interval=gap)
    job.restart_count += 1
    if job.restart_count > migration_threshold:
        job.restart_count = 0
        return TccAction(TccActionKind.JOB_MIGRATION, job.job_id)
    return TccAction(TccActionKind.PREVIOUS_RESTART, vn.vn_id)


class CheckpointStore:
    """Ledger of every checkpoint taken in a scenario.

    Images are indexed by lineage: the task keeps its checkpoint chain
    across node replacements, so a freshly started node can restore the
    image its predecessor wrote.
    """

    def __init__(self):
        self.records: list[Checkpoint] = []
        self._by_lineage: dict[int, list[Checkpoint]] = {}

    def take(self, vn: VirtualNode, time: int, status: CheckpointStatus,
             cost: int, progress: int, scope: str = "vn",
             scope_id: int | None = None,
             lineage_id: int | None = None) -> Checkpoint:
        if vn.state is NodeState.FAIL_STOP:
            raise ValueError(f"cannot checkpoint fail-stopped node v{vn.vn_id}")
        ckpt = Checkpoint(
            ckpt_id=len(self.records),
            scope=scope,
            target_id=vn.vn_id if scope_id is None else scope_id,
            time=time,
            status=status,
            cost=cost,
            progress=progress,
            tainted=vn.contaminated,
        )
        self.records.append(ckpt)
        key = vn.vn_id if lineage_id is None else lineage_id
        self._by_lineage.setdefault(key, []).append(ckpt)
        return ckpt

    def latest_clean(self, lineage_id: int, before: int | None = None) -> Checkpoint | None:
        """Newest untainted image in the lineage, optionally no newer than ``before``."""
        for ckpt in reversed(self._by_lineage.get(lineage_id, [])):
            if ckpt.tainted:
                continue
            if before is not None and ckpt.time > before:
                continue
            return ckpt
        return None

    def latest(self, lineage_id: int) -> Checkpoint | None:
        chain = self._by_lineage.get(lineage_id, [])
        return chain[-1] if chain else None

    def ledger_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["ckpt_id", "scope", "time", "status", "size", "cost"])
        for c in self.records:
            target = f"v{c.target_id}" if c.scope == "vn" else f"j{c.target_id}"
            writer.writerow([c.ckpt_id, f"{c.scope}:{target}", c.time,
                             c.status.value, c.size, c.cost])
        return out.getvalue()


def rollback_loss(current_progress: int, target: Checkpoint | None, now: int) -> int:
    """Work discarded by rolling back to ``target`` (or the initial state)."""
    if target is None:
        return current_progress
    if target.time > now:
        raise ValueError("rollback target is newer than current time")
    lost = current_progress - target.progress
    if lost < 0:
        raise ValueError("checkpoint progress exceeds current progress")
    return lost


def sync_checkpoint_times(ft_interval: int, horizon: int) -> list[int]:
    """Times of the fixed-cadence baseline rounds within the horizon."""
    return list(range(ft_interval, horizon + 1, ft_interval))


def independent_gap(rng: random.Random, mean_gap: float) -> int:
    """Next uncoordinated checkpoint gap: exponential, at least one tick."""
    return max(1, round(rng.expovariate(1.0 / mean_gap)))
