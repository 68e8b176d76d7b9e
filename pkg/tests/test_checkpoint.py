import random

import pytest

from bftsim.checkpoint import (
    CheckpointStore,
    TccActionKind,
    independent_gap,
    rollback_loss,
    sync_checkpoint_times,
    tcc_round,
)
from bftsim.model import CheckpointStatus, Job, NodeState, VirtualNode


def _vn(vn_id=1, contaminated=False, state=NodeState.FAIL_SAFE):
    return VirtualNode(vn_id=vn_id, server_id=1, state=state,
                       contaminated=contaminated)


def test_tcc_grown_gap_confirms_and_stretches_interval():
    job = Job(job_id=0)
    action = tcc_round(_vn(), ft_interval=10, gap=20, job=job, migration_threshold=5)
    assert action.kind is TccActionKind.CONFIRMED_CHECKPOINT
    assert action.new_ft_interval == 20
    assert job.restart_count == 0


def test_tcc_collapsed_gap_restarts_and_counts():
    job = Job(job_id=0)
    action = tcc_round(_vn(), ft_interval=20, gap=10, job=job, migration_threshold=5)
    assert action.kind is TccActionKind.PREVIOUS_RESTART
    assert job.restart_count == 1


def test_tcc_migrates_past_threshold():
    job = Job(job_id=0, restart_count=5)
    action = tcc_round(_vn(), ft_interval=20, gap=10, job=job, migration_threshold=5)
    assert action.kind is TccActionKind.JOB_MIGRATION
    assert job.restart_count == 0


def test_tcc_exactly_at_threshold_still_restarts():
    job = Job(job_id=0, restart_count=4)
    action = tcc_round(_vn(), ft_interval=20, gap=10, job=job, migration_threshold=5)
    assert action.kind is TccActionKind.PREVIOUS_RESTART
    assert job.restart_count == 5


def test_store_take_and_lineage_lookup():
    store = CheckpointStore()
    c1 = store.take(_vn(1), time=30, status=CheckpointStatus.CONFIRMED,
                    cost=1, progress=28, lineage_id=7)
    c2 = store.take(_vn(2), time=60, status=CheckpointStatus.CONFIRMED,
                    cost=1, progress=57, lineage_id=7)
    assert store.latest(7) is c2
    assert store.latest_clean(7) is c2
    assert store.latest_clean(7, before=40) is c1


def test_store_skips_tainted_images():
    store = CheckpointStore()
    clean = store.take(_vn(1), 30, CheckpointStatus.CONFIRMED, 1, 28, lineage_id=7)
    store.take(_vn(1, contaminated=True), 60, CheckpointStatus.CONFIRMED, 1, 57,
               lineage_id=7)
    assert store.latest_clean(7) is clean
    assert store.latest(7).tainted


def test_store_rejects_fail_stopped_node():
    store = CheckpointStore()
    with pytest.raises(ValueError, match="fail-stop"):
        store.take(_vn(1, state=NodeState.FAIL_STOP), 10,
                   CheckpointStatus.CONFIRMED, 1, 5)


def test_store_ledger_csv():
    store = CheckpointStore()
    store.take(_vn(4), 30, CheckpointStatus.CONFIRMED, 1, 28, lineage_id=4)
    store.take(_vn(5), 100, CheckpointStatus.COMPLETE, 1, 90, scope="job",
               scope_id=2, lineage_id=5)
    lines = store.ledger_csv().strip().splitlines()
    assert lines[0] == "ckpt_id,scope,time,status,size,cost"
    assert lines[1] == "0,vn:v4,30,confirmed,1,1"
    assert lines[2] == "1,job:j2,100,complete,1,1"


def test_rollback_loss_arithmetic():
    store = CheckpointStore()
    ckpt = store.take(_vn(1), 30, CheckpointStatus.CONFIRMED, 1, 30, lineage_id=1)
    assert rollback_loss(50, ckpt, now=50) == 20
    assert rollback_loss(30, ckpt, now=30) == 0
    assert rollback_loss(45, None, now=45) == 45   # no image: back to the start


def test_rollback_rejects_future_target():
    store = CheckpointStore()
    ckpt = store.take(_vn(1), 80, CheckpointStatus.CONFIRMED, 1, 70, lineage_id=1)
    with pytest.raises(ValueError, match="newer"):
        rollback_loss(75, ckpt, now=50)


def test_sync_round_counts():
    assert len(sync_checkpoint_times(10, 100)) == 10          # one job round per interval
    assert len(sync_checkpoint_times(10, 100)) * 4 == 40      # four nodes per round
    assert sync_checkpoint_times(10, 5) == []                 # horizon below interval
    assert sync_checkpoint_times(1, 5) == [1, 2, 3, 4, 5]


def test_independent_gaps_deterministic_and_positive():
    a = [independent_gap(random.Random(42), 10) for _ in range(50)]
    b = [independent_gap(random.Random(42), 10) for _ in range(50)]
    assert a == b
    assert all(g >= 1 for g in a)
    tight = [independent_gap(random.Random(7), 1e-9) for _ in range(20)]
    assert tight == [1] * 20    # degenerate rate caps at one checkpoint per tick
