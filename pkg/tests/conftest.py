from __future__ import annotations

import pytest

from bftsim.config import validate_config


@pytest.fixture
def base_cfg():
    """Small single-node scenario used by engine-level tests."""
    return validate_config({
        "task_count": 1, "job_count": 1, "server_count": 1, "server_capacity": 1,
        "demand_min": 2000, "demand_max": 2000, "horizon": 1000,
        "latency_mean_min": 5, "latency_mean_max": 5, "latency_sigma": 2,
        "sla_bound": 100,
    })


def cluster_cfg(**overrides):
    raw = {
        "task_count": 12, "job_count": 3, "server_count": 4, "server_capacity": 4,
        "demand_min": 300, "demand_max": 400, "horizon": 600, "sla_bound": 50,
        "latency_mean_min": 5, "latency_mean_max": 15, "latency_sigma": 3,
        "seed": 11,
    }
    raw.update(overrides)
    return validate_config(raw)
