"""Node-health state machines, delay classification, and interval growth.

The Byzantine-detection machine consumes a (delay class, checksum) pair per
monitor round.  Inputs are only "present" when the delay is high/extreme or
the checksum errored; a low/normal clean round is the absent input, which
recovers a suspect node.  A bad checksum is decisive: it always fail-stops
the node.  Two further machines give the checkpoint-status and performance
views of the same node lifecycle.

Monitoring gaps grow while a node stays healthy (arithmetically by one base
interval per round, or doubling under the geometric policy) and collapse
back to the base interval on suspicion.  Three consecutive suspect rounds
replace the node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .config import SimConfig
from .model import (
    ChecksumResult,
    CheckpointStatus,
    DelayClass,
    NodeState,
    PerformanceClass,
    VirtualNode,
)


class Action(Enum):
    NONE = "none"
    REPLACE_NODE = "replace"
    ESCALATE = "escalate"


@dataclass(frozen=True)
class MonitorObservation:
    vn_id: int
    time: int
    delay: float                 # measured delay variation, ticks
    delay_class: DelayClass
    checksum: ChecksumResult


@dataclass(frozen=True)
class FsmDecision:
    next_state: NodeState
    next_gap: int
    action: Action
    suspect_rounds: int          # streak value after this round


def classify_delay(delay: float, sla_bound: float,
                   thresholds: tuple[float, float, float] = (0.25, 1.0, 2.0)) -> DelayClass:
    """Map a measured delay variation to its class relative to the SLA bound."""
    if sla_bound <= 0:
        raise ValueError("sla_bound must be positive")
    t_low, t_normal, t_high = thresholds
    if not (0 < t_low < t_normal < t_high):
        raise ValueError("thresholds must be strictly increasing and positive")
    if delay <= t_low * sla_bound:
        return DelayClass.LOW
    if delay <= t_normal * sla_bound:
        return DelayClass.NORMAL
    if delay <= t_high * sla_bound:
        return DelayClass.HIGH
    return DelayClass.EXTREME


def checksum_oracle(contaminated: bool, detect_prob: float, rng: random.Random) -> ChecksumResult:
    """Probabilistic stand-in for the hash-challenge check.

    Clean nodes never produce a false positive.  A contaminated node is
    flagged with probability ``detect_prob``; the engine surfaces misses as
    high delay variation instead.
    """
    if not 0.0 <= detect_prob <= 1.0:
        raise ValueError("detect_prob out of range [0, 1]")
    if not contaminated:
        return ChecksumResult.NO_ERROR
    if rng.random() < detect_prob:
        return ChecksumResult.ERROR
    return ChecksumResult.NO_ERROR


def byzantine_fsm_step(state: NodeState, d: DelayClass, c: ChecksumResult) -> NodeState:
    """One step of the detection machine.

    An errored checksum is decisive regardless of delay; extreme delay is
    fatal on its own; high delay suspends judgement (suspect state); a
    low/normal clean round returns the node to fail-safe.
    """
    if state is NodeState.FAIL_STOP:
        return NodeState.FAIL_STOP
    if c is ChecksumResult.ERROR:
        return NodeState.FAIL_STOP
    if d is DelayClass.EXTREME:
        return NodeState.FAIL_STOP
    if d is DelayClass.HIGH:
        return NodeState.BYZANTINE
    return NodeState.FAIL_SAFE


def checkpoint_status_fsm_step(state: NodeState, s: CheckpointStatus) -> NodeState:
    """Node-state view by the checkpoint activity of the round."""
    if state is NodeState.FAIL_STOP:
        return NodeState.FAIL_STOP
    if s is CheckpointStatus.PREVIOUS:
        return NodeState.BYZANTINE
    if s is CheckpointStatus.COMPLETE:
        return NodeState.FAIL_STOP
    return NodeState.FAIL_SAFE    # NULL or CONFIRMED


def performance_fsm_step(state: NodeState, p: PerformanceClass) -> NodeState:
    """Node-state view by coarse performance; undefined for suspect nodes."""
    if state is NodeState.FAIL_STOP:
        return NodeState.FAIL_STOP
    if state is NodeState.BYZANTINE:
        raise ValueError("state nullified under performance FSM")
    if p is PerformanceClass.PERFORMING:
        return NodeState.FAIL_SAFE
    return NodeState.FAIL_STOP    # NOT_PERFORMING or WARY


def next_interval(vn: VirtualNode, post_state: NodeState, cfg: SimConfig) -> FsmDecision:
    """Update the monitoring gap and suspicion streak after an FSM step.

    Healthy rounds stretch the gap (and clear the streak); suspect rounds
    collapse it to the base interval and lengthen the streak, replacing the
    node once the streak hits the configured threshold.  A fail-stopped node
    is always replaced, with the replacement starting at the base gap.
    """
    j = cfg.base_interval
    if post_state is NodeState.FAIL_SAFE:
        if cfg.interval_growth == "geometric":
            gap = vn.gap * 2
        else:
            gap = vn.gap + j
        return FsmDecision(post_state, gap, Action.NONE, 0)
    if post_state is NodeState.BYZANTINE:
        streak = vn.suspect_rounds + 1
        if streak >= cfg.suspect_threshold:
            return FsmDecision(post_state, j, Action.REPLACE_NODE, streak)
        return FsmDecision(post_state, j, Action.ESCALATE, streak)
    # FAIL_STOP: shut down, replacement monitors at the base gap
    return FsmDecision(post_state, j, Action.REPLACE_NODE, vn.suspect_rounds)


# -- fsm-trace conformance format --------------------------------------------
#
# One step per line: ``state input... -> next_state``.  Two input tokens
# (delay class, checksum) address the Byzantine machine; one token is
# dispatched by vocabulary to the checkpoint-status or performance machine.

from .model import (  # noqa: E402  (trace vocabulary)
    CHECKSUM_TOKENS,
    DELAY_TOKENS,
    PERFORMANCE_TOKENS,
    STATE_TOKENS,
    STATUS_TOKENS,
)


class TraceFormatError(ValueError):
    pass


def replay_trace_line(line: str, lineno: int = 0) -> tuple[NodeState, NodeState]:
    """Replay one trace line; returns (expected, actual) next states."""
    parts = line.split()
    if len(parts) < 4 or parts[-2] != "->":
        raise TraceFormatError(f"line {lineno}: expected 'state input... -> next_state'")
    state_tok, *inputs, arrow, next_tok = parts
    if state_tok not in STATE_TOKENS or next_tok not in STATE_TOKENS:
        raise TraceFormatError(f"line {lineno}: unknown state token")
    state = STATE_TOKENS[state_tok]
    expected = STATE_TOKENS[next_tok]
    if len(inputs) == 2:
        d_tok, c_tok = inputs
        if d_tok not in DELAY_TOKENS or c_tok not in CHECKSUM_TOKENS:
            raise TraceFormatError(f"line {lineno}: unknown delay/checksum token")
        actual = byzantine_fsm_step(state, DELAY_TOKENS[d_tok], CHECKSUM_TOKENS[c_tok])
    elif len(inputs) == 1:
        tok = inputs[0]
        if tok in STATUS_TOKENS:
            actual = checkpoint_status_fsm_step(state, STATUS_TOKENS[tok])
        elif tok in PERFORMANCE_TOKENS:
            actual = performance_fsm_step(state, PERFORMANCE_TOKENS[tok])
        else:
            raise TraceFormatError(f"line {lineno}: unknown input token {tok!r}")
    else:
        raise TraceFormatError(f"line {lineno}: expected one or two input tokens")
    return expected, actual


def check_trace(lines) -> tuple[int, int | None]:
    """Replay a whole trace; returns (steps checked, first divergent line or None)."""
    steps = 0
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        expected, actual = replay_trace_line(text, lineno)
        steps += 1
        if expected is not actual:
            return steps, lineno
    return steps, None
