"""Simulated vehicular blockchain: benchmarks, scenarios, ledger tools."""

import json as _json

from ._core import (
    BenchAborted,
    ScenarioAssertionFailed,
    chain_json,
    gen_identities_file,
    node_summary_json,
    plan_route,
    run_adaptive_guidance,
    run_fault_bench,
    run_notify_bench,
    run_throughput_bench,
    state_json,
    validate_chain_file,
)

__version__ = "0.1.0"


def chain_info(path):
    """Decoded ledger file as a dict."""
    return _json.loads(chain_json(path))


def state_info(path):
    """Replayed world state of a ledger file as a dict."""
    return _json.loads(state_json(path))


def node_summary(path):
    """Node-level summary of a ledger file as a dict."""
    return _json.loads(node_summary_json(path))


__all__ = [
    "BenchAborted",
    "ScenarioAssertionFailed",
    "chain_info",
    "chain_json",
    "gen_identities_file",
    "node_summary",
    "node_summary_json",
    "plan_route",
    "run_adaptive_guidance",
    "run_fault_bench",
    "run_notify_bench",
    "run_throughput_bench",
    "state_info",
    "state_json",
    "validate_chain_file",
]
