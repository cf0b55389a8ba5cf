"""Python interface to the Sapiens Chain marketplace simulator.

The heavy lifting happens in the compiled `_core` extension; this package
adds thin parsing conveniences on top of the JSON surfaces the core emits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

try:
    from ._core import (  # type: ignore[attr-defined]
        RunResult as _RawRunResult,
        SimulationError,
        find_work_nonce,
        replay_balances,
        run_scenario as _run_scenario,
        run_scenario_file as _run_scenario_file,
        sha256_hex,
        validate_scenario,
        verify_ledger,
        __version__,
    )
except ImportError:  # running against a build tree where _core is top-level
    from _core import (  # type: ignore[no-redef]
        RunResult as _RawRunResult,
        SimulationError,
        find_work_nonce,
        replay_balances,
        run_scenario as _run_scenario,
        run_scenario_file as _run_scenario_file,
        sha256_hex,
        validate_scenario,
        verify_ledger,
        __version__,
    )

__all__ = [
    "RunOutput",
    "SimulationError",
    "find_work_nonce",
    "replay_balances",
    "run_scenario",
    "run_scenario_file",
    "sha256_hex",
    "validate_scenario",
    "verify_ledger",
    "__version__",
]


@dataclass
class RunOutput:
    """Parsed results of one simulation run."""

    metrics: Dict[str, Any]
    ledger_text: str
    traces: Dict[str, Any]
    reports: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    balances: Dict[str, int] = field(default_factory=dict)
    mint_counter: int = 0

    @classmethod
    def _from_raw(cls, raw: "_RawRunResult") -> "RunOutput":
        return cls(
            metrics=json.loads(raw.metrics_json),
            ledger_text=raw.ledger_text,
            traces=json.loads(raw.traces_json)["events"],
            reports={task: json.loads(text) for task, text in raw.reports_json.items()},
            balances=dict(raw.balances),
            mint_counter=raw.mint_counter,
        )


def run_scenario(
    text: str, *, seed: Optional[int] = None, shuffle_salt: int = 0
) -> RunOutput:
    """Run a scenario given as JSON text."""
    return RunOutput._from_raw(_run_scenario(text, seed, shuffle_salt))


def run_scenario_file(
    path: str, *, seed: Optional[int] = None, shuffle_salt: int = 0
) -> RunOutput:
    """Run a scenario JSON file."""
    return RunOutput._from_raw(_run_scenario_file(path, seed, shuffle_salt))
