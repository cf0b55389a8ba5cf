#!/usr/bin/env python3
"""Regenerates vuln_count.json: one website carrying 368 planted
vulnerabilities, 179 of them high severity, all certainly detectable."""

import json
import pathlib

HIGH = 179
LOW = 189  # 368 total

planted = []
for i in range(HIGH):
    planted.append(
        {
            "vuln_id": f"vh{i:03d}",
            "pattern": "sqli",
            "severity": "high",
            "detectability": 1.0,
        }
    )
for i in range(LOW):
    planted.append(
        {
            "vuln_id": f"vl{i:03d}",
            "pattern": "weak_tls",
            "severity": "low",
            "detectability": 1.0,
        }
    )

scenario = {
    "schema": 1,
    "run_seed": 7,
    "params": {
        "segments": 4,
        "redundancy": 2,
        "quorum": 3,
        "mint_enabled": True,
        "rewards": {
            "poc_adopted": 1,
            "poc_audit_adopted": 1,
            "vuln_adopted": 1,
            "vuln_audit_adopted": 1,
            "audit_service_complete": 1,
            "called_poc": 1,
        },
    },
    "nodes": [
        {"node_id": "fog0", "kind": "fog"},
        {"node_id": "u1", "kind": "ordinary", "roles": ["user"], "position": [0.5, 0.5]},
        {"node_id": "c1", "kind": "ordinary", "roles": ["cro"], "position": [0.4, 0.5]},
        {"node_id": "c2", "kind": "ordinary", "roles": ["cro"], "position": [0.6, 0.5]},
        {"node_id": "d0", "kind": "ordinary", "roles": ["pocd"], "position": [0.2, 0.2]},
        {"node_id": "d1", "kind": "ordinary", "roles": ["pocd"], "position": [0.2, 0.3]},
        {"node_id": "d2", "kind": "ordinary", "roles": ["pocd"], "position": [0.2, 0.4]},
        {"node_id": "d3", "kind": "ordinary", "roles": ["pocd"], "position": [0.2, 0.5]},
    ],
    "initial_balances": {"u1": 1000},
    "pocs": [
        {"time": 0, "poc_id": "p_high", "author": "d0", "pattern": "sqli"},
        {"time": 0, "poc_id": "p_low", "author": "d0", "pattern": "weak_tls"},
    ],
    "tasks": [
        {
            "time": 3,
            "task_id": "t1",
            "user": "u1",
            "task_type": "website",
            "service": "automatic",
            "escrow": 400,
            "targets": [{"target_id": "site1", "planted": planted}],
        }
    ],
}

out = pathlib.Path(__file__).with_name("vuln_count.json")
out.write_text(json.dumps(scenario, indent=1) + "\n")
print(f"wrote {out} with {len(planted)} planted vulnerabilities")
