"""Scenario configuration files, batch execution, and lower-bound emission.

A config document is strict JSON: unknown fields are rejected, every field is
type-checked, and all randomness comes from the seeds listed in the file, so
re-running a config reproduces identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field

from .bitsets import bits
from .errors import InputError
from .oracles import validate_trace
from .simulation import ADVERSARIES, PROTOCOLS, Scenario, finish_summary, run_scenario
from .spaces import (
    ALGEBRAIC,
    GEODESIC,
    MONOPHONIC,
    BlockingInstance,
    ConvexitySpace,
    verify_blocking_instance,
)

SCHEMA_VERSION = 1

SUMMARY_COLUMNS = (
    "scenario_id", "seed", "protocol", "n", "f", "compliant", "rounds",
    "decided", "agreement_metric", "agreement_ok", "validity_ok", "fallback_count",
)

_SCENARIO_FIELDS = {
    "id": str,
    "space": dict,
    "protocol": str,
    "n": int,
    "f": int,
    "faulty": list,
    "inputs": dict,
    "adversary": dict,
    "round_cap": int,
    "agreement_distance": int,
    "seeds": list,
}
_SCENARIO_REQUIRED = ("id", "space", "protocol", "n", "f", "faulty", "inputs",
                      "adversary", "seeds")
_SPACE_FIELDS = {"kind": str, "hull": str, "file": str, "text": str}
_ADVERSARY_FIELDS = {"policy": str, "params": dict}


def _check_fields(doc: dict, allowed: dict, required, where: str) -> None:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise InputError(f"unknown fields {sorted(unknown)} in {where}")
    for name in required:
        if name not in doc:
            raise InputError(f"missing field {name!r} in {where}")
    for name, value in doc.items():
        if not isinstance(value, allowed[name]):
            raise InputError(f"field {name!r} in {where} must be {allowed[name].__name__}")


@dataclass
class ScenarioConfig:
    """One config entry expanded over its seed list."""

    scenario_id: str
    space_kind: str
    hull_kind: str
    instance_text: str
    protocol: str
    n: int
    f: int
    faulty: tuple[int, ...]
    inputs: dict[int, int]
    adversary: str
    adversary_params: dict
    seeds: tuple[int, ...]
    round_cap: int = 64
    agreement_distance: int = 1

    def scenario(self, seed: int) -> Scenario:
        return Scenario(
            scenario_id=self.scenario_id,
            space_kind=self.space_kind,
            hull_kind=self.hull_kind,
            instance_text=self.instance_text,
            protocol=self.protocol,
            n=self.n,
            f=self.f,
            faulty=self.faulty,
            inputs=self.inputs,
            adversary=self.adversary,
            adversary_params=self.adversary_params,
            seed=seed,
            round_cap=self.round_cap,
            agreement_distance=self.agreement_distance,
        )

    def to_dict(self) -> dict:
        return {
            "id": self.scenario_id,
            "space": {"kind": self.space_kind, "hull": _hull_name(self.hull_kind),
                      "text": self.instance_text},
            "protocol": self.protocol,
            "n": self.n,
            "f": self.f,
            "faulty": list(self.faulty),
            "inputs": {str(k): v for k, v in sorted(self.inputs.items())},
            "adversary": {"policy": self.adversary, "params": self.adversary_params},
            "round_cap": self.round_cap,
            "agreement_distance": self.agreement_distance,
            "seeds": list(self.seeds),
        }


_HULL_NAMES = {"monophonic": MONOPHONIC, "geodesic": GEODESIC, "algebraic": ALGEBRAIC}


def _hull_name(kind: str) -> str:
    for short, full in _HULL_NAMES.items():
        if full == kind:
            return short
    raise InputError(f"unknown hull kind {kind!r}")


def parse_scenario_entry(doc: dict, base_dir: str = ".") -> ScenarioConfig:
    _check_fields(doc, _SCENARIO_FIELDS, _SCENARIO_REQUIRED, f"scenario {doc.get('id')!r}")
    space = doc["space"]
    _check_fields(space, _SPACE_FIELDS, ("kind", "hull"), "space")
    if ("file" in space) == ("text" in space):
        raise InputError("space needs exactly one of 'file' or 'text'")
    hull = space["hull"]
    if hull not in _HULL_NAMES:
        raise InputError(f"hull must be one of {sorted(_HULL_NAMES)}")
    if space["kind"] not in ("graph", "semilattice"):
        raise InputError("space kind must be 'graph' or 'semilattice'")
    if "file" in space:
        with open(os.path.join(base_dir, space["file"]), encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = space["text"]
    adv = doc["adversary"]
    _check_fields(adv, _ADVERSARY_FIELDS, ("policy",), "adversary")
    if adv["policy"] not in ADVERSARIES:
        raise InputError(f"adversary must be one of {ADVERSARIES}")
    if doc["protocol"] not in PROTOCOLS:
        raise InputError(f"protocol must be one of {PROTOCOLS}")
    if not doc["seeds"] or not all(isinstance(s, int) for s in doc["seeds"]):
        raise InputError("seeds must be a nonempty list of integers")
    inputs = {}
    for key, value in doc["inputs"].items():
        if not isinstance(value, int):
            raise InputError("input values must be integers")
        inputs[int(key)] = value
    return ScenarioConfig(
        scenario_id=doc["id"],
        space_kind=space["kind"],
        hull_kind=_HULL_NAMES[hull],
        instance_text=text,
        protocol=doc["protocol"],
        n=doc["n"],
        f=doc["f"],
        faulty=tuple(sorted(int(x) for x in doc["faulty"])),
        inputs=inputs,
        adversary=adv["policy"],
        adversary_params=adv.get("params", {}),
        seeds=tuple(doc["seeds"]),
        round_cap=doc.get("round_cap", 64),
        agreement_distance=doc.get("agreement_distance", 1),
    )


def parse_config(text: str, base_dir: str = ".") -> list[ScenarioConfig]:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise InputError("config root must be an object")
    _check_fields(doc, {"schema_version": int, "scenarios": list},
                  ("schema_version", "scenarios"), "config root")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {doc['schema_version']}")
    return [parse_scenario_entry(entry, base_dir) for entry in doc["scenarios"]]


def format_config(configs: list[ScenarioConfig]) -> str:
    return json.dumps(
        {"schema_version": SCHEMA_VERSION, "scenarios": [c.to_dict() for c in configs]},
        indent=2, sort_keys=True,
    ) + "\n"


# ---------------------------------------------------------------------------
# batch execution

@dataclass
class BatchResult:
    rows: list[dict] = field(default_factory=list)
    exit_code: int = 0

    def summary_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row)
        return out.getvalue()


def run_batch(configs: list[ScenarioConfig], out_dir: str | None = None,
              write_traces: bool = True) -> BatchResult:
    """Execute every (scenario, seed) pair; exit code 0 iff every compliant
    run decided with validity and agreement intact."""
    result = BatchResult()
    oracle_caches: dict[str, dict] = {}
    for cfg in configs:
        for seed in cfg.seeds:
            scenario = cfg.scenario(seed)
            trace = run_scenario(scenario)
            cache = oracle_caches.setdefault(cfg.instance_text, {})
            report = validate_trace(trace, scenario, cache)
            compliant = scenario.compliant()
            finish_summary(trace, scenario, report.agreement_metric, report.validity_ok)
            row = {
                "scenario_id": cfg.scenario_id,
                "seed": seed,
                "protocol": cfg.protocol,
                "n": cfg.n,
                "f": cfg.f,
                "compliant": compliant,
                "rounds": trace.rounds_used,
                "decided": report.decided,
                "agreement_metric": report.agreement_metric,
                "agreement_ok": report.agreement_ok,
                "validity_ok": report.validity_ok,
                "fallback_count": trace.fallback_count,
            }
            result.rows.append(row)
            if compliant and not (report.decided and report.agreement_ok and report.validity_ok):
                result.exit_code = 1
            if out_dir and write_traces:
                _atomic_write(
                    os.path.join(out_dir, f"{cfg.scenario_id}_{seed}.jsonl"),
                    trace.to_jsonl(),
                )
    if out_dir:
        _atomic_write(os.path.join(out_dir, "summary.csv"), result.summary_csv())
    return result


def _atomic_write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# lower-bound scenario emission

def emit_lower_bound_scenario(space: ConvexitySpace, instance_text: str,
                              space_kind: str, blocking: BlockingInstance,
                              f: int, protocol: str | None = None) -> ScenarioConfig:
    """Partition scenario below the resilience threshold: m correct groups of
    size f hold the blocking members, one group of f starts crashed, and the
    adversary replays assigned inputs before corrupting along mu.

    For manual experimentation; no automated pass/fail attaches to it.
    """
    if f < 1:
        raise InputError("lower-bound scenarios need f >= 1")
    if not verify_blocking_instance(space, blocking):
        raise InputError("blocking instance failed verification")
    m = blocking.m
    n = (m + 1) * f
    members = list(blocking.members)
    inputs = {}
    assigned = {}
    for group, value in enumerate(members):
        for slot in range(f):
            pid = group * f + slot
            inputs[pid] = value
            assigned[pid] = value
    crashed = tuple(range(m * f, n))
    if protocol is None:
        if space.kind == ALGEBRAIC:
            protocol = "lattice"
        elif space.backing.is_tree():
            protocol = "tree"
        else:
            protocol = "chordal"
    mu_doc = {f"{x},{y}": b for (x, y), b in sorted(blocking.mu.items())}
    correct_inputs = {pid: inputs[pid] for pid in range(n) if pid not in crashed}
    return ScenarioConfig(
        scenario_id=f"lower-bound-m{m}-f{f}",
        space_kind=space_kind,
        hull_kind=space.kind,
        instance_text=instance_text,
        protocol=protocol,
        n=n,
        f=f,
        faulty=crashed,
        inputs=correct_inputs,
        adversary="replay-then-corrupt",
        adversary_params={
            "assigned": {str(k): v for k, v in sorted(assigned.items())},
            "crashed": [int(c) for c in crashed],
            "mu": mu_doc,
            "corrupt_after": 2,
        },
        seeds=(0,),
        round_cap=32,
    )
