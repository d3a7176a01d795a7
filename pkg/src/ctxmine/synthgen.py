"""Deterministic synthetic four-source datasets with planted contextual patterns.

All randomness comes from one ``random.Random(seed)`` instance (CPython's
Mersenne Twister, MT19937), consumed in a fixed order, so a given config
always produces the same bytes.

Config (JSON)::

    {"seed": 7, "n_students": 200,
     "refining": {"student": {"age": {"14-years": 1, "15-years": 2}, ...},
                  "curriculum": {"program": {"Mathematics-grade-9": 1, ...}}},
     "n_resources": 50,
     "resource_attributes": {"subject": {"Mathematics": 1, "History": 1}},
     "resource_overrides": {"R-15": {"subject": "Mathematics"}},
     "unknown_rate": 0.0,
     "noise_events_per_student": [5, 15],
     "actions": ["view"],
     "planted": [{"context": {"student.age": "14-years"},
                  "items": [{"kind": "concrete", "resource": "R-15"},
                            {"kind": "generalized", "attribute": "resource.subject",
                             "value": "Mathematics"}],
                  "carrier_fraction": 0.8}]}
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .document import item_to_json, item_from_json
from .model import Concrete, Context, Generalized, Item
from .schema import ACTIVITY_COLUMNS

ACTIVITY, STUDENT, CURRICULUM, RESOURCE = "activity", "student", "curriculum", "resource"
BASE_TIMESTAMP = 1_535_961_600  # 2018-09-03T08:00:00Z


class InfeasibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class PlantedPattern:
    context: Context
    items: tuple[Item, ...]
    carrier_fraction: float = 1.0

    def __post_init__(self) -> None:
        if not self.items:
            raise InfeasibleConfig("a planted pattern needs at least one item")
        if not 0 < self.carrier_fraction <= 1:
            raise InfeasibleConfig(f"carrier_fraction {self.carrier_fraction} not in (0, 1]")


@dataclass
class GeneratorConfig:
    seed: int = 0
    n_students: int = 10
    refining: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)
    n_resources: int = 10
    resource_attributes: dict[str, dict[str, float]] = field(default_factory=dict)
    resource_overrides: dict[str, dict[str, str]] = field(default_factory=dict)
    unknown_rate: float = 0.0
    noise_events_per_student: tuple[int, int] = (0, 5)
    actions: tuple[str, ...] = ("view",)
    planted: list[PlantedPattern] = field(default_factory=list)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> GeneratorConfig:
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise InfeasibleConfig(f"unknown config fields {sorted(unknown)}")
        planted = [
            PlantedPattern(
                Context(tuple(p.get("context", {}).items())),
                tuple(item_from_json(i) for i in p["items"]),
                float(p.get("carrier_fraction", 1.0)),
            )
            for p in raw.get("planted", [])
        ]
        lo, hi = raw.get("noise_events_per_student", (0, 5))
        return cls(
            seed=int(raw.get("seed", 0)),
            n_students=int(raw.get("n_students", 10)),
            refining={s: dict(a) for s, a in raw.get("refining", {}).items()},
            n_resources=int(raw.get("n_resources", 10)),
            resource_attributes=dict(raw.get("resource_attributes", {})),
            resource_overrides=dict(raw.get("resource_overrides", {})),
            unknown_rate=float(raw.get("unknown_rate", 0.0)),
            noise_events_per_student=(int(lo), int(hi)),
            actions=tuple(raw.get("actions", ("view",))),
            planted=planted,
        )

    @classmethod
    def from_json(cls, text: str) -> GeneratorConfig:
        return cls.from_dict(json.loads(text))


def _weighted(rng: random.Random, choices: Mapping[str, float]) -> str:
    values = list(choices)
    return rng.choices(values, weights=[choices[v] for v in values])[0]


def _check(config: GeneratorConfig) -> None:
    if config.n_students < 0 or config.n_resources < 1:
        raise InfeasibleConfig("n_students must be >= 0 and n_resources >= 1")
    lo, hi = config.noise_events_per_student
    if not 0 <= lo <= hi:
        raise InfeasibleConfig(f"bad noise range {config.noise_events_per_student}")
    if not config.actions:
        raise InfeasibleConfig("at least one action is required")
    extra = set(config.refining) - {STUDENT, CURRICULUM}
    if extra:
        raise InfeasibleConfig(f"refining sources must be {STUDENT!r}/{CURRICULUM!r}, got {sorted(extra)}")
    declared = {
        f"{src}.{attr}": set(vals)
        for src, attrs in config.refining.items()
        for attr, vals in attrs.items()
    }
    res_values = {f"{RESOURCE}.{a}": set(v) for a, v in config.resource_attributes.items()}
    pool = {f"R-{i}" for i in range(1, config.n_resources + 1)}
    for rid, attrs in config.resource_overrides.items():
        if rid not in pool:
            raise InfeasibleConfig(f"override for undeclared resource {rid}")
        for a, v in attrs.items():
            if v not in config.resource_attributes.get(a, {}):
                raise InfeasibleConfig(f"override {rid}.{a}={v} uses an undeclared value")
    for p in config.planted:
        for key, value in p.context.predicates:
            if value not in declared.get(key, ()):
                raise InfeasibleConfig(f"planted context uses undeclared {key}={value}")
        for item in p.items:
            if isinstance(item, Concrete) and item.resource not in pool:
                raise InfeasibleConfig(f"planted resource {item.resource} outside the pool")
            if isinstance(item, Generalized) and item.value not in res_values.get(item.attribute, ()):
                raise InfeasibleConfig(f"planted {item.attribute}={item.value} is undeclared")


def _write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def generate(config: GeneratorConfig, out_dir: str | Path) -> dict[str, Any]:
    """Write activity/student/curriculum/resource CSVs, ``manifest.json`` and ``ground_truth.json``.

    Returns the ground-truth document. Each planted pattern is embedded, in
    order and interleaved with noise, into exactly
    ``ceil(carrier_fraction * matching students)`` carriers.
    """
    _check(config)
    rng = random.Random(config.seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    res_attr_names = list(config.resource_attributes)
    resources = [f"R-{i}" for i in range(1, config.n_resources + 1)]
    res_attrs: dict[str, dict[str, str | None]] = {}
    for rid in resources:
        attrs = {}
        for a in res_attr_names:
            value = _weighted(rng, config.resource_attributes[a])
            if config.unknown_rate and rng.random() < config.unknown_rate:
                value = None
            attrs[a] = value
        attrs.update(config.resource_overrides.get(rid, {}))
        res_attrs[rid] = attrs

    student_attrs = list(config.refining.get(STUDENT, {}))
    curr_attrs = list(config.refining.get(CURRICULUM, {}))
    curr_weights = config.refining.get(CURRICULUM, {})
    curricula = list(itertools.product(*(list(curr_weights[a]) for a in curr_attrs)))
    curr_ids = {combo: f"C-{i}" for i, combo in enumerate(curricula, start=1)}

    width = len(str(max(config.n_students, 1)))
    students = []
    for i in range(1, config.n_students + 1):
        sid = f"s{i:0{width}d}"
        own = {a: _weighted(rng, config.refining[STUDENT][a]) for a in student_attrs}
        combo = tuple(_weighted(rng, curr_weights[a]) for a in curr_attrs)
        students.append((sid, own, combo))

    def context_of(own, combo) -> dict[str, str]:
        ctx = {f"{STUDENT}.{a}": v for a, v in own.items()}
        ctx.update({f"{CURRICULUM}.{a}": v for a, v in zip(curr_attrs, combo)})
        return ctx

    lo, hi = config.noise_events_per_student
    sequences: dict[str, list[str]] = {}
    for sid, _, _ in students:
        sequences[sid] = [rng.choice(resources) for _ in range(rng.randint(lo, hi))]

    planted_concrete = {i.resource for p in config.planted for i in p.items if isinstance(i, Concrete)}
    truth = []
    for p in config.planted:
        matching = [
            sid for sid, own, combo in students
            if all(context_of(own, combo).get(k) == v for k, v in p.context.predicates)
        ]
        if not matching and config.n_students > 0:
            raise InfeasibleConfig(f"planted context {p.context} matches no student")
        n_carriers = math.ceil(p.carrier_fraction * len(matching))
        carriers = rng.sample(matching, n_carriers)
        members = {}
        for item in p.items:
            if isinstance(item, Generalized):
                attr = item.attribute.split(".", 1)[1]
                pool = [r for r in resources if res_attrs[r].get(attr) == item.value]
                preferred = [r for r in pool if r not in planted_concrete]
                if not pool:
                    raise InfeasibleConfig(f"no resource has {item.attribute}={item.value}")
                members[item] = preferred or pool
        for sid in sorted(carriers):
            embedded = [
                i.resource if isinstance(i, Concrete) else rng.choice(members[i]) for i in p.items
            ]
            seq = sequences[sid]
            slots = set(rng.sample(range(len(seq) + len(embedded)), len(embedded)))
            merged, noise, planted = [], iter(seq), iter(embedded)
            for pos in range(len(seq) + len(embedded)):
                merged.append(next(planted) if pos in slots else next(noise))
            sequences[sid] = merged
        truth.append({
            "context": dict(p.context.predicates),
            "sequence": [item_to_json(i) for i in p.items],
            "carrier_fraction": p.carrier_fraction,
            "matching_students": len(matching),
            "min_count": n_carriers,
        })

    activity_rows = []
    for sid, _, _ in students:
        offset = rng.randint(0, 3600)
        for pos, rid in enumerate(sequences[sid]):
            stamp = BASE_TIMESTAMP + offset + 60 * pos + rng.randint(0, 59)
            activity_rows.append([sid, rid, stamp, rng.choice(config.actions)])

    used_curricula = sorted({combo for _, _, combo in students}, key=lambda c: int(curr_ids[c][2:]))
    referenced = {r for seq in sequences.values() for r in seq}

    _write_csv(out / "activity.csv", list(ACTIVITY_COLUMNS), activity_rows)
    _write_csv(
        out / "student.csv",
        ["student_id", *student_attrs, "curriculum_id"],
        [[sid, *own.values(), curr_ids[combo]] for sid, own, combo in students],
    )
    _write_csv(
        out / "curriculum.csv",
        ["curriculum_id", *curr_attrs],
        [[curr_ids[c], *c] for c in used_curricula],
    )
    _write_csv(
        out / "resource.csv",
        ["resource_id", *res_attr_names],
        [[r, *("unknown" if v is None else v for v in res_attrs[r].values())]
         for r in resources if r in referenced],
    )
    manifest = {
        "sources": [
            {"name": ACTIVITY, "role": "core", "path": "activity.csv", "columns": list(ACTIVITY_COLUMNS)},
            {"name": STUDENT, "role": "refining", "path": "student.csv", "key_column": "student_id",
             "columns": ["student_id", *student_attrs, "curriculum_id"]},
            {"name": CURRICULUM, "role": "refining", "path": "curriculum.csv",
             "key_column": "curriculum_id", "columns": ["curriculum_id", *curr_attrs]},
            {"name": RESOURCE, "role": "generalizing", "path": "resource.csv",
             "key_column": "resource_id", "columns": ["resource_id", *res_attr_names]},
        ],
        "links": [
            {"from": ACTIVITY, "to": STUDENT, "via": "student_id", "kind": "source_to_source"},
            {"from": STUDENT, "to": CURRICULUM, "via": "curriculum_id", "kind": "source_to_source"},
            {"from": ACTIVITY, "to": RESOURCE, "via": "resource_id", "kind": "element_to_source"},
        ],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    ground_truth = {"seed": config.seed, "planted": truth}
    (out / "ground_truth.json").write_text(json.dumps(ground_truth, indent=2) + "\n", encoding="utf-8")
    return ground_truth
