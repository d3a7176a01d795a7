"""Join loaded tables into a contextualized sequence database.

Each student gets one event sequence (from the core source) and a context
vector built by following refining links outward from the core. Resource
descriptions from generalizing sources are kept in a side lookup used for
attribute-level generalization.
"""

from __future__ import annotations

import dataclasses
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .ingest import SourceTable
from .schema import STUDENT_COLUMN, SchemaModel, SourceDescriptor

log = logging.getLogger(__name__)

# A via-column cell may hold several foreign keys, e.g. "C-9;C-10".
KEY_SEPARATOR = ";"


@dataclass(frozen=True)
class Event:
    resource: str
    timestamp: int
    action: str | None
    ordinal: int


@dataclass(frozen=True)
class ContextualizedSequence:
    student: str
    events: tuple[Event, ...]
    context: Mapping[str, frozenset[str]]

    def resources(self) -> list[str]:
        return [e.resource for e in self.events]


@dataclass(frozen=True)
class SequenceDatabase:
    sequences: dict[str, ContextualizedSequence]
    resource_attrs: dict[str, dict[str, str | None]] = field(default_factory=dict)
    context_keys: tuple[str, ...] = ()
    resource_keys: tuple[str, ...] = ()
    warnings: Counter = field(default_factory=Counter, compare=False)

    @property
    def attribute_domains(self) -> dict[str, frozenset[str]]:
        domains: dict[str, set[str]] = defaultdict(set)
        for seq in self.sequences.values():
            for key, values in seq.context.items():
                domains[key].update(values)
        for attrs in self.resource_attrs.values():
            for key, value in attrs.items():
                if value is not None:
                    domains[key].add(value)
        return {k: frozenset(v) for k, v in sorted(domains.items())}

    def students(self) -> list[str]:
        return list(self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)

    @classmethod
    def from_records(
        cls,
        sequences: Mapping[str, Sequence[str | tuple[str, str]]],
        contexts: Mapping[str, Mapping[str, Iterable[str]]] | None = None,
        resource_attrs: Mapping[str, Mapping[str, str | None]] | None = None,
        context_keys: Iterable[str] | None = None,
        resource_keys: Iterable[str] | None = None,
    ) -> SequenceDatabase:
        """Assemble a database directly from Python values (tests, generators).

        Sequence entries are resource ids or ``(resource, action)`` pairs;
        timestamps are the positions. Resources without a description
        resolve to all-unknown attributes.
        """
        contexts = contexts or {}
        resource_attrs = {r: dict(a) for r, a in (resource_attrs or {}).items()}
        if resource_keys is None:
            resource_keys = sorted({k for a in resource_attrs.values() for k in a})
        resource_keys = tuple(sorted(resource_keys))
        if context_keys is None:
            context_keys = {k for c in contexts.values() for k in c}
        seqs = {}
        for student in sorted(sequences):
            events = []
            for i, entry in enumerate(sequences[student]):
                resource, action = (entry, None) if isinstance(entry, str) else entry
                events.append(Event(resource, i, action, i))
                resource_attrs.setdefault(resource, {k: None for k in resource_keys})
            ctx = {k: frozenset(v) for k, v in sorted(contexts.get(student, {}).items()) if v}
            seqs[student] = ContextualizedSequence(student, tuple(events), ctx)
        for attrs in resource_attrs.values():
            for k in resource_keys:
                attrs.setdefault(k, None)
        return cls(seqs, resource_attrs, tuple(sorted(context_keys)), resource_keys)


def build_sequences(activity: SourceTable) -> dict[str, list[Event]]:
    """Group core rows per student, ordered by (timestamp, file order)."""
    grouped: dict[str, list[Event]] = defaultdict(list)
    for ordinal, (student, resource, stamp, action) in enumerate(activity.rows):
        grouped[student].append(Event(resource, stamp, action, ordinal))
    return {
        student: sorted(events, key=lambda e: (e.timestamp, e.ordinal))
        for student, events in sorted(grouped.items())
    }


def _attribute_columns(descriptor: SourceDescriptor, schema: SchemaModel) -> list[str]:
    """Columns that carry attributes: not the key and not a foreign-key column."""
    via = {l.via_column for l in schema.links_from(descriptor.name)}
    return [c for c in descriptor.columns if c != descriptor.key_column and c not in via]


def context_keys_of(schema: SchemaModel) -> tuple[str, ...]:
    keys = []
    for s in schema.by_role("refining"):
        keys.extend(s.namespaced(c) for c in _attribute_columns(s, schema))
    return tuple(sorted(keys))


def attach_context(
    sequences: Mapping[str, Sequence[Event]],
    schema: SchemaModel,
    tables: Mapping[str, SourceTable],
) -> SequenceDatabase:
    warnings: Counter = Counter()
    core = schema.core.name
    attr_cols = {
        s.name: [(s.columns.index(c), s.namespaced(c)) for c in _attribute_columns(s, schema)]
        for s in schema.by_role("refining")
    }

    def follow(source: str, row_keys: dict[str, list[str]], assignments, visited) -> None:
        for link in schema.links_from(source):
            if link.kind != "source_to_source":
                continue
            table = tables[link.to_source]
            for key in row_keys.get(link.via_column, ()):
                if (link.to_source, key) in visited:
                    continue
                visited.add((link.to_source, key))
                row = table.lookup(key)
                if row is None:
                    warnings[f"BrokenLink {link.label()}"] += 1
                    continue
                for idx, name in attr_cols[link.to_source]:
                    if row[idx] is not None:
                        assignments[name].add(row[idx])
                onward = {}
                for nxt in schema.links_from(link.to_source):
                    cell = row[table.column(nxt.via_column)]
                    if cell is not None:
                        onward[nxt.via_column] = [
                            k.strip() for k in cell.split(KEY_SEPARATOR) if k.strip()
                        ]
                follow(link.to_source, onward, assignments, visited)

    seqs = {}
    for student, events in sequences.items():
        assignments: dict[str, set[str]] = defaultdict(set)
        follow(core, {STUDENT_COLUMN: [student]}, assignments, set())
        ctx = {k: frozenset(v) for k, v in sorted(assignments.items()) if v}
        seqs[student] = ContextualizedSequence(student, tuple(events), ctx)
    return SequenceDatabase(seqs, {}, context_keys_of(schema), (), warnings)


def resolve_resource_attributes(
    db: SequenceDatabase, resource_tables: Sequence[SourceTable]
) -> SequenceDatabase:
    """Attach resource descriptions; undescribed resources get all-unknown attributes."""
    keys: list[str] = []
    per_table = []
    for table in resource_tables:
        d = table.descriptor
        cols = [(i, d.namespaced(c)) for i, c in enumerate(d.columns) if c != d.key_column]
        keys.extend(name for _, name in cols)
        per_table.append((table, cols))

    attrs: dict[str, dict[str, str | None]] = {}
    for table, cols in per_table:
        for key, idx in table.key_index.items():
            row = table.rows[idx]
            attrs.setdefault(key, {}).update({name: row[i] for i, name in cols})

    warnings = Counter(db.warnings)
    referenced = sorted({e.resource for s in db.sequences.values() for e in s.events})
    for resource in referenced:
        if resource not in attrs and per_table:
            warnings["UnresolvedResource"] += 1
        entry = attrs.setdefault(resource, {})
        for k in keys:
            entry.setdefault(k, None)
    ordered = {r: dict(sorted(attrs[r].items())) for r in sorted(attrs)}
    return dataclasses.replace(db, resource_attrs=ordered, resource_keys=tuple(sorted(keys)),
                               warnings=warnings)


def build_database(schema: SchemaModel, tables: Mapping[str, SourceTable]) -> SequenceDatabase:
    sequences = build_sequences(tables[schema.core.name])
    db = attach_context(sequences, schema, tables)
    generalizing = []
    for link in schema.links_from(schema.core.name):
        if link.kind == "element_to_source":
            generalizing.append(tables[link.to_source])
    db = resolve_resource_attributes(db, generalizing)
    for message, count in sorted(db.warnings.items()):
        log.warning("%s: %d occurrence(s)", message, count)
    return db
