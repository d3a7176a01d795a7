"""Multi-source schema: source descriptors, roles and the star-shaped link graph.

A manifest is a JSON document::

    {"sources": [{"name": ..., "role": "core|refining|generalizing",
                  "path": ..., "key_column": ..., "columns": [...]}],
     "links": [{"from": ..., "to": ..., "via": ..., "kind": ...}]}

The core source is the activity log. Refining sources hang off it through
``source_to_source`` links and supply context attributes; generalizing
sources describe the elements (resource ids) of activity rows through
``element_to_source`` links.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

ROLES = ("core", "refining", "generalizing")
LINK_KINDS = ("source_to_source", "element_to_source")
ACTIVITY_COLUMNS = ("student_id", "resource_id", "timestamp", "action")
STUDENT_COLUMN, ELEMENT_COLUMN = ACTIVITY_COLUMNS[0], ACTIVITY_COLUMNS[1]


class SchemaError(Exception):
    """Base class for manifest rejections; ``offender`` names a source or link."""

    code = "SchemaError"

    def __init__(self, offender: str, detail: str) -> None:
        self.offender = offender
        self.detail = detail
        super().__init__(f"{self.code}: {offender}: {detail}")


class ManifestFormatError(Exception):
    """The manifest is not parseable JSON at all."""


class InvalidManifest(SchemaError):
    code = "InvalidManifest"


class DuplicateSource(SchemaError):
    code = "DuplicateSource"


class InvalidSource(SchemaError):
    code = "InvalidSource"


class ZeroOrMultipleCoreSources(SchemaError):
    code = "ZeroOrMultipleCoreSources"


class DanglingLink(SchemaError):
    code = "DanglingLink"


class InvalidLink(SchemaError):
    code = "InvalidLink"


class CyclicLinkGraph(SchemaError):
    code = "CyclicLinkGraph"


class UnreachableSource(SchemaError):
    code = "UnreachableSource"


@dataclass(frozen=True)
class SourceDescriptor:
    name: str
    role: str
    path: str
    columns: tuple[str, ...]
    key_column: str | None = None

    def namespaced(self, column: str) -> str:
        return f"{self.name}.{column}"


@dataclass(frozen=True)
class LinkDescriptor:
    from_source: str
    to_source: str
    via_column: str
    kind: str

    def label(self) -> str:
        return f"{self.from_source}->{self.to_source} via {self.via_column}"


@dataclass(frozen=True)
class SchemaModel:
    sources: tuple[SourceDescriptor, ...]
    links: tuple[LinkDescriptor, ...]
    base_dir: Path | None = field(default=None, compare=False)

    @property
    def core(self) -> SourceDescriptor:
        return next(s for s in self.sources if s.role == "core")

    def source(self, name: str) -> SourceDescriptor:
        for s in self.sources:
            if s.name == name:
                return s
        raise KeyError(name)

    def by_role(self, role: str) -> list[SourceDescriptor]:
        return [s for s in self.sources if s.role == role]

    def links_from(self, name: str) -> list[LinkDescriptor]:
        return [link for link in self.links if link.from_source == name]

    def resolve_path(self, source: SourceDescriptor) -> Path:
        path = Path(source.path)
        if not path.is_absolute() and self.base_dir is not None:
            path = self.base_dir / path
        return path

    def to_manifest(self) -> str:
        doc = {
            "sources": [_source_json(s) for s in self.sources],
            "links": [
                {"from": l.from_source, "to": l.to_source, "via": l.via_column, "kind": l.kind}
                for l in self.links
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def _source_json(s: SourceDescriptor) -> dict[str, Any]:
    out: dict[str, Any] = {"name": s.name, "role": s.role, "path": s.path}
    if s.key_column is not None:
        out["key_column"] = s.key_column
    out["columns"] = list(s.columns)
    return out


def _require(obj: dict, key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise InvalidManifest(where, f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise InvalidManifest(where, f"field {key!r} must be {kind.__name__}")
    return value


def _parse_sources(raw: Any) -> list[SourceDescriptor]:
    if not isinstance(raw, list):
        raise InvalidManifest("sources", "must be a list")
    sources = []
    seen = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict):
            raise InvalidManifest(f"sources[{i}]", "must be an object")
        name = _require(entry, "name", str, f"sources[{i}]")
        role = _require(entry, "role", str, name)
        path = _require(entry, "path", str, name)
        columns = _require(entry, "columns", list, name)
        key_column = entry.get("key_column")
        if name in seen:
            raise DuplicateSource(name, "source name declared twice")
        seen.add(name)
        if role not in ROLES:
            raise InvalidSource(name, f"role {role!r} not one of {ROLES}")
        if not all(isinstance(c, str) for c in columns) or len(set(columns)) != len(columns):
            raise InvalidSource(name, "columns must be distinct strings")
        if role == "core":
            if key_column is not None:
                raise InvalidSource(name, "the core source has no key column")
            if tuple(columns) != ACTIVITY_COLUMNS:
                raise InvalidSource(name, f"core columns must be {list(ACTIVITY_COLUMNS)}")
        elif not isinstance(key_column, str) or key_column not in columns:
            raise InvalidSource(name, f"key_column {key_column!r} is not among its columns")
        sources.append(SourceDescriptor(name, role, path, tuple(columns), key_column))
    return sources


def _parse_links(raw: Any) -> list[LinkDescriptor]:
    if not isinstance(raw, list):
        raise InvalidManifest("links", "must be a list")
    links = []
    for i, entry in enumerate(raw):
        where = f"links[{i}]"
        if not isinstance(entry, dict):
            raise InvalidManifest(where, "must be an object")
        link = LinkDescriptor(
            _require(entry, "from", str, where),
            _require(entry, "to", str, where),
            _require(entry, "via", str, where),
            _require(entry, "kind", str, where),
        )
        if link.kind not in LINK_KINDS:
            raise InvalidLink(link.label(), f"kind {link.kind!r} not one of {LINK_KINDS}")
        links.append(link)
    return links


def _check_link(link: LinkDescriptor, by_name: dict[str, SourceDescriptor]) -> None:
    label = link.label()
    for end in (link.from_source, link.to_source):
        if end not in by_name:
            raise DanglingLink(label, f"source {end!r} is not declared")
    src, dst = by_name[link.from_source], by_name[link.to_source]
    if link.via_column not in src.columns:
        raise DanglingLink(label, f"column {link.via_column!r} not in source {src.name!r}")
    if link.kind == "element_to_source":
        if dst.role != "generalizing":
            raise InvalidLink(label, "element_to_source must target a generalizing source")
        if src.role != "core" or link.via_column != ELEMENT_COLUMN:
            raise InvalidLink(label, f"element_to_source must start at the core's {ELEMENT_COLUMN!r}")
    else:
        if dst.role != "refining":
            raise InvalidLink(label, "source_to_source must target a refining source")
        if src.role == "generalizing":
            raise InvalidLink(label, "generalizing sources cannot link onward")
        if src.role == "core" and link.via_column != STUDENT_COLUMN:
            raise InvalidLink(label, f"refining sources attach to the core's {STUDENT_COLUMN!r}")


def _find_cycle(names: list[str], links: list[LinkDescriptor]) -> LinkDescriptor | None:
    out: dict[str, list[LinkDescriptor]] = {n: [] for n in names}
    for link in links:
        out[link.from_source].append(link)
    state: dict[str, int] = {}

    def visit(node: str) -> LinkDescriptor | None:
        state[node] = 1
        for link in out[node]:
            nxt = link.to_source
            if state.get(nxt) == 1:
                return link
            if nxt not in state:
                found = visit(nxt)
                if found is not None:
                    return found
        state[node] = 2
        return None

    for name in names:
        if name not in state:
            found = visit(name)
            if found is not None:
                return found
    return None


def validate_model(sources: list[SourceDescriptor], links: list[LinkDescriptor],
                   base_dir: Path | None = None) -> SchemaModel:
    cores = [s.name for s in sources if s.role == "core"]
    if len(cores) != 1:
        offender = ",".join(cores) if cores else "<none>"
        raise ZeroOrMultipleCoreSources(offender, f"expected exactly one core source, found {len(cores)}")
    by_name = {s.name: s for s in sources}
    for link in links:
        _check_link(link, by_name)
    cyclic = _find_cycle([s.name for s in sources], links)
    if cyclic is not None:
        raise CyclicLinkGraph(cyclic.label(), "link closes a cycle")
    reached = {cores[0]}
    queue = deque(reached)
    while queue:
        node = queue.popleft()
        for link in links:
            if link.from_source == node and link.to_source not in reached:
                reached.add(link.to_source)
                queue.append(link.to_source)
    for s in sources:
        if s.name not in reached:
            raise UnreachableSource(s.name, f"no link path from core source {cores[0]!r}")
    return SchemaModel(tuple(sources), tuple(links), base_dir)


def validate_schema(manifest_text: str, base_dir: str | Path | None = None) -> SchemaModel:
    """Parse a manifest and return the validated model, or raise a ``SchemaError``.

    Checks run in a fixed order (structure, core count, link endpoints and
    kinds, cycles, reachability) so a bad manifest always reports the same
    single error.
    """
    try:
        doc = json.loads(manifest_text)
    except json.JSONDecodeError as exc:
        raise ManifestFormatError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidManifest("<manifest>", "top level must be an object")
    sources = _parse_sources(doc.get("sources"))
    links = _parse_links(doc.get("links", []))
    return validate_model(sources, links, Path(base_dir) if base_dir is not None else None)


def load_schema(path: str | Path) -> SchemaModel:
    path = Path(path)
    return validate_schema(path.read_text(encoding="utf-8"), base_dir=path.parent)
