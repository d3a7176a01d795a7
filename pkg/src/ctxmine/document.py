"""The pattern document: a byte-stable JSON rendering of mined patterns.

Layout (two-space indentation, keys in this order)::

    {"params": {minsup_seq, minsup_ctx, max_context_size, max_pattern_len,
                generalization, gap, dedup, action_mode, allow_extend_generalized},
     "patterns": [{"context": {key: value, ...sorted by key},
                   "sequence": [{"kind": "concrete", "resource": id[, "action": a]}
                                | {"kind": "generalized", "attribute": k, "value": v}],
                   "cover": int, "count": int, "support": 0.000000}]}
"""

from __future__ import annotations

import io
import json
from typing import Any, Iterable, Iterator, Mapping, TextIO

from .lattice import satisfies
from .model import Concrete, Context, Generalized, Item, MiningParams, Pattern

# cli spelling <-> MiningParams spelling
_DEDUP_OUT = {"none": "none", "most_general": "most-general"}
_DEDUP_IN = {v: k for k, v in _DEDUP_OUT.items()}


class DocumentFormatError(ValueError):
    pass


class _Raw(str):
    """Pre-formatted JSON number emitted verbatim."""


def params_block(params: MiningParams) -> dict[str, Any]:
    return {
        "minsup_seq": params.minsup_seq,
        "minsup_ctx": params.minsup_ctx,
        "max_context_size": params.max_context_size,
        "max_pattern_len": params.max_pattern_len,
        "generalization": params.generalization_mode,
        "gap": params.gap_mode,
        "dedup": _DEDUP_OUT[params.context_dedup],
        "action_mode": params.action_mode,
        "allow_extend_generalized": params.allow_extend_generalized,
    }


def item_to_json(item: Item) -> dict[str, Any]:
    if isinstance(item, Concrete):
        out = {"kind": "concrete", "resource": item.resource}
        if item.action is not None:
            out["action"] = item.action
        return out
    return {"kind": "generalized", "attribute": item.attribute, "value": item.value}


def pattern_json(p: Pattern) -> dict[str, Any]:
    return {
        "context": dict(p.context.predicates),
        "sequence": [item_to_json(i) for i in p.items],
        "cover": p.cover,
        "count": p.count,
        "support": _Raw(f"{p.support:.6f}"),
    }


def _emit(obj: Any, depth: int, out: list[str]) -> None:
    pad = "  " * (depth + 1)
    if isinstance(obj, _Raw):
        out.append(str(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(pad + json.dumps(key, ensure_ascii=False) + ": ")
            _emit(value, depth + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append("  " * depth + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, value in enumerate(obj):
            out.append(pad)
            _emit(value, depth + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append("  " * depth + "]")
    else:
        out.append(json.dumps(obj, ensure_ascii=False))


def _pattern_chunks(patterns: Iterable[Pattern]) -> Iterator[str]:
    # Same layout _emit would produce, with per-context and per-item text cached:
    # large outputs repeat the same few contexts and items many times.
    ctx_text: dict[Context, str] = {}
    item_text: dict[Item, str] = {}
    for p in patterns:
        ctx = ctx_text.get(p.context)
        if ctx is None:
            chunks: list[str] = []
            _emit(dict(p.context.predicates), 3, chunks)
            ctx = ctx_text[p.context] = "".join(chunks)
        seq = []
        for item in p.items:
            text = item_text.get(item)
            if text is None:
                chunks = []
                _emit(item_to_json(item), 4, chunks)
                text = item_text[item] = "        " + "".join(chunks)
            seq.append(text)
        yield (
            '    {\n      "context": ' + ctx
            + ',\n      "sequence": [\n' + ",\n".join(seq)
            + f'\n      ],\n      "cover": {p.cover},\n      "count": {p.count},'
            + f'\n      "support": {p.support:.6f}\n    }}'
        )


def write_patterns(patterns: Iterable[Pattern], params: MiningParams, fh: TextIO) -> None:
    """Stream the pattern document to ``fh`` without building it in memory."""
    head: list[str] = []
    _emit(params_block(params), 1, head)
    fh.write('{\n  "params": ' + "".join(head) + ',\n  "patterns": ')
    first = True
    for chunk in _pattern_chunks(patterns):
        fh.write("[\n" if first else ",\n")
        fh.write(chunk)
        first = False
    fh.write("[]\n}\n" if first else "\n  ]\n}\n")


def serialize_patterns(patterns: Iterable[Pattern], params: MiningParams) -> str:
    buf = io.StringIO()
    write_patterns(patterns, params, buf)
    return buf.getvalue()


def item_from_json(raw: Any) -> Item:
    if not isinstance(raw, dict):
        raise DocumentFormatError(f"sequence item must be an object, got {raw!r}")
    kind = raw.get("kind")
    try:
        if kind == "concrete":
            return Concrete(raw["resource"], raw.get("action"))
        if kind == "generalized":
            return Generalized(raw["attribute"], raw["value"])
    except KeyError as exc:
        raise DocumentFormatError(f"sequence item lacks {exc}") from None
    raise DocumentFormatError(f"unknown item kind {kind!r}")


def _parse_params(raw: Any) -> MiningParams:
    try:
        return MiningParams(
            minsup_seq=raw["minsup_seq"],
            minsup_ctx=raw["minsup_ctx"],
            max_context_size=raw["max_context_size"],
            max_pattern_len=raw["max_pattern_len"],
            generalization_mode=raw["generalization"],
            gap_mode=raw["gap"],
            context_dedup=_DEDUP_IN[raw["dedup"]],
            action_mode=raw["action_mode"],
            allow_extend_generalized=raw["allow_extend_generalized"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DocumentFormatError(f"bad params block: {exc}") from None


def parse_patterns(text: str) -> tuple[MiningParams, list[Pattern]]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentFormatError(f"not JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("patterns"), list):
        raise DocumentFormatError("expected an object with a 'patterns' array")
    params = _parse_params(doc.get("params"))
    patterns = []
    for raw in doc["patterns"]:
        try:
            patterns.append(Pattern(
                Context(tuple(raw["context"].items())),
                tuple(item_from_json(i) for i in raw["sequence"]),
                raw["cover"],
                raw["count"],
            ))
        except (KeyError, TypeError, AttributeError, ValueError) as exc:
            raise DocumentFormatError(f"bad pattern entry {raw!r}: {exc}") from None
    return params, patterns


def match_student(profile: Mapping[str, Iterable[str]], patterns: Iterable[Pattern]) -> list[Pattern]:
    """Patterns whose every context predicate is met by the profile's value sets."""
    assignments = {k: frozenset(v) for k, v in profile.items()}
    return [p for p in patterns if satisfies(assignments, p.context)]


def parse_profile(pairs: Iterable[str]) -> dict[str, set[str]]:
    """``key=value`` strings to a set-valued profile; repeated keys accumulate."""
    profile: dict[str, set[str]] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key or not value:
            raise ValueError(f"profile entry {pair!r} is not key=value")
        if value.lower() == "unknown":
            continue
        profile.setdefault(key, set()).add(value)
    return profile
