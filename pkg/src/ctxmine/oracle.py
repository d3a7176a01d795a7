"""Exhaustive reference miner used as ground truth in tests.

Nothing here is optimized and nothing is shared with the prefix-projection
miner beyond the value types: contexts come from the full product of
observed attribute values, covers and supports are recounted by scanning
every student, and subsequence matching tries every index combination.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .contextdb import SequenceDatabase
from .model import Concrete, Context, Generalized, MiningParams, Pattern, sort_patterns


class InstanceTooLarge(ValueError):
    pass


def _matches(item, event, db: SequenceDatabase, action_mode: bool) -> bool:
    if isinstance(item, Generalized):
        return db.resource_attrs.get(event.resource, {}).get(item.attribute) == item.value
    if action_mode:
        return (event.resource, event.action) == (item.resource, item.action)
    return event.resource == item.resource


def oracle_supports(events, items, db: SequenceDatabase, params: MiningParams) -> bool:
    k = len(items)
    n = len(events)
    if params.gap_mode == "contiguous":
        index_sets = (range(i, i + k) for i in range(n - k + 1))
    else:
        index_sets = itertools.combinations(range(n), k)
    return any(
        all(_matches(items[j], events[idx], db, params.action_mode) for j, idx in enumerate(ix))
        for ix in index_sets
    )


def oracle_count(db: SequenceDatabase, students, items, params: MiningParams) -> int:
    return sum(oracle_supports(db.sequences[s].events, items, db, params) for s in students)


def _all_contexts(db: SequenceDatabase, max_size: int):
    values: dict[str, set[str]] = {k: set() for k in db.context_keys}
    for seq in db.sequences.values():
        for key, vals in seq.context.items():
            if key in values:
                values[key].update(vals)
    keys = sorted(k for k, v in values.items() if v)
    for size in range(max_size + 1):
        for combo in itertools.combinations(keys, size):
            for picked in itertools.product(*(sorted(values[k]) for k in combo)):
                yield Context(tuple(zip(combo, picked)))


def _cover(db: SequenceDatabase, context: Context) -> frozenset[str]:
    return frozenset(
        s for s, seq in db.sequences.items()
        if all(v in seq.context.get(k, ()) for k, v in context.predicates)
    )


def _alphabet(db: SequenceDatabase, action_mode: bool) -> list:
    concrete = set()
    for seq in db.sequences.values():
        for e in seq.events:
            concrete.add(Concrete(e.resource, e.action) if action_mode else Concrete(e.resource))
    general = {
        Generalized(k, v)
        for attrs in db.resource_attrs.values()
        for k, v in attrs.items()
        if v is not None
    }
    return sorted(concrete, key=lambda i: i.sort_key()) + sorted(general, key=lambda i: i.sort_key())


def brute_force_mine(db: SequenceDatabase, params: MiningParams,
                     max_students: int = 8, max_events: int = 6) -> list[Pattern]:
    if len(db.sequences) > max_students:
        raise InstanceTooLarge(f"{len(db.sequences)} students > {max_students}")
    longest = max((len(s.events) for s in db.sequences.values()), default=0)
    if longest > max_events:
        raise InstanceTooLarge(f"a sequence has {longest} events > {max_events}")

    frequent = {}
    for context in _all_contexts(db, params.max_context_size):
        cover = _cover(db, context)
        if len(cover) >= params.minsup_ctx:
            frequent[context] = cover

    alphabet = _alphabet(db, params.action_mode)
    out = []
    for context, cover in frequent.items():
        if params.context_dedup == "most_general":
            preds = set(context.predicates)
            if any(set(other.predicates) < preds and frequent[other] == cover for other in frequent):
                continue
        threshold = max(1, math.ceil(Fraction(str(params.minsup_seq)) * len(cover)))
        frontier = [()]
        for _ in range(params.max_pattern_len):
            grown = []
            for prefix in frontier:
                if prefix and isinstance(prefix[-1], Generalized) and not params.allow_extend_generalized:
                    continue
                counts = {x: oracle_count(db, cover, prefix + (x,), params) for x in alphabet}
                freq_concrete = [x for x in alphabet if isinstance(x, Concrete) and counts[x] >= threshold]
                for x in alphabet:
                    if counts[x] < threshold:
                        continue
                    if isinstance(x, Generalized):
                        mode = params.generalization_mode
                        if mode == "off" or (mode == "fallback" and freq_concrete):
                            continue
                        if mode == "always" and any(
                            counts[r] == counts[x]
                            and db.resource_attrs.get(r.resource, {}).get(x.attribute) == x.value
                            for r in freq_concrete
                        ):
                            continue
                    items = prefix + (x,)
                    out.append(Pattern(context, items, len(cover), counts[x]))
                    grown.append(items)
            frontier = grown
    return sort_patterns(out)
