"""Contextual sequential pattern mining by prefix pseudo-projection.

Within every frequent context the miner runs a depth-first PrefixSpan over
the students of that context's cover. A projected database is a list of
``(student index, position)`` pairs into the shared encoded sequences,
never a copy of the suffixes. When no concrete resource extends the current
prefix frequently, the miner falls back to attribute-level items
(``Generalized(attribute, value)``) drawn from the resource descriptions.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import chain
from typing import Iterable, Sequence

from .contextdb import ContextualizedSequence, Event, SequenceDatabase
from .lattice import ContextCover, enumerate_contexts
from .model import Concrete, Context, Generalized, Item, MiningParams, Pattern, sort_patterns


def frequency_threshold(minsup_seq: float, cover: int) -> int:
    """Smallest supporting-student count that is frequent in a cover of this size."""
    return max(1, math.ceil(Fraction(str(minsup_seq)) * cover))


def item_matches(item: Item, event: Event, db: SequenceDatabase, action_mode: bool = False) -> bool:
    if isinstance(item, Concrete):
        if event.resource != item.resource:
            return False
        return not action_mode or event.action == item.action
    value = db.resource_attrs.get(event.resource, {}).get(item.attribute)
    return value is not None and value == item.value


def sequence_supports(seq: ContextualizedSequence, items: Sequence[Item],
                      db: SequenceDatabase, params: MiningParams) -> bool:
    if not items:
        raise ValueError("items must be non-empty")
    events = seq.events
    act = params.action_mode
    if params.gap_mode == "gapped":
        j = 0
        for event in events:
            if item_matches(items[j], event, db, act):
                j += 1
                if j == len(items):
                    return True
        return False
    k = len(items)
    for start in range(len(events) - k + 1):
        if all(item_matches(items[j], events[start + j], db, act) for j in range(k)):
            return True
    return False


def count_support(cover: ContextCover | Iterable[str], items: Sequence[Item],
                  db: SequenceDatabase, params: MiningParams) -> int:
    students = cover.students if isinstance(cover, ContextCover) else cover
    return sum(1 for s in students if sequence_supports(db.sequences[s], items, db, params))


class _Encoded:
    """Integer view of a database: one token per concrete item, one id per generalized item."""

    def __init__(self, db: SequenceDatabase, action_mode: bool) -> None:
        self.students = list(db.sequences)
        self.index = {s: i for i, s in enumerate(self.students)}
        raw = {}
        for seq in db.sequences.values():
            for e in seq.events:
                item = Concrete(e.resource, e.action) if action_mode else Concrete(e.resource)
                raw[item] = None
        self.tokens: list[Concrete] = sorted(raw, key=Concrete.sort_key)
        tok_id = {item: i for i, item in enumerate(self.tokens)}
        gens = {
            Generalized(key, value)
            for attrs in db.resource_attrs.values()
            for key, value in attrs.items()
            if value is not None
        }
        self.gens: list[Generalized] = sorted(gens, key=Generalized.sort_key)
        gen_id = {g: i for i, g in enumerate(self.gens)}
        self.gen_of: list[tuple[int, ...]] = []
        for item in self.tokens:
            attrs = db.resource_attrs.get(item.resource, {})
            self.gen_of.append(tuple(sorted(
                gen_id[Generalized(k, v)] for k, v in attrs.items() if v is not None
            )))
        self.gen_sets = [frozenset(g) for g in self.gen_of]
        self.seqs: list[list[int]] = []
        for seq in db.sequences.values():
            self.seqs.append([
                tok_id[Concrete(e.resource, e.action) if action_mode else Concrete(e.resource)]
                for e in seq.events
            ])
        self.tok_id = tok_id
        self.gen_id = gen_id
        # bit g of gen_mask[t] is set when token t's resource has generalized item g;
        # suffix_masks[s][i] ORs the masks of events i.. of student s
        self.gen_mask = [sum(1 << g for g in gs) for gs in self.gen_of]
        self.suffix_masks: list[list[int]] = []
        for seq in self.seqs:
            acc, masks = 0, [0] * (len(seq) + 1)
            for i in range(len(seq) - 1, -1, -1):
                acc |= self.gen_mask[seq[i]]
                masks[i] = acc
            self.suffix_masks.append(masks)
        self.bit_cache: dict[int, tuple[int, ...]] = {}


# Projection entries: gapped mode stores (student, first free position);
# contiguous mode stores (student, positions where the next item must sit).

def _root(enc: _Encoded, students: Iterable[int], gapped: bool) -> list:
    if gapped:
        return [(s, 0) for s in students if enc.seqs[s]]
    return [(s, tuple(range(len(enc.seqs[s])))) for s in students if enc.seqs[s]]


def _concrete_counts(enc: _Encoded, entries: list, gapped: bool) -> Counter:
    seqs = enc.seqs
    if gapped:
        return Counter(chain.from_iterable(set(seqs[s][start:]) for s, start in entries))
    return Counter(chain.from_iterable({seqs[s][p] for p in where} for s, where in entries))


def _bits(enc: _Encoded, mask: int) -> tuple[int, ...]:
    bits = enc.bit_cache.get(mask)
    if bits is None:
        bits = tuple(g for g in range(mask.bit_length()) if mask >> g & 1)
        enc.bit_cache[mask] = bits
    return bits


def _generalized_counts(enc: _Encoded, entries: list, gapped: bool) -> Counter:
    if gapped:
        suffix = enc.suffix_masks
        masks = Counter(suffix[s][start] for s, start in entries)
    else:
        seqs, gen_mask = enc.seqs, enc.gen_mask
        masks = Counter()
        for s, where in entries:
            m = 0
            for p in where:
                m |= gen_mask[seqs[s][p]]
            masks[m] += 1
    counts: Counter = Counter()
    for mask, n in masks.items():
        for g in _bits(enc, mask):
            counts[g] += n
    return counts


def _project_concrete(enc: _Encoded, entries: list, tok: int, gapped: bool) -> list:
    out = []
    seqs = enc.seqs
    if gapped:
        for s, start in entries:
            seq = seqs[s]
            try:
                i = seq.index(tok, start)
            except ValueError:
                continue
            if i + 1 < len(seq):
                out.append((s, i + 1))
    else:
        for s, positions in entries:
            seq = seqs[s]
            nxt = tuple(p + 1 for p in positions if seq[p] == tok and p + 1 < len(seq))
            if nxt:
                out.append((s, nxt))
    return out


def _project_generalized(enc: _Encoded, entries: list, g: int, gapped: bool) -> list:
    out = []
    seqs, gen_sets = enc.seqs, enc.gen_sets
    if gapped:
        for s, start in entries:
            seq = seqs[s]
            for i in range(start, len(seq)):
                if g in gen_sets[seq[i]]:
                    if i + 1 < len(seq):
                        out.append((s, i + 1))
                    break
    else:
        for s, positions in entries:
            seq = seqs[s]
            nxt = tuple(p + 1 for p in positions if g in gen_sets[seq[p]] and p + 1 < len(seq))
            if nxt:
                out.append((s, nxt))
    return out


@dataclass
class Projection:
    """Pseudo-projected database of one prefix inside one cover."""

    enc: _Encoded
    entries: list
    gapped: bool


def project(db: SequenceDatabase, students: Iterable[str], items: Sequence[Item],
            params: MiningParams) -> Projection:
    """Projection of ``students`` after the earliest match of ``items`` (empty prefix allowed)."""
    enc = _Encoded(db, params.action_mode)
    gapped = params.gap_mode == "gapped"
    entries = _root(enc, sorted(enc.index[s] for s in students), gapped)
    for item in items:
        if isinstance(item, Concrete):
            tok = enc.tok_id.get(item)
            entries = [] if tok is None else _project_concrete(enc, entries, tok, gapped)
        else:
            g = enc.gen_id.get(item)
            entries = [] if g is None else _project_generalized(enc, entries, g, gapped)
    return Projection(enc, entries, gapped)


def frequent_concrete_extensions(projection: Projection, threshold: int) -> list[tuple[Concrete, int]]:
    counts = _concrete_counts(projection.enc, projection.entries, projection.gapped)
    return [(projection.enc.tokens[t], c) for t, c in sorted(counts.items()) if c >= threshold]


def frequent_generalized_extensions(projection: Projection, threshold: int,
                                    db: SequenceDatabase | None = None) -> list[tuple[Generalized, int]]:
    counts = _generalized_counts(projection.enc, projection.entries, projection.gapped)
    return [(projection.enc.gens[g], c) for g, c in sorted(counts.items()) if c >= threshold]


def _mine_context(enc: _Encoded, context: Context, students: Sequence[int],
                  params: MiningParams) -> list[Pattern]:
    cover = len(students)
    threshold = frequency_threshold(params.minsup_seq, cover)
    gapped = params.gap_mode == "gapped"
    mode = params.generalization_mode
    max_len = params.max_pattern_len
    out: list[Pattern] = []

    def grow(prefix: tuple[Item, ...], entries: list) -> None:
        if len(entries) < threshold:
            return
        ccounts = _concrete_counts(enc, entries, gapped)
        conc = sorted(t for t, c in ccounts.items() if c >= threshold)
        gens: list[tuple[int, int]] = []
        if mode == "always" or (mode == "fallback" and not conc):
            gcounts = _generalized_counts(enc, entries, gapped)
            for g, c in sorted(gcounts.items()):
                if c < threshold:
                    continue
                # a generalization equal in count to one of its frequent members adds nothing
                if mode == "always" and any(
                    ccounts[t] == c for t in conc if g in enc.gen_sets[t]
                ):
                    continue
                gens.append((g, c))
        leaf = len(prefix) + 1 >= max_len
        for t in conc:
            items = prefix + (enc.tokens[t],)
            out.append(Pattern(context, items, cover, ccounts[t]))
            if not leaf:
                grow(items, _project_concrete(enc, entries, t, gapped))
        for g, c in gens:
            items = prefix + (enc.gens[g],)
            out.append(Pattern(context, items, cover, c))
            if not leaf and params.allow_extend_generalized:
                grow(items, _project_generalized(enc, entries, g, gapped))

    grow((), _root(enc, students, gapped))
    return out


def _dedup_most_general(covers: list[ContextCover]) -> list[ContextCover]:
    by_context = {cc.context: cc.students for cc in covers}
    kept = []
    for cc in covers:
        preds = cc.context.predicates
        parents = (Context(preds[:i] + preds[i + 1:]) for i in range(len(preds)))
        if any(by_context.get(p) == cc.students for p in parents):
            continue
        kept.append(cc)
    return kept


_WORKER_ENC: _Encoded | None = None


def _init_worker(enc: _Encoded) -> None:
    global _WORKER_ENC
    _WORKER_ENC = enc


def _run_task(task: tuple[Context, tuple[int, ...], MiningParams]) -> list[Pattern]:
    context, students, params = task
    return _mine_context(_WORKER_ENC, context, students, params)


def mine(db: SequenceDatabase, params: MiningParams | None = None) -> list[Pattern]:
    """All frequent contextual patterns of ``db``, canonically sorted.

    Each frequent context is an independent task; with ``params.workers > 1``
    tasks run in a process pool and the merged result is sorted, so output
    does not depend on the worker count.
    """
    params = params or MiningParams()
    covers = enumerate_contexts(db, params.minsup_ctx, params.max_context_size)
    if params.context_dedup == "most_general":
        covers = _dedup_most_general(covers)
    if not covers:
        return []
    enc = _Encoded(db, params.action_mode)
    tasks = [
        (cc.context, tuple(sorted(enc.index[s] for s in cc.students)), params) for cc in covers
    ]
    patterns: list[Pattern] = []
    if params.workers == 1 or len(tasks) == 1:
        for context, students, _ in tasks:
            patterns.extend(_mine_context(enc, context, students, params))
    else:
        with ProcessPoolExecutor(params.workers, initializer=_init_worker, initargs=(enc,)) as pool:
            for chunk in pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * params.workers))):
                patterns.extend(chunk)
    return sort_patterns(patterns)
