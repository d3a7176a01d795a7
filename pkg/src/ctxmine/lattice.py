"""Frequent contexts over refining attributes, enumerated levelwise."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

from .contextdb import SequenceDatabase
from .model import Context


class UnknownAttributeKey(KeyError):
    pass


@dataclass(frozen=True)
class ContextCover:
    context: Context
    students: frozenset[str]

    def __len__(self) -> int:
        return len(self.students)


def specializes(c1: Context, c2: Context) -> bool:
    """True when ``c1`` carries every predicate of ``c2`` (so ``c1`` is at least as specific)."""
    return set(c2.predicates) <= set(c1.predicates)


def satisfies(assignments, context: Context) -> bool:
    return all(value in assignments.get(key, ()) for key, value in context.predicates)


def context_cover(c: Context, db: SequenceDatabase) -> ContextCover:
    known = set(db.context_keys)
    for key in c.keys():
        if key not in known:
            raise UnknownAttributeKey(key)
    students = frozenset(s for s, seq in db.sequences.items() if satisfies(seq.context, c))
    return ContextCover(c, students)


def _singletons(db: SequenceDatabase) -> dict[tuple[str, str], frozenset[str]]:
    covers: dict[tuple[str, str], set[str]] = defaultdict(set)
    keys = set(db.context_keys)
    for student, seq in db.sequences.items():
        for key, values in seq.context.items():
            if key in keys:
                for value in values:
                    covers[(key, value)].add(student)
    return {pred: frozenset(s) for pred, s in sorted(covers.items())}


def enumerate_contexts(db: SequenceDatabase, minsup_ctx: int = 2,
                       max_context_size: int = 3) -> list[ContextCover]:
    """Every context with at most ``max_context_size`` predicates covering ``minsup_ctx`` students.

    Apriori-style: a (k+1)-context is built by joining two frequent
    k-contexts that share their first k-1 predicates, and is kept only if
    all of its k-subsets were frequent.
    """
    if minsup_ctx < 1 or max_context_size < 0:
        raise ValueError("minsup_ctx must be >= 1 and max_context_size >= 0")
    everyone = frozenset(db.sequences)
    if len(everyone) < minsup_ctx:
        return []
    result = [ContextCover(Context(), everyone)]
    level = {
        (pred,): cover for pred, cover in _singletons(db).items() if len(cover) >= minsup_ctx
    }
    size = 1
    while level and size <= max_context_size:
        result.extend(ContextCover(Context(preds), cover) for preds, cover in level.items())
        if size == max_context_size:
            break
        ordered = sorted(level)
        nxt = {}
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                if a[:-1] != b[:-1]:
                    break
                if a[-1][0] == b[-1][0]:
                    continue
                cand = a + (b[-1],)
                if any(cand[:j] + cand[j + 1:] not in level for j in range(len(cand) - 2)):
                    continue
                cover = level[a] & level[b]
                if len(cover) >= minsup_ctx:
                    nxt[cand] = cover
        level = nxt
        size += 1
    return sorted(result, key=lambda cc: cc.context)
