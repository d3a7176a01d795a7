"""Value types shared by the miner, the reference oracle and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

GENERALIZATION_MODES = ("fallback", "always", "off")
GAP_MODES = ("gapped", "contiguous")
DEDUP_MODES = ("none", "most_general")


@dataclass(frozen=True, order=True, slots=True)
class Context:
    """Conjunction of ``key=value`` predicates over refining attributes.

    Predicates are stored sorted by key, so the dataclass ordering is the
    canonical context order and the empty context (the global one) sorts
    first.
    """

    predicates: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        preds = tuple(sorted((str(k), str(v)) for k, v in self.predicates))
        keys = [k for k, _ in preds]
        if len(set(keys)) != len(keys):
            raise ValueError(f"context repeats an attribute key: {keys}")
        object.__setattr__(self, "predicates", preds)

    @classmethod
    def of(cls, mapping: Mapping[str, str] | None = None, **kwargs: str) -> Context:
        items = dict(mapping or {})
        items.update(kwargs)
        return cls(tuple(items.items()))

    def as_dict(self) -> dict[str, str]:
        return dict(self.predicates)

    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.predicates)

    def __len__(self) -> int:
        return len(self.predicates)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}={v}" for k, v in self.predicates) + "}"


GLOBAL_CONTEXT = Context()


@dataclass(frozen=True, slots=True)
class Concrete:
    """A specific resource id, optionally pinned to an action."""

    resource: str
    action: str | None = None

    def sort_key(self) -> tuple:
        return (0, self.resource, self.action or "")

    def __str__(self) -> str:
        return self.resource if self.action is None else f"{self.resource}/{self.action}"


@dataclass(frozen=True, slots=True)
class Generalized:
    """Any resource whose description has ``attribute == value``."""

    attribute: str
    value: str

    def __post_init__(self) -> None:
        if self.value is None:
            raise ValueError("a generalized item cannot carry an unknown value")

    def sort_key(self) -> tuple:
        return (1, self.attribute, self.value)

    def __str__(self) -> str:
        return f"<{self.attribute}={self.value}>"


Item = Union[Concrete, Generalized]


def items_key(items: Iterable[Item]) -> tuple:
    return tuple(item.sort_key() for item in items)


@dataclass(frozen=True, slots=True)
class Pattern:
    context: Context
    items: tuple[Item, ...]
    cover: int
    count: int

    def __post_init__(self) -> None:
        if not self.items:
            raise ValueError("a pattern needs at least one item")
        if not 0 < self.count <= self.cover:
            raise ValueError(f"count {self.count} outside (0, cover={self.cover}]")

    @property
    def support(self) -> float:
        return self.count / self.cover

    def sort_key(self) -> tuple:
        return (self.context, items_key(self.items), -self.count)

    def __str__(self) -> str:
        seq = " ".join(str(i) for i in self.items)
        return f"{self.context} {seq} ({self.count}/{self.cover})"


def sort_patterns(patterns: Iterable[Pattern]) -> list[Pattern]:
    return sorted(patterns, key=Pattern.sort_key)


@dataclass(frozen=True)
class MiningParams:
    minsup_seq: float = 0.5
    minsup_ctx: int = 2
    max_context_size: int = 3
    max_pattern_len: int = 5
    generalization_mode: str = "fallback"
    allow_extend_generalized: bool = False
    gap_mode: str = "gapped"
    action_mode: bool = False
    context_dedup: str = "none"
    workers: int = field(default=1, compare=False)

    def __post_init__(self) -> None:
        if not 0 < self.minsup_seq <= 1:
            raise ValueError(f"minsup_seq must be in (0, 1], got {self.minsup_seq}")
        if self.minsup_ctx < 1:
            raise ValueError(f"minsup_ctx must be >= 1, got {self.minsup_ctx}")
        if self.max_context_size < 0:
            raise ValueError(f"max_context_size must be >= 0, got {self.max_context_size}")
        if self.max_pattern_len < 1:
            raise ValueError(f"max_pattern_len must be >= 1, got {self.max_pattern_len}")
        if self.generalization_mode not in GENERALIZATION_MODES:
            raise ValueError(f"unknown generalization mode {self.generalization_mode!r}")
        if self.gap_mode not in GAP_MODES:
            raise ValueError(f"unknown gap mode {self.gap_mode!r}")
        if self.context_dedup not in DEDUP_MODES:
            raise ValueError(f"unknown dedup mode {self.context_dedup!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
