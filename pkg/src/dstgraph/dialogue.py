"""Dialogue contexts, state triples, and per-turn state accumulation.

A conversation is an alternating (but not necessarily strictly alternating)
sequence of user and system turns.  The tracked state is a set of
<domain, slot, value> triples with at most one value per (domain, slot) key.
All values are immutable after construction and every operation here is a
pure function, so everything in this module is safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Iterator

#: Sentinel emitted by the extraction prompt when a slot has no value.
#: Stored normalized (case-folded), so comparisons use this constant.
NONE_VALUE = "none"

_WS = re.compile(r"\s+")


def normalize_text(s: str) -> str:
    """Case-fold, trim, and collapse internal whitespace runs to one space."""
    return _WS.sub(" ", s.strip()).casefold()


class Speaker(Enum):
    USER = "user"
    SYSTEM = "system"


@dataclass(frozen=True)
class Turn:
    """One utterance.  Text must be non-empty after trimming.

    Internal newlines are replaced by spaces at construction so that a
    serialized context stays one line per turn.
    """

    speaker: Speaker
    text: str

    def __post_init__(self):
        cleaned = _WS.sub(" ", self.text.strip())
        if not cleaned:
            raise ValueError("utterance text must be non-empty")
        object.__setattr__(self, "text", cleaned)

    def render(self) -> str:
        prefix = "USER: " if self.speaker is Speaker.USER else "SYSTEM: "
        return prefix + self.text


@dataclass(frozen=True)
class DialogueContext:
    """Ordered turns of one conversation up to the current point."""

    turns: tuple[Turn, ...] = ()
    dialogue_id: str = ""

    @property
    def turn_index(self) -> int:
        """Current turn number t, defined as the count of user turns."""
        return sum(1 for t in self.turns if t.speaker is Speaker.USER)


def append_turn(ctx: DialogueContext, turn: Turn) -> DialogueContext:
    """Return a new context with ``turn`` appended; ``ctx`` is unchanged."""
    return replace(ctx, turns=ctx.turns + (turn,))


def serialize_context(ctx: DialogueContext) -> str:
    """Render a context as one ``USER:``/``SYSTEM:`` prefixed line per turn."""
    return "\n".join(t.render() for t in ctx.turns)


@dataclass(frozen=True, order=True)
class StateTriple:
    """One <domain, slot, value> unit.

    All three fields are normalized (case-folded, trimmed, internal
    whitespace collapsed) at construction, so downstream comparisons are
    plain equality.  ``value`` may be the sentinel ``NONE`` marking absence.
    """

    domain: str
    slot: str
    value: str

    def __post_init__(self):
        object.__setattr__(self, "domain", normalize_text(self.domain))
        object.__setattr__(self, "slot", normalize_text(self.slot))
        object.__setattr__(self, "value", normalize_text(self.value))
        if not self.domain:
            raise ValueError("triple domain must be non-empty")
        if not self.slot:
            raise ValueError("triple slot must be non-empty")

    @property
    def key(self) -> tuple[str, str]:
        return (self.domain, self.slot)

    @property
    def is_none(self) -> bool:
        return self.value == NONE_VALUE


class DialogueState:
    """A set of triples keyed by (domain, slot); at most one value per key.

    Construction applies latest-wins on duplicate keys.  Instances are
    immutable and hashable; iteration order is sorted and deterministic.
    """

    __slots__ = ("_by_key",)

    def __init__(self, triples: Iterable[StateTriple] = ()):
        by_key: dict[tuple[str, str], StateTriple] = {}
        for t in triples:
            by_key[t.key] = t
        object.__setattr__(self, "_by_key", by_key)

    def __setattr__(self, name, value):
        raise AttributeError("DialogueState is immutable")

    def triples(self) -> tuple[StateTriple, ...]:
        return tuple(sorted(self._by_key.values()))

    def as_set(self) -> frozenset[StateTriple]:
        return frozenset(self._by_key.values())

    def get(self, domain: str, slot: str) -> StateTriple | None:
        return self._by_key.get((normalize_text(domain), normalize_text(slot)))

    def keys(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self._by_key))

    def without_none(self) -> "DialogueState":
        """Drop sentinel-valued triples (used before graphing and scoring)."""
        return DialogueState(t for t in self._by_key.values() if not t.is_none)

    def __iter__(self) -> Iterator[StateTriple]:
        return iter(self.triples())

    def __len__(self) -> int:
        return len(self._by_key)

    def __contains__(self, triple: StateTriple) -> bool:
        return self._by_key.get(triple.key) == triple

    def __eq__(self, other) -> bool:
        if not isinstance(other, DialogueState):
            return NotImplemented
        return self._by_key == other._by_key

    def __hash__(self) -> int:
        return hash(self.as_set())

    def __repr__(self) -> str:
        inner = ", ".join(
            f"({t.domain}, {t.slot}, {t.value})" for t in self.triples()
        )
        return f"DialogueState({{{inner}}})"


def accumulate_state(
    prev: DialogueState, new_triples: Iterable[StateTriple]
) -> DialogueState:
    """Merge newly extracted triples into an accumulated state.

    Keys are unioned and the newest value wins on (domain, slot) collisions.
    Sentinel ``NONE`` triples mark absence and never enter the accumulated
    state; in particular a NONE for an already-tracked key does not erase
    the earlier value.
    """
    merged = {t.key: t for t in prev}
    for t in new_triples:
        if t.is_none:
            continue
        merged[t.key] = t
    return DialogueState(merged.values())
