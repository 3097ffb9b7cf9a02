"""Domain types shared by every other module.

Relation labels are plain lowercase strings; a Scheme fixes their order (the
order distribution vectors index into) and the inverse map. Event pairs are
always stored canonically as (i, j) with i < j; a label arriving on a
reversed pair is stored as its inverse.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import SelfRelationError, ValidationError

BEFORE = "before"
AFTER = "after"
EQUAL = "equal"
VAGUE = "vague"
INCLUDES = "includes"
IS_INCLUDED = "is-included"

_INVERSE = {
    BEFORE: AFTER,
    AFTER: BEFORE,
    EQUAL: EQUAL,
    VAGUE: VAGUE,
    INCLUDES: IS_INCLUDED,
    IS_INCLUDED: INCLUDES,
}

# Canonical pair key: event ids with i < j.
PairKey = tuple[int, int]


@dataclass(frozen=True)
class Scheme:
    """An ordered relation vocabulary: four labels (start-time semantics) or
    six (adding containment)."""

    variant: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.variant not in ("four", "six"):
            raise ValidationError(f"unknown scheme variant: {self.variant!r}")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"label {label!r} not in {self.variant} scheme") from None

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def inverse(self, label: str) -> str:
        if label not in self.labels:
            raise ValidationError(f"label {label!r} not in {self.variant} scheme")
        return _INVERSE[label]


FOUR = Scheme("four", (BEFORE, AFTER, EQUAL, VAGUE))
SIX = Scheme("six", (BEFORE, AFTER, EQUAL, VAGUE, INCLUDES, IS_INCLUDED))


def scheme_by_name(name: str) -> Scheme:
    if name == "four":
        return FOUR
    if name == "six":
        return SIX
    raise ValidationError(f"unknown scheme name: {name!r}")


def inverse(label: str) -> str:
    """Inverse relation, independent of scheme (both schemes share it)."""
    try:
        return _INVERSE[label]
    except KeyError:
        raise ValidationError(f"unknown relation label: {label!r}") from None


def make_pair(a: int, b: int) -> PairKey:
    if a == b:
        raise SelfRelationError(f"self-pair ({a}, {b}) is not a relation")
    return (a, b) if a < b else (b, a)


def orient(pair: tuple[int, int], label: str) -> tuple[PairKey, str]:
    """Canonicalize a (possibly reversed) labeled pair.

    ((7, 3), before) becomes ((3, 7), after); already-canonical input is
    returned unchanged.
    """
    a, b = pair
    if a == b:
        raise SelfRelationError(f"self-relation on event {a}")
    if a < b:
        return (a, b), label
    return (b, a), inverse(label)


@dataclass(frozen=True)
class Event:
    """A marked event mention: id, surface string, sentence and char span."""

    event_id: int
    mention: str
    sentence_index: int
    char_span: tuple[int, int]


@dataclass
class Document:
    """Text with its event mentions and (optionally) gold pair labels.

    Event ids are dense 0..n-1; ``source_ids`` maps them back to the ids the
    document carried before load-time re-indexing (identity when absent).
    """

    doc_id: str
    text: str
    events: list[Event]
    gold: Optional[list[tuple[int, int, str]]] = None
    source_ids: Optional[dict[int, int]] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        ids = [e.event_id for e in self.events]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"{self.doc_id}: duplicate event ids")
        if ids and set(ids) != set(range(len(ids))):
            raise ValidationError(f"{self.doc_id}: event ids are not dense 0..{len(ids) - 1}")
        for ev in self.events:
            s, e = ev.char_span
            if not (0 <= s < e <= len(self.text)):
                raise ValidationError(f"{self.doc_id}: event {ev.event_id} span {ev.char_span} outside text")
            if self.text[s:e] != ev.mention:
                raise ValidationError(
                    f"{self.doc_id}: event {ev.event_id} mention {ev.mention!r} "
                    f"does not match text slice {self.text[s:e]!r}"
                )
        if self.gold is not None:
            known = set(ids)
            seen: set[PairKey] = set()
            for a, b, label in self.gold:
                if a not in known or b not in known:
                    raise ValidationError(f"{self.doc_id}: gold pair ({a}, {b}) references unknown event")
                key = make_pair(a, b)
                if key in seen:
                    raise ValidationError(f"{self.doc_id}: duplicate gold label for pair {key}")
                seen.add(key)

    def event_by_id(self, event_id: int) -> Event:
        for ev in self.events:
            if ev.event_id == event_id:
                return ev
        raise ValidationError(f"{self.doc_id}: no event with id {event_id}")

    def gold_map(self, scheme: Scheme) -> dict[PairKey, str]:
        """Gold labels as a canonical pair map, orientation applied."""
        out: dict[PairKey, str] = {}
        for a, b, label in self.gold or []:
            if label not in scheme:
                raise ValidationError(f"{self.doc_id}: gold label {label!r} not in {scheme.variant} scheme")
            key, lab = orient((a, b), label)
            out[key] = lab
        return out


def all_pairs(events: Sequence[Event]) -> list[PairKey]:
    """All n(n-1)/2 unordered event pairs, sorted lexicographically."""
    ids = sorted(e.event_id for e in events)
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate event ids")
    return [(ids[i], ids[j]) for i in range(len(ids)) for j in range(i + 1, len(ids))]


class LabelDistribution:
    """Probability vector over a scheme's labels, in scheme order.

    Construction rejects negative entries; sums off by more than 1e-6 are an
    error, smaller drift is renormalized away.
    """

    __slots__ = ("probs",)

    def __init__(self, probs: Iterable[float], scheme: Scheme):
        vec = tuple(float(p) for p in probs)
        if len(vec) != scheme.size:
            raise ValidationError(f"distribution length {len(vec)} != scheme size {scheme.size}")
        if any(p < 0 for p in vec):
            raise ValidationError(f"negative probability in {vec}")
        total = sum(vec)
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"distribution sums to {total}, outside [1-1e-6, 1+1e-6]")
        self.probs = tuple(p / total for p in vec)

    def __getitem__(self, i: int) -> float:
        return self.probs[i]

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelDistribution) and self.probs == other.probs

    def __repr__(self) -> str:
        return f"LabelDistribution({self.probs})"

    def argmax_label(self, scheme: Scheme) -> str:
        best = max(range(len(self.probs)), key=lambda i: (self.probs[i], -i))
        return scheme.labels[best]


@dataclass
class TemporalGraph:
    """One relation label per unordered event pair, keys canonical."""

    scheme: Scheme
    labels: dict[PairKey, str] = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), label in self.labels.items():
            if i >= j:
                raise ValidationError(f"pair ({i}, {j}) is not canonically oriented")
            if label not in self.scheme:
                raise ValidationError(f"label {label!r} not in {self.scheme.variant} scheme")

    def set(self, pair: tuple[int, int], label: str) -> None:
        key, lab = orient(pair, label)
        if lab not in self.scheme:
            raise ValidationError(f"label {lab!r} not in {self.scheme.variant} scheme")
        self.labels[key] = lab

    def get(self, a: int, b: int) -> str:
        """Label in the (a, b) direction, applying the inverse when needed."""
        if a == b:
            raise SelfRelationError(f"self-pair ({a}, {b})")
        if a < b:
            return self.labels[(a, b)]
        return inverse(self.labels[(b, a)])

    def event_ids(self) -> list[int]:
        ids: set[int] = set()
        for i, j in self.labels:
            ids.add(i)
            ids.add(j)
        return sorted(ids)

    def __len__(self) -> int:
        return len(self.labels)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TemporalGraph)
            and self.scheme == other.scheme
            and self.labels == other.labels
        )
