"""Prompt construction: event marking, pair-set splitting, and the two
prompt variants (with and without the free-form timeline step).

Wording lives in versioned template files under ``templates/`` so that runs
are reproducible; an alternate template directory can be supplied through
the run configuration. Lines starting with ``#:`` in a template are comments
and are stripped at load time.
"""

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .core import Document, PairKey, Scheme, all_pairs
from .errors import ValidationError

VARIANTS = ("global", "timeline")

# Pair-count thresholds for splitting oversized documents: up to this many
# events one prompt suffices; above it the pair set is halved; very dense
# documents (dense profile only) go out in fixed-size chunks.
SINGLE_PROMPT_MAX_EVENTS = 20
TWO_SPLIT_MAX_EVENTS = 40
DENSE_CHUNK_SIZE = 100


@dataclass(frozen=True)
class PromptTemplates:
    system: str
    user: str
    timeline_step: str
    labels_four: str
    labels_six: str
    version: str

    def label_definitions(self, scheme: Scheme) -> str:
        return self.labels_four if scheme.variant == "four" else self.labels_six


def _strip_comments(text: str) -> tuple[str, Optional[str]]:
    version = None
    lines = []
    for line in text.splitlines(keepends=True):
        if line.startswith("#:"):
            stripped = line[2:].strip()
            if stripped.startswith("version="):
                version = stripped.split("=", 1)[1]
            continue
        lines.append(line)
    return "".join(lines), version


def load_templates(directory: Optional[Path] = None) -> PromptTemplates:
    names = ("system", "user", "timeline_step", "labels_four", "labels_six")
    texts = {}
    versions = set()
    for name in names:
        if directory is not None:
            raw = (Path(directory) / f"{name}.txt").read_text(encoding="utf-8")
        else:
            raw = resources.files("tempograph.templates").joinpath(f"{name}.txt").read_text(encoding="utf-8")
        text, version = _strip_comments(raw)
        texts[name] = text
        if version is not None:
            versions.add(version)
    if len(versions) != 1:
        raise ValidationError(f"template files disagree on version: {sorted(versions)}")
    return PromptTemplates(
        system=texts["system"].strip("\n"),
        user=texts["user"].strip("\n"),
        timeline_step=texts["timeline_step"].lstrip("\n"),
        labels_four=texts["labels_four"].strip("\n"),
        labels_six=texts["labels_six"].strip("\n"),
        version=versions.pop(),
    )


@dataclass(frozen=True)
class PromptBundle:
    doc_id: str
    split_index: int
    total_splits: int
    system_text: str
    user_text: str
    pairs: tuple[PairKey, ...]

    @property
    def prompt_bytes(self) -> bytes:
        return (self.system_text + "\x00" + self.user_text).encode("utf-8")


def mark_events(doc: Document) -> str:
    """Document text with every mention replaced by ``<mention(id)>``.

    Replacements run right to left so earlier spans stay valid.
    """
    events = sorted(doc.events, key=lambda e: e.char_span[0])
    for prev, cur in zip(events, events[1:]):
        if cur.char_span[0] < prev.char_span[1]:
            raise ValidationError(
                f"{doc.doc_id}: events {prev.event_id} and {cur.event_id} have overlapping spans"
            )
    text = doc.text
    for ev in reversed(events):
        s, e = ev.char_span
        text = text[:s] + f"<{ev.mention}({ev.event_id})>" + text[e:]
    return text


def strip_markers(marked: str) -> str:
    """Inverse of mark_events, for round-trip checks."""
    import re

    return re.sub(r"<([^<>()]*)\((\d+)\)>", r"\1", marked)


def split_pairs(pairs: list[PairKey], n_events: int, dense: bool = False) -> list[list[PairKey]]:
    """Partition a document's pair list into prompt-sized splits.

    Documents up to 20 events fit one prompt; 21..40 events are halved into
    near-equal splits; beyond 40 the dense profile cuts chunks of 100 pairs,
    while the default profile stays with the even halving.
    """
    expected = n_events * (n_events - 1) // 2
    if len(pairs) != expected or len(set(pairs)) != len(pairs):
        raise ValidationError(f"pair list is not the complete set over {n_events} events")
    ordered = sorted(pairs)
    if n_events <= SINGLE_PROMPT_MAX_EVENTS:
        return [ordered]
    if n_events <= TWO_SPLIT_MAX_EVENTS or not dense:
        half = (len(ordered) + 1) // 2
        return [ordered[:half], ordered[half:]]
    return [ordered[i : i + DENSE_CHUNK_SIZE] for i in range(0, len(ordered), DENSE_CHUNK_SIZE)]


def build_prompt(
    doc: Document,
    variant: str,
    split: list[PairKey],
    scheme: Scheme,
    split_index: int = 0,
    total_splits: int = 1,
    templates: Optional[PromptTemplates] = None,
) -> PromptBundle:
    if variant not in VARIANTS:
        raise ValidationError(f"unknown prompt variant {variant!r}")
    tpl = templates or load_templates()
    pairs = tuple(sorted(split))
    split_note = ""
    if total_splits > 1:
        split_note = (
            f" (part {split_index + 1} of {total_splits}; the pair list below covers only this part)"
        )
    user = tpl.user.format(
        label_definitions=tpl.label_definitions(scheme),
        timeline_step=tpl.timeline_step if variant == "timeline" else "",
        split_note=split_note,
        document=mark_events(doc),
        pair_count=len(pairs),
        pair_list="\n".join(f"({i}, {j})" for i, j in pairs),
        labels_comma=", ".join(scheme.labels),
    )
    return PromptBundle(
        doc_id=doc.doc_id,
        split_index=split_index,
        total_splits=total_splits,
        system_text=tpl.system,
        user_text=user,
        pairs=pairs,
    )


def build_prompts(
    doc: Document,
    variant: str,
    scheme: Scheme,
    dense: bool = False,
    templates: Optional[PromptTemplates] = None,
) -> list[PromptBundle]:
    """All prompt bundles for one document; splits partition its pair set."""
    tpl = templates or load_templates()
    pairs = all_pairs(doc.events)
    splits = split_pairs(pairs, len(doc.events), dense=dense)
    return [
        build_prompt(doc, variant, split, scheme, idx, len(splits), templates=tpl)
        for idx, split in enumerate(splits)
    ]
