"""Turn several stochastic generations into per-pair label distributions,
plus the plain majority-vote baseline over the same records."""

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import LabelDistribution, PairKey, Scheme, TemporalGraph, VAGUE
from .errors import IncompleteGenerationError, ValidationError

log = logging.getLogger(__name__)


@dataclass
class GenerationRecord:
    """One parsed model generation: the raw text and its one-label-per-pair
    relation map (canonically oriented)."""

    generation_index: int
    raw_output: str
    parsed: dict[PairKey, str]
    requested: frozenset[PairKey] = field(default_factory=frozenset)

    @property
    def coverage(self) -> frozenset[PairKey]:
        return frozenset(self.parsed)

    def missing(self) -> list[PairKey]:
        return sorted(self.requested - self.coverage)

    def complete(self) -> bool:
        return not self.requested - self.coverage


@dataclass
class DistributionSet:
    """Per-pair label distributions pooled from M generations."""

    scheme: Scheme
    distributions: dict[PairKey, LabelDistribution]
    generation_count: int

    def pairs(self) -> list[PairKey]:
        return sorted(self.distributions)

    def __getitem__(self, pair: PairKey) -> LabelDistribution:
        return self.distributions[pair]

    def __len__(self) -> int:
        return len(self.distributions)


def merge_split_records(records: Sequence[GenerationRecord]) -> GenerationRecord:
    """Merge same-index records from different splits of one document."""
    if not records:
        raise ValidationError("no records to merge")
    indices = {r.generation_index for r in records}
    if len(indices) != 1:
        raise ValidationError(f"cannot merge records from different generations: {sorted(indices)}")
    parsed: dict[PairKey, str] = {}
    requested: set[PairKey] = set()
    for rec in records:
        overlap = set(parsed) & set(rec.parsed)
        if overlap:
            raise ValidationError(f"splits overlap on pairs {sorted(overlap)[:5]}")
        parsed.update(rec.parsed)
        requested |= rec.requested
    return GenerationRecord(
        generation_index=records[0].generation_index,
        raw_output="\n".join(r.raw_output for r in records),
        parsed=parsed,
        requested=frozenset(requested),
    )


def aggregate(records: Sequence[GenerationRecord], pairs: Iterable[PairKey], scheme: Scheme) -> DistributionSet:
    """Empirical label distribution per pair: count of each label over the
    M records, divided by M. Every record must cover every requested pair;
    incomplete records are a regeneration problem, not an imputation one."""
    records = list(records)
    if not records:
        raise ValidationError("aggregate needs at least one generation record")
    pair_list = sorted(set(pairs))
    m = len(records)
    for rec in records:
        for pair in pair_list:
            if pair not in rec.parsed:
                raise IncompleteGenerationError(
                    f"generation {rec.generation_index} is missing pair {pair}"
                )
    dists: dict[PairKey, LabelDistribution] = {}
    for pair in pair_list:
        counts = [0] * scheme.size
        for rec in records:
            counts[scheme.index(rec.parsed[pair])] += 1
        dists[pair] = LabelDistribution([c / m for c in counts], scheme)
    return DistributionSet(scheme=scheme, distributions=dists, generation_count=m)


def majority_vote(dist: DistributionSet) -> TemporalGraph:
    """Most frequent label per pair; exact ties fall back to vague, the same
    rule annotators use when they disagree."""
    scheme = dist.scheme
    labels: dict[PairKey, str] = {}
    for pair in dist.pairs():
        probs = dist[pair].probs
        top = max(probs)
        winners = [i for i, p in enumerate(probs) if abs(p - top) < 1e-12]
        if len(winners) == 1:
            labels[pair] = scheme.labels[winners[0]]
        else:
            labels[pair] = VAGUE
    return TemporalGraph(scheme=scheme, labels=labels)


def write_distributions(dist: DistributionSet, path, doc_id: str) -> None:
    """One line per pair: the pair key and its probability vector."""
    lines = ["# tempograph distributions v1"]
    lines.append(f"# doc_id={doc_id} scheme={dist.scheme.variant} generations={dist.generation_count}")
    lines.append("i\tj\t" + "\t".join(dist.scheme.labels))
    for (i, j) in dist.pairs():
        probs = "\t".join(repr(p) for p in dist[(i, j)].probs)
        lines.append(f"{i}\t{j}\t{probs}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_distributions(path) -> tuple[str, DistributionSet]:
    """Inverse of write_distributions; returns (doc_id, distribution set)."""
    from .core import scheme_by_name

    doc_id = ""
    scheme = None
    generations = 0
    dists: dict[PairKey, LabelDistribution] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("doc_id="):
                        doc_id = token.split("=", 1)[1]
                    elif token.startswith("scheme="):
                        scheme = scheme_by_name(token.split("=", 1)[1])
                    elif token.startswith("generations="):
                        generations = int(token.split("=", 1)[1])
                continue
            if line.startswith("i\t"):
                continue
            if scheme is None:
                raise ValidationError(f"{path}: missing scheme header line")
            cells = line.split("\t")
            if len(cells) != 2 + scheme.size:
                raise ValidationError(f"{path}: bad row {line!r}")
            i, j = int(cells[0]), int(cells[1])
            dists[(i, j)] = LabelDistribution([float(x) for x in cells[2:]], scheme)
    if scheme is None:
        raise ValidationError(f"{path}: no distribution rows found")
    return doc_id, DistributionSet(scheme=scheme, distributions=dists, generation_count=generations)
