"""Relation algebra for the reduced label schemes.

Builds the scheme-level composition table by projecting interval-algebra
compositions onto the reduced vocabularies, and provides transitive closure
and the transitive-inconsistency count on top of it.

Table semantics: vague rows and columns are unconstrained (a vague premise
forces nothing). In the default strict table, vague is only admitted as a
conclusion where the composition is genuinely ambiguous; ``soft_vague=True``
adds vague to every composition set instead, for sensitivity analysis.
"""

from dataclasses import dataclass, field
from typing import Optional

from . import allen
from .core import (
    AFTER,
    BEFORE,
    EQUAL,
    INCLUDES,
    IS_INCLUDED,
    PairKey,
    Scheme,
    TemporalGraph,
    VAGUE,
    inverse,
)
from .errors import ValidationError

TABLE_VERSION = "1"

# Interval-relation buckets giving each reduced label its meaning. The four
# scheme compares start times only; the six scheme uses full containment,
# with the two proper-overlap relations folded into vague (the six-label
# vocabulary has no overlap bucket).
_FOUR_BUCKETS = {
    BEFORE: frozenset({allen.B, allen.M, allen.O, allen.FI, allen.DI}),
    AFTER: frozenset({allen.BI, allen.MI, allen.OI, allen.F, allen.D}),
    EQUAL: frozenset({allen.E, allen.S, allen.SI}),
}
_SIX_BUCKETS = {
    BEFORE: frozenset({allen.B, allen.M}),
    AFTER: frozenset({allen.BI, allen.MI}),
    EQUAL: frozenset({allen.E}),
    INCLUDES: frozenset({allen.DI, allen.SI, allen.FI}),
    IS_INCLUDED: frozenset({allen.D, allen.S, allen.F}),
}
_SIX_OVERLAP = frozenset({allen.O, allen.OI})


def interval_buckets(scheme: Scheme) -> dict[str, frozenset[str]]:
    return _FOUR_BUCKETS if scheme.variant == "four" else _SIX_BUCKETS


@dataclass
class CompositionTable:
    """Allowed conclusion labels for every ordered premise pair."""

    scheme: Scheme
    table: dict[tuple[str, str], frozenset[str]]
    soft_vague: bool = False
    version: str = TABLE_VERSION
    _solver_cache: Optional[object] = field(default=None, repr=False, compare=False)

    def allowed(self, r: str, s: str) -> frozenset[str]:
        return self.table[(r, s)]

    def dump_text(self) -> str:
        """Plain-text matrix of the table, rows = first premise."""
        labels = self.scheme.labels
        width = max(len(lab) for lab in labels)
        full = frozenset(labels)

        def cell(values: frozenset[str]) -> str:
            if values == full:
                return "*"
            return ",".join(lab for lab in labels if lab in values)

        cells = [[cell(self.table[(r, s)]) for s in labels] for r in labels]
        col_w = [
            max(len(labels[j]), max(len(row[j]) for row in cells))
            for j in range(len(labels))
        ]
        lines = [
            f"composition table: {self.scheme.variant} scheme, "
            f"{'soft' if self.soft_vague else 'strict'} vague, version {self.version}",
            "(* = unconstrained)",
            " " * (width + 2) + "  ".join(labels[j].ljust(col_w[j]) for j in range(len(labels))),
        ]
        for i, r in enumerate(labels):
            lines.append(
                r.ljust(width + 2) + "  ".join(cells[i][j].ljust(col_w[j]) for j in range(len(labels)))
            )
        return "\n".join(lines)


def build_table(scheme: Scheme, soft_vague: bool = False) -> CompositionTable:
    """Derive the reduced composition table from the interval algebra.

    Each non-vague premise pair composes through interval relations; a
    conclusion label is allowed when its bucket intersects the composed set.
    Vague premises constrain nothing, so their rows and columns are full.
    """
    buckets = interval_buckets(scheme)
    overlap = _SIX_OVERLAP if scheme.variant == "six" else frozenset()
    full = frozenset(scheme.labels)
    table: dict[tuple[str, str], frozenset[str]] = {}
    for r in scheme.labels:
        for s in scheme.labels:
            if r == VAGUE or s == VAGUE:
                table[(r, s)] = full
                continue
            composed: set[str] = set()
            for ar in buckets[r]:
                for as_ in buckets[s]:
                    composed |= allen.compose(ar, as_)
            members = {lab for lab, bucket in buckets.items() if bucket & composed}
            if soft_vague or len(members) >= 2 or composed & overlap:
                members.add(VAGUE)
            table[(r, s)] = frozenset(members)
    return CompositionTable(scheme=scheme, table=table, soft_vague=soft_vague)


@dataclass(frozen=True)
class InferredEdge:
    """A pair constrained by chaining labeled edges: the surviving label set
    and the length (in original edges) of the shortest witnessing chain."""

    pair: PairKey
    labels: frozenset[str]
    path_length: int


def transitive_closure(graph: TemporalGraph, table: CompositionTable) -> list[InferredEdge]:
    """Constraints on unlabeled pairs inferable from the labeled ones.

    Runs path-consistency relaxation over ordered triples to fixpoint.
    Labeled edges are premises only and are never revised; vague labels are
    unconstraining, so only chains of non-vague labels infer anything. On a
    contradictory input graph an inferred set may come out empty; callers
    that need consistency should check the inconsistency count first.
    """
    events = graph.event_ids()
    if len(events) < 2:
        return []
    full = frozenset(table.scheme.labels)
    allowed: dict[PairKey, frozenset[str]] = {}
    plen: dict[PairKey, int] = {}
    known: set[PairKey] = set(graph.labels)
    for a_i in range(len(events)):
        for b_i in range(a_i + 1, len(events)):
            pair = (events[a_i], events[b_i])
            if pair in known:
                allowed[pair] = frozenset({graph.labels[pair]})
                plen[pair] = 1
            else:
                allowed[pair] = full

    def get_dir(x: int, y: int) -> frozenset[str]:
        if x < y:
            return allowed[(x, y)]
        return frozenset(inverse(t) for t in allowed[(y, x)])

    progress = True
    while progress:
        progress = False
        for a in events:
            for b in events:
                if b == a:
                    continue
                for c in events:
                    if c == a or c == b or a > c:
                        continue
                    target = (a, c)
                    if target in known:
                        continue
                    r_set = get_dir(a, b)
                    s_set = get_dir(b, c)
                    composed: set[str] = set()
                    for r in r_set:
                        for s in s_set:
                            composed |= table.allowed(r, s)
                        if len(composed) == len(full):
                            break
                    if len(composed) == len(full):
                        continue
                    new = allowed[target] & composed
                    if new != allowed[target]:
                        allowed[target] = new
                        progress = True
                    key_ab = (a, b) if a < b else (b, a)
                    key_bc = (b, c) if b < c else (c, b)
                    if key_ab in plen and key_bc in plen:
                        cand = plen[key_ab] + plen[key_bc]
                        if target not in plen or cand < plen[target]:
                            plen[target] = cand
                            progress = True
    out = []
    for pair, labels in sorted(allowed.items()):
        if pair in known or labels == full:
            continue
        out.append(InferredEdge(pair=pair, labels=labels, path_length=plen.get(pair, 0)))
    return out


def count_transitive_inconsistencies(graph: TemporalGraph, table: CompositionTable) -> int:
    """Number of edges whose label violates some witnessed composition.

    An edge (i, k) offends when some middle event j carries non-vague labels
    r on (i, j) and s on (j, k) with the edge's label outside allowed(r, s).
    Each offending edge counts once however many triangles witness it.
    """
    events = graph.event_ids()
    labels = graph.labels
    count = 0
    for (i, k), t in labels.items():
        for j in events:
            if j == i or j == k:
                continue
            key_ij = (i, j) if i < j else (j, i)
            key_jk = (j, k) if j < k else (k, j)
            if key_ij not in labels or key_jk not in labels:
                continue
            r = labels[key_ij] if i < j else inverse(labels[key_ij])
            s = labels[key_jk] if j < k else inverse(labels[key_jk])
            if r == VAGUE or s == VAGUE:
                continue
            if t not in table.allowed(r, s):
                count += 1
                break
    return count


def ti_per_document(graphs: list[TemporalGraph], table: CompositionTable) -> float:
    """Mean inconsistency count over a list of document graphs."""
    if not graphs:
        raise ValidationError("ti_per_document needs at least one graph")
    return sum(count_transitive_inconsistencies(g, table) for g in graphs) / len(graphs)
