"""Parse model-emitted DOT relation graphs and serialize graphs back out.

The accepted grammar is deliberately small and forgiving: the model output
is scanned for the last balanced ``digraph``/``graph`` block (anything
before it, like a free-form timeline, is ignored), and inside that block
only edge statements are interpreted. Node tokens may look like ``name_7``,
``name(7)``, ``"attack(7)"`` or a bare ``7`` — the trailing integer is the
event id. Everything else inside the block is skipped with a warning.
"""

import logging
import re
from dataclasses import dataclass

from .core import Document, PairKey, Scheme, TemporalGraph, orient
from .errors import DotParseError

log = logging.getLogger(__name__)

GRAMMAR_VERSION = "1"

_KEYWORD = re.compile(r"\b(digraph|graph)\b", re.IGNORECASE)
_EDGE = re.compile(
    r"""(?P<src>"[^"]*"|[\w().$-]+)\s*(?:->|--)\s*(?P<dst>"[^"]*"|[\w().$-]+)\s*(?P<attrs>\[[^\]]*\])?""",
)
_LABEL_ATTR = re.compile(r"""label\s*=\s*(?:"(?P<quoted>[^"]*)"|(?P<bare>[\w-]+))""", re.IGNORECASE)
_TRAILING_INT = re.compile(r"(\d+)\D*$")


@dataclass(frozen=True)
class ParsedEdge:
    source_id: int
    target_id: int
    label: str


def extract_dot_block(raw: str) -> str:
    """The last complete graph block in the raw output.

    A block starts at a ``digraph``/``graph`` keyword (optionally followed
    by a name) and runs through the matching closing brace; quoted strings
    inside are honored when balancing.
    """
    starts = [m for m in _KEYWORD.finditer(raw)]
    for match in reversed(starts):
        brace = _find_open_brace(raw, match.end())
        if brace is None:
            continue
        end = _find_balanced_close(raw, brace)
        if end is not None:
            return raw[match.start() : end + 1]
    raise DotParseError("no balanced digraph/graph block found", raw=raw)


def _find_open_brace(raw: str, pos: int):
    # Allow one optional graph name token (quoted or bare) before the brace.
    m = re.match(r"""\s*(?:"[^"]*"|[\w.-]+)?\s*\{""", raw[pos:])
    if m is None:
        return None
    return pos + m.end() - 1


def _find_balanced_close(raw: str, open_pos: int):
    depth = 0
    in_string = False
    i = open_pos
    while i < len(raw):
        ch = raw[i]
        if in_string:
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return None


def _node_id(token: str) -> int:
    token = token.strip().strip('"')
    m = _TRAILING_INT.search(token)
    if m is None:
        raise DotParseError(f"node token {token!r} carries no event id")
    return int(m.group(1))


def normalize_label(text: str, scheme: Scheme) -> str:
    """Case- and punctuation-insensitive match against the scheme labels."""
    folded = re.sub(r"[\s_-]+", "", text).lower()
    for label in scheme.labels:
        if folded == re.sub(r"[\s_-]+", "", label).lower():
            return label
    raise DotParseError(f"unknown relation label {text!r} for {scheme.variant} scheme")


def parse_edges(dot: str, doc: Document, scheme: Scheme) -> list[ParsedEdge]:
    """Edge statements of an extracted block, ids resolved against the doc.

    Later statements for the same pair override earlier ones; self-edges are
    dropped with a warning.
    """
    body_start = dot.find("{")
    body_end = dot.rfind("}")
    if body_start < 0 or body_end < body_start:
        raise DotParseError("not a graph block", raw=dot)
    body = dot[body_start + 1 : body_end]
    known_ids = {e.event_id for e in doc.events}
    edges: list[ParsedEdge] = []
    for m in _EDGE.finditer(body):
        attrs = m.group("attrs")
        if attrs is None:
            log.warning("%s: edge statement without attributes skipped: %r", doc.doc_id, m.group(0))
            continue
        label_m = _LABEL_ATTR.search(attrs)
        if label_m is None:
            log.warning("%s: edge without label attribute skipped: %r", doc.doc_id, m.group(0))
            continue
        src = _node_id(m.group("src"))
        dst = _node_id(m.group("dst"))
        if src not in known_ids:
            raise DotParseError(f"edge references unknown event id {src}", raw=dot)
        if dst not in known_ids:
            raise DotParseError(f"edge references unknown event id {dst}", raw=dot)
        label = normalize_label(label_m.group("quoted") or label_m.group("bare") or "", scheme)
        if src == dst:
            log.warning("%s: self-edge on event %d dropped", doc.doc_id, src)
            continue
        edges.append(ParsedEdge(source_id=src, target_id=dst, label=label))
    return edges


def to_record(
    edges: list[ParsedEdge],
    requested_pairs: list[PairKey],
    generation_index: int,
    raw: str,
):
    """Build a GenerationRecord: orient edges, keep requested pairs only.

    Coverage shortfall is data for the regeneration loop, not an error here.
    """
    from .aggregate import GenerationRecord

    requested = frozenset(requested_pairs)
    parsed: dict[PairKey, str] = {}
    for edge in edges:
        key, label = orient((edge.source_id, edge.target_id), edge.label)
        if key not in requested:
            log.warning("unrequested pair %s ignored", key)
            continue
        if key in parsed and parsed[key] != label:
            log.warning("conflicting duplicate for pair %s: %s -> %s", key, parsed[key], label)
        parsed[key] = label
    return GenerationRecord(
        generation_index=generation_index,
        raw_output=raw,
        parsed=parsed,
        requested=requested,
    )


def parse_generation(raw: str, doc: Document, scheme: Scheme, requested_pairs: list[PairKey], generation_index: int):
    """extract -> parse -> record, the shape the gateway's validator wants."""
    block = extract_dot_block(raw)
    edges = parse_edges(block, doc, scheme)
    return to_record(edges, requested_pairs, generation_index, raw)


def graph_to_dot(graph: TemporalGraph, name: str = "temporal") -> str:
    """Canonical DOT serialization: one edge statement per pair, sorted."""
    safe = re.sub(r"[^\w]", "_", name) or "temporal"
    lines = [f"digraph {safe} {{"]
    for (i, j) in sorted(graph.labels):
        lines.append(f'  e{i} -> e{j} [label="{graph.labels[(i, j)]}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_graph_file(text: str, scheme: Scheme) -> TemporalGraph:
    """Read back a graph written by graph_to_dot (no document needed)."""
    block = extract_dot_block(text)
    body = block[block.find("{") + 1 : block.rfind("}")]
    labels: dict[PairKey, str] = {}
    for m in _EDGE.finditer(body):
        attrs = m.group("attrs")
        if attrs is None:
            continue
        label_m = _LABEL_ATTR.search(attrs)
        if label_m is None:
            continue
        src = _node_id(m.group("src"))
        dst = _node_id(m.group("dst"))
        if src == dst:
            continue
        key, label = orient(
            (src, dst), normalize_label(label_m.group("quoted") or label_m.group("bare") or "", scheme)
        )
        labels[key] = label
    return TemporalGraph(scheme=scheme, labels=labels)
