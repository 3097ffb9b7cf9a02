"""Interval algebra over the 13 basic interval relations.

This is the internal derivation engine for the reduced relation schemes; it
is not a user-facing feature. The composition table is computed once by
enumerating all placements of three intervals with endpoints drawn from a
small integer domain. Six distinct values are enough to realize every
ordering-with-ties of the six endpoints involved, so the enumerated table is
exact, not an approximation.
"""

from functools import lru_cache
from itertools import combinations

# Basic relations between intervals A and B, Allen's classic short names.
B, BI = "b", "bi"  # A wholly before / after B
M, MI = "m", "mi"  # A meets / is met by B
O, OI = "o", "oi"  # A overlaps / is overlapped by B
S, SI = "s", "si"  # A starts / is started by B
D, DI = "d", "di"  # A during / contains B
F, FI = "f", "fi"  # A finishes / is finished by B
E = "e"            # A equals B

RELATIONS = (B, BI, M, MI, O, OI, S, SI, D, DI, F, FI, E)

CONVERSE = {
    B: BI, BI: B,
    M: MI, MI: M,
    O: OI, OI: O,
    S: SI, SI: S,
    D: DI, DI: D,
    F: FI, FI: F,
    E: E,
}


def classify(a_start: int, a_end: int, b_start: int, b_end: int) -> str:
    """Basic relation of interval A to interval B (starts strictly < ends)."""
    if a_end < b_start:
        return B
    if b_end < a_start:
        return BI
    if a_end == b_start:
        return M
    if b_end == a_start:
        return MI
    if a_start == b_start and a_end == b_end:
        return E
    if a_start == b_start:
        return S if a_end < b_end else SI
    if a_end == b_end:
        return F if a_start > b_start else FI
    if a_start > b_start and a_end < b_end:
        return D
    if a_start < b_start and a_end > b_end:
        return DI
    if a_start < b_start:
        return O
    return OI


@lru_cache(maxsize=1)
def composition_table() -> dict[tuple[str, str], frozenset[str]]:
    """The 13x13 composition table, enumerated from concrete intervals.

    compose(r, s) is the set of relations A may bear to C given A r B and
    B s C for some placement of the three intervals.
    """
    intervals = list(combinations(range(6), 2))
    found: dict[tuple[str, str], set[str]] = {}
    for a in intervals:
        for b in intervals:
            r = classify(a[0], a[1], b[0], b[1])
            for c in intervals:
                s = classify(b[0], b[1], c[0], c[1])
                t = classify(a[0], a[1], c[0], c[1])
                found.setdefault((r, s), set()).add(t)
    table = {key: frozenset(vals) for key, vals in found.items()}
    assert len(table) == len(RELATIONS) ** 2, "endpoint domain failed to cover all relation pairs"
    return table


def compose(r: str, s: str) -> frozenset[str]:
    return composition_table()[(r, s)]
