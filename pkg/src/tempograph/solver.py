"""Globally consistent graph selection.

Maximizes agreement with the per-pair label distributions subject to
uniqueness (one label per pair), symmetry (by canonical pair orientation)
and transitivity (every ordered event triple must satisfy the composition
table). The search is an exact depth-first branch-and-bound over a
triangle-propagated constraint network: pairs are assigned in descending
confidence-margin order, values in descending probability order, domains are
kept arc-consistent over all triangles touching an assignment, and branches
whose optimistic bound (current score plus the best remaining feasible label
per unassigned pair) cannot beat the incumbent are cut.

A time limit turns the search into an anytime method: the best labeling
found so far is returned with ``optimal=False``, falling back to the greedy
repair pass if the search never completed a labeling.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .aggregate import DistributionSet
from .algebra import CompositionTable
from .core import PairKey, Scheme, TemporalGraph, VAGUE
from .errors import InfeasibleError, ValidationError


@dataclass
class SolveProblem:
    pairs: list[PairKey]
    dist: DistributionSet
    table: CompositionTable
    time_limit: Optional[float] = 30.0

    def __post_init__(self):
        if self.dist.scheme != self.table.scheme:
            raise ValidationError("distribution scheme does not match table scheme")
        have = set(self.dist.distributions)
        want = set(self.pairs)
        if have != want:
            raise ValidationError(
                f"distributions cover {len(have)} pairs, problem lists {len(want)}"
            )
        events = sorted({e for pair in self.pairs for e in pair})
        expected = {(events[i], events[j]) for i in range(len(events)) for j in range(i + 1, len(events))}
        if want != expected:
            raise ValidationError("pair set is not closed over its events")


@dataclass
class SolveResult:
    graph: TemporalGraph
    objective: float
    optimal: bool
    nodes_explored: int


class _Tables:
    """Bitmask machinery derived from a composition table.

    A triple (r, s, t) on the edges (i,j), (j,k), (i,k) of a triangle is
    jointly feasible when all three per-middle composition checks pass; the
    three union tables answer "which labels on one edge still have support
    from the current domains of the other two" in a single lookup.
    """

    def __init__(self, table: CompositionTable):
        scheme = table.scheme
        n = scheme.size
        self.n = n
        idx = {lab: i for i, lab in enumerate(scheme.labels)}
        inv = [idx[scheme.inverse(lab)] for lab in scheme.labels]
        allow = [[0] * n for _ in range(n)]
        for r in range(n):
            for s in range(n):
                mask = 0
                for t in table.allowed(scheme.labels[r], scheme.labels[s]):
                    mask |= 1 << idx[t]
                allow[r][s] = mask

        def feasible(r: int, s: int, t: int) -> bool:
            return (
                allow[r][s] >> t & 1
                and allow[inv[r]][t] >> s & 1
                and allow[t][inv[s]] >> r & 1
            )

        t_of = [[0] * n for _ in range(n)]  # [r][s] -> mask of t
        s_of = [[0] * n for _ in range(n)]  # [r][t] -> mask of s
        r_of = [[0] * n for _ in range(n)]  # [s][t] -> mask of r
        for r in range(n):
            for s in range(n):
                for t in range(n):
                    if feasible(r, s, t):
                        t_of[r][s] |= 1 << t
                        s_of[r][t] |= 1 << s
                        r_of[s][t] |= 1 << r

        size = 1 << n
        self.union_t = self._union(t_of, size)  # [mask_r][mask_s]
        self.union_s = self._union(s_of, size)  # [mask_r][mask_t]
        self.union_r = self._union(r_of, size)  # [mask_s][mask_t]

    @staticmethod
    def _union(per_label: list[list[int]], size: int) -> list[list[int]]:
        n = len(per_label)
        rows = [[0] * size for _ in range(n)]
        for a in range(n):
            row = rows[a]
            for mask in range(1, size):
                low = mask & -mask
                row[mask] = row[mask ^ low] | per_label[a][low.bit_length() - 1]
        out = [[0] * size for _ in range(size)]
        for mask_a in range(1, size):
            low = mask_a & -mask_a
            prev = out[mask_a ^ low]
            row = rows[low.bit_length() - 1]
            cur = out[mask_a]
            for mask_b in range(size):
                cur[mask_b] = prev[mask_b] | row[mask_b]
        return out


def _machinery(table: CompositionTable) -> _Tables:
    if table._solver_cache is None:
        table._solver_cache = _Tables(table)
    return table._solver_cache


class _Timeout(Exception):
    pass


class _State:
    """Search state shared by the exact search and the greedy repair."""

    def __init__(
        self,
        pairs: Sequence[PairKey],
        weights: dict[PairKey, Sequence[float]],
        scheme: Scheme,
        table: CompositionTable,
    ):
        self.scheme = scheme
        self.pairs = list(pairs)
        self.weights = [tuple(weights[p]) for p in self.pairs]
        self.machine = _machinery(table)
        n_labels = scheme.size
        self.full_mask = (1 << n_labels) - 1
        self.n_labels = n_labels

        index_of = {p: i for i, p in enumerate(self.pairs)}
        events = sorted({e for p in self.pairs for e in p})
        self.triangles: list[tuple[int, int, int]] = []  # (edge_ij, edge_jk, edge_ik)
        self.tri_by_edge: list[list[int]] = [[] for _ in self.pairs]
        for a in range(len(events)):
            for b in range(a + 1, len(events)):
                for c in range(b + 1, len(events)):
                    i, j, k = events[a], events[b], events[c]
                    tri = (index_of[(i, j)], index_of[(j, k)], index_of[(i, k)])
                    t_idx = len(self.triangles)
                    self.triangles.append(tri)
                    for edge in tri:
                        self.tri_by_edge[edge].append(t_idx)

        self.dom = [self.full_mask] * len(self.pairs)
        self.maxp = [max(w) for w in self.weights]
        self.bound = sum(self.maxp)
        self.trail: list[tuple[int, int, float]] = []

        # Value preference: descending probability, scheme order on ties.
        self.value_order = [
            sorted(range(n_labels), key=lambda l, w=w: (-w[l], l)) for w in self.weights
        ]

    def _max_feasible(self, edge: int) -> float:
        w = self.weights[edge]
        mask = self.dom[edge]
        best = 0.0
        for l in range(self.n_labels):
            if mask >> l & 1 and w[l] > best:
                best = w[l]
        return best

    def _set_dom(self, edge: int, mask: int) -> None:
        self.trail.append((edge, self.dom[edge], self.maxp[edge]))
        self.dom[edge] = mask
        new_max = self._max_feasible(edge)
        self.bound += new_max - self.maxp[edge]
        self.maxp[edge] = new_max

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            edge, mask, mp = self.trail.pop()
            self.dom[edge] = mask
            self.bound += mp - self.maxp[edge]
            self.maxp[edge] = mp

    def propagate(self, seed_edges: Sequence[int]) -> Optional[tuple[int, int]]:
        """Arc consistency over all triangles reachable from the seed edges.

        Returns None on success, or (emptied_edge, triangle_index) on a dead
        end; the caller is responsible for unwinding the trail.
        """
        machine = self.machine
        dom = self.dom
        queue: list[int] = []
        queued: set[int] = set()
        for edge in seed_edges:
            for t_idx in self.tri_by_edge[edge]:
                if t_idx not in queued:
                    queued.add(t_idx)
                    queue.append(t_idx)
        while queue:
            t_idx = queue.pop()
            queued.discard(t_idx)
            e_rs = self.triangles[t_idx]
            e1, e2, e3 = e_rs
            m1, m2, m3 = dom[e1], dom[e2], dom[e3]
            changed: list[int] = []
            n3 = m3 & machine.union_t[m1][m2]
            if n3 != m3:
                if not n3:
                    return e3, t_idx
                self._set_dom(e3, n3)
                m3 = n3
                changed.append(e3)
            n2 = m2 & machine.union_s[m1][m3]
            if n2 != m2:
                if not n2:
                    return e2, t_idx
                self._set_dom(e2, n2)
                m2 = n2
                changed.append(e2)
            n1 = m1 & machine.union_r[m2][m3]
            if n1 != m1:
                if not n1:
                    return e1, t_idx
                self._set_dom(e1, n1)
                changed.append(e1)
            for edge in changed:
                for other in self.tri_by_edge[edge]:
                    if other not in queued:
                        queued.add(other)
                        queue.append(other)
        return None

    def assign(self, edge: int, label: int) -> Optional[tuple[int, int]]:
        self._set_dom(edge, 1 << label)
        return self.propagate([edge])

    def selected_labels(self) -> list[int]:
        out = []
        for edge, mask in enumerate(self.dom):
            if mask & (mask - 1):
                raise InfeasibleError(f"edge {self.pairs[edge]} still has {bin(mask)} options")
            out.append(mask.bit_length() - 1)
        return out

    def graph_from(self, labels: Sequence[int]) -> TemporalGraph:
        return TemporalGraph(
            scheme=self.scheme,
            labels={p: self.scheme.labels[l] for p, l in zip(self.pairs, labels)},
        )

    def objective_of(self, labels: Sequence[int]) -> float:
        return sum(w[l] for w, l in zip(self.weights, labels))


def solve_weights(
    pairs: Sequence[PairKey],
    weights: dict[PairKey, Sequence[float]],
    scheme: Scheme,
    table: CompositionTable,
    time_limit: Optional[float] = 30.0,
) -> SolveResult:
    """Exact search over raw per-pair label weights (need not sum to one)."""
    state = _State(pairs, weights, scheme, table)
    if not state.pairs:
        return SolveResult(TemporalGraph(scheme=scheme, labels={}), 0.0, True, 0)

    def margin(e: int) -> float:
        top_two = sorted(state.weights[e], reverse=True)[:2]
        return top_two[0] - top_two[1]

    order = sorted(range(len(state.pairs)), key=lambda e: (-margin(e), state.pairs[e]))
    deadline = None if time_limit is None else time.monotonic() + time_limit
    best_labels: Optional[list[int]] = None
    best_score = float("-inf")
    nodes = 0
    timed_out = False

    def search(depth: int) -> None:
        nonlocal best_labels, best_score, nodes
        if state.bound <= best_score:
            return
        while depth < len(order) and state.dom[order[depth]] & (state.dom[order[depth]] - 1) == 0:
            depth += 1
        if depth == len(order):
            best_score = state.bound
            best_labels = state.selected_labels()
            return
        edge = order[depth]
        for label in state.value_order[edge]:
            if not state.dom[edge] >> label & 1:
                continue
            nodes += 1
            if deadline is not None and nodes % 256 == 0 and time.monotonic() > deadline:
                raise _Timeout
            mark = len(state.trail)
            dead = state.assign(edge, label)
            if dead is None and state.bound > best_score:
                search(depth + 1)
            state.undo_to(mark)

    try:
        search(0)
        optimal = True
    except _Timeout:
        optimal = False
        timed_out = True

    if best_labels is None:
        if timed_out:
            greedy = greedy_repair_weights(pairs, weights, scheme, table)
            return SolveResult(greedy.graph, greedy.objective, False, nodes + greedy.nodes_explored)
        raise InfeasibleError("no consistent labeling exists; composition table lacks vague totality")
    graph = state.graph_from(best_labels)
    return SolveResult(graph, state.objective_of(best_labels), optimal, nodes)


def greedy_repair_weights(
    pairs: Sequence[PairKey],
    weights: dict[PairKey, Sequence[float]],
    scheme: Scheme,
    table: CompositionTable,
) -> SolveResult:
    """Confidence-ordered greedy assignment with triangle propagation.

    Pairs are taken in descending order of their best label's weight and
    pinned to the most probable label still feasible. On a dead end the
    assignment restarts with the guiltiest premise edge of the witnessing
    triangle forced to vague; the forced set only grows, and the all-vague
    labeling is always consistent, so this terminates.
    """
    pair_list = sorted(set(pairs))
    if not pair_list:
        return SolveResult(TemporalGraph(scheme=scheme, labels={}), 0.0, True, 0)
    vague_idx = scheme.index(VAGUE)
    forced: set[int] = set()
    nodes = 0
    while True:
        state = _State(pair_list, weights, scheme, table)
        order = sorted(range(len(pair_list)), key=lambda e: (-max(state.weights[e]), state.pairs[e]))
        dead: Optional[tuple[int, int]] = None
        for edge in forced:
            state._set_dom(edge, 1 << vague_idx)
        if forced:
            dead = state.propagate(sorted(forced))
        if dead is None:
            for edge in order:
                mask = state.dom[edge]
                if mask & (mask - 1) == 0:
                    continue
                placed = False
                for label in state.value_order[edge]:
                    if not mask >> label & 1:
                        continue
                    nodes += 1
                    mark = len(state.trail)
                    dead = state.assign(edge, label)
                    if dead is None:
                        placed = True
                        break
                    state.undo_to(mark)
                    mask &= ~(1 << label)
                if not placed:
                    break
            else:
                labels = state.selected_labels()
                return SolveResult(
                    state.graph_from(labels), state.objective_of(labels), False, nodes
                )
        # Dead end: vague-force the least confident premise edge of the
        # witnessing triangle and start over. At least one premise is not yet
        # forced, since two vague premises cannot empty a domain.
        emptied, t_idx = dead
        culprit = None
        for cand in state.triangles[t_idx]:
            if cand == emptied or cand in forced:
                continue
            if culprit is None or max(state.weights[cand]) < max(state.weights[culprit]):
                culprit = cand
        if culprit is None:
            raise InfeasibleError("all premises of a violated triangle are already vague")
        forced.add(culprit)


def solve(problem: SolveProblem) -> SolveResult:
    """Optimal consistent graph for a distribution set (see module docs)."""
    weights = {p: problem.dist[p].probs for p in problem.pairs}
    return solve_weights(
        problem.pairs, weights, problem.dist.scheme, problem.table, problem.time_limit
    )


def greedy_repair(problem: SolveProblem) -> SolveResult:
    weights = {p: problem.dist[p].probs for p in problem.pairs}
    return greedy_repair_weights(problem.pairs, weights, problem.dist.scheme, problem.table)


SolverFn = Callable[[SolveProblem], SolveResult]

BACKENDS: dict[str, SolverFn] = {
    "branch-and-bound": solve,
    "greedy": greedy_repair,
}


def get_backend(name: str) -> SolverFn:
    """Solver registry; external ILP backends can register here without
    touching any caller."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValidationError(f"unknown solver backend {name!r}") from None
