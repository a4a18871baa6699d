# services/switching.py
"""
Interval-state graph and optimal switching between processing anchors.

Vertex (i, s) means "in state s at the start of interval i". The graph holds
(1, off), (h + 1, off) and (i, s) for every interval 2..h and state s. An edge
(i, s) -> (i + T[s][t], t) spends the intervals i .. i + T - 1 in transition
s->t; zero-duration transitions stay in the same layer and weigh nothing.

spaces() runs one single-source shortest path per anchor interval:
- anchor 1 starts at (2, off): sigma(1, i') is the cheapest way to be
  processing at interval i' after the mandatory off interval 1;
- anchor i >= 2 starts at (i + 1, proc): sigma(i, i') reaches (i', proc) and
  sigma(i, h) reaches (h, off).
Labels are (cost, transitions) compared lexicographically, so among
equal-cost paths the one with fewer transitions wins; remaining ties pick the
predecessor with the smaller state index. Dijkstra is used when every price is
non-negative, a layer-ordered Bellman-Ford otherwise.
"""
from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
import structlog

from core.errors import InfeasibleSequence, MalformedBehavior
from models.instance import Instance, Label, TransitionDiagram, format_rational
from services.costs import CostModel

logger = structlog.get_logger(__name__)

Vertex = Tuple[int, int]
Edge = Tuple[Vertex, Vertex, int, Label, int]


def iter_edges(instance: Instance, costs: CostModel) -> Iterator[Edge]:
    """Yield (tail, head, scaled weight, label, duration) for every graph edge."""
    h = instance.horizon
    diagram = instance.diagram
    off = diagram.off_index
    yield (1, off), (2, off), costs.boundary_cost(1), (off, off), 1
    for i in range(2, h + 1):
        for s in range(diagram.size):
            for t in range(diagram.size):
                duration = diagram.time(s, t)
                if duration is None:
                    continue
                if duration == 0:
                    yield (i, s), (i, t), 0, (s, t), 0
                elif i + duration <= h:
                    yield (i, s), (i + duration, t), costs.weight(s, t, i, duration), (s, t), duration
    yield (h, off), (h + 1, off), costs.boundary_cost(h), (off, off), 1


@dataclass
class IntervalStateGraph:
    horizon: int
    diagram: TransitionDiagram
    graph: nx.DiGraph

    @property
    def vertex_count(self) -> int:
        return self.graph.number_of_nodes()

    def reachable_from(self, vertex: Vertex) -> set:
        return nx.descendants(self.graph, vertex) | {vertex}

    def reaching(self, vertex: Vertex) -> set:
        return nx.ancestors(self.graph, vertex) | {vertex}


def build_graph(instance: Instance, costs: Optional[CostModel] = None) -> IntervalStateGraph:
    costs = costs or CostModel(instance)
    h = instance.horizon
    diagram = instance.diagram
    graph = nx.DiGraph()
    graph.add_node((1, diagram.off_index))
    for i in range(2, h + 1):
        graph.add_nodes_from((i, s) for s in range(diagram.size))
    graph.add_node((h + 1, diagram.off_index))
    for tail, head, weight, label, duration in iter_edges(instance, costs):
        graph.add_edge(tail, head, weight=weight, label=label, duration=duration)
    return IntervalStateGraph(horizon=h, diagram=diagram, graph=graph)


class _Adjacency:
    """Integer-indexed adjacency (vertex id = layer * |S| + state) used by the path searches."""

    def __init__(self, instance: Instance, costs: CostModel):
        self.states = instance.diagram.size
        self.layers = instance.horizon + 2
        size = self.layers * self.states
        self.out: List[List[Tuple[int, int]]] = [[] for _ in range(size)]
        self.into: List[List[Tuple[int, int]]] = [[] for _ in range(size)]
        self.zero: List[List[Tuple[int, int]]] = [[] for _ in range(self.layers)]
        for (i, s), (j, t), weight, _, duration in iter_edges(instance, costs):
            u, v = i * self.states + s, j * self.states + t
            self.out[u].append((v, weight))
            self.into[v].append((u, weight))
            if duration == 0:
                self.zero[i].append((u, v))

    @property
    def size(self) -> int:
        return self.layers * self.states


def _dijkstra(adj: _Adjacency, source: int) -> List[Optional[Tuple[int, int]]]:
    dist: List[Optional[Tuple[int, int]]] = [None] * adj.size
    dist[source] = (0, 0)
    heap = [(0, 0, source)]
    while heap:
        d, k, u = heapq.heappop(heap)
        if (d, k) > dist[u]:
            continue
        for v, w in adj.out[u]:
            cand = (d + w, k + 1)
            if dist[v] is None or cand < dist[v]:
                dist[v] = cand
                heapq.heappush(heap, (cand[0], cand[1], v))
    return dist


def _bellman_ford_layered(adj: _Adjacency, source: int) -> List[Optional[Tuple[int, int]]]:
    dist: List[Optional[Tuple[int, int]]] = [None] * adj.size
    dist[source] = (0, 0)
    for layer in range(source // adj.states, adj.layers):
        # zero-duration transitions stay inside the layer; weights are 0 so this settles
        changed = True
        while changed:
            changed = False
            for u, v in adj.zero[layer]:
                du = dist[u]
                if du is None:
                    continue
                cand = (du[0], du[1] + 1)
                if dist[v] is None or cand < dist[v]:
                    dist[v] = cand
                    changed = True
        base = layer * adj.states
        for u in range(base, base + adj.states):
            du = dist[u]
            if du is None:
                continue
            for v, w in adj.out[u]:
                if v < base + adj.states:
                    continue
                cand = (du[0] + w, du[1] + 1)
                if dist[v] is None or cand < dist[v]:
                    dist[v] = cand
    return dist


def _parent_states(adj: _Adjacency, dist: List[Optional[Tuple[int, int]]], source: int) -> np.ndarray:
    parents = np.full((adj.layers, adj.states), -1, dtype=np.int16)
    first = (source // adj.states) * adj.states
    for v in range(first, adj.size):
        dv = dist[v]
        if dv is None or v == source:
            continue
        best = -1
        for u, w in adj.into[v]:
            du = dist[u]
            if du is None or (du[0] + w, du[1] + 1) != dv:
                continue
            s = u % adj.states
            if best < 0 or s < best:
                best = s
        parents[v // adj.states, v % adj.states] = best
    return parents


class SwitchingTable:
    """Optimal switching costs sigma(i, i') and behaviors between anchors.

    `sigma` is a dense (h + 1) x (h + 1) array of scaled costs; entries that
    are not defined hold `costs.INF`.
    """

    def __init__(
        self,
        instance: Instance,
        costs: CostModel,
        sigma: np.ndarray,
        parents: Dict[int, np.ndarray],
        algorithm: str,
        elapsed: float,
    ):
        self.instance = instance
        self.costs = costs
        self.sigma = sigma
        self._parents = parents
        self.algorithm = algorithm
        self.elapsed = elapsed

    @property
    def horizon(self) -> int:
        return self.instance.horizon

    def raw(self, i: int, i_next: int) -> int:
        return int(self.sigma[i, i_next])

    def is_defined(self, i: int, i_next: int) -> bool:
        if not (1 <= i < i_next <= self.horizon):
            return False
        return not self.costs.is_absent(self.sigma[i, i_next])

    def cost(self, i: int, i_next: int) -> Optional[Fraction]:
        if not self.is_defined(i, i_next):
            return None
        return self.costs.to_rational(self.sigma[i, i_next])

    def defined_pairs(self) -> Iterator[Tuple[int, int]]:
        h = self.horizon
        for i in range(1, h):
            for i_next in range(i + 1, h + 1):
                if self.is_defined(i, i_next):
                    yield i, i_next

    def behavior(self, i: int, i_next: int) -> Optional[Tuple[Label, ...]]:
        """Labels of intervals i + 1 .. i' - 1 (2 .. i' - 1 for anchor 1), or None when undefined."""
        if not self.is_defined(i, i_next):
            return None
        diagram = self.instance.diagram
        off, proc = diagram.off_index, diagram.proc_index
        source = (2, off) if i == 1 else (i + 1, proc)
        layer, state = (self.horizon, off) if i_next == self.horizon else (i_next, proc)
        parents = self._parents[i]
        labels: List[Label] = []
        while (layer, state) != source:
            prev = int(parents[layer, state])
            if prev < 0:
                raise MalformedBehavior(f"broken parent chain for sigma({i}, {i_next}) at ({layer}, {state})")
            duration = diagram.time(prev, state)
            labels.extend([(prev, state)] * duration)
            layer -= duration
            state = prev
        labels.reverse()
        return tuple(labels)

    def stitch(self, segments: Sequence[Tuple[int, int]]) -> Tuple[Label, ...]:
        """Full Omega for processing segments given as ordered (start, length) pairs."""
        if not segments:
            raise InfeasibleSequence("no processing segments to stitch")
        diagram = self.instance.diagram
        off, proc = diagram.off_index, diagram.proc_index
        omega: List[Label] = [(off, off)]
        anchor = 1
        for start, length in segments:
            gap = self.behavior(anchor, start)
            if gap is None:
                raise InfeasibleSequence(f"no switching from interval {anchor} to a processing start at {start}")
            omega.extend(gap)
            omega.extend([(proc, proc)] * length)
            anchor = start + length - 1
        tail = self.behavior(anchor, self.horizon)
        if tail is None:
            raise InfeasibleSequence(f"machine cannot be switched off after interval {anchor}")
        omega.extend(tail)
        omega.append((off, off))
        return tuple(omega)

    def dump_csv(self, path) -> None:
        rows = [
            {"i": i, "i_prime": j, "sigma_star": format_rational(self.costs.to_rational(self.sigma[i, j]))}
            for i, j in self.defined_pairs()
        ]
        pd.DataFrame(rows, columns=["i", "i_prime", "sigma_star"]).to_csv(path, index=False)

    def dump_behaviors(self, path) -> None:
        names = self.instance.diagram.states
        payload = {
            f"{i},{j}": [[names[a], names[b]] for a, b in self.behavior(i, j)]
            for i, j in self.defined_pairs()
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)


def spaces(instance: Instance, costs: Optional[CostModel] = None) -> SwitchingTable:
    """Shortest-path trees from every anchor; fills sigma for the three anchor cases."""
    start = time.perf_counter()
    costs = costs or CostModel(instance)
    h = instance.horizon
    diagram = instance.diagram
    off, proc = diagram.off_index, diagram.proc_index
    adj = _Adjacency(instance, costs)
    states = adj.states
    algorithm = "bellman-ford" if costs.has_negative_costs else "dijkstra"
    search = _bellman_ford_layered if costs.has_negative_costs else _dijkstra

    sigma = np.full((h + 1, h + 1), costs.INF, dtype=costs.dtype)
    parents: Dict[int, np.ndarray] = {}
    for anchor in range(1, h):
        source = 2 * states + off if anchor == 1 else (anchor + 1) * states + proc
        dist = search(adj, source)
        for target in range(anchor + 1, h):
            label = dist[target * states + proc]
            if label is not None:
                sigma[anchor, target] = label[0]
        if anchor > 1:
            label = dist[h * states + off]
            if label is not None:
                sigma[anchor, h] = label[0]
        parents[anchor] = _parent_states(adj, dist, source)

    elapsed = time.perf_counter() - start
    logger.debug("spaces.done", horizon=h, states=states, algorithm=algorithm, elapsed=round(elapsed, 4))
    return SwitchingTable(instance, costs, sigma, parents, algorithm, elapsed)


def replay(behavior: Sequence[Label], i: int, i_next: int, instance: Instance) -> Fraction:
    """Energy of a switching behavior between anchors i and i', checked against the diagram."""
    diagram = instance.diagram
    h = instance.horizon
    off, proc = diagram.off_index, diagram.proc_index
    first = 2 if i == 1 else i + 1
    if len(behavior) != i_next - first:
        raise MalformedBehavior(
            f"behavior has {len(behavior)} labels but intervals {first}..{i_next - 1} need {i_next - first}"
        )
    closure = diagram.zero_closure()
    state = off if i == 1 else proc
    total = Fraction(0)
    k = 0
    while k < len(behavior):
        s, t = behavior[k]
        if not (0 <= s < diagram.size and 0 <= t < diagram.size) or not diagram.exists(s, t):
            raise MalformedBehavior(f"label at interval {first + k} is not a transition of the diagram")
        duration = diagram.time(s, t)
        if duration == 0:
            raise MalformedBehavior(f"zero-duration transition occupies interval {first + k}")
        if s not in closure[state]:
            raise MalformedBehavior(f"label at interval {first + k} does not continue from state {diagram.states[state]}")
        run = behavior[k:k + duration]
        if len(run) < duration or any(label != (s, t) for label in run):
            raise MalformedBehavior(f"transition at interval {first + k} does not tile {duration} intervals")
        power = diagram.power(s, t)
        total += power * sum(instance.cost(first + k + d) for d in range(duration))
        state = t
        k += duration
    goal = off if i_next == h else proc
    if goal not in closure[state]:
        raise MalformedBehavior(f"behavior ends in {diagram.states[state]}, expected {diagram.states[goal]}")
    return total
