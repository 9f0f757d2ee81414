"""Dialogue-state graphs: typed nodes, edge splits, negative sampling.

Accumulated dialogue states are turned into one undirected bipartite graph:
a node per distinct domain, a node per distinct (slot, value) pair, and an
edge for every observed <domain, slot, value> triple.  Graphs are immutable
after construction; splitting and negative sampling take an explicit seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dialogue import DialogueState

Edge = tuple[int, int]


class NodeKind(Enum):
    DOMAIN = "domain"
    SLOT_VALUE = "slot_value"


@dataclass(frozen=True)
class NodeId:
    index: int
    kind: NodeKind
    label: str


@dataclass(frozen=True)
class DialogueNodes:
    """Nodes of a graph touched by a set of states, plus what was missing."""

    nodes: frozenset[NodeId]
    missing: tuple[str, ...]


class StateGraph:
    """Undirected bipartite graph over Domain and SlotValue nodes.

    Edges are stored as (i, j) pairs with i < j and always connect a Domain
    node to a SlotValue node.  SlotValue node identity is the (slot, value)
    pair; the composite display label is "slot-value".
    """

    def __init__(
        self,
        nodes: Sequence[NodeId],
        edges: Iterable[Edge],
        slot_values: dict[int, tuple[str, str]] | None = None,
    ):
        self.nodes = tuple(nodes)
        for pos, node in enumerate(self.nodes):
            if node.index != pos:
                raise ValueError("node indices must be 0..n-1 in order")
        seen_labels: dict[NodeKind, set[str]] = {k: set() for k in NodeKind}
        for node in self.nodes:
            if node.label in seen_labels[node.kind]:
                raise ValueError(f"duplicate {node.kind.value} label: {node.label!r}")
            seen_labels[node.kind].add(node.label)

        normalized = set()
        for i, j in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            a, b = (i, j) if i < j else (j, i)
            if not (0 <= a and b < len(self.nodes)):
                raise ValueError(f"edge ({i}, {j}) references unknown node")
            if self.nodes[a].kind == self.nodes[b].kind:
                raise ValueError(f"edge ({i}, {j}) joins two {self.nodes[a].kind.value} nodes")
            normalized.add((a, b))
        self.edges = frozenset(normalized)

        self._domain_index = {
            n.label: n.index for n in self.nodes if n.kind is NodeKind.DOMAIN
        }
        # (slot, value) -> node index; empty when the mapping was not provided,
        # in which case slotvalue_node() cannot resolve pairs
        if slot_values is not None:
            self._slotvalue_index = {pair: idx for idx, pair in slot_values.items()}
        else:
            self._slotvalue_index = {}
        self._slotvalue_pairs = {
            idx: pair for pair, idx in self._slotvalue_index.items()
        }

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def adjacency(self) -> np.ndarray:
        """Dense symmetric boolean adjacency matrix."""
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        for i, j in self.edges:
            a[i, j] = True
            a[j, i] = True
        return a

    def domain_node(self, label: str) -> NodeId | None:
        idx = self._domain_index.get(label)
        return self.nodes[idx] if idx is not None else None

    def slotvalue_node(self, slot: str, value: str) -> NodeId | None:
        idx = self._slotvalue_index.get((slot, value))
        return self.nodes[idx] if idx is not None else None

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)

    def candidate_pairs(self) -> list[Edge]:
        """All Domain x SlotValue pairs, normalized i < j, sorted."""
        domains = [n.index for n in self.nodes if n.kind is NodeKind.DOMAIN]
        values = [n.index for n in self.nodes if n.kind is NodeKind.SLOT_VALUE]
        return sorted(
            (d, v) if d < v else (v, d) for d in domains for v in values
        )

    def non_edges(self) -> list[Edge]:
        return [p for p in self.candidate_pairs() if p not in self.edges]


def build_graph(states: Sequence[DialogueState]) -> StateGraph:
    """Build the state graph from a sequence of dialogue states.

    One Domain node per distinct domain, one SlotValue node per distinct
    (slot, value) pair with a real (non-NONE) value, one edge per observed
    triple.  Duplicates collapse; node indices follow first-seen order,
    with triples visited in sorted order within each state.
    """
    nodes: list[NodeId] = []
    domain_index: dict[str, int] = {}
    slotvalue_index: dict[tuple[str, str], int] = {}
    used_sv_labels: set[str] = set()
    edges: set[Edge] = set()

    for state in states:
        for t in state.triples():
            if t.is_none:
                continue
            if t.domain not in domain_index:
                domain_index[t.domain] = len(nodes)
                nodes.append(NodeId(len(nodes), NodeKind.DOMAIN, t.domain))
            pair = (t.slot, t.value)
            if pair not in slotvalue_index:
                label = f"{t.slot}-{t.value}"
                # distinct pairs can collide on the composite label
                k = 2
                while label in used_sv_labels:
                    label = f"{t.slot}-{t.value}#{k}"
                    k += 1
                used_sv_labels.add(label)
                slotvalue_index[pair] = len(nodes)
                nodes.append(NodeId(len(nodes), NodeKind.SLOT_VALUE, label))
            d, v = domain_index[t.domain], slotvalue_index[pair]
            edges.add((d, v) if d < v else (v, d))

    return StateGraph(
        nodes, edges, slot_values={idx: pair for pair, idx in slotvalue_index.items()}
    )


@dataclass(frozen=True)
class EdgeSplit:
    """Disjoint train/val/test edge partition with matched negatives."""

    train: tuple[Edge, ...]
    val: tuple[Edge, ...]
    test: tuple[Edge, ...]
    neg_val: tuple[Edge, ...]
    neg_test: tuple[Edge, ...]
    seed: int


def split_edges(
    g: StateGraph,
    train_frac: float,
    test_frac: float,
    val_frac: float,
    seed: int,
) -> EdgeSplit:
    """Randomly partition edges and sample matched negatives.

    Split sizes are round(|E| * frac) for test and val, with train taking
    the remainder, so every size is within one edge of its exact fraction.
    Negatives are drawn uniformly without replacement from the graph's
    Domain x SlotValue non-edges.  Deterministic given ``seed``.
    """
    fracs = (train_frac, test_frac, val_frac)
    if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fracs}")
    edges = g.sorted_edges()
    if len(edges) < 3:
        raise ValueError(f"need at least 3 edges to split, got {len(edges)}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(edges))
    n_test = round(len(edges) * test_frac)
    n_val = round(len(edges) * val_frac)
    n_train = len(edges) - n_test - n_val
    if n_train <= 0:
        raise ValueError("training fraction leaves no training edges")

    shuffled = [edges[i] for i in order]
    test = tuple(shuffled[:n_test])
    val = tuple(shuffled[n_test : n_test + n_val])
    train = tuple(shuffled[n_test + n_val :])

    non_edges = g.non_edges()
    if n_test + n_val > len(non_edges):
        raise ValueError(
            f"cannot sample {n_test + n_val} negatives from {len(non_edges)} non-edges"
        )
    neg_order = rng.permutation(len(non_edges))
    neg_test = tuple(non_edges[i] for i in neg_order[:n_test])
    neg_val = tuple(non_edges[i] for i in neg_order[n_test : n_test + n_val])

    return EdgeSplit(
        train=train, val=val, test=test, neg_val=neg_val, neg_test=neg_test, seed=seed
    )


def identity_features(g: StateGraph) -> np.ndarray:
    """One-hot feature matrix: the n x n identity."""
    return np.eye(g.n_nodes, dtype=np.float64)


def dialogue_node_set(
    g: StateGraph, states: Sequence[DialogueState]
) -> DialogueNodes:
    """Nodes of ``g`` touched by the given states.

    Domains or (slot, value) pairs never seen by the graph are reported in
    ``missing`` (by label), not added.
    """
    found: set[NodeId] = set()
    missing: list[str] = []
    for state in states:
        for t in state.triples():
            d = g.domain_node(t.domain)
            if d is not None:
                found.add(d)
            elif t.domain not in missing:
                missing.append(t.domain)
            if t.is_none:
                # the sentinel names a domain but no slot-value
                continue
            sv = g.slotvalue_node(t.slot, t.value)
            if sv is not None:
                found.add(sv)
            else:
                label = f"{t.slot}-{t.value}"
                if label not in missing:
                    missing.append(label)
    return DialogueNodes(nodes=frozenset(found), missing=tuple(missing))


def planted_graph(
    n_domains: int = 3,
    values_per_domain: int = 20,
    intra_p: float = 0.8,
    inter_p: float = 0.05,
    seed: int = 42,
) -> StateGraph:
    """Synthetic bipartite graph with planted domain communities.

    Each domain connects to its own block of slot-value nodes with
    probability ``intra_p`` and to every other block with ``inter_p``.
    Used as a verifiable desk-scale stand-in for dataset-scale graphs.
    """
    rng = np.random.default_rng(seed)
    nodes: list[NodeId] = []
    slot_values: dict[int, tuple[str, str]] = {}
    for d in range(n_domains):
        nodes.append(NodeId(len(nodes), NodeKind.DOMAIN, f"domain{d}"))
    n_values = n_domains * values_per_domain
    for k in range(n_values):
        idx = len(nodes)
        nodes.append(NodeId(idx, NodeKind.SLOT_VALUE, f"s{k}-v{k}"))
        slot_values[idx] = (f"s{k}", f"v{k}")

    edges: set[Edge] = set()
    for d in range(n_domains):
        for k in range(n_values):
            p = intra_p if k // values_per_domain == d else inter_p
            if rng.random() < p:
                edges.add((d, n_domains + k))
    return StateGraph(nodes, edges, slot_values=slot_values)


def write_edge_list(g: StateGraph, path: str | Path) -> None:
    """Write one "i j" pair per line, sorted, for cross-tool use."""
    lines = [f"{i} {j}" for i, j in g.sorted_edges()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def write_node_table(g: StateGraph, path: str | Path) -> None:
    """Write the node table as JSONL: {index, kind, label} plus identity fields."""
    with open(path, "w", encoding="utf-8") as f:
        for node in g.nodes:
            rec: dict = {"index": node.index, "kind": node.kind.value, "label": node.label}
            if node.kind is NodeKind.SLOT_VALUE:
                slot, value = g._slotvalue_pairs[node.index]
                rec["slot"] = slot
                rec["value"] = value
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_graph(edge_path: str | Path, node_path: str | Path) -> StateGraph:
    """Rebuild a StateGraph from its edge-list and node-table exports."""
    nodes: list[NodeId] = []
    slot_values: dict[int, tuple[str, str]] = {}
    with open(node_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = NodeKind(rec["kind"])
            nodes.append(NodeId(rec["index"], kind, rec["label"]))
            if kind is NodeKind.SLOT_VALUE:
                slot_values[rec["index"]] = (rec["slot"], rec["value"])
    nodes.sort(key=lambda n: n.index)

    edges: list[Edge] = []
    text = Path(edge_path).read_text(encoding="utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        i, j = line.split()
        edges.append((int(i), int(j)))
    return StateGraph(nodes, edges, slot_values=slot_values)
