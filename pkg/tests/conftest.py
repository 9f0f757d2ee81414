import numpy as np
import pytest

from dstgraph.dialogue import DialogueState, StateTriple
from dstgraph.graph import StateGraph, build_graph


def make_triple(domain: str, slot: str, value: str) -> StateTriple:
    return StateTriple(domain=domain, slot=slot, value=value)


def make_state(*triples: tuple[str, str, str]) -> DialogueState:
    return DialogueState(make_triple(*t) for t in triples)


def random_states(rng: np.random.Generator, n_states: int, max_triples: int = 10):
    """Random dialogue states over a small closed vocabulary."""
    domains = ["restaurant", "hotel", "attraction", "taxi", "train"]
    slots = ["area", "food", "stars", "type", "name", "day"]
    values = ["centre", "north", "cheap", "4", "museum", "thai", "none"]
    states = []
    for _ in range(n_states):
        k = int(rng.integers(0, max_triples + 1))
        triples = [
            make_triple(
                domains[rng.integers(len(domains))],
                slots[rng.integers(len(slots))],
                values[rng.integers(len(values))],
            )
            for _ in range(k)
        ]
        states.append(DialogueState(triples))
    return states


def random_bipartite_graph(
    rng: np.random.Generator, n_domains: int, n_slotvalues: int, p: float
) -> StateGraph:
    """Random state graph built through the public constructor path.

    Guarantees every node appears by giving slot-value j a backbone edge
    to domain j % n_domains, then adds independent extra edges with
    probability p.
    """
    states = []
    for j in range(n_slotvalues):
        triples = [(f"d{j % n_domains}", f"s{j}", f"v{j}")]
        for d in range(n_domains):
            if d != j % n_domains and rng.random() < p:
                triples.append((f"d{d}", f"s{j}", f"v{j}"))
        states.append(make_state(*triples))
    return build_graph(states)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
