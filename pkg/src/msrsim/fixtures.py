"""Built-in named scenarios used by tests and the command line.

``fig3`` is a ten-node robustness benchmark: a bidirectional clique on nodes
1..9 where each of nodes 1..8 additionally feeds node 0, so every node hears
exactly eight others.  ``fig4`` is a six-node hand-checkable run: a
bidirectional clique on nodes 2..5 with two outer nodes 0 and 1 attached to
two clique nodes each, one adversary walking the clique every round, and one
agent already recovering at the start.  Its right-most agent (id 1) follows
a closed-form trajectory, which makes it the standard correctness probe for
the whole engine.
"""

from __future__ import annotations

from .adversary import AdversaryConfig, AdversaryModel, Constant, PeriodicCycle
from .engine import SimulationConfig
from .graph import Graph
from .protocol import Protocol


def fig3_graph() -> Graph:
    edges = []
    for i in range(1, 10):
        for j in range(1, 10):
            if i != j:
                edges.append((i, j))
    for i in range(1, 9):
        edges.append((i, 0))
    return Graph(10, edges)


def _fig4_graph() -> Graph:
    core = (2, 3, 4, 5)
    edges = [(i, j) for i in core for j in core if i != j]
    for a, b in ((0, 2), (0, 3), (1, 4), (1, 5)):
        edges.append((a, b))
        edges.append((b, a))
    return Graph(6, edges)


def fig4_config() -> SimulationConfig:
    """Six agents, one adversary cycling through the core every round.

    Agent 1 holds 3 and only hears agents 4 and 5; it updates every fourth
    round, halving its distance to 1 each time, so its value at round 4*l
    is 1 + 2**(1 - l).  Agent 5 starts with a raised recovery flag.
    """
    adversary = AdversaryConfig(
        model=AdversaryModel.M2,
        f=1,
        f_real=1,
        policy=PeriodicCycle(hosts=(4, 2, 3, 5), period=1),
        strategy=Constant(-1.0),
    )
    return SimulationConfig(
        graph=_fig4_graph(),
        protocol=Protocol.P2A,
        adversary=adversary,
        initial_values=[1.0, 3.0, 1.0, 1.0, -1.0, -1.0],
        initial_theta={5: 1},
        master_seed=0,
    )


FIXTURES = {
    "fig3": fig3_graph,
    "fig4": fig4_config,
}
