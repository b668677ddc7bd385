"""Directed graphs, random geometric generation, and robustness checks.

Robustness here is the (r, s) notion used for trimming-based consensus: for
every pair of nonempty disjoint node sets, enough members of one of them must
see at least r in-neighbors outside their own set.  The exact check
enumerates subset pairs, which is exponential, so it is gated behind a hard
node-count limit; a degree-based certificate covers larger graphs when it
applies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .protocol import Protocol

# Exact (r, s) checks enumerate ~3^n subset pairs; past this size they are
# refused rather than left to run for hours.
ENUMERATION_LIMIT = 15


class EnumerationLimitError(ValueError):
    """Raised when an exact robustness check would need to enumerate too
    many subset pairs to finish in reasonable time."""


class Graph:
    """Directed graph on nodes 0..n-1 stored as in-neighbor sets.

    An edge (src, dst) means dst hears src.  Bit masks over the node set
    mirror the neighbor sets for the enumeration-heavy checks.
    """

    __slots__ = ("n", "in_neighbors", "in_masks")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()) -> None:
        if n < 1:
            raise ValueError("a graph needs at least one node")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for src, dst in edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"edge ({src}, {dst}) leaves the node range 0..{n - 1}")
            if src == dst:
                raise ValueError(f"self-loop on node {src}")
            nbrs[dst].add(src)
        self.n = n
        self.in_neighbors: tuple[frozenset[int], ...] = tuple(frozenset(s) for s in nbrs)
        self.in_masks: tuple[int, ...] = tuple(
            sum(1 << j for j in s) for s in self.in_neighbors
        )

    def in_degree(self, i: int) -> int:
        return len(self.in_neighbors[i])

    def degrees(self) -> list[int]:
        return [len(s) for s in self.in_neighbors]

    def edges(self) -> list[tuple[int, int]]:
        return sorted(
            (src, dst) for dst, s in enumerate(self.in_neighbors) for src in s
        )

    def edge_count(self) -> int:
        return sum(len(s) for s in self.in_neighbors)

    def is_complete(self) -> bool:
        return all(len(s) == self.n - 1 for s in self.in_neighbors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.in_masks == other.in_masks

    def __hash__(self) -> int:
        return hash((self.n, self.in_masks))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges={self.edge_count()})"


@dataclass(frozen=True)
class GeometricSpec:
    """Parameters of a random geometric graph on a square area."""

    n: int
    side: float
    radius: float
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.side <= 0.0:
            raise ValueError("side must be positive")
        if self.radius < 0.0:
            raise ValueError("radius must be nonnegative")


def generate_complete(n: int) -> Graph:
    """All-to-all bidirectional graph on n nodes."""
    return Graph(n, ((i, j) for i in range(n) for j in range(n) if i != j))


def sample_positions(n: int, side: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform node positions on the [0, side]^2 square, shape (n, 2)."""
    if n < 1:
        raise ValueError("n must be positive")
    if side <= 0.0:
        raise ValueError("side must be positive")
    return rng.uniform(0.0, side, size=(n, 2))


def geometric_from_positions(positions: np.ndarray, radius: float) -> Graph:
    """Bidirectional edges between every pair within the given distance."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must have shape (n, 2)")
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    n = pos.shape[0]
    diff = pos[:, None, :] - pos[None, :, :]
    within = np.einsum("ijk,ijk->ij", diff, diff) <= float(radius) ** 2
    np.fill_diagonal(within, False)
    edges = [(int(a), int(b)) for a, b in np.argwhere(within)]
    return Graph(n, edges)


def generate_geometric(spec: GeometricSpec) -> Graph:
    graph, _ = generate_geometric_with_positions(spec)
    return graph


def generate_geometric_with_positions(spec: GeometricSpec) -> tuple[Graph, np.ndarray]:
    """Sample positions, then connect by radius.

    Positions depend only on (n, side, seed), so sweeping the radius over a
    fixed seed reuses the same node layout.
    """
    rng = np.random.default_rng(spec.seed)
    positions = sample_positions(spec.n, spec.side, rng)
    return geometric_from_positions(positions, spec.radius), positions


# ---------------------------------------------------------------------------
# file formats


def write_graph(graph: Graph, path: str | Path) -> None:
    """Plain-text edge list: first line ``n <count>``, then ``src dst`` lines."""
    lines = [f"n {graph.n}"]
    lines.extend(f"{src} {dst}" for src, dst in graph.edges())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> Graph:
    """Parse the edge-list format written by :func:`write_graph`."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    header = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2 or parts[0] != "n":
                raise ValueError(f"{path}:{lineno}: expected header 'n <count>'")
            header = int(parts[1])
            continue
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'src dst'")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if header is None:
        raise ValueError(f"{path}: missing 'n <count>' header")
    return Graph(header, edges)


def write_positions(positions: np.ndarray, path: str | Path) -> None:
    """CSV of node coordinates: ``id,x,y`` with a header row."""
    pos = np.asarray(positions, dtype=float)
    lines = ["id,x,y"]
    lines.extend(f"{i},{x!r},{y!r}" for i, (x, y) in enumerate(pos))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# robustness


def _require_enumerable(n: int) -> None:
    if n > ENUMERATION_LIMIT:
        raise EnumerationLimitError(
            f"exact robustness enumeration is limited to {ENUMERATION_LIMIT} nodes, got {n}"
        )


def _validate_query(graph: Graph, r: int, s: int) -> None:
    if not 0 <= r <= graph.n - 1:
        raise ValueError(f"r must lie in 0..{graph.n - 1}, got {r}")
    if not 0 <= s <= graph.n - 1:
        raise ValueError(f"s must lie in 0..{graph.n - 1}, got {s}")


def _x_counts(graph: Graph, r: int) -> bytearray:
    """For every node subset (as a bit mask), the number of members with at
    least r in-neighbors outside the subset."""
    n = graph.n
    masks = graph.in_masks
    counts = bytearray(1 << n)
    for m in range(1, 1 << n):
        c = 0
        mm = m
        while mm:
            b = mm & -mm
            mm ^= b
            if (masks[b.bit_length() - 1] & ~m).bit_count() >= r:
                c += 1
        counts[m] = c
    return counts


def is_r_s_robust(graph: Graph, r: int, s: int) -> bool:
    """Exact (r, s)-robustness by subset-pair enumeration.

    Every pair of nonempty disjoint sets must satisfy one of: all of the
    first set sees r outside values, all of the second does, or the two
    sets together hold at least s such nodes.
    """
    _validate_query(graph, r, s)
    if r == 0 or s == 0:
        return True
    _require_enumerable(graph.n)
    xcnt = _x_counts(graph, r)
    full = (1 << graph.n) - 1
    # Each unordered pair is visited once: the second mask only uses bits
    # strictly above the first mask's lowest set bit.
    for m1 in range(1, full):
        c1 = xcnt[m1]
        if c1 == m1.bit_count():
            continue  # condition 1 holds for every partner
        rest = full & ~m1 & ~(((m1 & -m1) << 1) - 1)
        sub = rest
        while sub:
            c2 = xcnt[sub]
            if c2 != sub.bit_count() and c1 + c2 < s:
                return False
            sub = (sub - 1) & rest
    return True


def max_s_for_r(graph: Graph, r: int) -> int:
    """Largest s (capped at n-1) with the graph (r, s)-robust."""
    _validate_query(graph, r, 0)
    best = graph.n - 1
    if r == 0:
        return best
    _require_enumerable(graph.n)
    xcnt = _x_counts(graph, r)
    full = (1 << graph.n) - 1
    for m1 in range(1, full):
        c1 = xcnt[m1]
        if c1 == m1.bit_count():
            continue
        rest = full & ~m1 & ~(((m1 & -m1) << 1) - 1)
        sub = rest
        while sub:
            c2 = xcnt[sub]
            if c2 != sub.bit_count():
                joint = c1 + c2
                if joint < best:
                    best = joint
                    if best == 0:
                        return 0
            sub = (sub - 1) & rest
    return best


def max_robustness(graph: Graph) -> tuple[int, dict[int, int]]:
    """Largest r with (r, 1)-robustness, plus the best s for each r up to it.

    r never needs to exceed ceil(n / 2): splitting the nodes into two
    near-halves caps how many outside neighbors anyone can have.
    """
    _require_enumerable(graph.n)
    n = graph.n
    r_cap = min((n + 1) // 2, n - 1) if n > 1 else 0
    r_max = 0
    for r in range(r_cap, 0, -1):
        if is_r_s_robust(graph, r, 1):
            r_max = r
            break
    s_at = {r: max_s_for_r(graph, r) for r in range(1, r_max + 1)}
    return r_max, s_at


def sufficient_by_degree(graph: Graph, r: int) -> bool:
    """Degree certificate: every in-degree at least r + n/2 forces
    (r, s)-robustness for every s.  The comparison is done on integers so
    odd n does not round."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    n = graph.n
    return all(2 * len(nb) >= 2 * r + n for nb in graph.in_neighbors)


def check_c2_prime(graph: Graph, f: int, gsize: int) -> bool:
    """Exhaustive subgroup check: every node subset of the given size must
    give each member at least 2f + 1 in-neighbors inside the subset."""
    if f < 0:
        raise ValueError("f must be nonnegative")
    if not (2 * f + 2 <= gsize and 2 * gsize <= graph.n):
        raise ValueError(
            f"subgroup size must lie in [2f + 2, n / 2], got {gsize} with f={f}, n={graph.n}"
        )
    _require_enumerable(graph.n)
    need = 2 * f + 1
    masks = graph.in_masks
    for combo in itertools.combinations(range(graph.n), gsize):
        m = 0
        for i in combo:
            m |= 1 << i
        for i in combo:
            if (masks[i] & m).bit_count() < need:
                return False
    return True


# ---------------------------------------------------------------------------
# per-protocol sufficient conditions


class ConditionStatus(Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNDECIDED = "undecided"


@dataclass
class ConditionEntry:
    """One sufficient condition and how it evaluated."""

    name: str
    status: ConditionStatus
    detail: str


@dataclass
class ConditionReport:
    """Evaluation of the known sufficient conditions for one protocol.

    The entries are alternatives: one satisfied entry is enough.  ``overall``
    is UNDECIDED when nothing is satisfied but at least one entry could not
    be evaluated exactly.
    """

    protocol: Protocol
    f: int
    entries: list[ConditionEntry]

    @property
    def overall(self) -> ConditionStatus:
        statuses = {e.status for e in self.entries}
        if ConditionStatus.SATISFIED in statuses:
            return ConditionStatus.SATISFIED
        if ConditionStatus.UNDECIDED in statuses:
            return ConditionStatus.UNDECIDED
        return ConditionStatus.VIOLATED


def _robustness_entry(graph: Graph, r: int, s: int, name: str) -> ConditionEntry:
    if r >= graph.n or s >= graph.n:
        return ConditionEntry(
            name,
            ConditionStatus.VIOLATED,
            f"needs r={r}, s={s}, but only {graph.n} nodes are present",
        )
    if sufficient_by_degree(graph, r):
        return ConditionEntry(
            name,
            ConditionStatus.SATISFIED,
            f"degree certificate: every in-degree is at least {r} + n/2",
        )
    if graph.n <= ENUMERATION_LIMIT:
        ok = is_r_s_robust(graph, r, s)
        status = ConditionStatus.SATISFIED if ok else ConditionStatus.VIOLATED
        return ConditionEntry(name, status, "exact subset enumeration")
    return ConditionEntry(
        name,
        ConditionStatus.UNDECIDED,
        f"n={graph.n} exceeds the enumeration limit and the degree certificate does not apply",
    )


def _complete_entry(graph: Graph, min_n: int, label: str) -> ConditionEntry:
    if not graph.is_complete():
        return ConditionEntry(label, ConditionStatus.VIOLATED, "graph is not complete")
    if graph.n < min_n:
        return ConditionEntry(
            label, ConditionStatus.VIOLATED, f"needs n >= {min_n}, got n={graph.n}"
        )
    return ConditionEntry(label, ConditionStatus.SATISFIED, f"complete with n={graph.n}")


def _degree_pair_entry(graph: Graph, f: int, min_n: int, c2_margin: int) -> ConditionEntry:
    """C1 (population floor) plus C2 (in-degree floor c2_margin + n/2)."""
    label = f"C1: n >= {min_n} and C2: every in-degree >= {c2_margin} + n/2"
    n = graph.n
    if n < min_n:
        return ConditionEntry(
            label, ConditionStatus.VIOLATED, f"C1 fails: n={n} < {min_n}"
        )
    short = [i for i, nb in enumerate(graph.in_neighbors) if 2 * len(nb) < 2 * c2_margin + n]
    if short:
        return ConditionEntry(
            label,
            ConditionStatus.VIOLATED,
            f"C2 fails at node {short[0]} (in-degree {graph.in_degree(short[0])})",
        )
    return ConditionEntry(label, ConditionStatus.SATISFIED, "C1/C2 satisfied")


def check_protocol_conditions(graph: Graph, f: int, protocol: Protocol) -> ConditionReport:
    """Evaluate the sufficient network conditions for one protocol at fault
    bound f.  Exponential checks fall back to UNDECIDED past the size limit."""
    if f < 0:
        raise ValueError("f must be nonnegative")
    entries: list[ConditionEntry]
    if protocol is Protocol.MSR:
        entries = [
            _robustness_entry(graph, f + 1, f + 1, f"({f + 1}, {f + 1})-robust")
        ]
    elif protocol is Protocol.P1:
        entries = [
            _complete_entry(graph, 2 * f + 1, f"complete with n >= {2 * f + 1}"),
            _degree_pair_entry(graph, f, 4 * f + 4, 2 * f + 1),
        ]
    elif protocol is Protocol.P2:
        entries = [
            _complete_entry(graph, 3 * f + 1, f"complete with n >= {3 * f + 1}"),
            _degree_pair_entry(graph, f, 6 * f + 4, 3 * f + 1),
        ]
    elif protocol is Protocol.P2A:
        entries = [
            _robustness_entry(graph, 4 * f + 1, 2 * f + 1, f"({4 * f + 1}, {2 * f + 1})-robust")
        ]
    else:
        entries = [
            _complete_entry(graph, 4 * f + 1, f"complete with n >= {4 * f + 1}"),
            _degree_pair_entry(graph, f, 8 * f + 4, 4 * f + 1),
        ]
    return ConditionReport(protocol, f, entries)
