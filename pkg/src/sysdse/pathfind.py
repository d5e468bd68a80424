"""System-level graph construction and constrained path enumeration.

The graph merges every PSM's FSM states, its MCC nodes and the handshake
nodes of every link into one directed graph. MCC nodes are spliced into
their attached state's outgoing transitions (state -> mcc -> successor);
each link contributes sender-state -> out-node -> in-node -> receiver-state
edges. Path enumeration walks the graph from every node, records paths
that end at a dead end or at the first repeated node, and keeps the spans
that connect a constraint's start to its end.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .model import LatencyConstraint, SystemModel

log = logging.getLogger(__name__)

FSM_STATE = "fsm-state"
MCC_NODE = "mcc"
HANDSHAKE_IN = "handshake-in"
HANDSHAKE_OUT = "handshake-out"


@dataclass(frozen=True, order=True)
class NodeRef:
    """Identity of one graph node: kind, owning psm, local id."""

    psm: str
    local: str
    kind: str = field(compare=False)

    @property
    def label(self) -> str:
        return f"{self.psm}.{self.local}"


@dataclass(frozen=True)
class SystemGraph:
    nodes: tuple[NodeRef, ...]
    edges: tuple[tuple[NodeRef, NodeRef], ...]

    def successors(self) -> dict[NodeRef, list[NodeRef]]:
        adj: dict[NodeRef, list[NodeRef]] = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            adj[src].append(dst)
        for succ in adj.values():
            succ.sort()
        return adj

    def node(self, psm: str, local: str) -> NodeRef:
        for n in self.nodes:
            if n.psm == psm and n.local == local:
                return n
        raise KeyError(f"no node {psm}.{local} in graph")


@dataclass(frozen=True)
class PathEntry:
    """All start->end paths relevant to one latency constraint."""

    constraint: LatencyConstraint
    start: NodeRef
    end: NodeRef
    paths: tuple[tuple[NodeRef, ...], ...]


@dataclass(frozen=True)
class PathSet:
    entries: tuple[PathEntry, ...]

    def to_lines(self) -> list[str]:
        lines = []
        for entry in self.entries:
            for path in entry.paths:
                lines.append(
                    f"{entry.constraint.id}\t" + "->".join(n.label for n in path)
                )
            lines.append(f"# {entry.constraint.id}: {len(entry.paths)} path(s)")
        lines.append(f"# total: {count_paths(self)} path(s)")
        return lines


def build_graph(model: SystemModel) -> SystemGraph:
    """Construct the system-level graph from a validated model.

    Node count is always sum(states) + sum(mccs) + 2 * len(links).
    """
    nodes: list[NodeRef] = []
    edges: list[tuple[NodeRef, NodeRef]] = []
    state_node = {}
    for psm in model.psms:
        for s in psm.states:
            n = NodeRef(psm.id, s, FSM_STATE)
            state_node[(psm.id, s)] = n
            nodes.append(n)
    # FSM transitions, then splice MCC chains into their attached state's
    # outgoing transitions (handshake edges attach to states directly).
    for psm in model.psms:
        outgoing: dict[str, list[str]] = {s: [] for s in psm.states}
        for src, dst in psm.transitions:
            outgoing[src].append(dst)
        mccs_at: dict[str, list] = {}
        for mcc in psm.mccs:
            mccs_at.setdefault(mcc.attached_state, []).append(mcc)
        for state in psm.states:
            src_node = state_node[(psm.id, state)]
            chain = mccs_at.get(state, [])
            if not chain:
                for dst in outgoing[state]:
                    edges.append((src_node, state_node[(psm.id, dst)]))
                continue
            mcc_nodes = [NodeRef(psm.id, m.id, MCC_NODE) for m in chain]
            nodes.extend(mcc_nodes)
            edges.append((src_node, mcc_nodes[0]))
            for a, b in zip(mcc_nodes, mcc_nodes[1:]):
                edges.append((a, b))
            for dst in outgoing[state]:
                edges.append((mcc_nodes[-1], state_node[(psm.id, dst)]))
    port_state = {}
    for psm in model.psms:
        for port, state in psm.handshake_in_ports + psm.handshake_out_ports:
            port_state[(psm.id, port)] = state
    for link in model.links:
        s_psm, s_port = link.sender
        r_psm, r_port = link.receiver
        out_node = NodeRef(s_psm, s_port, HANDSHAKE_OUT)
        in_node = NodeRef(r_psm, r_port, HANDSHAKE_IN)
        nodes.append(out_node)
        nodes.append(in_node)
        edges.append((state_node[(s_psm, port_state[(s_psm, s_port)])], out_node))
        edges.append((out_node, in_node))
        edges.append((in_node, state_node[(r_psm, port_state[(r_psm, r_port)])]))
    return SystemGraph(tuple(nodes), tuple(edges))


def _full_paths_from(root: NodeRef, adj: dict[NodeRef, list[NodeRef]]) -> list[tuple[NodeRef, ...]]:
    """All walks from root that end at a dead end or at the first node
    already on the walk (the cycle-closing terminal)."""
    out: list[tuple[NodeRef, ...]] = []
    temp: list[NodeRef] = []
    on_path: set[NodeRef] = set()

    def visit(node: NodeRef) -> None:
        temp.append(node)
        on_path.add(node)
        succ = adj[node]
        if not succ:
            out.append(tuple(temp))
        else:
            for nxt in succ:
                if nxt in on_path:
                    out.append(tuple(temp) + (nxt,))
                else:
                    visit(nxt)
        temp.pop()
        on_path.discard(node)

    visit(root)
    return out


def find_paths(graph: SystemGraph, constraints) -> PathSet:
    """Enumerate, for each constraint, every start->end path.

    A returned path repeats no node except possibly the terminal (a path
    may close a cycle back into its end node). Paths matching no
    constraint are discarded; per-entry paths are deduplicated and sorted
    lexicographically by node label sequence so that identical inputs
    give byte-identical output. A constraint with no connecting path
    yields an empty entry and a warning.
    """
    adj = graph.successors()
    by_node = {(n.psm, n.local): n for n in graph.nodes}
    resolved = []
    for con in constraints:
        if tuple(con.start) not in by_node or tuple(con.end) not in by_node:
            raise KeyError(f"constraint {con.id!r}: endpoint not in graph")
        resolved.append((con, by_node[tuple(con.start)], by_node[tuple(con.end)]))

    full: list[tuple[NodeRef, ...]] = []
    for root in sorted(graph.nodes):
        full.extend(_full_paths_from(root, adj))

    entries = []
    for con, start, end in resolved:
        spans = set()
        for path in full:
            try:
                i = path.index(start)
            except ValueError:
                continue
            for j in range(i + 1, len(path)):
                if path[j] == end:
                    spans.add(path[i : j + 1])
        ordered = sorted(spans, key=lambda p: [n.label for n in p])
        if not ordered:
            log.warning(
                "constraint %r: no path connects %s to %s "
                "(unsatisfiable or misplaced constraint)",
                con.id, start.label, end.label,
            )
        entries.append(PathEntry(con, start, end, tuple(ordered)))
    return PathSet(tuple(entries))


def count_paths(pathset: PathSet) -> int:
    return sum(len(e.paths) for e in pathset.entries)
