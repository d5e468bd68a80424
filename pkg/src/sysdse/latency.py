"""Worst-case path latency estimation and handshake timing.

A path's latency is the sum of three kinds of terms, in this order: one
term per FSM on the path (states visited / FSM frequency), one term per
MCC node (exec cycles of the selected alternative / MCC frequency), and
one term per handshake traversal. Handshake traversals are charged on
the receiving side: each handshake-in node contributes the receiver-side
worst-case cycle bound times the receiver FSM period; a path that stops
at a handshake-out node contributes the sender-side bound times the
sender FSM period instead.

The closed-form cycle bounds are validated by a discrete-event simulator
of the four-phase protocol (request, notify, acknowledge, complete) in
which every component samples its inputs on its own clock edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .configuration import Chromosome, ContractViolation
from .model import SystemModel, scaled_min_frequency
from .pathfind import HANDSHAKE_IN, HANDSHAKE_OUT, MCC_NODE, FSM_STATE, NodeRef, PathSet

MHZ = 1e6


class ProtocolModelError(RuntimeError):
    """The handshake simulation exceeded 10x the analytic bound."""


class HandshakeBounds(NamedTuple):
    receiver_cycles: int
    sender_cycles: int


def handshake_bounds(p_s: float, p_ho: float, p_hi: float, p_r: float) -> HandshakeBounds:
    """Worst-case handshake cycle bounds for one event transfer.

    Receiver side: ceil((P_s + 2*P_ho + P_hi + P_r) / P_r); sender side:
    ceil((2*P_s + 4*P_ho + 2*P_hi + P_r) / P_s). Computed with exact
    rational arithmetic so equal periods give exactly (5, 9).
    """
    if min(p_s, p_ho, p_hi, p_r) <= 0:
        raise ValueError("periods must be > 0")
    fs, fho, fhi, fr = (Fraction(p) for p in (p_s, p_ho, p_hi, p_r))
    l_r = math.ceil((fs + 2 * fho + fhi + fr) / fr)
    l_s = math.ceil((2 * fs + 4 * fho + 2 * fhi + fr) / fs)
    return HandshakeBounds(l_r, l_s)


@lru_cache(maxsize=1 << 16)
def _bounds_cached(p_s: float, p_ho: float, p_hi: float, p_r: float) -> HandshakeBounds:
    return handshake_bounds(p_s, p_ho, p_hi, p_r)


def _next_edge(t: Fraction, period: Fraction, phase: Fraction) -> Fraction:
    """First clock edge (phase + k*period) strictly after t."""
    return phase + ((t - phase) // period + 1) * period


def _edges_within(t_end: Fraction, period: Fraction, phase: Fraction) -> int:
    """Number of clock edges in the interval (0, t_end]."""
    return math.floor((t_end - phase) / period) - math.floor((0 - phase) / period)


def simulate_handshake(
    p_s: float,
    p_ho: float,
    p_hi: float,
    p_r: float,
    phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
) -> tuple[int, int]:
    """Cycle-accurate simulation of one four-phase event transfer.

    The event originates at time 0; each clock has edges at
    phase + k*period. The sender FSM registers the event at its next
    edge; the out-component registers it and raises the request one of
    its cycles later; the in-component forwards the notify on its
    sampling edge; the receiver FSM acknowledges on the edge that samples
    the notify. The acknowledge travels back the same way (in-component
    forwards on its sampling edge, out-component completes one cycle
    after sampling) and the sender resumes at the edge that samples the
    completion. Returns elapsed receiver and sender clock cycles, counted
    from the event origin to the acknowledge edge and the resume edge
    respectively.
    """
    periods = [Fraction(p) for p in (p_s, p_ho, p_hi, p_r)]
    if min(periods) <= 0:
        raise ValueError("periods must be > 0")
    offs = [Fraction(o) for o in phases]
    for off, per in zip(offs, periods):
        if not 0 <= off < per:
            raise ValueError("phase offsets must lie in [0, period)")
    fs, fho, fhi, fr = periods
    os_, oho, ohi, or_ = offs

    t = Fraction(0)
    t = _next_edge(t, fs, os_)            # sender registers the event
    t = _next_edge(t, fho, oho) + fho     # out-component raises request
    t = _next_edge(t, fhi, ohi)           # in-component forwards notify
    t = _next_edge(t, fr, or_)            # receiver samples and acknowledges
    receiver_cycles = _edges_within(t, fr, or_)
    t = _next_edge(t, fhi, ohi)           # in-component forwards acknowledge
    t = _next_edge(t, fho, oho) + fho     # out-component signals completion
    t = _next_edge(t, fs, os_)            # sender resumes
    sender_cycles = _edges_within(t, fs, os_)

    bound = handshake_bounds(p_s, p_ho, p_hi, p_r)
    if receiver_cycles > 10 * bound.receiver_cycles or sender_cycles > 10 * bound.sender_cycles:
        raise ProtocolModelError(
            f"simulated cycles ({receiver_cycles}, {sender_cycles}) exceed 10x "
            f"the analytic bounds {tuple(bound)}"
        )
    return receiver_cycles, sender_cycles


def sweep_handshake(
    p_s: float, p_ho: float, p_hi: float, p_r: float, resolution: int = 16
) -> tuple[int, int]:
    """Worst observed (receiver, sender) cycles over a full phase sweep.

    Sweeps every combination of per-clock phase offsets at steps of
    period/resolution. Periods must have small rational ratios (the sweep
    runs on exact integer-scaled times). This sweep is the empirical
    check that the closed-form bounds are safe.
    """
    periods = [Fraction(p) for p in (p_s, p_ho, p_hi, p_r)]
    if min(periods) <= 0:
        raise ValueError("periods must be > 0")
    base = min(periods)
    ratios = [p / base for p in periods]
    den = math.lcm(*(r.denominator for r in ratios))
    scaled = [int(r * den) * resolution for r in ratios]
    if max(scaled) > 1 << 40:
        raise ValueError("period ratios too irregular for an exact integer sweep")
    steps = [p // resolution for p in scaled]

    shape = [resolution, resolution, resolution, resolution]
    phases = []
    for axis, step in enumerate(steps):
        view = [1, 1, 1, 1]
        view[axis] = resolution
        phases.append((np.arange(resolution, dtype=np.int64) * step).reshape(view))
    os_, oho, ohi, or_ = (np.broadcast_to(p, shape) for p in phases)
    ps, pho, phi, pr = (np.int64(p) for p in scaled)

    def next_edge(t, period, phase):
        return phase + ((t - phase) // period + 1) * period

    t = next_edge(np.int64(0), ps, os_)
    t = next_edge(t, pho, oho) + pho
    t = next_edge(t, phi, ohi)
    t = next_edge(t, pr, or_)
    receiver = (t - or_) // pr - (0 - or_) // pr
    t = next_edge(t, phi, ohi)
    t = next_edge(t, pho, oho) + pho
    t = next_edge(t, ps, os_)
    sender = (t - os_) // ps - (0 - os_) // ps
    return int(receiver.max()), int(sender.max())


# ---------------------------------------------------------------------------
# Path latency evaluation


@dataclass(frozen=True)
class PathLatencyBreakdown:
    """Per-component latency terms of one path, seconds. The total is the
    left-to-right sum of fsm_terms, mcc_terms, handshake_terms."""

    fsm_terms: tuple[tuple[str, float], ...]
    mcc_terms: tuple[tuple[str, float], ...]
    handshake_terms: tuple[tuple[str, float], ...]
    total: float


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    violation: str | None
    path_latencies: tuple[tuple[str, int, float, float], ...]
    # rows are (constraint id, path index, latency, bound)


class _CompiledPath(NamedTuple):
    constraint_id: str
    path_index: int
    bound: float
    fsm_ops: tuple[tuple[int, int, str], ...]        # (component idx, cycles, label)
    mcc_ops: tuple[tuple[int, int, str], ...]        # (component idx, slot, label)
    hs_ops: tuple[tuple[str, int, int, int, int, str], ...]
    # (side, sender fsm idx, out idx, in idx, receiver fsm idx, label)


def _compile_path(
    model: SystemModel,
    comp_index: dict[str, int],
    slot_index: dict[tuple[str, str], int],
    path: Sequence[NodeRef],
    constraint_id: str = "",
    path_idx: int = 0,
    bound: float = float("inf"),
) -> _CompiledPath:
    link_by_port = {}
    for link in model.links:
        link_by_port[(link.sender[0], link.sender[1])] = link
        link_by_port[(link.receiver[0], link.receiver[1])] = link
    fsm_counts: dict[str, int] = {}
    mcc_ops = []
    hs_ops = []
    last = len(path) - 1
    for i, node in enumerate(path):
        if node.kind == FSM_STATE:
            fsm_counts[node.psm] = fsm_counts.get(node.psm, 0) + 1
        elif node.kind == MCC_NODE:
            mcc_ops.append(
                (
                    comp_index[f"mcc:{node.psm}.{node.local}"],
                    slot_index[(node.psm, node.local)],
                    node.label,
                )
            )
        elif node.kind == HANDSHAKE_IN or node.kind == HANDSHAKE_OUT:
            link = link_by_port[(node.psm, node.local)]
            cs = comp_index[f"fsm:{link.sender[0]}"]
            cho = comp_index[f"hout:{link.sender[0]}.{link.sender[1]}"]
            chi = comp_index[f"hin:{link.receiver[0]}.{link.receiver[1]}"]
            cr = comp_index[f"fsm:{link.receiver[0]}"]
            if node.kind == HANDSHAKE_IN:
                hs_ops.append(("r", cs, cho, chi, cr, f"{link.id}:receiver"))
            elif i == last:
                # handshake-out not followed by its in-node: sender-side wait
                hs_ops.append(("s", cs, cho, chi, cr, f"{link.id}:sender"))
    fsm_ops = tuple(
        (comp_index[f"fsm:{psm}"], count, psm) for psm, count in fsm_counts.items()
    )
    return _CompiledPath(constraint_id, path_idx, bound, fsm_ops, tuple(mcc_ops), tuple(hs_ops))


class PathEvaluator:
    """Pre-compiled latency and validity evaluation for one path set.

    Compilation resolves every path into index-based term programs so
    that per-configuration evaluation is a flat loop; results are
    bit-identical to estimate_path_latency on the same path.
    """

    def __init__(self, model: SystemModel, pathset: PathSet):
        self.model = model
        self.pathset = pathset
        self.components = model.frequency_components()
        self.comp_index = {c: i for i, c in enumerate(self.components)}
        slots = model.mcc_slots()
        self.slot_index = {(p.id, m.id): k for k, (p, m) in enumerate(slots)}
        self.slot_labels = [f"{p.id}.{m.id}" for p, m in slots]
        self.slot_component = [self.comp_index[f"mcc:{p.id}.{m.id}"] for p, m in slots]
        self.slot_cycles = [tuple(a.exec_cycles for a in m.alternatives) for _, m in slots]
        self.slot_fmin = [
            tuple(scaled_min_frequency(a, p.period).mhz for a in m.alternatives)
            for p, m in slots
        ]
        self.slot_fmax = [tuple(a.f_max for a in m.alternatives) for _, m in slots]
        self.compiled: list[_CompiledPath] = []
        for entry in pathset.entries:
            for idx, path in enumerate(entry.paths):
                self.compiled.append(
                    _compile_path(
                        model, self.comp_index, self.slot_index, path,
                        entry.constraint.id, idx, entry.constraint.bound,
                    )
                )

    def _terms(self, cp: _CompiledPath, alts: Sequence[int], freqs: Sequence[float]):
        fsm_terms = [(label, cycles / (freqs[ci] * MHZ)) for ci, cycles, label in cp.fsm_ops]
        mcc_terms = [
            (label, self.slot_cycles[slot][alts[slot]] / (freqs[ci] * MHZ))
            for ci, slot, label in cp.mcc_ops
        ]
        hs_terms = []
        for side, cs, cho, chi, cr, label in cp.hs_ops:
            p_s = 1.0 / (freqs[cs] * MHZ)
            p_ho = 1.0 / (freqs[cho] * MHZ)
            p_hi = 1.0 / (freqs[chi] * MHZ)
            p_r = 1.0 / (freqs[cr] * MHZ)
            l_r, l_s = _bounds_cached(p_s, p_ho, p_hi, p_r)
            hs_terms.append((label, l_r * p_r if side == "r" else l_s * p_s))
        return fsm_terms, mcc_terms, hs_terms

    def breakdown(self, cp: _CompiledPath, chrom: Chromosome) -> PathLatencyBreakdown:
        fsm_terms, mcc_terms, hs_terms = self._terms(cp, chrom.alts, chrom.freqs)
        total = 0.0
        for _, value in fsm_terms:
            total += value
        for _, value in mcc_terms:
            total += value
        for _, value in hs_terms:
            total += value
        return PathLatencyBreakdown(tuple(fsm_terms), tuple(mcc_terms), tuple(hs_terms), total)

    def path_total(self, cp: _CompiledPath, alts: Sequence[int], freqs: Sequence[float]) -> float:
        total = 0.0
        for ci, cycles, _ in cp.fsm_ops:
            total += cycles / (freqs[ci] * MHZ)
        for ci, slot, _ in cp.mcc_ops:
            total += self.slot_cycles[slot][alts[slot]] / (freqs[ci] * MHZ)
        for side, cs, cho, chi, cr, _ in cp.hs_ops:
            p_s = 1.0 / (freqs[cs] * MHZ)
            p_ho = 1.0 / (freqs[cho] * MHZ)
            p_hi = 1.0 / (freqs[chi] * MHZ)
            p_r = 1.0 / (freqs[cr] * MHZ)
            l_r, l_s = _bounds_cached(p_s, p_ho, p_hi, p_r)
            total += l_r * p_r if side == "r" else l_s * p_s
        return total

    def quick_check(self, alts: Sequence[int], freqs: Sequence[float]) -> bool:
        """Fast validity test: per-MCC frequency band, then every path
        against its bound, stopping at the first violation."""
        for slot, ci in enumerate(self.slot_component):
            f = freqs[ci]
            a = alts[slot]
            if not (self.slot_fmin[slot][a] <= f <= self.slot_fmax[slot][a]):
                return False
        for cp in self.compiled:
            if self.path_total(cp, alts, freqs) > cp.bound:
                return False
        return True

    def report(self, chrom: Chromosome) -> ValidityReport:
        """Full validity report: first violation named, all path rows."""
        violation = None
        for slot, ci in enumerate(self.slot_component):
            f = chrom.freqs[ci]
            a = chrom.alts[slot]
            lo, hi = self.slot_fmin[slot][a], self.slot_fmax[slot][a]
            if not (lo <= f <= hi):
                violation = (
                    f"mcc {self.slot_labels[slot]}: frequency {f:g} MHz outside "
                    f"[{lo:g}, {hi:g}] for alternative index {a}"
                )
                break
        rows = []
        for cp in self.compiled:
            total = self.path_total(cp, chrom.alts, chrom.freqs)
            rows.append((cp.constraint_id, cp.path_index, total, cp.bound))
            if violation is None and total > cp.bound:
                violation = (
                    f"constraint {cp.constraint_id} path {cp.path_index}: "
                    f"latency {total:.9g} s exceeds bound {cp.bound:.9g} s"
                )
        return ValidityReport(violation is None, violation, tuple(rows))


def estimate_path_latency(
    path: Sequence[NodeRef], chrom: Chromosome, model: SystemModel
) -> PathLatencyBreakdown:
    """Worst-case latency breakdown of one path under a configuration.

    Raises ContractViolation if the configuration misses a frequency or
    an alternative selection needed by the path.
    """
    comps = model.frequency_components()
    if len(chrom.freqs) != len(comps):
        raise ContractViolation(
            f"configuration assigns {len(chrom.freqs)} frequencies, "
            f"model has {len(comps)} components"
        )
    slots = model.mcc_slots()
    if len(chrom.alts) != len(slots):
        raise ContractViolation(
            f"configuration selects {len(chrom.alts)} alternatives, model has {len(slots)} MCCs"
        )
    comp_index = {c: i for i, c in enumerate(comps)}
    slot_index = {(p.id, m.id): k for k, (p, m) in enumerate(slots)}
    cp = _compile_path(model, comp_index, slot_index, path)
    # reuse the evaluator arithmetic via a single-path compile
    evaluator = PathEvaluator(model, PathSet(()))
    return evaluator.breakdown(cp, chrom)


def check_constraints(chrom: Chromosome, pathset: PathSet, model: SystemModel) -> ValidityReport:
    """Validity of a configuration: every path within its bound and every
    MCC's frequency within the selected alternative's feasible band.
    Violations are reported, not raised."""
    return PathEvaluator(model, pathset).report(chrom)
