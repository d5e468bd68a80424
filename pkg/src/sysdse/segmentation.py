"""Frequency-based segmentation and pruning of the design space.

The frequency grid yields combinations of n_fpin distinct frequencies.
Combinations are sliced into contiguous segments; each segment's pooled
frequencies are assigned to every MCC alternative (smallest pool
frequency at or above the alternative's minimum feasible frequency), and
alternatives dominated within their MCC in (scaled energy, area) are
dropped. A segment in which some MCC has no assignable alternative is
rejected. One extra subspace always carries the original, unpruned
design space as a fallback for tight constraints.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace

from .configuration import pareto_filter
from .model import SystemModel, design_space_size, scaled_min_frequency

log = logging.getLogger(__name__)

FrequencyCombo = tuple  # ascending tuple of n_fpin distinct MHz values


class InfeasibleError(RuntimeError):
    """No frequency combination can clock every MCC under its period."""


@dataclass(frozen=True)
class AltAssignment:
    """Prune-time frequency assignment of one alternative."""

    frequency: float
    energy: float


@dataclass(frozen=True)
class Subspace:
    """One segment: pooled frequencies plus the pruned model.

    `assignments` maps "psm.mcc.alt" to the prune-time AltAssignment;
    `alt_origin` maps (slot, pruned index) to the alternative's index in
    the original model, so configurations found inside the subspace can
    be re-expressed against the original model.
    """

    segment_index: int
    freq_pool: tuple[float, ...]
    model: SystemModel
    assignments: dict
    alt_origin: dict
    is_fallback: bool = False


@dataclass(frozen=True)
class RejectedSegment:
    segment_index: int
    freq_pool: tuple[float, ...]
    reason: str


def required_top_frequency(model: SystemModel) -> float:
    """Max over MCCs of the minimum feasible scaled frequency; a usable
    frequency set must reach at least this value."""
    top = 0.0
    for psm in model.psms:
        for mcc in psm.mccs:
            feasible = [
                scaled_min_frequency(a, psm.period).mhz
                for a in mcc.alternatives
                if scaled_min_frequency(a, psm.period).feasible
            ]
            if not feasible:
                raise InfeasibleError(
                    f"mcc {psm.id}.{mcc.id}: no alternative can meet the period "
                    f"{psm.period:g} s at any frequency"
                )
            top = max(top, min(feasible))
    return top


def enumerate_combos(model: SystemModel) -> list[FrequencyCombo]:
    """All ascending n_fpin-subsets of the grid whose top frequency is at
    least the required top frequency, in lexicographic order."""
    grid = model.grid_frequencies()
    top_needed = required_top_frequency(model)
    combos = [
        c for c in itertools.combinations(grid, model.n_fpin) if c[-1] >= top_needed
    ]
    if not combos:
        raise InfeasibleError(
            f"no {model.n_fpin}-frequency combination from the grid reaches "
            f"{top_needed:g} MHz; the model is infeasible under its periods"
        )
    return combos


def slice_combos(combos: list[FrequencyCombo], n_seg: int) -> list[list[FrequencyCombo]]:
    """Contiguous slices of floor(N/(n_seg-1)) combos; the remainder goes
    to the last slice. Fewer than n_seg-1 combos degrade to single-combo
    slices with a warning."""
    if n_seg < 2:
        raise ValueError("n_seg must be >= 2")
    n = len(combos)
    m = n_seg - 1
    if n < m:
        log.warning(
            "only %d frequency combinations for %d segments; emitting "
            "single-combo segments", n, m,
        )
        return [[c] for c in combos]
    per = n // m
    slices = [combos[i * per : (i + 1) * per] for i in range(m - 1)]
    slices.append(combos[(m - 1) * per :])
    return slices


def pool_of(combos: list[FrequencyCombo]) -> tuple[float, ...]:
    pool = sorted({f for combo in combos for f in combo})
    return tuple(pool)


def segment_combos(combos: list[FrequencyCombo], n_seg: int) -> list[tuple[float, ...]]:
    """Deduplicated ascending frequency pools, one per segment slice."""
    return [pool_of(s) for s in slice_combos(combos, n_seg)]


def assign_frequency(mcc_period: float, alt, pool) -> float | None:
    """Smallest pool frequency >= the alternative's minimum feasible
    frequency and <= its f_max, or None when no pool frequency fits."""
    f_min = scaled_min_frequency(alt, mcc_period).mhz
    for f in pool:
        if f >= f_min:
            return f if f <= alt.f_max else None
    return None


def prune_segment(
    model: SystemModel, pool: tuple[float, ...], segment_index: int = 0
) -> Subspace | RejectedSegment:
    """Assign pool frequencies to every alternative and drop dominated
    ones per MCC; reject the segment when some MCC keeps nothing."""
    assignments = {}
    alt_origin = {}
    new_psms = []
    slot = 0
    for psm in model.psms:
        new_mccs = []
        for mcc in psm.mccs:
            scored = []
            for orig_idx, alt in enumerate(mcc.alternatives):
                freq = assign_frequency(psm.period, alt, pool)
                if freq is None:
                    continue
                scale = alt.power / (alt.f_max * psm.period)
                scored.append((alt, orig_idx, freq, freq * scale))
            if not scored:
                return RejectedSegment(
                    segment_index, pool,
                    f"mcc {psm.id}.{mcc.id}: no alternative has a valid pool frequency",
                )
            survivors = pareto_filter(scored, key=lambda s: (s[3], s[0].area))
            for pruned_idx, (alt, orig_idx, freq, energy) in enumerate(survivors):
                assignments[f"{psm.id}.{mcc.id}.{alt.id}"] = AltAssignment(freq, energy)
                alt_origin[(slot, pruned_idx)] = orig_idx
            new_mccs.append(replace(mcc, alternatives=tuple(s[0] for s in survivors)))
            slot += 1
        new_psms.append(replace(psm, mccs=tuple(new_mccs)))
    pruned = replace(model, psms=tuple(new_psms))
    return Subspace(segment_index, tuple(pool), pruned, assignments, alt_origin)


def fallback_subspace(model: SystemModel, combos: list[FrequencyCombo], segment_index: int) -> Subspace:
    """The reserved subspace: original alternatives over the pooled union
    of every frequency combination."""
    pool = pool_of(combos)
    assignments = {}
    alt_origin = {}
    for slot, (psm, mcc) in enumerate(model.mcc_slots()):
        for idx, alt in enumerate(mcc.alternatives):
            alt_origin[(slot, idx)] = idx
            freq = assign_frequency(psm.period, alt, pool)
            if freq is not None:
                scale = alt.power / (alt.f_max * psm.period)
                assignments[f"{psm.id}.{mcc.id}.{alt.id}"] = AltAssignment(freq, freq * scale)
    return Subspace(segment_index, pool, model, assignments, alt_origin, is_fallback=True)


@dataclass(frozen=True)
class SegmentationResult:
    subspaces: tuple[Subspace, ...]       # surviving segments, fallback last
    rejected: tuple[RejectedSegment, ...]
    n_combos: int

    @property
    def fallback(self) -> Subspace:
        return self.subspaces[-1]


def run_segmentation(model: SystemModel, n_seg: int) -> SegmentationResult:
    """Full segmentation: enumerate combos, slice, prune each segment,
    and append the fallback subspace. Also logs per-segment sizes."""
    combos = enumerate_combos(model)
    pools = segment_combos(combos, n_seg)
    subspaces = []
    rejected = []
    for i, pool in enumerate(pools):
        outcome = prune_segment(model, pool, segment_index=i)
        if isinstance(outcome, RejectedSegment):
            rejected.append(outcome)
            log.info("segment %d rejected: %s", i, outcome.reason)
        else:
            subspaces.append(outcome)
    fb = fallback_subspace(model, combos, segment_index=n_seg - 1)
    subspaces.append(fb)
    original = design_space_size(model, len(model.grid_frequencies()))
    pruned_total = 0
    for sub in subspaces:
        size = design_space_size(sub.model, len(sub.freq_pool))
        pruned_total += size
        log.info(
            "segment %d%s: pool of %d frequencies, size %.4g",
            sub.segment_index, " (fallback)" if sub.is_fallback else "",
            len(sub.freq_pool), float(size),
        )
    log.info(
        "segmentation: %d combos, %d segments kept, %d rejected; "
        "original size %.4g, summed subspace size %.4g",
        len(combos), len(subspaces), len(rejected), float(original), float(pruned_total),
    )
    return SegmentationResult(tuple(subspaces), tuple(rejected), len(combos))
