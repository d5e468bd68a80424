"""Exhaustive ground truth for small systems.

Enumerates every configuration (alternative selection x per-component
frequency assignment respecting the distinct-frequency cap), evaluates
each one, and returns the exact non-dominated feasible front. Deliberately
naive: no pruning, no search heuristics; only the model and the latency
evaluation are used.
"""

from __future__ import annotations

import itertools
import logging
from typing import NamedTuple, Sequence

from .configuration import Chromosome, EvaluatedChromosome, ParetoFront, front_from_members
from .evaluation import ChromosomeEvaluator
from .model import SystemModel, design_space_size
from .pathfind import PathSet

log = logging.getLogger(__name__)


class DesignSpaceTooLarge(RuntimeError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"design space has {size} configurations, over the limit {limit}")
        self.size = size
        self.limit = limit


class EvaluationRecord(NamedTuple):
    alts: tuple
    freqs: tuple
    valid: bool
    energy: float
    area: float


def exhaustive_front(
    model: SystemModel,
    pathset: PathSet,
    combo_limit: int = 1_000_000,
    freq_pool: Sequence[float] | None = None,
    collect_log: bool = False,
) -> tuple[ParetoFront, list[EvaluationRecord]]:
    """Exact feasible Pareto front by full enumeration.

    Frequencies are drawn from `freq_pool` (default: the whole grid);
    assignments using more than n_fpin distinct frequencies are excluded.
    Refuses to run when the counted design space exceeds `combo_limit`.
    Enumeration order is lexicographic so logs are diffable.
    """
    pool = tuple(freq_pool) if freq_pool is not None else model.grid_frequencies()
    size = design_space_size(model, len(pool))
    if size > combo_limit:
        raise DesignSpaceTooLarge(size, combo_limit)
    evaluator = ChromosomeEvaluator(model, pathset)
    slots = model.mcc_slots()
    alt_ranges = [range(len(m.alternatives)) for _, m in slots]
    n_components = len(model.frequency_components())
    n_fpin = model.n_fpin

    records: list[EvaluationRecord] = []
    feasible: list[EvaluatedChromosome] = []
    for alts in itertools.product(*alt_ranges) if alt_ranges else [()]:
        for freqs in itertools.product(pool, repeat=n_components):
            if len(set(freqs)) > n_fpin:
                continue
            ok = evaluator.valid(alts, freqs)
            if not ok and not collect_log:
                continue
            energy, area = evaluator.objectives(alts, freqs)
            if collect_log:
                records.append(EvaluationRecord(alts, freqs, ok, energy, area))
            if ok:
                feasible.append(
                    EvaluatedChromosome(Chromosome(alts, freqs), energy, area, valid=True)
                )
    log.info(
        "exhaustive enumeration: %d feasible of %s configurations",
        len(feasible), size,
    )
    return front_from_members(feasible), records
