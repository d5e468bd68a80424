"""Combined objective and validity evaluation of configurations.

Bundles the latency-based validity check with the (energy, area)
objectives behind one pre-compiled evaluator so that search loops and
the exhaustive enumerator share identical arithmetic.
"""

from __future__ import annotations

from typing import Sequence

from .configuration import Chromosome, EvaluatedChromosome, energy_scale
from .latency import PathEvaluator, ValidityReport
from .model import SystemModel
from .pathfind import PathSet


class ChromosomeEvaluator:
    """Evaluates (energy, area) and constraint validity for one model."""

    def __init__(self, model: SystemModel, pathset: PathSet):
        self.model = model
        self.paths = PathEvaluator(model, pathset)
        slots = model.mcc_slots()
        self.n_slots = len(slots)
        self.n_components = len(self.paths.components)
        self.slot_component = self.paths.slot_component
        self.slot_scale = [
            tuple(energy_scale(a.power, a.f_max, p.period) for a in m.alternatives)
            for p, m in slots
        ]
        self.slot_area = [tuple(a.area for a in m.alternatives) for _, m in slots]

    def objectives(self, alts: Sequence[int], freqs: Sequence[float]) -> tuple[float, float]:
        energy = 0.0
        area = 0.0
        for slot in range(self.n_slots):
            a = alts[slot]
            energy += freqs[self.slot_component[slot]] * self.slot_scale[slot][a]
            area += self.slot_area[slot][a]
        return energy, area

    def valid(self, alts: Sequence[int], freqs: Sequence[float]) -> bool:
        return self.paths.quick_check(alts, freqs)

    def report(self, chrom: Chromosome) -> ValidityReport:
        return self.paths.report(chrom)

    def evaluate(self, chrom: Chromosome, **provenance) -> EvaluatedChromosome:
        energy, area = self.objectives(chrom.alts, chrom.freqs)
        ok = self.valid(chrom.alts, chrom.freqs)
        return EvaluatedChromosome(
            chromosome=chrom, energy=energy, area=area, valid=ok,
            violation=None if ok else "constraint check failed", **provenance,
        )
