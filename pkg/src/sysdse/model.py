"""Domain model for multi-component periodic state machine systems.

A system consists of periodic state machines (PSMs), each with a fixed
period, a set of states and transitions, multi-cycle computations (MCCs)
attached to states, and handshake ports. Handshake links connect an
out-port of one PSM to an in-port of another. Latency constraints bound
the worst-case latency between two endpoints of the system-level graph.

Units are fixed throughout the package: periods and latency bounds in
seconds, frequencies in MHz, critical path in nanoseconds, power in
milliwatts, area unitless.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

log = logging.getLogger(__name__)


class ValidationError(ValueError):
    """A system description violates a model invariant."""


class SystemLoadError(ValueError):
    """A system description file could not be parsed."""


@dataclass(frozen=True)
class MccAlternative:
    """One synthesizable implementation of a multi-cycle computation.

    exec_cycles: execution cycles, critical_path: ns, power: mW at f_max,
    f_max: MHz, area: unitless.
    """

    id: str
    exec_cycles: int
    critical_path: float
    power: float
    f_max: float
    area: float

    def __post_init__(self):
        if self.exec_cycles < 1:
            raise ValidationError(f"alternative {self.id!r}: exec_cycles must be >= 1")
        if self.critical_path <= 0:
            raise ValidationError(f"alternative {self.id!r}: critical_path must be > 0")
        if self.f_max <= 0:
            raise ValidationError(f"alternative {self.id!r}: f_max must be > 0")
        # MHz vs ns consistency: one cycle cannot be shorter than the critical path
        if self.f_max > 1000.0 / self.critical_path + 1e-9:
            raise ValidationError(
                f"alternative {self.id!r}: f_max {self.f_max} MHz exceeds "
                f"1000/critical_path = {1000.0 / self.critical_path:.6g} MHz"
            )
        if self.power <= 0:
            raise ValidationError(f"alternative {self.id!r}: power must be > 0")
        if self.area <= 0:
            raise ValidationError(f"alternative {self.id!r}: area must be > 0")


@dataclass(frozen=True)
class Mcc:
    """A multi-cycle computation attached to one state of its PSM."""

    id: str
    attached_state: str
    alternatives: tuple[MccAlternative, ...]

    def __post_init__(self):
        object.__setattr__(self, "alternatives", tuple(self.alternatives))
        if not self.alternatives:
            raise ValidationError(f"mcc {self.id!r}: alternative list must be non-empty")
        seen = set()
        for alt in self.alternatives:
            if alt.id in seen:
                raise ValidationError(f"mcc {self.id!r}: duplicate alternative id {alt.id!r}")
            seen.add(alt.id)


@dataclass(frozen=True)
class Psm:
    """A periodic state machine: an FSM with a fixed period in seconds."""

    id: str
    period: float
    states: tuple[str, ...]
    transitions: tuple[tuple[str, str], ...]
    mccs: tuple[Mcc, ...] = ()
    handshake_in_ports: tuple[tuple[str, str], ...] = ()
    handshake_out_ports: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(tuple(t) for t in self.transitions))
        object.__setattr__(self, "mccs", tuple(self.mccs))
        object.__setattr__(self, "handshake_in_ports", tuple(tuple(p) for p in self.handshake_in_ports))
        object.__setattr__(self, "handshake_out_ports", tuple(tuple(p) for p in self.handshake_out_ports))
        if self.period <= 0:
            raise ValidationError(f"psm {self.id!r}: period must be > 0")
        if not self.states:
            raise ValidationError(f"psm {self.id!r}: state list must be non-empty")
        declared = set(self.states)
        if len(declared) != len(self.states):
            raise ValidationError(f"psm {self.id!r}: duplicate state id")
        for src, dst in self.transitions:
            for endpoint in (src, dst):
                if endpoint not in declared:
                    raise ValidationError(
                        f"psm {self.id!r}: transition references undeclared state {endpoint!r}"
                    )
        for mcc in self.mccs:
            if mcc.attached_state not in declared:
                raise ValidationError(
                    f"psm {self.id!r}: mcc {mcc.id!r} attached to undeclared state "
                    f"{mcc.attached_state!r}"
                )
        for port, state in self.handshake_in_ports + self.handshake_out_ports:
            if state not in declared:
                raise ValidationError(
                    f"psm {self.id!r}: port {port!r} attached to undeclared state {state!r}"
                )
        # Local ids must be unique across states, mccs and ports so that
        # constraint endpoints (psm id, local id) resolve unambiguously.
        local_ids = list(self.states)
        local_ids += [m.id for m in self.mccs]
        local_ids += [p for p, _ in self.handshake_in_ports + self.handshake_out_ports]
        if len(set(local_ids)) != len(local_ids):
            dup = next(x for x in local_ids if local_ids.count(x) > 1)
            raise ValidationError(f"psm {self.id!r}: local id {dup!r} is not unique")


@dataclass(frozen=True)
class HandshakeLink:
    """Connects a sender's out-port to a receiver's in-port."""

    id: str
    sender: tuple[str, str]
    receiver: tuple[str, str]

    def __post_init__(self):
        object.__setattr__(self, "sender", tuple(self.sender))
        object.__setattr__(self, "receiver", tuple(self.receiver))


@dataclass(frozen=True)
class LatencyConstraint:
    """Bounds the worst-case latency between two graph endpoints, seconds."""

    id: str
    start: tuple[str, str]
    end: tuple[str, str]
    bound: float

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "end", tuple(self.end))
        if self.bound <= 0:
            raise ValidationError(f"constraint {self.id!r}: bound must be > 0")


class ScaledFrequency(NamedTuple):
    """Minimum operating frequency of an alternative under a period."""

    mhz: float
    feasible: bool


@dataclass(frozen=True)
class SystemModel:
    """The full system: PSMs, links, constraints and the frequency space.

    freq_grid is (f_lo, f_hi, step) in MHz; n_fpin is the number of
    distinct clock frequencies the target hardware provides. Instances
    are immutable after construction and safe to share across workers.
    """

    psms: tuple[Psm, ...]
    links: tuple[HandshakeLink, ...]
    constraints: tuple[LatencyConstraint, ...]
    n_fpin: int
    freq_grid: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "psms", tuple(self.psms))
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "freq_grid", tuple(self.freq_grid))
        ids = [p.id for p in self.psms]
        if len(set(ids)) != len(ids):
            dup = next(x for x in ids if ids.count(x) > 1)
            raise ValidationError(f"duplicate psm id {dup!r}")
        if self.n_fpin < 1:
            raise ValidationError("n_fpin must be >= 1")
        f_lo, f_hi, step = self.freq_grid
        if not (f_lo < f_hi):
            raise ValidationError("freq_grid: f_lo must be < f_hi")
        if step <= 0:
            raise ValidationError("freq_grid: step must be > 0")
        by_id = {p.id: p for p in self.psms}
        in_ports = {(p.id, port) for p in self.psms for port, _ in p.handshake_in_ports}
        out_ports = {(p.id, port) for p in self.psms for port, _ in p.handshake_out_ports}
        used = set()
        link_ids = set()
        for link in self.links:
            if link.id in link_ids:
                raise ValidationError(f"duplicate link id {link.id!r}")
            link_ids.add(link.id)
            if link.sender[0] not in by_id:
                raise ValidationError(f"link {link.id!r}: unknown sender psm {link.sender[0]!r}")
            if link.receiver[0] not in by_id:
                raise ValidationError(f"link {link.id!r}: unknown receiver psm {link.receiver[0]!r}")
            if link.sender not in out_ports:
                raise ValidationError(f"link {link.id!r}: unknown out-port {link.sender!r}")
            if link.receiver not in in_ports:
                raise ValidationError(f"link {link.id!r}: unknown in-port {link.receiver!r}")
            for port in (link.sender, link.receiver):
                if port in used:
                    raise ValidationError(f"link {link.id!r}: port {port!r} used by more than one link")
                used.add(port)
        cons_ids = set()
        for con in self.constraints:
            if con.id in cons_ids:
                raise ValidationError(f"duplicate constraint id {con.id!r}")
            cons_ids.add(con.id)
            for label, (psm_id, local) in (("start", con.start), ("end", con.end)):
                psm = by_id.get(psm_id)
                if psm is None:
                    raise ValidationError(
                        f"constraint {con.id!r}: {label} references unknown psm {psm_id!r}"
                    )
                locals_ = set(psm.states)
                locals_.update(m.id for m in psm.mccs)
                locals_.update(p for p, _ in psm.handshake_in_ports + psm.handshake_out_ports)
                if local not in locals_:
                    raise ValidationError(
                        f"constraint {con.id!r}: {label} references unknown node "
                        f"{local!r} in psm {psm_id!r}"
                    )

    def psm(self, psm_id: str) -> Psm:
        for p in self.psms:
            if p.id == psm_id:
                return p
        raise KeyError(psm_id)

    def grid_frequencies(self) -> tuple[float, ...]:
        """All frequencies f_lo, f_lo+step, ... up to f_hi, in MHz."""
        f_lo, f_hi, step = self.freq_grid
        count = int((f_hi - f_lo) / step + 1e-9) + 1
        return tuple(f_lo + k * step for k in range(count))

    def frequency_components(self) -> tuple[str, ...]:
        """Ordered ids of every frequency-bearing component.

        One per FSM ("fsm:<psm>"), one per MCC ("mcc:<psm>.<mcc>"), and
        one per handshake link endpoint ("hout:<psm>.<port>" and
        "hin:<psm>.<port>"). The order is fixed and defines the gene
        order of configuration encodings.
        """
        comps = [f"fsm:{p.id}" for p in self.psms]
        comps += [f"mcc:{p.id}.{m.id}" for p in self.psms for m in p.mccs]
        for link in self.links:
            comps.append(f"hout:{link.sender[0]}.{link.sender[1]}")
            comps.append(f"hin:{link.receiver[0]}.{link.receiver[1]}")
        return tuple(comps)

    def mcc_slots(self) -> tuple[tuple[Psm, Mcc], ...]:
        """(psm, mcc) pairs in declaration order; defines alternative gene order."""
        return tuple((p, m) for p in self.psms for m in p.mccs)


def scaled_min_frequency(alt: MccAlternative, period: float) -> ScaledFrequency:
    """Minimum frequency (MHz) at which `alt` finishes within `period` seconds.

    The alternative needs exec_cycles cycles per activation, so it must
    run at least at exec_cycles/period. If that exceeds the alternative's
    f_max the result is flagged infeasible (the alternative can never
    meet the period); callers treat such alternatives as invalid rather
    than erroring out.
    """
    if period <= 0:
        raise ValueError("period must be > 0")
    mhz = alt.exec_cycles / (period * 1e6)
    return ScaledFrequency(mhz, mhz <= alt.f_max)


def design_space_size(model: SystemModel, n_freq_combos: int) -> int:
    """Total number of raw configurations, as an exact integer.

    Counting rule: (product over MCCs of their alternative counts) times
    n_freq_combos ** C, where n_freq_combos is the number of frequency
    options available to each component and C is the number of
    frequency-bearing components (every MCC, every FSM, and both
    endpoints of every handshake link). The rule is logged so reports
    stay auditable.
    """
    if n_freq_combos < 1:
        raise ValueError("n_freq_combos must be >= 1")
    alt_product = 1
    n_mcc = 0
    for psm in model.psms:
        for mcc in psm.mccs:
            alt_product *= len(mcc.alternatives)
            n_mcc += 1
    n_components = n_mcc + len(model.psms) + 2 * len(model.links)
    size = alt_product * n_freq_combos**n_components
    log.info(
        "design space size: %d alternative selections x %d^%d frequency "
        "assignments (%d frequency options per component over %d components: "
        "%d MCCs + %d FSMs + %d handshake endpoints) = %s",
        alt_product, n_freq_combos, n_components, n_freq_combos, n_components,
        n_mcc, len(model.psms), 2 * len(model.links), size,
    )
    return size


def counting_rule(model: SystemModel, n_freq_combos: int) -> str:
    """Human-readable statement of the design-space counting rule."""
    n_mcc = sum(len(p.mccs) for p in model.psms)
    n_components = n_mcc + len(model.psms) + 2 * len(model.links)
    return (
        f"prod(|alternatives| per MCC) * {n_freq_combos}^{n_components}; "
        f"components = {n_mcc} MCCs + {len(model.psms)} FSMs + "
        f"{2 * len(model.links)} handshake endpoints"
    )


# ---------------------------------------------------------------------------
# Serialization


def model_to_dict(model: SystemModel) -> dict:
    return {
        "psms": [
            {
                "id": p.id,
                "period": p.period,
                "states": list(p.states),
                "transitions": [list(t) for t in p.transitions],
                "mccs": [
                    {
                        "id": m.id,
                        "attached_state": m.attached_state,
                        "alternatives": [
                            {
                                "id": a.id,
                                "exec_cycles": a.exec_cycles,
                                "critical_path": a.critical_path,
                                "power": a.power,
                                "f_max": a.f_max,
                                "area": a.area,
                            }
                            for a in m.alternatives
                        ],
                    }
                    for m in p.mccs
                ],
                "handshake_in_ports": [list(t) for t in p.handshake_in_ports],
                "handshake_out_ports": [list(t) for t in p.handshake_out_ports],
            }
            for p in model.psms
        ],
        "links": [
            {"id": l.id, "sender": list(l.sender), "receiver": list(l.receiver)}
            for l in model.links
        ],
        "constraints": [
            {"id": c.id, "start": list(c.start), "end": list(c.end), "bound": c.bound}
            for c in model.constraints
        ],
        "n_fpin": model.n_fpin,
        "freq_grid": list(model.freq_grid),
    }


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ValidationError(f"{context}: missing field {key!r}")
    return mapping[key]


def model_from_dict(data: dict) -> SystemModel:
    if not isinstance(data, dict):
        raise ValidationError("system description must be a mapping")
    psms = []
    for pd in _require(data, "psms", "system"):
        mccs = []
        for md in pd.get("mccs", []):
            alts = [
                MccAlternative(
                    id=str(_require(ad, "id", "alternative")),
                    exec_cycles=int(_require(ad, "exec_cycles", "alternative")),
                    critical_path=float(_require(ad, "critical_path", "alternative")),
                    power=float(_require(ad, "power", "alternative")),
                    f_max=float(_require(ad, "f_max", "alternative")),
                    area=float(_require(ad, "area", "alternative")),
                )
                for ad in _require(md, "alternatives", f"mcc {md.get('id')!r}")
            ]
            mccs.append(
                Mcc(
                    id=str(_require(md, "id", "mcc")),
                    attached_state=str(_require(md, "attached_state", f"mcc {md.get('id')!r}")),
                    alternatives=tuple(alts),
                )
            )
        psms.append(
            Psm(
                id=str(_require(pd, "id", "psm")),
                period=float(_require(pd, "period", f"psm {pd.get('id')!r}")),
                states=tuple(str(s) for s in _require(pd, "states", f"psm {pd.get('id')!r}")),
                transitions=tuple(
                    (str(a), str(b)) for a, b in pd.get("transitions", [])
                ),
                mccs=tuple(mccs),
                handshake_in_ports=tuple(
                    (str(a), str(b)) for a, b in pd.get("handshake_in_ports", [])
                ),
                handshake_out_ports=tuple(
                    (str(a), str(b)) for a, b in pd.get("handshake_out_ports", [])
                ),
            )
        )
    links = [
        HandshakeLink(
            id=str(_require(ld, "id", "link")),
            sender=tuple(str(x) for x in _require(ld, "sender", f"link {ld.get('id')!r}")),
            receiver=tuple(str(x) for x in _require(ld, "receiver", f"link {ld.get('id')!r}")),
        )
        for ld in data.get("links", [])
    ]
    constraints = [
        LatencyConstraint(
            id=str(_require(cd, "id", "constraint")),
            start=tuple(str(x) for x in _require(cd, "start", f"constraint {cd.get('id')!r}")),
            end=tuple(str(x) for x in _require(cd, "end", f"constraint {cd.get('id')!r}")),
            bound=float(_require(cd, "bound", f"constraint {cd.get('id')!r}")),
        )
        for cd in data.get("constraints", [])
    ]
    return SystemModel(
        psms=tuple(psms),
        links=tuple(links),
        constraints=tuple(constraints),
        n_fpin=int(_require(data, "n_fpin", "system")),
        freq_grid=tuple(float(x) for x in _require(data, "freq_grid", "system")),
    )


def load_system(path: str | Path) -> SystemModel:
    """Load and validate a system description file (JSON).

    Raises SystemLoadError on malformed input and ValidationError naming
    the first violated invariant.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SystemLoadError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemLoadError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(data)


def save_system(model: SystemModel, path: str | Path) -> None:
    """Write a system description; load_system(save_system(m)) == m."""
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n")
