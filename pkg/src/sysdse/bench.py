"""Seeded synthetic benchmark systems.

Generates multi-PSM systems with chain or branch topologies. Component
characteristics (periods, cycle counts, power, area) are drawn from
log-uniform ranges; constraint bounds are a tightness multiple of the
latency of a deterministic mid-range configuration, so a tightness of
1.0 makes the mid-range configuration sit exactly on the bound.
"""

from __future__ import annotations

import math
import random

from .configuration import Chromosome
from .latency import PathEvaluator
from .model import (
    HandshakeLink,
    LatencyConstraint,
    Mcc,
    MccAlternative,
    Psm,
    SystemModel,
    scaled_min_frequency,
)
from .pathfind import build_graph, find_paths

STATE_NAMES = ("init", "recv", "comp", "send")


def _log_uniform(rng: random.Random, lo: float, hi: float) -> float:
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _make_alternative(rng: random.Random, alt_id: str, period: float, grid) -> MccAlternative:
    f_lo, f_hi, _ = grid
    f_target = _log_uniform(rng, f_lo, 0.8 * f_hi)
    f_max = min(f_target * rng.uniform(1.5, 4.0), 4.0 * f_hi)
    critical_path = (1000.0 / f_max) * rng.uniform(0.7, 0.98)
    exec_cycles = max(1, round(f_target * period * 1e6))
    return MccAlternative(
        id=alt_id,
        exec_cycles=exec_cycles,
        critical_path=round(critical_path, 4),
        power=round(_log_uniform(rng, 5.0, 200.0), 4),
        f_max=round(f_max, 4),
        area=round(_log_uniform(rng, 20.0, 2000.0), 4),
    )


def _make_psm(
    rng: random.Random,
    psm_id: str,
    n_mccs: int,
    alts_per_mcc,
    grid,
    in_ports: int,
    out_ports: int,
) -> Psm:
    period = _log_uniform(rng, 2e-3, 50e-3)
    mccs = []
    for m in range(n_mccs):
        n_alts = alts_per_mcc(m) if callable(alts_per_mcc) else alts_per_mcc
        alternatives = tuple(
            _make_alternative(rng, f"a{j}", period, grid) for j in range(n_alts)
        )
        mccs.append(Mcc(id=f"m{m}", attached_state="comp", alternatives=alternatives))
    return Psm(
        id=psm_id,
        period=round(period, 9),
        states=STATE_NAMES,
        transitions=(("init", "recv"), ("recv", "comp"), ("comp", "send")),
        mccs=tuple(mccs),
        handshake_in_ports=tuple((f"in{i}", "recv") for i in range(in_ports)),
        handshake_out_ports=tuple((f"out{i}", "send") for i in range(out_ports)),
    )


def _mid_configuration(model: SystemModel) -> Chromosome:
    """Deterministic mid-range configuration used to calibrate bounds:
    middle alternative per MCC, mid-grid frequency for FSMs and handshake
    components, and the smallest feasible grid frequency per MCC. The
    distinct-frequency cap is ignored here; this is only a yardstick."""
    grid = model.grid_frequencies()
    mid_freq = grid[len(grid) // 2]
    alts = []
    mcc_freq = {}
    for psm, mcc in model.mcc_slots():
        idx = len(mcc.alternatives) // 2
        alts.append(idx)
        alt = mcc.alternatives[idx]
        f_min = scaled_min_frequency(alt, psm.period).mhz
        usable = [f for f in grid if f_min <= f <= alt.f_max]
        mcc_freq[f"mcc:{psm.id}.{mcc.id}"] = usable[len(usable) // 2] if usable else grid[-1]
    freqs = []
    for comp in model.frequency_components():
        freqs.append(mcc_freq.get(comp, mid_freq))
    return Chromosome(tuple(alts), tuple(freqs))


def generate_system(
    psms: int = 3,
    mccs_per_psm: int = 1,
    alts_per_mcc: int = 3,
    topology: str = "chain",
    tightness: float = 2.0,
    seed: int = 0,
    n_fpin: int = 2,
    freq_grid: tuple[float, float, float] = (10.0, 60.0, 10.0),
    extra_bounds: tuple[float, ...] = (),
    mcc_counts: tuple[int, ...] | None = None,
    alt_counts: tuple[int, ...] | None = None,
) -> SystemModel:
    """Deterministic synthetic system.

    topology "chain" links the PSMs in a line; "branch" fans the first
    PSM out to every middle PSM, which all converge on the last. One
    constraint spans the first PSM's entry to the last PSM's exit with
    bound = tightness x the mid-range configuration's worst path latency;
    a second constraint bounds the first PSM's own entry-to-exit span.
    extra_bounds adds end-to-end constraints at further tightness values.
    """
    if psms < 2:
        raise ValueError("need at least 2 psms")
    if topology not in ("chain", "branch"):
        raise ValueError(f"unknown topology {topology!r}")
    rng = random.Random(seed)

    if topology == "chain" or psms < 3:
        pairs = [(i, i + 1) for i in range(psms - 1)]
    else:
        middles = list(range(1, psms - 1))
        pairs = [(0, m) for m in middles] + [(m, psms - 1) for m in middles]

    out_count = [0] * psms
    in_count = [0] * psms
    for a, b in pairs:
        out_count[a] += 1
        in_count[b] += 1

    mcc_counts = mcc_counts or tuple(mccs_per_psm for _ in range(psms))
    psm_list = []
    for i in range(psms):
        if alt_counts is not None:
            offset = sum(mcc_counts[:i])
            alts_fn = lambda m, o=offset: alt_counts[o + m]
        else:
            alts_fn = alts_per_mcc
        psm_list.append(
            _make_psm(rng, f"p{i}", mcc_counts[i], alts_fn, freq_grid, in_count[i], out_count[i])
        )

    links = []
    next_out = [0] * psms
    next_in = [0] * psms
    for a, b in pairs:
        links.append(
            HandshakeLink(
                id=f"l{len(links)}",
                sender=(f"p{a}", f"out{next_out[a]}"),
                receiver=(f"p{b}", f"in{next_in[b]}"),
            )
        )
        next_out[a] += 1
        next_in[b] += 1

    model = SystemModel(
        psms=tuple(psm_list),
        links=tuple(links),
        constraints=(),
        n_fpin=n_fpin,
        freq_grid=freq_grid,
    )

    # calibrate bounds against the mid-range configuration
    probe_constraints = [
        LatencyConstraint("main", ("p0", "init"), (f"p{psms - 1}", "send"), 1.0),
        LatencyConstraint("local0", ("p0", "init"), ("p0", "send"), 1.0),
    ]
    graph = build_graph(model)
    pathset = find_paths(graph, probe_constraints)
    evaluator = PathEvaluator(model, pathset)
    mid = _mid_configuration(model)
    worst = {"main": 0.0, "local0": 0.0}
    for cp in evaluator.compiled:
        worst[cp.constraint_id] = max(
            worst[cp.constraint_id], evaluator.path_total(cp, mid.alts, mid.freqs)
        )
    constraints = [
        LatencyConstraint(
            "main", ("p0", "init"), (f"p{psms - 1}", "send"),
            round(tightness * worst["main"], 12),
        ),
        LatencyConstraint(
            "local0", ("p0", "init"), ("p0", "send"),
            round(max(tightness, 1.5) * worst["local0"], 12),
        ),
    ]
    for j, extra in enumerate(extra_bounds):
        constraints.append(
            LatencyConstraint(
                f"main{j + 1}", ("p0", "init"), (f"p{psms - 1}", "send"),
                round(extra * worst["main"], 12),
            )
        )
    return SystemModel(
        psms=model.psms,
        links=model.links,
        constraints=tuple(constraints),
        n_fpin=n_fpin,
        freq_grid=freq_grid,
    )


def ads_like_system(seed: int = 0, tightness: float = 1.0) -> SystemModel:
    """A synthetic system with the published shape of the automotive
    use case: 10 PSMs, 18 MCCs, 490 alternatives in total, 4 frequency
    pins, grid 2..108 MHz in 5 MHz steps."""
    mcc_counts = (2, 2, 2, 2, 2, 2, 2, 2, 1, 1)  # 18 MCCs
    # 490 alternatives: 14 MCCs with 27, 4 with 28
    alt_counts = tuple(28 if i < 4 else 27 for i in range(18))
    assert sum(alt_counts) == 490
    return generate_system(
        psms=10,
        topology="chain",
        tightness=tightness,
        seed=seed,
        n_fpin=4,
        freq_grid=(2.0, 108.0, 5.0),
        mcc_counts=mcc_counts,
        alt_counts=alt_counts,
    )
