"""Command-line interface: pipeline orchestration and artifacts.

Subcommands: validate, paths, estimate, segment, optimize, exhaustive,
score, gen-bench. Exit codes: 0 success, 2 validation error,
3 infeasible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import click

from . import __version__
from .baselines import AnnealParams, run_baseline_ga, run_baseline_sa
from .bench import ads_like_system, generate_system
from .configuration import ParetoFront, load_chromosome
from .evaluation import ChromosomeEvaluator
from .exhaustive import DesignSpaceTooLarge, exhaustive_front
from .genetic import SearchParams, run_segmented_search
from .latency import PathEvaluator, handshake_bounds, sweep_handshake
from .metrics import ReferenceSet, adrs, aedrs
from .model import (
    SystemLoadError,
    ValidationError,
    counting_rule,
    design_space_size,
    load_system,
    model_to_dict,
    save_system,
)
from .pathfind import build_graph, count_paths, find_paths
from .segmentation import InfeasibleError, run_segmentation

EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3


def _load(system_file: str):
    try:
        return load_system(system_file)
    except (SystemLoadError, ValidationError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _run_id(*parts) -> str:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).hexdigest()
    return digest[:12]


def _write_front_csv(path: Path, front: ParetoFront, evaluator: ChromosomeEvaluator, run_id: str):
    path_cols = [(cp.constraint_id, cp.path_index) for cp in evaluator.paths.compiled]
    header = ["run_id", "segment", "seed", "energy", "area"]
    header += [f"latency:{cid}:{idx}" for cid, idx in path_cols]
    header += ["chromosome"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for m in front.members:
            lats = [
                repr(evaluator.paths.path_total(cp, m.chromosome.alts, m.chromosome.freqs))
                for cp in evaluator.paths.compiled
            ]
            writer.writerow(
                [
                    run_id,
                    "" if m.segment is None else m.segment,
                    "" if m.seed is None else m.seed,
                    repr(m.energy),
                    repr(m.area),
                ]
                + lats
                + [m.chromosome.encode()]
            )


def _write_path_latencies(path: Path, front: ParetoFront, evaluator: ChromosomeEvaluator, run_id: str):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["run_id", "member", "constraint", "path", "latency", "bound", "status"]
        )
        for i, m in enumerate(front.members):
            for cp in evaluator.paths.compiled:
                lat = evaluator.paths.path_total(cp, m.chromosome.alts, m.chromosome.freqs)
                writer.writerow(
                    [run_id, i, cp.constraint_id, cp.path_index, repr(lat), repr(cp.bound),
                     "pass" if lat <= cp.bound else "FAIL"]
                )


@click.group()
@click.version_option(version=__version__)
def main():
    """Design space exploration for precisely timed multi-component systems."""


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
def validate(system_file):
    """Load a system description and check every model invariant."""
    model = _load(system_file)
    n_mccs = sum(len(p.mccs) for p in model.psms)
    n_alts = sum(len(m.alternatives) for p in model.psms for m in p.mccs)
    click.echo(
        f"OK: {len(model.psms)} psms, {n_mccs} mccs, {n_alts} alternatives, "
        f"{len(model.links)} links, {len(model.constraints)} constraints"
    )


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write to file instead of stdout.")
def paths(system_file, out):
    """Enumerate all constraint-relevant paths through the system graph."""
    model = _load(system_file)
    graph = build_graph(model)
    pathset = find_paths(graph, model.constraints)
    text = "\n".join(pathset.to_lines()) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("chromosome_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--validate-handshake", "sweep_resolution", type=int, default=0,
              help="Also sweep each link's handshake phases at period/N resolution "
                   "and report observed vs bounded cycles.")
def estimate(system_file, chromosome_file, out, sweep_resolution):
    """Per-path latency breakdown of one configuration."""
    model = _load(system_file)
    try:
        chrom = load_chromosome(chromosome_file, model)
    except (ValueError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    graph = build_graph(model)
    pathset = find_paths(graph, model.constraints)
    evaluator = PathEvaluator(model, pathset)
    rows = [["constraint", "path", "fsm_s", "mcc_s", "handshake_s", "total_s", "bound_s", "status", "terms"]]
    for cp in evaluator.compiled:
        b = evaluator.breakdown(cp, chrom)
        terms = ";".join(
            f"{kind}:{label}={value!r}"
            for kind, part in (("fsm", b.fsm_terms), ("mcc", b.mcc_terms), ("hs", b.handshake_terms))
            for label, value in part
        )
        rows.append(
            [
                cp.constraint_id,
                cp.path_index,
                repr(sum(v for _, v in b.fsm_terms)),
                repr(sum(v for _, v in b.mcc_terms)),
                repr(sum(v for _, v in b.handshake_terms)),
                repr(b.total),
                repr(cp.bound),
                "pass" if b.total <= cp.bound else "FAIL",
                terms,
            ]
        )
    if sweep_resolution:
        fmap = chrom.frequency_map(model)
        for link in model.links:
            p_s = 1.0 / (fmap[f"fsm:{link.sender[0]}"] * 1e6)
            p_ho = 1.0 / (fmap[f"hout:{link.sender[0]}.{link.sender[1]}"] * 1e6)
            p_hi = 1.0 / (fmap[f"hin:{link.receiver[0]}.{link.receiver[1]}"] * 1e6)
            p_r = 1.0 / (fmap[f"fsm:{link.receiver[0]}"] * 1e6)
            bound = handshake_bounds(p_s, p_ho, p_hi, p_r)
            observed = sweep_handshake(p_s, p_ho, p_hi, p_r, resolution=sweep_resolution)
            click.echo(
                f"# link {link.id}: observed (recv, send) cycles {observed} "
                f"<= bounds {tuple(bound)}", err=True,
            )
    text = "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-seg", type=int, default=44, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def segment(system_file, n_seg, out_dir):
    """Segment the frequency space and write one pruned model per segment."""
    model = _load(system_file)
    try:
        result = run_segmentation(model, n_seg)
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "n_seg": n_seg,
        "n_combos": result.n_combos,
        "counting_rule": counting_rule(model, len(model.grid_frequencies())),
        "original_size": str(design_space_size(model, len(model.grid_frequencies()))),
        "segments": [],
        "rejected": [
            {"segment": r.segment_index, "pool": list(r.freq_pool), "reason": r.reason}
            for r in result.rejected
        ],
    }
    for sub in result.subspaces:
        name = f"segment_{sub.segment_index:03d}.json"
        save_system(sub.model, out / name)
        manifest["segments"].append(
            {
                "segment": sub.segment_index,
                "file": name,
                "fallback": sub.is_fallback,
                "pool": list(sub.freq_pool),
                "size": str(design_space_size(sub.model, len(sub.freq_pool))),
                "assignments": {
                    key: {"frequency": a.frequency, "energy": a.energy}
                    for key, a in sorted(sub.assignments.items())
                },
            }
        )
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    click.echo(f"{len(result.subspaces)} subspaces written to {out} "
               f"({len(result.rejected)} segment(s) rejected)")


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--algo", type=click.Choice(["lcso", "ga", "sa"]), default="lcso", show_default=True)
@click.option("--pop", type=int, default=230, show_default=True, help="Population size.")
@click.option("--gens", type=int, default=800, show_default=True, help="Generations.")
@click.option("--segments", type=int, default=44, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--ps", type=float, default=0.5, show_default=True, help="Selection rate.")
@click.option("--pc", type=float, default=0.7, show_default=True, help="Crossover rate.")
@click.option("--pm", type=float, default=0.5, show_default=True, help="Mutation rate.")
@click.option("--weight-energy", type=float, default=2.0, show_default=True)
@click.option("--weight-area", type=float, default=1.0, show_default=True)
@click.option("--sa-iters", type=int, default=2000, show_default=True)
@click.option("--sa-temp", type=float, default=1000.0, show_default=True)
@click.option("--sa-temp-diff", type=float, default=850.0, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
def optimize(system_file, algo, pop, gens, segments, seed, threads, ps, pc, pm,
             weight_energy, weight_area, sa_iters, sa_temp, sa_temp_diff, out_dir):
    """Search for the Pareto-optimal configurations of a system."""
    model = _load(system_file)
    run_id = _run_id(
        Path(system_file).read_bytes().hex()[:64], algo, pop, gens, segments, seed,
        ps, pc, pm, weight_energy, weight_area, sa_iters, sa_temp, sa_temp_diff,
    )
    out = Path(out_dir) if out_dir else Path(f"run_{algo}_{run_id}")
    out.mkdir(parents=True, exist_ok=True)

    times = {}
    t0 = time.perf_counter()
    graph = build_graph(model)
    pathset = find_paths(graph, model.constraints)
    times["pathfinding_s"] = time.perf_counter() - t0

    params = SearchParams(
        population=pop, generations=gens, segments=segments,
        select_rate=ps, crossover_rate=pc, mutation_rate=pm,
        weight_energy=weight_energy, weight_area=weight_area,
    )
    if algo == "lcso" and segments < 2:
        click.echo("error: --segments must be >= 2 for the segmented search", err=True)
        sys.exit(EXIT_VALIDATION)
    outcomes = None
    t0 = time.perf_counter()
    try:
        if algo == "lcso":
            run = run_segmented_search(model, pathset, params, seed, threads=threads)
            front = run.front
            times["segmentation_s"] = run.segmentation_seconds
            times["evolution_s"] = run.search_seconds
            outcomes = [
                {
                    "segment": o.segment_index,
                    "fallback_subspace": o.is_fallback_subspace,
                    "abandoned": o.abandoned,
                    "reran_on_fallback": o.reran_on_fallback,
                    "front_size": o.front_size,
                }
                for o in run.outcomes
            ]
        elif algo == "ga":
            front = run_baseline_ga(model, pathset, params, seed)
        else:
            front = run_baseline_sa(
                model, pathset,
                AnnealParams(
                    temperature_start=sa_temp, temperature_diff=sa_temp_diff,
                    iterations=sa_iters,
                    weight_energy=weight_energy, weight_area=weight_area,
                ),
                seed,
            )
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        sys.exit(EXIT_INFEASIBLE)
    times["search_s"] = time.perf_counter() - t0

    evaluator = ChromosomeEvaluator(model, pathset)
    for m in front.members:
        report = evaluator.report(m.chromosome)
        if not report.ok:
            click.echo(f"error: emitted point fails re-validation: {report.violation}", err=True)
            sys.exit(1)

    _write_front_csv(out / "front.csv", front, evaluator, run_id)
    _write_path_latencies(out / "path_latencies.csv", front, evaluator, run_id)
    manifest = {
        "run_id": run_id,
        "version": __version__,
        "python": sys.version.split()[0],
        "system_file": str(system_file),
        "algo": algo,
        "seed": seed,
        "threads": threads,
        "params": {
            "population": pop, "generations": gens, "segments": segments,
            "select_rate": ps, "crossover_rate": pc, "mutation_rate": pm,
            "weight_energy": weight_energy, "weight_area": weight_area,
            "sa_iters": sa_iters, "sa_temp": sa_temp, "sa_temp_diff": sa_temp_diff,
        },
        "paths": count_paths(pathset),
        "counting_rule": counting_rule(model, len(model.grid_frequencies())),
        "design_space_size": str(design_space_size(model, len(model.grid_frequencies()))),
        "front_size": len(front.members),
        "segment_outcomes": outcomes,
        "wall_times": times,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if not front.members:
        click.echo("infeasible: search produced an empty front", err=True)
        sys.exit(EXIT_INFEASIBLE)
    click.echo(f"front of {len(front.members)} point(s) written to {out}")


@main.command()
@click.argument("system_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--limit", type=int, default=1_000_000, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
def exhaustive(system_file, limit, out_dir):
    """Exhaustively enumerate and evaluate every configuration."""
    model = _load(system_file)
    graph = build_graph(model)
    pathset = find_paths(graph, model.constraints)
    try:
        front, records = exhaustive_front(model, pathset, combo_limit=limit, collect_log=True)
    except DesignSpaceTooLarge as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_id = _run_id("exhaustive", Path(system_file).read_bytes().hex()[:64], limit)
    evaluator = ChromosomeEvaluator(model, pathset)
    _write_front_csv(out / "front.csv", front, evaluator, run_id)
    with (out / "eval_log.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alts", "freqs", "valid", "energy", "area"])
        for rec in records:
            writer.writerow(
                [
                    ";".join(str(a) for a in rec.alts),
                    ";".join(repr(f) for f in rec.freqs),
                    int(rec.valid),
                    repr(rec.energy),
                    repr(rec.area),
                ]
            )
    click.echo(
        f"exhaustive front of {len(front.members)} point(s) from "
        f"{len(records)} evaluations written to {out}"
    )


@main.command()
@click.option("--reference", "reference_file", type=click.Path(exists=True, dir_okay=False), required=True)
@click.argument("front_files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def score(reference_file, front_files, out):
    """Score front CSVs against a reference front CSV (AEDRS and ADRS)."""
    reference = ReferenceSet(tuple(_read_points(reference_file)), label=str(reference_file))
    rows = [["front", "points", "aedrs", "adrs"]]
    for front_file in front_files:
        points = _read_points(front_file)
        try:
            rows.append(
                [front_file, len(points), repr(aedrs(reference, points)), repr(adrs(reference, points))]
            )
        except ValueError as exc:
            raise click.ClickException(f"{front_file}: {exc}") from exc
    text = "\n".join(",".join(str(c) for c in row) for row in rows) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _read_points(csv_file) -> list[tuple[float, float]]:
    with open(csv_file, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "energy" not in reader.fieldnames:
            raise click.ClickException(f"{csv_file}: no 'energy' column")
        return [(float(row["energy"]), float(row["area"])) for row in reader]


@main.command(name="gen-bench")
@click.option("--psms", type=int, default=3, show_default=True)
@click.option("--mccs-per-psm", type=int, default=1, show_default=True)
@click.option("--alts-per-mcc", type=int, default=3, show_default=True)
@click.option("--topology", type=click.Choice(["chain", "branch"]), default="chain", show_default=True)
@click.option("--tightness", type=float, default=2.0, show_default=True,
              help="Constraint bound as a multiple of the mid-range configuration's latency.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-fpin", type=int, default=2, show_default=True)
@click.option("--grid", nargs=3, type=float, default=(10.0, 60.0, 10.0), show_default=True)
@click.option("--preset", type=click.Choice(["ads-like"]), default=None,
              help="Generate the published-shape preset (10 PSMs, 18 MCCs, 490 alternatives).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True)
def gen_bench(psms, mccs_per_psm, alts_per_mcc, topology, tightness, seed, n_fpin, grid, preset, output):
    """Generate a deterministic synthetic benchmark system."""
    if preset == "ads-like":
        model = ads_like_system(seed=seed, tightness=tightness)
    else:
        model = generate_system(
            psms=psms, mccs_per_psm=mccs_per_psm, alts_per_mcc=alts_per_mcc,
            topology=topology, tightness=tightness, seed=seed,
            n_fpin=n_fpin, freq_grid=tuple(grid),
        )
    save_system(model, output)
    n_mccs = sum(len(p.mccs) for p in model.psms)
    n_alts = sum(len(m.alternatives) for p in model.psms for m in p.mccs)
    click.echo(f"wrote {output}: {len(model.psms)} psms, {n_mccs} mccs, {n_alts} alternatives")


if __name__ == "__main__":
    main()
