"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .den import RejectedInstanceError, TrainConfig, initial_solution, train
from .feasibility import check, precheck
from .graph import MalformedInputError, load_graph
from .hardware import OutOfRegisterError, RegisterProfile, get_profile, load_profile, with_lattice
from .lattice import CapacityError, load_lattice, post_remap_metrics, remap
from .pipeline import (
    ANTENNA_CONFLICT_RADIUS,
    SAMPLE_TIME_LIMIT,
    InputError,
    PipelineConfig,
    ingest_antennas,
    ingest_dataset,
    load_outcomes,
    run_pipeline,
    stress_hint,
    write_atomic,
)
from .plots import embedding_svg, gap_box_svg, success_bar_svg

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_MALFORMED = 2
EXIT_REJECTED = 3

log = logging.getLogger("udgembed")


def _profile(args) -> RegisterProfile:
    profile = load_profile(args.profile_file) if getattr(args, "profile_file", None) else get_profile(args.profile)
    if getattr(args, "lattice_file", None):
        profile = with_lattice(profile, load_lattice(args.lattice_file))
    return profile


def load_embedding(path: str | Path) -> np.ndarray:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInputError(f"cannot read embedding {path}: {exc}") from exc
    coords = doc["coords"] if isinstance(doc, dict) else doc
    try:
        arr = np.asarray(coords, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"embedding is not a list of [x, y] pairs: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.isfinite(arr).all():
        raise MalformedInputError("embedding is not a list of finite [x, y] pairs")
    return arr


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=1)
    if out:
        write_atomic(Path(out), text + "\n")
    else:
        print(text)


def cmd_traps_gen(args) -> int:
    profile = _profile(args)
    if profile.lattice is None:
        raise MalformedInputError(f"profile {profile.name!r} has no trap lattice")
    _emit(profile.lattice.to_document(), args.out)
    return EXIT_OK


def cmd_embed(args) -> int:
    profile = _profile(args)
    g = load_graph(args.graph)
    pre = precheck(g, profile)
    if not pre.passed:
        print("precheck rejected: " + "; ".join(pre.reasons()), file=sys.stderr)
        return EXIT_REJECTED
    tc = TrainConfig(rng_seed=args.seed, time_limit=args.time_limit)
    if args.max_iters is not None:
        tc = replace(tc, max_iterations=args.max_iters)
    hint = load_embedding(args.hint) if args.hint else (stress_hint(g) if g.m else None)
    res = train(g, initial_solution(g, profile, hint=hint, seed=args.seed), profile, tc)
    out = Path(args.out)
    write_atomic(out / "embedding.json", json.dumps({"coords": res.final_embedding.tolist()}) + "\n")
    write_atomic(out / "train_report.json", json.dumps(res.to_document(), indent=1) + "\n")
    write_atomic(out / "embedding.svg", embedding_svg(res.final_embedding, g, profile, profile.lattice))
    print(json.dumps(res.report.to_document() | {"iterations_used": res.iterations_used, "final_loss": res.final_loss}, indent=1))
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


def cmd_remap(args) -> int:
    profile = _profile(args)
    if profile.lattice is None:
        raise MalformedInputError(f"profile {profile.name!r} has no trap lattice")
    g = load_graph(args.graph)
    coords = load_embedding(args.embedding)
    if len(coords) != g.n:
        raise MalformedInputError(f"embedding has {len(coords)} points for {g.n} vertices")
    out = remap(coords, g, profile.lattice)
    rep = post_remap_metrics(out, g, profile)
    if args.out:
        write_atomic(Path(args.out), json.dumps({"coords": out.tolist()}) + "\n")
        print(json.dumps(rep.to_document(), indent=1))
    else:
        print(json.dumps({"coords": out.tolist(), "metrics": rep.to_document()}, indent=1))
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_check(args) -> int:
    profile = _profile(args)
    g = load_graph(args.graph)
    coords = load_embedding(args.embedding)
    if len(coords) != g.n:
        raise MalformedInputError(f"embedding has {len(coords)} points for {g.n} vertices")
    require = profile.is_lattice if args.require_traps is None else args.require_traps
    rep = check(coords, g, profile, margin=args.margin, require_traps=require)
    print(json.dumps(rep.to_document(), indent=1))
    return EXIT_OK if rep.feasible else EXIT_INFEASIBLE


def cmd_ingest_antennas(args) -> int:
    g, antennas = ingest_antennas(args.csv, args.radius)
    out = Path(args.out)
    write_atomic(out / "graph.json", json.dumps(g.to_document()) + "\n")
    write_atomic(out / "hints.json", json.dumps({"ids": antennas.ids, "coords": antennas.positions.tolist()}) + "\n")
    print(f"{g.n} antennas, {g.m} conflicts -> {out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    profile = _profile(args)
    src = Path(args.input)
    if src.is_dir():
        manifest = ingest_dataset(src, args.n_max)
        samples = manifest.samples
        for sid, why in manifest.skipped:
            print(f"skipped {sid}: {why}", file=sys.stderr)
    else:
        g = load_graph(src)
        if g.n > args.n_max:
            print(f"skipped {src.name}: n={g.n} exceeds threshold {args.n_max}", file=sys.stderr)
            samples = []
        else:
            samples = [(src.name.split(".")[0], g)]
    hints = {}
    if args.hints:
        hint = load_embedding(args.hints)
        hints = {sid: hint for sid, _ in samples}
    cfg = PipelineConfig(time_limit=args.time_limit, seed=args.seed, workers=args.workers)
    report = run_pipeline(samples, profile, cfg, hints=hints, out_dir=args.out)
    _write_report(report, Path(args.out) / "report.json")
    ok, total = report.success_count, len(report.outcomes)
    print(f"{ok}/{total} samples feasible")
    return EXIT_OK if ok == total else EXIT_INFEASIBLE


def _write_report(report, path: Path) -> None:
    write_atomic(path, json.dumps(report.to_document(), indent=1) + "\n")
    write_atomic(path.with_suffix(".csv"), report.to_csv())
    write_atomic(path.with_name(path.stem + "_success.svg"), success_bar_svg(report.success_by_n))
    write_atomic(path.with_name(path.stem + "_gaps.svg"), gap_box_svg(report.gap_by_n))


def cmd_report(args) -> int:
    report = load_outcomes(args.input)
    _write_report(report, Path(args.out))
    for n, (ok, total) in report.success_by_n.items():
        print(f"n={n}: {ok}/{total}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="udgembed", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_profile(p, default="aquila"):
        p.add_argument("--profile", default=default, help="aquila or orion-alpha")
        p.add_argument("--profile-file", help="custom profile document")
        p.add_argument("--lattice-file", help="custom trap lattice document")

    traps = sub.add_parser("traps", help="trap lattice tools")
    traps_sub = traps.add_subparsers(dest="traps_command", required=True)
    gen = traps_sub.add_parser("gen", help="write the trap coordinates of a profile")
    with_profile(gen, "orion-alpha")
    gen.add_argument("--out")
    gen.set_defaults(func=cmd_traps_gen)

    p = sub.add_parser("embed", help="train an embedding for one graph")
    p.add_argument("--graph", required=True)
    with_profile(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--time-limit", type=float, default=SAMPLE_TIME_LIMIT)
    p.add_argument("--hint", help="embedding document used as the starting shape")
    p.add_argument("--out", default="embed_out")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("remap", help="snap a free-space embedding onto traps")
    p.add_argument("--embedding", required=True)
    p.add_argument("--graph", required=True)
    with_profile(p, "orion-alpha")
    p.add_argument("--out")
    p.set_defaults(func=cmd_remap)

    p = sub.add_parser("check", help="verify an embedding")
    p.add_argument("--embedding", required=True)
    p.add_argument("--graph", required=True)
    with_profile(p)
    p.add_argument("--margin", type=float, default=0.0, help="required squared clearance beyond r_b for non-edges")
    p.add_argument("--require-traps", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("ingest-antennas", help="build a conflict graph from antenna sites")
    p.add_argument("--csv", required=True)
    p.add_argument("--radius", type=float, default=ANTENNA_CONFLICT_RADIUS)
    p.add_argument("--out", default="antennas_out")
    p.set_defaults(func=cmd_ingest_antennas)

    p = sub.add_parser("pipeline", help="run the full flow over a graph or a directory")
    p.add_argument("--input", required=True)
    with_profile(p)
    p.add_argument("--n-max", type=int, default=256)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float, default=SAMPLE_TIME_LIMIT)
    p.add_argument("--hints", help="embedding document of starting positions (single input)")
    p.add_argument("--out", default="pipeline_out")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", help="aggregate per-sample results")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RejectedInstanceError as exc:
        print(f"precheck rejected: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (MalformedInputError, InputError, OutOfRegisterError, CapacityError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
