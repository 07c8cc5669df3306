"""Ingestion, end-to-end orchestration and batch aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .den import RejectedInstanceError, TrainConfig, initial_solution, train
from .feasibility import FeasibilityReport, check, precheck
from .graph import Graph, MalformedInputError, decompose, load_graph
from .hardware import RegisterProfile
from .lattice import post_remap_metrics, remap

log = logging.getLogger(__name__)

ANTENNA_CONFLICT_RADIUS = 140.0
SAMPLE_TIME_LIMIT = 300.0
GRAPH_SUFFIXES = (".json", ".txt", ".edges", ".edgelist")


class InputError(OSError):
    pass


# -- ingestion -------------------------------------------------------------------


@dataclass(frozen=True)
class AntennaRecord:
    id: str
    x: float
    y: float


@dataclass(frozen=True)
class AntennaSet:
    records: list[AntennaRecord]

    @property
    def positions(self) -> np.ndarray:
        return np.array([[r.x, r.y] for r in self.records], dtype=float).reshape(-1, 2)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]


def parse_antennas(text: str) -> AntennaSet:
    reader = csv.DictReader(io.StringIO(text))
    fields = [f.strip() for f in (reader.fieldnames or [])]
    if fields[:3] != ["id", "x", "y"]:
        raise MalformedInputError(f"antenna file needs header 'id,x,y', got {reader.fieldnames}")
    records, seen = [], set()
    for lineno, row in enumerate(reader, start=2):
        row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
        rid = row["id"]
        if rid in seen:
            raise MalformedInputError(f"line {lineno}: duplicate antenna id {rid!r}")
        try:
            x, y = float(row["x"]), float(row["y"])
        except ValueError:
            raise MalformedInputError(f"line {lineno}: non-numeric coordinate") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise MalformedInputError(f"line {lineno}: non-finite coordinate")
        seen.add(rid)
        records.append(AntennaRecord(rid, x, y))
    if not records:
        raise MalformedInputError("antenna file has no records")
    return AntennaSet(records)


def ingest_antennas(source: str | Path, conflict_radius: float = ANTENNA_CONFLICT_RADIUS) -> tuple[Graph, AntennaSet]:
    """Conflict graph of antennas: an edge wherever two sites are within ``conflict_radius`` metres.

    Positions are expected already projected to metres; a pair exactly at the
    radius conflicts.
    """
    if not conflict_radius > 0:
        raise ValueError("conflict radius must be positive")
    path = Path(source)
    text = path.read_text() if path.is_file() else str(source)
    antennas = parse_antennas(text)
    p = antennas.positions
    iu, ju = np.triu_indices(len(p), k=1)
    close = np.hypot(*(p[iu] - p[ju]).T) <= conflict_radius
    g = Graph(len(p), frozenset(zip(iu[close].tolist(), ju[close].tolist())))
    return g, antennas


@dataclass
class DatasetManifest:
    samples: list[tuple[str, Graph]]
    n_threshold: int
    skipped: list[tuple[str, str]] = field(default_factory=list)


def ingest_dataset(directory: str | Path, n_threshold: int) -> DatasetManifest:
    """Load every edge-list document in ``directory`` with ``n <= n_threshold``."""
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"not a readable directory: {directory}")
    samples, skipped = [], []
    for f in sorted(p for p in d.iterdir() if p.suffix in GRAPH_SUFFIXES and p.is_file()):
        sid = f.name.split(".")[0]
        try:
            g = load_graph(f)
        except (MalformedInputError, OSError, UnicodeDecodeError) as exc:
            skipped.append((sid, f"malformed: {exc}"))
            log.warning("skipping %s: %s", f.name, exc)
            continue
        if g.n > n_threshold:
            skipped.append((sid, f"n={g.n} exceeds threshold {n_threshold}"))
            log.info("skipping %s: n=%d > %d", f.name, g.n, n_threshold)
            continue
        samples.append((sid, g))
    return DatasetManifest(samples, n_threshold, skipped)


# -- trivial components ----------------------------------------------------------


def _hexagon_cluster(a: float) -> np.ndarray:
    h = a * math.sqrt(3) / 2
    # centre first, then neighbours ordered so every prefix stays compact
    return np.array([[0, 0], [a, 0], [a / 2, h], [-a / 2, h], [-a, 0], [-a / 2, -h], [a / 2, -h]], dtype=float)


def trivial_embedding(k: int, profile: RegisterProfile) -> np.ndarray | None:
    """Rigid placement of K_k (k <= 7) with every pair inside ``[d_min, r_b]``.

    Takes the first k sites of a centred hexagon of side ``a``; pair distances
    are a, a*sqrt(3) and 2a, so ``a`` is chosen in ``[d_min, r_b / 2]``. Rows of
    the hexagon are ``a*sqrt(3)/2`` apart. Returns None if the profile admits
    no such hexagon or the result fails the checker.
    """
    if not 1 <= k <= 7:
        return None
    a = min(max(5.0, profile.d_min), profile.r_b / 2)
    coords = _hexagon_cluster(a)[:k] + np.asarray(profile.center)
    if profile.is_lattice:
        coords = remap(coords, Graph.complete(k), profile.lattice)
    report = check(coords, Graph.complete(k), profile, require_traps=profile.is_lattice)
    return coords if report.feasible else None


# -- orchestration ---------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    train: TrainConfig = TrainConfig()
    time_limit: float = SAMPLE_TIME_LIMIT
    init: str = "stress"
    seed: int = 0
    workers: int = 1


@dataclass
class ComponentResult:
    kind: str
    vertices: tuple[int, ...]
    coords: np.ndarray | None
    report: FeasibilityReport | None
    free_space_report: FeasibilityReport | None = None
    iterations: int = 0
    status: str = "feasible"
    message: str = ""

    @property
    def feasible(self) -> bool:
        return self.report is not None and self.report.feasible

    def to_document(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": list(self.vertices),
            "coords": None if self.coords is None else self.coords.tolist(),
            "status": self.status,
            "message": self.message,
            "iterations": self.iterations,
            "metrics": None if self.report is None else self.report.to_document(),
            "free_space_metrics": None if self.free_space_report is None else self.free_space_report.to_document(),
        }


@dataclass
class SampleOutcome:
    sample_id: str
    n: int
    status: str
    gap: float
    iterations: int
    wall_time: float
    components: list[ComponentResult] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_document(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "n": self.n,
            "status": self.status,
            "feasible": self.feasible,
            "gap": _num(self.gap),
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "components": [c.to_document() for c in self.components],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "SampleOutcome":
        return cls(doc["sample_id"], int(doc["n"]), doc["status"], _unnum(doc["gap"]), int(doc["iterations"]), float(doc["wall_time"]))


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _unnum(x) -> float:
    return float(x)


def stress_hint(g: Graph) -> np.ndarray:
    """Kamada-Kawai layout over shortest-path distances, as a starting shape."""
    if g.n == 1:
        return np.zeros((1, 2))
    pos = nx.kamada_kawai_layout(g.to_networkx())
    return np.array([pos[v] for v in range(g.n)], dtype=float)


def _embed_general(
    g: Graph,
    profile: RegisterProfile,
    cfg: PipelineConfig,
    hint: np.ndarray | None,
    deadline: float,
) -> ComponentResult:
    pre = precheck(g, profile)
    if not pre.passed:
        return ComponentResult("general", (), None, None, status="rejected", message="; ".join(pre.reasons()))
    if hint is None and cfg.init == "stress":
        hint = stress_hint(g)
    init = initial_solution(g, profile, hint=hint, seed=cfg.seed)
    remaining = max(deadline - time.perf_counter(), 0.0)
    tc = replace(cfg.train, rng_seed=cfg.seed, time_limit=remaining)
    res = train(g, init, profile, tc)
    coords, report, free = res.final_embedding, res.report, None
    if profile.is_lattice:
        free = report
        coords = remap(coords, g, profile.lattice)
        report = post_remap_metrics(coords, g, profile)
    if report.feasible:
        status = "feasible"
    elif res.timed_out:
        status = "timeout"
    else:
        status = "infeasible"
    return ComponentResult("general", (), coords, report, free, res.iterations_used, status)


def embed_graph(
    g: Graph,
    profile: RegisterProfile,
    cfg: PipelineConfig = PipelineConfig(),
    hint: np.ndarray | None = None,
    sample_id: str = "sample",
) -> SampleOutcome:
    """Decompose, shortcut trivial components, train the rest, and verify everything.

    Each component gets its own register; coordinates in the result are
    indexed like ``component.vertices`` (global labels).
    """
    start = time.perf_counter()
    deadline = start + cfg.time_limit
    dec = decompose(g)
    comps: list[ComponentResult] = []
    for v in dec.isolated:
        coords = trivial_embedding(1, profile)
        comps.append(ComponentResult("isolated", (v,), coords, check(coords, Graph(1), profile, require_traps=profile.is_lattice)))
    for clique in dec.complete:
        k = len(clique)
        coords = trivial_embedding(k, profile)
        if coords is not None:
            rep = check(coords, Graph.complete(k), profile, require_traps=profile.is_lattice)
            comps.append(ComponentResult("complete", clique, coords, rep))
            continue
        sub = Graph.complete(k)
        res = _embed_general(sub, profile, cfg, None, deadline)
        res.kind, res.vertices = "complete", clique
        comps.append(res)
    for comp in dec.general:
        sub_hint = None if hint is None else np.asarray(hint, dtype=float)[list(comp.vertices)]
        try:
            res = _embed_general(comp.graph, profile, cfg, sub_hint, deadline)
        except (RejectedInstanceError, ValueError) as exc:
            res = ComponentResult("general", (), None, None, status="error", message=str(exc))
        res.vertices = comp.vertices
        comps.append(res)

    statuses = [c.status for c in comps]
    if all(s == "feasible" for s in statuses):
        status = "feasible"
    else:
        status = next(s for s in ("rejected", "error", "timeout", "infeasible") if s in statuses)
    gaps = [c.report.gap for c in comps if c.report is not None]
    gap = min(gaps) if gaps and len(gaps) == len(comps) else -math.inf
    return SampleOutcome(
        sample_id=sample_id,
        n=g.n,
        status=status,
        gap=gap,
        iterations=sum(c.iterations for c in comps),
        wall_time=time.perf_counter() - start,
        components=comps,
    )


def stitch(outcome: SampleOutcome, n: int) -> list[np.ndarray | None]:
    """Per-global-vertex coordinates (in that vertex's component register)."""
    out: list[np.ndarray | None] = [None] * n
    for comp in outcome.components:
        if comp.coords is None:
            continue
        for local, v in enumerate(comp.vertices):
            out[v] = comp.coords[local]
    return out


# -- batch report ----------------------------------------------------------------


def _summary(values: Sequence[float]) -> dict:
    v = np.asarray([x for x in values if math.isfinite(x)], dtype=float)
    if not v.size:
        return {"count": 0}
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return {"count": int(v.size), "min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4]}


@dataclass
class BatchReport:
    outcomes: list[SampleOutcome]

    @property
    def success_by_n(self) -> dict[int, tuple[int, int]]:
        """``n -> (feasible samples, all samples)``."""
        out: dict[int, list[int]] = {}
        for o in self.outcomes:
            cell = out.setdefault(o.n, [0, 0])
            cell[0] += o.feasible
            cell[1] += 1
        return {n: tuple(v) for n, v in sorted(out.items())}

    @property
    def gap_by_n(self) -> dict[int, dict]:
        groups: dict[int, list[float]] = {}
        for o in self.outcomes:
            if o.feasible:
                groups.setdefault(o.n, []).append(o.gap)
        return {n: _summary(v) for n, v in sorted(groups.items())}

    @property
    def success_count(self) -> int:
        return sum(o.feasible for o in self.outcomes)

    @property
    def success_rate(self) -> float:
        return self.success_count / len(self.outcomes) if self.outcomes else 0.0

    def success_rate_between(self, lo: int, hi: int) -> float:
        sel = [o for o in self.outcomes if lo <= o.n <= hi]
        return sum(o.feasible for o in sel) / len(sel) if sel else 0.0

    def to_document(self) -> dict:
        return {
            "samples": [
                {k: v for k, v in o.to_document().items() if k != "components"} for o in self.outcomes
            ],
            "histogram": {str(n): {"feasible": s, "total": t} for n, (s, t) in self.success_by_n.items()},
            "gap_by_n": {str(n): s for n, s in self.gap_by_n.items()},
            "success_count": self.success_count,
            "sample_count": len(self.outcomes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_id", "n", "status", "feasible", "gap", "iterations", "wall_time"])
        for o in self.outcomes:
            w.writerow([o.sample_id, o.n, o.status, int(o.feasible), _num(o.gap), o.iterations, f"{o.wall_time:.3f}"])
        return buf.getvalue()


def _run_one(args) -> SampleOutcome:
    sid, g, profile, cfg, hint = args
    try:
        return embed_graph(g, profile, cfg, hint=hint, sample_id=sid)
    except Exception as exc:  # one bad sample never stops the batch
        log.exception("sample %s failed", sid)
        return SampleOutcome(sid, g.n, "error", -math.inf, 0, 0.0, [ComponentResult("general", (), None, None, status="error", message=str(exc))])


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_pipeline(
    samples: Graph | Iterable[tuple[str, Graph]],
    profile: RegisterProfile,
    cfg: PipelineConfig = PipelineConfig(),
    hints: dict[str, np.ndarray] | None = None,
    out_dir: str | Path | None = None,
) -> BatchReport:
    """Embed every sample and aggregate. Per-sample documents go to ``out_dir/samples``."""
    if isinstance(samples, Graph):
        samples = [("sample", samples)]
    hints = hints or {}
    jobs = [(sid, g, profile, cfg, hints.get(sid)) for sid, g in samples]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_run_one, jobs))
    else:
        outcomes = [_run_one(job) for job in jobs]
    if out_dir is not None:
        d = Path(out_dir) / "samples"
        for o in outcomes:
            write_atomic(d / f"{o.sample_id}.json", json.dumps(o.to_document(), indent=1))
    return BatchReport(outcomes)


def load_outcomes(directory: str | Path) -> BatchReport:
    d = Path(directory)
    if (d / "samples").is_dir():
        d = d / "samples"
    if not d.is_dir():
        raise InputError(f"not a readable directory: {directory}")
    outcomes = [SampleOutcome.from_document(json.loads(f.read_text())) for f in sorted(d.glob("*.json"))]
    return BatchReport(outcomes)
