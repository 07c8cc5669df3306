"""End-to-end acceptance checks; each test prints one verdict line in the summary."""

import time
from itertools import combinations

import numpy as np
import pytest

from oracles import finite_difference_errors
from udgembed.den import DenModel, ElfConfig, FixedLayers, TrainConfig, elf_of_coords, gradients, initial_solution, train
from udgembed.feasibility import check, precheck
from udgembed.graph import Graph, decompose
from udgembed.hardware import profile_aquila, profile_orion_alpha, to_register_frame
from udgembed.lattice import generate_orion_lattice, post_remap_metrics, remap
from udgembed.oracle import exact_lattice_search, plant
from udgembed.pipeline import PipelineConfig, embed_graph, ingest_antennas, stress_hint

AQUILA = profile_aquila()
ORION = profile_orion_alpha()
MARGIN = 0.1
SAMPLE_BUDGET = 300.0


def note(record_property, detail):
    record_property("detail", detail)


def random_graph(n, p, rng):
    return Graph(n, [e for e in combinations(range(n), 2) if rng.random() < p])


@pytest.mark.criterion(1, "lattice geometry")
def test_lattice_geometry(record_property):
    start = time.perf_counter()
    traps = generate_orion_lattice().traps
    d = np.linalg.norm(traps[:, None] - traps[None], axis=2)[np.triu_indices(len(traps), 1)]
    elapsed = time.perf_counter() - start
    note(record_property, f"{len(traps)} traps, min {d.min():.12f}, max {d.max():.12f}, {elapsed:.3f}s")
    assert len(traps) == 61
    assert abs(d.min() - 5.0) <= 1e-9 and abs(d.max() - 40.0) <= 1e-9
    assert elapsed < 1.0


def _random_embeddings(profile, count, rng):
    """Planted witnesses, sometimes jittered or with an edge flipped, in the centred frame."""
    out = []
    while len(out) < count:
        inst = plant(int(rng.integers(2, 12)), profile, seed=int(rng.integers(1 << 30)))
        p = inst.witness - np.asarray(profile.center)
        g = inst.graph
        mode = rng.integers(3)
        if mode == 1:
            moved = rng.random(len(p)) < 0.3
            step = rng.uniform(0.05, 1.5, size=(len(p), 2)) * rng.choice([-1, 1], size=(len(p), 2))
            p = np.clip(p + moved[:, None] * step, -profile.coord_bound + 1e-6, profile.coord_bound - 1e-6)
        elif mode == 2 and g.n > 1:
            pairs = list(combinations(range(g.n), 2))
            flip = pairs[int(rng.integers(len(pairs)))]
            g = Graph(g.n, set(g.edges) ^ {flip})
        out.append((g, p))
    return out


def _trained_embeddings(profile, count, rng):
    out = []
    for k in range(count):
        g = plant(4 + k % 6, profile, seed=int(rng.integers(1 << 30)), connected=True).graph
        tc = TrainConfig(rng_seed=k, max_iterations=int(rng.choice([50, 500, 3000])), restarts=0, margin=MARGIN)
        res = train(g, initial_solution(g, profile, hint=stress_hint(g), seed=k), profile, tc)
        out.append((g, res.final_embedding - np.asarray(profile.center)))
    return out


@pytest.mark.criterion(2, "loss and checker agree")
def test_loss_checker_equivalence(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    disagreements, accepted, total = 0, 0, 0
    for profile in (AQUILA, ORION):
        cfg = ElfConfig.from_profile(profile, margin=MARGIN)
        cases = _random_embeddings(profile, 200, rng) + _trained_embeddings(profile, 20, rng)
        for g, centred in cases:
            zero_loss = elf_of_coords(centred, g, cfg).total <= 1e-9
            ok = check(to_register_frame(centred, profile), g, profile, margin=MARGIN).feasible
            disagreements += zero_loss != ok
            accepted += ok
            total += 1
    elapsed = time.perf_counter() - start
    note(record_property, f"{total} embeddings, {accepted} accepted, {disagreements} disagreements, {elapsed:.1f}s")
    assert disagreements == 0
    assert 0 < accepted < total
    assert elapsed < 30


@pytest.mark.criterion(3, "gradient correctness")
def test_gradient_correctness(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    errors, skipped = [], 0
    for k in range(20):
        profile = (AQUILA, ORION)[k % 2]
        cfg = ElfConfig.from_profile(profile, margin=MARGIN)
        init = rng.uniform(-0.5, 0.5, (5, 2)) * profile.coord_bound
        g = random_graph(5, 0.5, rng)
        model = DenModel.init(init, profile.coord_bound, rng)
        analytic = gradients(model, FixedLayers.build(5), init, g, cfg)
        kwargs = dict(r_b=cfg.r_b, d_min=cfg.d_min, d_max=cfg.d_max, row_spacing=cfg.row_spacing, margin=cfg.margin)
        errs, skip = finite_difference_errors(model, init, sorted(g.edges), kwargs, analytic, h=1e-4)
        errors.extend(errs)
        skipped += skip
    errors = np.asarray(errors)
    within = float(np.mean(errors <= 1e-3))
    elapsed = time.perf_counter() - start
    note(record_property, f"{within:.2%} of {errors.size} gradient entries within 1e-3, {skipped} near kinks skipped, {elapsed:.1f}s")
    assert within >= 0.99
    assert elapsed < 60


def _planted_recovery(sizes, seed0):
    outcomes = []
    for k, n in enumerate(sizes):
        inst = plant(n, AQUILA, seed=seed0 + k, connected=True)
        g = inst.graph
        tc = TrainConfig(rng_seed=k, time_limit=SAMPLE_BUDGET)
        start = time.perf_counter()
        res = train(g, initial_solution(g, AQUILA, hint=stress_hint(g), seed=k), AQUILA, tc)
        elapsed = time.perf_counter() - start
        ok = res.feasible and elapsed <= SAMPLE_BUDGET and check(res.final_embedding, g, AQUILA, margin=tc.margin).feasible
        outcomes.append((n, ok, elapsed))
    return outcomes


@pytest.mark.criterion(4, "planted recovery on Aquila")
def test_planted_recovery(record_property):
    start = time.perf_counter()
    small = _planted_recovery([2 + k % 11 for k in range(50)], 40_000)
    medium = _planted_recovery([13 + k % 4 for k in range(50)], 50_000)
    rate_small = np.mean([ok for _, ok, _ in small])
    rate_medium = np.mean([ok for _, ok, _ in medium])
    elapsed = time.perf_counter() - start
    slowest = max(t for _, _, t in small + medium)
    note(
        record_property,
        f"n<=12: {rate_small:.0%}, 13<=n<=16: {rate_medium:.0%}, slowest sample {slowest:.1f}s, total {elapsed / 60:.1f} min",
    )
    assert rate_small >= 0.70
    assert rate_medium >= 0.60
    assert elapsed <= 2 * 3600


@pytest.mark.criterion(5, "remap guarantees")
def test_remap_guarantees(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    lattice = ORION.lattice
    bad = 0
    for _ in range(100):
        n = int(rng.integers(1, 21))
        g = random_graph(n, float(rng.uniform(0.05, 0.5)), rng)
        free = rng.uniform(-ORION.coord_bound, ORION.coord_bound, (n, 2))
        out = remap(free, g, lattice)
        idx = lattice.trap_indices(out)
        injective = (idx >= 0).all() and len(set(idx.tolist())) == n
        idempotent = np.array_equal(remap(out, g, lattice), out)
        hardware = post_remap_metrics(out, g, ORION).hardware_feasible
        bad += not (injective and idempotent and hardware)
    elapsed = time.perf_counter() - start
    note(record_property, f"100 solutions, {bad} violations, {elapsed:.2f}s")
    assert bad == 0
    assert elapsed < 10


@pytest.mark.criterion(6, "oracle cross-validation")
def test_oracle_cross_validation(record_property):
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    contradictions, solvable, accepted_runs = 0, 0, 0
    graphs = [random_graph(2 + k % 4, 0.5, rng) for k in range(20)]
    # the only graphs on <= 5 vertices with no lattice embedding: K_{2,3} and K_{2,3} plus an edge on its larger side
    k23 = [(a, b) for a in (0, 1) for b in (2, 3, 4)]
    graphs += [Graph(5, k23), Graph(5, k23 + [(2, 3)])]
    for g in graphs:
        exact = exact_lattice_search(g, ORION.lattice, ORION)
        solvable += exact is not None
        for seed in range(5):
            tc = TrainConfig(rng_seed=seed, max_iterations=5000, restarts=1)
            res = train(g, initial_solution(g, ORION, seed=seed), ORION, tc)
            lattice_coords = remap(res.final_embedding, g, ORION.lattice)
            ok = check(lattice_coords, g, ORION, require_traps=True).feasible
            accepted_runs += ok
            if ok and exact is None:
                contradictions += 1
    elapsed = time.perf_counter() - start
    note(
        record_property,
        f"{solvable}/{len(graphs)} lattice-solvable, {accepted_runs}/{5 * len(graphs)} runs accepted, {contradictions} contradictions, {elapsed:.1f}s",
    )
    assert contradictions == 0
    assert elapsed < 600


@pytest.mark.criterion(7, "precheck boundaries")
def test_precheck_boundaries(record_property):
    start = time.perf_counter()
    results = {
        "K7 clique_ok": precheck(Graph.complete(7), AQUILA).clique_ok,
        "K8 clique_ok": precheck(Graph.complete(8), AQUILA).clique_ok,
        "degree 18": precheck(Graph(19, [(0, k) for k in range(1, 19)]), AQUILA).max_degree_ok,
        "degree 19": precheck(Graph(20, [(0, k) for k in range(1, 20)]), AQUILA).max_degree_ok,
        "n=256": precheck(Graph(256), AQUILA).capacity_ok,
        "n=257": precheck(Graph(257), AQUILA).capacity_ok,
    }
    expected = {"K7 clique_ok": True, "K8 clique_ok": False, "degree 18": True, "degree 19": False, "n=256": True, "n=257": False}
    elapsed = time.perf_counter() - start
    note(record_property, ", ".join(f"{k}: {v}" for k, v in results.items()) + f", {elapsed:.3f}s")
    assert results == expected
    assert elapsed < 1


@pytest.mark.criterion(8, "37-vertex timing")
def test_desk_scale_timing(record_property):
    inst = plant(37, AQUILA, seed=115, connected=True)
    # a wider squared margin on non-edges pushes the achieved gap past 0.3 um
    cfg = PipelineConfig(train=TrainConfig(margin=6.3, restarts=20), time_limit=SAMPLE_BUDGET)
    start = time.perf_counter()
    out = embed_graph(inst.graph, AQUILA, cfg)
    elapsed = time.perf_counter() - start
    rep = out.components[0].report
    note(
        record_property,
        f"status {out.status}, D_adj {rep.d_adj_max:.3f}, d_nonadj {rep.d_nonadj_min:.3f}, gap {out.gap:.3f}, {elapsed:.1f}s",
    )
    assert len(out.components) == 1 and inst.graph.n == 37
    assert out.feasible
    assert out.gap >= 0.3
    assert elapsed < SAMPLE_BUDGET


def synthetic_antenna_csv():
    """Sites in well-separated groups: loners, tight clusters and chains."""
    rows = []
    groups = [1] * 9 + [2] * 6 + [3] * 4 + [4] + [5] * 2
    chains = [7, 7, 10, 19]
    site = 0
    for g, size in enumerate(groups + chains):
        cx, cy = 5000.0 * (g % 6), 5000.0 * (g // 6)
        if g < len(groups):
            angles = 2 * np.pi * np.arange(size) / size
            pts = np.column_stack([cx + 50 * np.cos(angles), cy + 50 * np.sin(angles)]) if size > 1 else [[cx, cy]]
        else:
            # a zig-zag chain: consecutive sites 100 m apart, second neighbours 170 m apart
            pts = [[cx + 85.0 * k, cy + (52.7 if k % 2 else 0.0)] for k in range(size)]
        for x, y in pts:
            rows.append(f"a{site:03d},{x:.3f},{y:.3f}")
            site += 1
    return "id,x,y\n" + "\n".join(rows) + "\n"


@pytest.mark.criterion(9, "antenna decomposition census")
def test_antenna_census(record_property, tmp_path):
    f = tmp_path / "antennas.csv"
    f.write_text(synthetic_antenna_csv())
    start = time.perf_counter()
    g, antennas = ingest_antennas(f, 140)
    census = decompose(g).census()
    elapsed = time.perf_counter() - start
    expected = {"isolated": 9, "complete": {2: 6, 3: 4, 4: 1, 5: 2}, "general": [7, 7, 10, 19]}
    note(record_property, f"{g.n} antennas, census {census}, {elapsed:.2f}s")
    assert g.n == 90 and len(antennas.records) == 90
    assert census == expected
    assert elapsed < 5
