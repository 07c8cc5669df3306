"""Ground truth for tests: planted instances and exhaustive lattice search."""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import permutations
from pathlib import Path

import numpy as np

from .feasibility import check, precheck
from .graph import Graph
from .hardware import RegisterProfile, to_register_frame
from .lattice import TrapLattice

MARGIN_BAND = 0.3
EXACT_SEARCH_LIMIT = 6
AREA_PER_VERTEX = 80.0


class GenerationError(RuntimeError):
    pass


class SizeLimitError(ValueError):
    pass


@dataclass(frozen=True)
class PlantedInstance:
    graph: Graph
    witness: np.ndarray
    profile: RegisterProfile
    seed: int
    attempts: int = 1

    def export(self, directory: str | Path, stem: str) -> tuple[Path, Path]:
        """Write ``<stem>.graph.json`` and ``<stem>.embedding.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        gp = d / f"{stem}.graph.json"
        ep = d / f"{stem}.embedding.json"
        gp.write_text(json.dumps(self.graph.to_document()) + "\n")
        ep.write_text(json.dumps({"coords": self.witness.tolist()}) + "\n")
        return gp, ep


def _row_levels(profile: RegisterProfile, half: float, band: float) -> np.ndarray | None:
    if profile.row_spacing is None:
        return None
    pitch = profile.row_spacing + band
    k = int(np.floor(half / pitch))
    return pitch * np.arange(-k, k + 1)


def plant(
    n: int,
    profile: RegisterProfile,
    seed: int = 0,
    *,
    band: float = MARGIN_BAND,
    area_per_vertex: float = AREA_PER_VERTEX,
    connected: bool = False,
    max_attempts: int = 200,
    tries_per_point: int = 500,
) -> PlantedInstance:
    """Sample a point set that satisfies every register rule and read a graph off it.

    Points are drawn one at a time inside a centred square of area
    ``n * area_per_vertex`` (clipped to the coordinate box); with a row rule
    the y values come from a grid of row levels ``row_spacing + band`` apart.
    A candidate is rejected if it lands within ``band`` of ``r_b`` of any
    earlier point, so the planted graph has clearance on both sides of the
    radius. Edges join pairs closer than ``r_b``.
    """
    if n < 1 or n > profile.capacity:
        raise ValueError(f"cannot plant {n} vertices on a register of capacity {profile.capacity}")
    rng = np.random.default_rng(seed)
    # strictly inside (-L, L) so the witness survives to_register_frame
    half = min(0.5 * np.sqrt(n * area_per_vertex), profile.coord_bound - 1e-6)
    rows = _row_levels(profile, half, band)
    rb = profile.r_b
    for attempt in range(1, max_attempts + 1):
        pts = np.empty((0, 2))
        for _ in range(n):
            for _ in range(tries_per_point):
                x = rng.uniform(-half, half)
                y = rng.choice(rows) if rows is not None else rng.uniform(-half, half)
                if not pts.size:
                    break
                d = np.hypot(pts[:, 0] - x, pts[:, 1] - y)
                if (d < profile.d_min).any() or (np.abs(d - rb) <= band).any():
                    continue
                if profile.d_max is not None and (d > profile.d_max).any():
                    continue
                if connected and not (d < rb).any():
                    continue
                break
            else:
                break
            pts = np.vstack([pts, [x, y]])
        if len(pts) < n:
            continue
        iu, ju = np.triu_indices(n, k=1)
        close = np.hypot(*(pts[iu] - pts[ju]).T) < rb
        g = Graph(n, frozenset(zip(iu[close].tolist(), ju[close].tolist())))
        if not precheck(g, profile).passed:
            continue
        witness = to_register_frame(pts, profile)
        if not check(witness, g, profile).feasible:
            continue
        return PlantedInstance(g, witness, profile, seed, attempt)
    raise GenerationError(f"no planted instance with n={n} after {max_attempts} attempts")


def candidates_table(lattice: TrapLattice, profile: RegisterProfile) -> tuple[np.ndarray, np.ndarray]:
    """Boolean trap-pair tables: within ``r_b`` (edge allowed) and strictly beyond it."""
    t = lattice.traps
    d = np.linalg.norm(t[:, None, :] - t[None, :, :], axis=2)
    ok = d >= profile.d_min - 1e-9
    if profile.d_max is not None:
        ok &= d <= profile.d_max + 1e-9
    np.fill_diagonal(ok, False)
    return ok & (d <= profile.r_b), ok & (d > profile.r_b)


def exact_lattice_search(g: Graph, lattice: TrapLattice, profile: RegisterProfile) -> np.ndarray | None:
    """Exhaustive backtracking for a lattice embedding that reproduces ``g`` exactly at ``r_b``.

    Vertices are placed in decreasing-degree order; each placement narrows the
    candidate traps of every later vertex, and a branch dies as soon as some
    unplaced vertex runs out of candidates.
    """
    if g.n > EXACT_SEARCH_LIMIT:
        raise SizeLimitError(f"exact search is limited to n <= {EXACT_SEARCH_LIMIT}, got {g.n}")
    near, far = candidates_table(lattice, profile)
    order = sorted(range(g.n), key=lambda v: (-g.degrees[v], v))
    adj = g.adjacency
    assignment = [-1] * g.n
    m = len(lattice)

    def extend(depth: int, cand: np.ndarray) -> bool:
        if depth == g.n:
            return True
        v = order[depth]
        for t in np.flatnonzero(cand[depth]):
            assignment[v] = int(t)
            nxt = cand.copy()
            for k in range(depth + 1, g.n):
                nxt[k] &= near[t] if adj[v, order[k]] else far[t]
            if nxt[depth + 1 :].any(axis=1).all() and extend(depth + 1, nxt):
                return True
        assignment[v] = -1
        return False

    cand = np.ones((g.n, m), dtype=bool)
    if not extend(0, cand):
        return None
    return lattice.traps[assignment].copy()


def naive_lattice_search(g: Graph, lattice: TrapLattice, profile: RegisterProfile) -> np.ndarray | None:
    """Full enumeration of injective trap assignments; only sensible for n <= 3."""
    for combo in permutations(range(len(lattice)), g.n):
        coords = lattice.traps[list(combo)]
        if check(coords, g, profile, require_traps=True).feasible:
            return coords.copy()
    return None
