"""Triangular trap lattice and greedy degree-ordered snapping onto it."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .feasibility import FeasibilityReport, check
from .graph import Graph, MalformedInputError
from .hardware import RegisterProfile

ORION_SPACING = 5.0
ORION_RINGS = 4
TRAP_MATCH_TOL = 1e-9


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class TrapLattice:
    traps: np.ndarray
    spacing: float

    def __post_init__(self) -> None:
        t = np.asarray(self.traps, dtype=float).reshape(-1, 2)
        t.flags.writeable = False
        object.__setattr__(self, "traps", t)

    def __len__(self) -> int:
        return len(self.traps)

    def to_document(self) -> dict:
        return {"spacing": self.spacing, "traps": self.traps.tolist()}

    def trap_indices(self, coords: np.ndarray) -> np.ndarray:
        """Index of the trap each coordinate sits on, or -1 if it sits on none."""
        c = np.asarray(coords, dtype=float).reshape(-1, 2)
        d = np.linalg.norm(c[:, None, :] - self.traps[None, :, :], axis=2)
        idx = d.argmin(axis=1)
        return np.where(d[np.arange(len(c)), idx] <= TRAP_MATCH_TOL, idx, -1)


def hexagonal_patch(rings: int, spacing: float) -> np.ndarray:
    """Centred hexagon of a triangular lattice, ``1 + 3 r (r + 1)`` sites.

    Sites are ordered by row (ascending y) then by x, so rows of the lattice
    run along the x axis.
    """
    sites = []
    for r in range(-rings, rings + 1):
        for q in range(-rings, rings + 1):
            if max(abs(q), abs(r), abs(q + r)) <= rings:
                sites.append((spacing * (q + r / 2), spacing * r * np.sqrt(3) / 2))
    sites.sort(key=lambda p: (round(p[1], 9), round(p[0], 9)))
    return np.array(sites)


def generate_orion_lattice() -> TrapLattice:
    return TrapLattice(hexagonal_patch(ORION_RINGS, ORION_SPACING), ORION_SPACING)


def lattice_from_document(doc: dict) -> TrapLattice:
    try:
        traps = np.asarray(doc["traps"], dtype=float)
        spacing = float(doc.get("spacing", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"bad lattice document: {exc}") from exc
    if traps.ndim != 2 or traps.shape[1] != 2 or not np.isfinite(traps).all():
        raise MalformedInputError("lattice traps must be a list of finite [x, y] pairs")
    return TrapLattice(traps, spacing)


def load_lattice(path: str | Path) -> TrapLattice:
    return lattice_from_document(json.loads(Path(path).read_text()))


def remap(coords: np.ndarray, g: Graph, lattice: TrapLattice) -> np.ndarray:
    """Snap a free-space solution onto distinct traps.

    Vertices are visited by decreasing degree (ties: lower index first); each
    takes the nearest trap still free (ties: lower trap index), which is then
    removed from the pool.
    """
    p = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(p) != g.n:
        raise ValueError(f"embedding has {len(p)} points for a graph with {g.n} vertices")
    if g.n > len(lattice):
        raise CapacityError(f"{g.n} vertices do not fit on {len(lattice)} traps")
    traps = lattice.traps
    free = np.ones(len(traps), dtype=bool)
    out = np.empty_like(p)
    order = sorted(range(g.n), key=lambda v: (-g.degrees[v], v))
    for v in order:
        d2 = ((traps - p[v]) ** 2).sum(axis=1)
        d2[~free] = np.inf
        t = int(np.argmin(d2))
        free[t] = False
        out[v] = traps[t]
    return out


def post_remap_metrics(coords: np.ndarray, g: Graph, profile: RegisterProfile) -> FeasibilityReport:
    """Recompute every metric on lattice positions; hardware feasibility includes trap membership."""
    return check(coords, g, profile, require_traps=True)
