"""Exact geometric verification of embeddings and pre-embedding necessary conditions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import Graph, stats
from .hardware import BOUNDS_TOL, RegisterProfile

ROW_TOLERANCE = 1e-6
MAX_DEGREE_LIMIT = 18
MAX_CLIQUE_LIMIT = 7


@dataclass(frozen=True)
class Violation:
    kind: str
    i: int
    j: int | None
    value: float
    limit: float


@dataclass(frozen=True)
class FeasibilityReport:
    """Metrics and verdicts for one embedding.

    ``d_adj_max`` is ``-inf`` without edges and ``d_nonadj_min`` is ``+inf``
    without non-edges. ``separable`` only asks that some radius split edges
    from non-edges; ``udg_feasible`` asks that the profile's own ``r_b`` does.
    """

    d_adj_max: float
    d_nonadj_min: float
    gap: float
    min_pair_distance: float
    max_pair_distance: float
    separable: bool
    udg_feasible: bool
    row_feasible: bool
    inside_register: bool
    on_traps: bool | None
    hardware_feasible: bool
    violations: list[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.udg_feasible and self.hardware_feasible

    def to_document(self) -> dict:
        doc = asdict(self)
        for key in ("d_adj_max", "d_nonadj_min", "gap", "min_pair_distance", "max_pair_distance"):
            doc[key] = _json_float(doc[key])
        doc["feasible"] = self.feasible
        return doc


def _json_float(x: float) -> float | str:
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def check(
    coords: np.ndarray,
    g: Graph,
    profile: RegisterProfile,
    *,
    margin: float = 0.0,
    require_traps: bool = False,
    row_tolerance: float = ROW_TOLERANCE,
) -> FeasibilityReport:
    """Scan every pair of an embedding against the graph and the register rules.

    Parameters
    ----------
    coords : array of shape (n, 2)
        Positions in the register frame, um.
    margin : float
        Extra squared-distance clearance (um^2) demanded of non-adjacent
        pairs. With ``margin == 0`` a non-adjacent pair must be strictly
        farther than ``r_b``; with ``margin > 0`` it needs
        ``d^2 >= r_b^2 + margin``.
    require_traps : bool
        Also demand that every vertex sits on a trap of the profile lattice.
    """
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(c) != g.n:
        raise ValueError(f"embedding has {len(c)} points for a graph with {g.n} vertices")
    violations: list[Violation] = []

    iu, ju = np.triu_indices(g.n, k=1)
    delta = c[iu] - c[ju]
    d2 = (delta**2).sum(axis=1)
    d = np.sqrt(d2)
    dy = np.abs(delta[:, 1])
    adj = g.adjacency[iu, ju]

    d_adj = float(d[adj].max()) if adj.any() else -math.inf
    d_non = float(d[~adj].min()) if (~adj).any() else math.inf
    min_pair = float(d.min()) if d.size else math.inf
    max_pair = float(d.max()) if d.size else 0.0

    rb = profile.r_b
    long_edges = adj & (d > rb)
    if margin > 0:
        short_non = ~adj & (d2 < rb * rb + margin)
    else:
        short_non = ~adj & (d <= rb)
    for k in np.flatnonzero(long_edges):
        violations.append(Violation("edge_too_long", int(iu[k]), int(ju[k]), float(d[k]), rb))
    for k in np.flatnonzero(short_non):
        violations.append(Violation("non_edge_too_short", int(iu[k]), int(ju[k]), float(d[k]), rb))
    udg_ok = not long_edges.any() and not short_non.any()

    too_close = d < profile.d_min - BOUNDS_TOL
    for k in np.flatnonzero(too_close):
        violations.append(Violation("too_close", int(iu[k]), int(ju[k]), float(d[k]), profile.d_min))
    too_far = np.zeros_like(too_close)
    if profile.d_max is not None:
        too_far = d > profile.d_max + BOUNDS_TOL
        for k in np.flatnonzero(too_far):
            violations.append(Violation("too_far", int(iu[k]), int(ju[k]), float(d[k]), profile.d_max))

    row_ok = True
    if profile.row_spacing is not None:
        bad_row = (dy > row_tolerance) & (dy < profile.row_spacing - BOUNDS_TOL)
        for k in np.flatnonzero(bad_row):
            violations.append(Violation("row", int(iu[k]), int(ju[k]), float(dy[k]), profile.row_spacing))
        row_ok = not bad_row.any()

    inside = profile.inside(c)
    for v in np.flatnonzero(~inside):
        violations.append(Violation("outside_register", int(v), None, float(np.abs(c[v]).max()), profile.coord_bound))

    on_traps = None
    if require_traps:
        idx = profile.lattice.trap_indices(c)
        on_traps = bool((idx >= 0).all()) and len(set(idx.tolist())) == g.n
        for v in np.flatnonzero(idx < 0):
            violations.append(Violation("off_trap", int(v), None, 0.0, 0.0))

    hardware_ok = (
        not too_close.any()
        and not too_far.any()
        and bool(inside.all())
        and row_ok
        and on_traps is not False
    )
    return FeasibilityReport(
        d_adj_max=d_adj,
        d_nonadj_min=d_non,
        gap=d_non - d_adj,
        min_pair_distance=min_pair,
        max_pair_distance=max_pair,
        separable=d_adj < d_non,
        udg_feasible=udg_ok,
        row_feasible=row_ok,
        inside_register=bool(inside.all()),
        on_traps=on_traps,
        hardware_feasible=hardware_ok,
        violations=violations,
    )


def gap_quality(report: FeasibilityReport) -> float:
    return report.d_nonadj_min - report.d_adj_max


@dataclass(frozen=True)
class PrecheckResult:
    max_degree_ok: bool
    clique_ok: bool
    capacity_ok: bool
    max_degree: int
    clique_lower_bound: int

    @property
    def passed(self) -> bool:
        return self.max_degree_ok and self.clique_ok and self.capacity_ok

    def reasons(self) -> list[str]:
        out = []
        if not self.max_degree_ok:
            out.append(f"max degree {self.max_degree} > {MAX_DEGREE_LIMIT}")
        if not self.clique_ok:
            out.append(f"clique of size {self.clique_lower_bound} > {MAX_CLIQUE_LIMIT}")
        if not self.capacity_ok:
            out.append("more vertices than the register holds")
        return out


def precheck(g: Graph, profile: RegisterProfile) -> PrecheckResult:
    """Necessary conditions for a unit-disk embedding at ``r_b`` = 10.26 um."""
    s = stats(g)
    return PrecheckResult(
        max_degree_ok=s.max_degree <= MAX_DEGREE_LIMIT,
        clique_ok=s.clique_lower_bound <= MAX_CLIQUE_LIMIT,
        capacity_ok=g.n <= profile.capacity,
        max_degree=s.max_degree,
        clique_lower_bound=s.clique_lower_bound,
    )
