"""Distance Encoder Network: a per-instance trained coordinate generator.

The trainable part is a small dense autoencoder over the ``2n`` input
coordinates (layout ``x_1..x_n, y_1..y_n``). Its output goes through
``L * tanh`` so every emitted coordinate stays strictly inside ``(-L, L)``.
Two fixed sparse maps follow: one takes all pairwise x- then y-differences,
the other folds their squares into squared pair distances followed by squared
row distances. The penalty loss acts on that last vector.

Gradients are written out by hand (reverse mode through the fixed maps, the
bounded activation and the dense stack); AdamW with decoupled weight decay
updates only the dense weights.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .feasibility import FeasibilityReport, check, precheck
from .graph import Graph
from .hardware import RegisterProfile, to_register_frame

log = logging.getLogger(__name__)

ATANH_CLAMP = 0.999
# float tanh rounds to exactly 1 for large inputs; keep L * tanh strictly below L
TANH_CLAMP = 1.0 - 1e-12


class DegenerateInstanceError(ValueError):
    pass


class RejectedInstanceError(ValueError):
    """The graph fails a necessary condition, so no embedding can exist."""

    def __init__(self, message: str, reasons: Sequence[str] = ()):
        super().__init__(message)
        self.reasons = list(reasons)


# -- fixed layers ----------------------------------------------------------------


@dataclass(frozen=True)
class FixedLayers:
    n: int
    pair_i: np.ndarray
    pair_j: np.ndarray
    diff_map: sp.csr_matrix
    dist_map: sp.csr_matrix

    @property
    def n_pairs(self) -> int:
        return len(self.pair_i)

    @classmethod
    def build(cls, n: int) -> "FixedLayers":
        if n < 2:
            raise DegenerateInstanceError("at least two vertices are needed to form a pair")
        pi, pj = np.triu_indices(n, k=1)
        P = len(pi)
        rows = np.arange(P)
        # x_i - x_j for every pair, then y_i - y_j
        r = np.concatenate([rows, rows, rows + P, rows + P])
        c = np.concatenate([pi, pj, pi + n, pj + n])
        v = np.concatenate([np.ones(P), -np.ones(P), np.ones(P), -np.ones(P)])
        diff_map = sp.csr_matrix((v, (r, c)), shape=(2 * P, 2 * n))
        # squared pair distance = dx^2 + dy^2, squared row distance = dy^2
        r = np.concatenate([rows, rows, rows + P])
        c = np.concatenate([rows, rows + P, rows + P])
        dist_map = sp.csr_matrix((np.ones(3 * P), (r, c)), shape=(2 * P, 2 * P))
        return cls(n, pi, pj, diff_map, dist_map)


# -- trainable model -------------------------------------------------------------


@dataclass
class DenModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    coord_bound: float
    n: int

    @classmethod
    def init(
        cls,
        initial: np.ndarray,
        coord_bound: float,
        rng: np.random.Generator,
        hidden_factor: int = 4,
        depth: int = 2,
    ) -> "DenModel":
        """Glorot-uniform dense stack ``2n -> 4n -> 4n -> 2n``.

        The output bias is set to ``atanh(initial / L)`` so the first forward
        pass lands near the supplied solution.
        """
        p = np.asarray(initial, dtype=float).reshape(-1, 2)
        n = len(p)
        widths = [2 * n] + [hidden_factor * n] * depth + [2 * n]
        weights, biases = [], []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        flat = np.concatenate([p[:, 0], p[:, 1]]) / coord_bound
        biases[-1] = np.arctanh(np.clip(flat, -ATANH_CLAMP, ATANH_CLAMP))
        return cls(weights, biases, float(coord_bound), n)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "DenModel":
        return DenModel([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.coord_bound, self.n)


@dataclass
class _Tape:
    activations: list[np.ndarray]
    out_tanh: np.ndarray
    diff: np.ndarray


def _flatten(coords: np.ndarray) -> np.ndarray:
    p = np.asarray(coords, dtype=float).reshape(-1, 2)
    return np.concatenate([p[:, 0], p[:, 1]])


def _unflatten(flat: np.ndarray) -> np.ndarray:
    n = len(flat) // 2
    return np.column_stack([flat[:n], flat[n:]])


def _forward(model: DenModel, fixed: FixedLayers, inp: np.ndarray):
    L = model.coord_bound
    h = _flatten(inp) / L
    acts = [h]
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        h = np.tanh(w @ h + b)
        if k < last:
            acts.append(h)
    h = np.clip(h, -TANH_CLAMP, TANH_CLAMP)
    coords_flat = L * h
    diff = fixed.diff_map @ coords_flat
    dist_out = fixed.dist_map @ (diff * diff)
    return coords_flat, dist_out, _Tape(acts, h, diff)


def forward(model: DenModel, fixed: FixedLayers, inp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Run the network; returns ``(coords (n, 2), dist_out (2 * C(n, 2),))``."""
    if model.n < 2:
        raise DegenerateInstanceError("at least two vertices are needed to form a pair")
    coords_flat, dist_out, _ = _forward(model, fixed, inp)
    return _unflatten(coords_flat), dist_out


def distance_layer(coords: np.ndarray, fixed: FixedLayers) -> np.ndarray:
    """Output of the two fixed maps for given coordinates."""
    diff = fixed.diff_map @ _flatten(coords)
    return fixed.dist_map @ (diff * diff)


# -- loss ------------------------------------------------------------------------


@dataclass(frozen=True)
class ElfConfig:
    r_b: float
    d_min: float
    d_max: float | None = None
    row_spacing: float | None = None
    margin: float = 0.1
    row_margin: float = 0.0
    w_min: float = 1.0
    w_max: float = 1.0
    w_row: float = 1.0

    def __post_init__(self) -> None:
        if self.margin < 0 or self.row_margin < 0 or min(self.w_min, self.w_max, self.w_row) < 0:
            raise ValueError("margin and component weights must be nonnegative")
        if not self.r_b**2 > self.d_min**2:
            raise ValueError("r_b must exceed d_min")

    @classmethod
    def from_profile(cls, profile: RegisterProfile, **overrides) -> "ElfConfig":
        kw = dict(r_b=profile.r_b, d_min=profile.d_min, d_max=profile.d_max, row_spacing=profile.row_spacing)
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class ElfTerms:
    total: float
    elf_min: float
    elf_max: float
    elf_row: float


def elf_row(squared_row_distance, row_spacing: float = 4.0):
    """Row-spacing penalty ``max(0, s (g - s)) / (g^2 / 4)`` with ``g = row_spacing^2``.

    Zero on a shared row and from ``row_spacing`` onwards, peak 1 halfway in
    squared distance.
    """
    s = np.asarray(squared_row_distance, dtype=float)
    g = row_spacing * row_spacing
    out = np.maximum(0.0, s * (g - s)) / (g * g / 4)
    return float(out) if out.ndim == 0 else out


def _elf_parts(d2: np.ndarray, s: np.ndarray, adj: np.ndarray, cfg: ElfConfig):
    """Per-pair hinge magnitudes and masks shared by loss and gradient."""
    rb2 = cfg.r_b * cfg.r_b
    long_edge = adj & (d2 > rb2)
    short_non = ~adj & (d2 < rb2 + cfg.margin)
    too_close = d2 < cfg.d_min * cfg.d_min
    if cfg.d_max is not None:
        too_far = d2 > cfg.d_max * cfg.d_max
    else:
        too_far = np.zeros_like(adj)
    if cfg.row_spacing is not None:
        g = (cfg.row_spacing + cfg.row_margin) ** 2
        in_row_band = (s > 0) & (s < g)
    else:
        g = 0.0
        in_row_band = np.zeros_like(adj)
    return rb2, g, long_edge, short_non, too_close, too_far, in_row_band


def _elf_value_and_grad(dist_out: np.ndarray, adj: np.ndarray, cfg: ElfConfig, want_grad: bool = True):
    P = len(adj)
    d2, s = dist_out[:P], dist_out[P:]
    rb2, g, long_edge, short_non, too_close, too_far, band = _elf_parts(d2, s, adj, cfg)
    dmin2 = cfg.d_min * cfg.d_min

    e_max = np.sum(d2[long_edge] - rb2)
    if cfg.d_max is not None:
        e_max += np.sum(d2[too_far] - cfg.d_max**2)
    e_min = np.sum(rb2 + cfg.margin - d2[short_non]) + np.sum(dmin2 - d2[too_close])
    e_row = 0.0
    if cfg.row_spacing is not None:
        sb = s[band]
        e_row = np.sum(sb * (g - sb)) / (g * g / 4)
    e_max *= cfg.w_max
    e_min *= cfg.w_min
    e_row *= cfg.w_row
    terms = ElfTerms(float(e_min + e_max + e_row), float(e_min), float(e_max), float(e_row))
    if not want_grad:
        return terms, None

    grad = np.zeros(2 * P)
    grad[:P] = cfg.w_max * (long_edge.astype(float) + too_far) - cfg.w_min * (short_non.astype(float) + too_close)
    if cfg.row_spacing is not None:
        grad[P:] = cfg.w_row * np.where(band, (g - 2 * s) / (g * g / 4), 0.0)
    return terms, grad


def _pair_adjacency(g: Graph) -> np.ndarray:
    iu, ju = np.triu_indices(g.n, k=1)
    return np.asarray(g.adjacency[iu, ju])


def elf_total(dist_out: np.ndarray, g: Graph, cfg: ElfConfig) -> ElfTerms:
    """Three-part penalty on the distance-layer output. All parts are >= 0."""
    terms, _ = _elf_value_and_grad(np.asarray(dist_out, dtype=float), _pair_adjacency(g), cfg, want_grad=False)
    return terms


def elf_of_coords(coords: np.ndarray, g: Graph, cfg: ElfConfig, fixed: FixedLayers | None = None) -> ElfTerms:
    if g.n < 2:
        return ElfTerms(0.0, 0.0, 0.0, 0.0)
    fixed = fixed or FixedLayers.build(g.n)
    return elf_total(distance_layer(coords, fixed), g, cfg)


# -- gradients -------------------------------------------------------------------


def _backward(model: DenModel, fixed: FixedLayers, tape: _Tape, grad_dist: np.ndarray) -> list[np.ndarray]:
    g_sq = fixed.dist_map.T @ grad_dist
    g_diff = 2.0 * tape.diff * g_sq
    g_coords = fixed.diff_map.T @ g_diff
    delta = g_coords * model.coord_bound * (1.0 - tape.out_tanh**2)
    grads: list[np.ndarray] = []
    for k in range(len(model.weights) - 1, -1, -1):
        a = tape.activations[k]
        grads.append(delta)
        grads.append(np.outer(delta, a))
        if k > 0:
            delta = (model.weights[k].T @ delta) * (1.0 - a * a)
    grads.reverse()
    # reversed list is [W0, b0, W1, b1, ...]
    return grads


def value_and_gradients(
    model: DenModel, fixed: FixedLayers, inp: np.ndarray, adj: np.ndarray, cfg: ElfConfig
) -> tuple[ElfTerms, list[np.ndarray], np.ndarray]:
    coords_flat, dist_out, tape = _forward(model, fixed, inp)
    terms, grad_dist = _elf_value_and_grad(dist_out, adj, cfg)
    return terms, _backward(model, fixed, tape, grad_dist), _unflatten(coords_flat)


def gradients(model: DenModel, fixed: FixedLayers, inp: np.ndarray, g: Graph, cfg: ElfConfig) -> list[np.ndarray]:
    """Loss gradient for every trainable array, ordered like ``model.params()``."""
    _, grads, _ = value_and_gradients(model, fixed, inp, _pair_adjacency(g), cfg)
    return grads


# -- optimizer -------------------------------------------------------------------


class AdamW:
    """Adam with weight decay applied directly to the parameters."""

    def __init__(self, params: list[np.ndarray], lr=1e-2, betas=(0.9, 0.999), eps=1e-8, weight_decay=1e-4):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bc1 = 1 - self.beta1**self.t
        bc2 = 1 - self.beta2**self.t
        step_size = self.lr / bc1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            if self.weight_decay:
                p *= 1 - self.lr * self.weight_decay
            p -= step_size * m / (np.sqrt(v / bc2) + self.eps)


# -- training --------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.002
    weight_decay: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)
    max_iterations: int = 20000
    feasibility_check_period: int = 100
    restarts: int = 3
    patience: int | None = 4000
    lr_drops: int = 2
    lr_drop_factor: float = 0.2
    rng_seed: int = 0
    loss_tolerance: float = 1e-9
    margin: float = 0.1
    row_margin: float = 0.1
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    row_snap: float = 1.2
    time_limit: float | None = None
    trace_every: int = 100

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.loss_tolerance < 0:
            raise ValueError("loss_tolerance must be >= 0")

    def elf_config(self, profile: RegisterProfile, training: bool = False) -> ElfConfig:
        """Loss settings; the training variant also pads the row gap by ``row_margin``."""
        w_min, w_max, w_row = self.weights
        return ElfConfig.from_profile(
            profile,
            margin=self.margin,
            row_margin=self.row_margin if training else 0.0,
            w_min=w_min,
            w_max=w_max,
            w_row=w_row,
        )


@dataclass
class TrainReport:
    final_embedding: np.ndarray
    final_loss: float
    component_losses: tuple[float, float, float]
    iterations_used: int
    feasible: bool
    loss_trace: list[float]
    attempts: int = 1
    wall_time: float = 0.0
    timed_out: bool = False
    report: FeasibilityReport | None = None
    config: TrainConfig | None = None

    def to_document(self) -> dict:
        return {
            "coords": self.final_embedding.tolist(),
            "final_loss": self.final_loss,
            "component_losses": dict(zip(("elf_min", "elf_max", "elf_row"), self.component_losses)),
            "iterations_used": self.iterations_used,
            "attempts": self.attempts,
            "feasible": self.feasible,
            "timed_out": self.timed_out,
            "wall_time": self.wall_time,
            "loss_trace": self.loss_trace,
            "metrics": None if self.report is None else self.report.to_document(),
            "config": None if self.config is None else asdict(self.config),
        }


def snap_rows(coords: np.ndarray, tol: float) -> np.ndarray:
    """Give every run of y values with consecutive gaps ``<= tol`` their common mean.

    After snapping, any two vertices either share a y value exactly or differ
    by more than ``tol``.
    """
    c = np.array(coords, dtype=float).reshape(-1, 2)
    if tol <= 0 or len(c) < 2:
        return c
    order = np.argsort(c[:, 1], kind="stable")
    ys = c[order, 1]
    breaks = np.flatnonzero(np.diff(ys) > tol) + 1
    for chunk in np.split(np.arange(len(ys)), breaks):
        if len(chunk) > 1:
            c[order[chunk], 1] = ys[chunk].mean()
    return c


def initial_solution(
    g: Graph,
    profile: RegisterProfile,
    hint: np.ndarray | None = None,
    seed: int = 0,
) -> np.ndarray:
    """Easily built starting point for training, centred on the origin.

    With a positional ``hint`` (e.g. antenna positions in metres) the points
    are scaled isotropically so the mean edge length is ``0.8 * r_b``.
    Otherwise vertices go on a circle in index order with a little seeded
    angular jitter.
    """
    n = g.n
    if hint is not None:
        p = np.asarray(hint, dtype=float).reshape(-1, 2)
        if len(p) != n:
            raise ValueError("hint must give one position per vertex")
        p = p - p.mean(axis=0)
        if g.m:
            lengths = [np.linalg.norm(p[u] - p[v]) for u, v in g.sorted_edges]
            scale = 0.8 * profile.r_b / float(np.mean(lengths))
        else:
            # no edge to calibrate on: fill 80% of the coordinate box
            extent = float(np.abs(p).max())
            scale = 0.8 * profile.coord_bound / extent if extent > 0 else 1.0
        return p * scale
    if n == 1:
        return np.zeros((1, 2))
    rng = np.random.default_rng(seed)
    radius = min(0.8 * profile.coord_bound, n * profile.d_min / math.pi)
    step = 2 * math.pi / n
    angles = step * np.arange(n) + rng.uniform(-0.25, 0.25, size=n) * step
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


SNAP_LADDER = (1e-3, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.2)


def _finalize(coords: np.ndarray, g: Graph, profile: RegisterProfile, cfg: ElfConfig, tc: TrainConfig):
    """Check snapped candidates from the finest snap tolerance up; keep the first accepted one."""
    tols = [t for t in SNAP_LADDER if t <= tc.row_snap] if profile.row_spacing else [0.0]
    first = None
    for tol in tols or [0.0]:
        frame = to_register_frame(snap_rows(coords, tol), profile)
        report = check(frame, g, profile, margin=cfg.margin)
        terms = elf_of_coords(frame, g, cfg)
        if report.feasible and terms.total <= tc.loss_tolerance:
            return frame, report, terms
        if first is None:
            first = (frame, report, terms)
    return first


def train(
    g: Graph,
    initial: np.ndarray,
    profile: RegisterProfile,
    tc: TrainConfig = TrainConfig(),
) -> TrainReport:
    """Fit a fresh network to one graph and return the best embedding found.

    Every ``feasibility_check_period`` iterations (and whenever the loss hits
    zero) the current coordinates are row-snapped, moved into the register
    frame and handed to the exact checker; the first accepted iterate ends
    training. Otherwise the lowest-loss iterate over all restarts is kept.
    """
    start = time.perf_counter()
    cfg = tc.elf_config(profile)
    train_cfg = tc.elf_config(profile, training=True)
    if g.n < 2:
        frame = np.array([profile.center], dtype=float)
        report = check(frame, g, profile, margin=cfg.margin)
        return TrainReport(frame, 0.0, (0.0, 0.0, 0.0), 0, report.feasible, [], 0, 0.0, False, report, tc)
    pre = precheck(g, profile)
    if not pre.passed:
        raise RejectedInstanceError("graph fails a necessary embedding condition", pre.reasons())

    fixed = FixedLayers.build(g.n)
    adj = _pair_adjacency(g)
    inp = np.asarray(initial, dtype=float).reshape(-1, 2)
    if len(inp) != g.n:
        raise ValueError(f"initial solution has {len(inp)} points for {g.n} vertices")

    best = None  # (loss, coords)
    trace: list[float] = []
    total_iters = 0
    attempts = 0
    timed_out = False
    accepted = None
    for attempt in range(tc.restarts + 1):
        attempts += 1
        rng = np.random.default_rng([tc.rng_seed, attempt])
        model = DenModel.init(inp, profile.coord_bound, rng)
        opt = AdamW(model.params(), lr=tc.learning_rate, betas=tc.betas, weight_decay=tc.weight_decay)
        attempt_best, last_gain, drops = math.inf, 0, 0
        for it in range(1, tc.max_iterations + 1):
            terms, grads, coords = value_and_gradients(model, fixed, inp, adj, train_cfg)
            total_iters += 1
            if best is None or terms.total < best[0]:
                best = (terms.total, coords)
            if terms.total < attempt_best * (1 - 1e-3):
                attempt_best, last_gain = terms.total, it
            elif tc.patience is not None and it - last_gain > tc.patience:
                if drops >= tc.lr_drops:
                    log.debug("attempt %d stalled at loss %.4g", attempt, attempt_best)
                    break
                drops += 1
                opt.lr *= tc.lr_drop_factor
                last_gain = it
            if it % tc.trace_every == 0:
                trace.append(terms.total)
            if terms.total <= tc.loss_tolerance or it % tc.feasibility_check_period == 0:
                frame, report, fterms = _finalize(coords, g, profile, cfg, tc)
                if report.feasible and fterms.total <= tc.loss_tolerance:
                    accepted = (frame, report, fterms)
                    break
                if tc.time_limit is not None and time.perf_counter() - start > tc.time_limit:
                    timed_out = True
                    break
            opt.step(grads)
        if accepted or timed_out:
            break
        log.debug("attempt %d ended without a feasible embedding (best loss %.4g)", attempt, best[0])

    if accepted is None:
        frame, report, fterms = _finalize(best[1], g, profile, cfg, tc)
        feasible = report.feasible and fterms.total <= tc.loss_tolerance
    else:
        (frame, report, fterms), feasible = accepted, True
    return TrainReport(
        final_embedding=frame,
        final_loss=fterms.total,
        component_losses=(fterms.elf_min, fterms.elf_max, fterms.elf_row),
        iterations_used=total_iters,
        feasible=feasible,
        loss_trace=trace,
        attempts=attempts,
        wall_time=time.perf_counter() - start,
        timed_out=timed_out,
        report=report,
        config=tc,
    )
