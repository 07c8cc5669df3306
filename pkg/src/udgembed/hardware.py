"""Register profiles for the two target devices and Rydberg blockade utilities.

Physical quantities stay in angular-frequency units (rad/us) so the reduced
Planck constant never shows up: ``C6`` is quoted in ``2*pi * MHz * um^6``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Literal

import numpy as np

from .graph import MalformedInputError

if TYPE_CHECKING:
    from .lattice import TrapLattice

C6_RB70S = 862690 * 2 * math.pi
RYDBERG_RADIUS = 10.26
AQUILA_CAPACITY = 256
BOUNDS_TOL = 1e-9


class UndefinedRadiusError(ValueError):
    pass


class OutOfRegisterError(ValueError):
    pass


@dataclass(frozen=True)
class LaserParams:
    rabi_frequency: float
    detuning: float = 0.0
    c6: float = C6_RB70S

    def __post_init__(self) -> None:
        if not self.c6 > 0:
            raise ValueError("c6 must be positive")

    @property
    def drive(self) -> float:
        return math.hypot(self.rabi_frequency, self.detuning)


def rydberg_radius(laser: LaserParams) -> float:
    """Blockade radius ``(C6 / sqrt(Omega^2 + delta^2)) ** (1/6)`` in um."""
    drive = laser.drive
    if drive == 0:
        raise UndefinedRadiusError("blockade radius is undefined without a drive (Omega = delta = 0)")
    return (laser.c6 / drive) ** (1 / 6)


def interaction_strength(laser: LaserParams, distance: float) -> float:
    """Van der Waals magnitude ``C6 / d^6`` for a pair of Rydberg atoms."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return laser.c6 / distance**6


@dataclass(frozen=True)
class RegisterProfile:
    """Hardware constraints of one register.

    ``coord_bound`` is the half-width ``L`` used by the coordinate activation:
    free-space solutions live in ``(-L, L)^2`` before being moved into the
    device frame.
    """

    name: str
    shape: Literal["rectangle", "lattice"]
    r_b: float = RYDBERG_RADIUS
    d_min: float = 4.0
    d_max: float | None = None
    row_spacing: float | None = None
    coord_bound: float = 37.5
    width: float | None = None
    height: float | None = None
    lattice: "TrapLattice | None" = field(default=None, compare=False, repr=False)
    capacity: int = AQUILA_CAPACITY

    def __post_init__(self) -> None:
        if self.shape not in ("rectangle", "lattice"):
            raise ValueError(f"unknown register shape {self.shape!r}")
        if not self.d_min < self.r_b:
            raise ValueError("d_min must be smaller than r_b")
        if self.d_max is not None and not self.r_b < self.d_max:
            raise ValueError("r_b must be smaller than d_max")
        if self.shape == "rectangle":
            if self.width is None or self.height is None:
                raise ValueError("rectangle profile needs width and height")
            if 2 * self.coord_bound > min(self.width, self.height) + 1:
                raise ValueError("coordinate box does not fit inside the register")
        elif self.lattice is None:
            raise ValueError("lattice profile needs trap coordinates")

    @property
    def is_lattice(self) -> bool:
        return self.shape == "lattice"

    def inside(self, coords: np.ndarray) -> np.ndarray:
        """Per-vertex mask of positions inside the register frame."""
        c = np.asarray(coords, dtype=float).reshape(-1, 2)
        if self.shape == "rectangle":
            lo = -BOUNDS_TOL
            return (
                (c[:, 0] >= lo)
                & (c[:, 0] <= self.width + BOUNDS_TOL)
                & (c[:, 1] >= lo)
                & (c[:, 1] <= self.height + BOUNDS_TOL)
            )
        bound = self.coord_bound + BOUNDS_TOL
        return (np.abs(c[:, 0]) <= bound) & (np.abs(c[:, 1]) <= bound)

    @property
    def center(self) -> tuple[float, float]:
        if self.shape == "rectangle":
            return (self.width / 2, self.height / 2)
        return (0.0, 0.0)

    def to_document(self) -> dict:
        doc = {
            "name": self.name,
            "r_b": self.r_b,
            "d_min": self.d_min,
            "d_max": self.d_max,
            "row_spacing": self.row_spacing,
            "coord_bound": self.coord_bound,
            "capacity": self.capacity,
        }
        if self.shape == "rectangle":
            doc["shape"] = {"type": "rectangle", "width": self.width, "height": self.height}
        else:
            doc["shape"] = {"type": "lattice", **self.lattice.to_document()}
        return doc


def profile_orion_alpha() -> RegisterProfile:
    from .lattice import generate_orion_lattice

    lattice = generate_orion_lattice()
    return RegisterProfile(
        name="orion-alpha",
        shape="lattice",
        r_b=RYDBERG_RADIUS,
        d_min=5.0,
        d_max=40.0,
        row_spacing=None,
        coord_bound=41 / 2,
        lattice=lattice,
        capacity=len(lattice.traps),
    )


def profile_aquila() -> RegisterProfile:
    return RegisterProfile(
        name="aquila",
        shape="rectangle",
        r_b=RYDBERG_RADIUS,
        d_min=4.0,
        d_max=None,
        row_spacing=4.0,
        coord_bound=75 / 2,
        width=75.0,
        height=76.0,
        capacity=AQUILA_CAPACITY,
    )


PROFILES = {"aquila": profile_aquila, "orion-alpha": profile_orion_alpha}


def get_profile(name: str) -> RegisterProfile:
    try:
        return PROFILES[name]()
    except KeyError:
        raise MalformedInputError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def profile_from_document(doc: dict) -> RegisterProfile:
    from .lattice import lattice_from_document

    try:
        shape = doc["shape"]
        kind = shape["type"]
        kwargs = dict(
            name=str(doc.get("name", "custom")),
            r_b=float(doc.get("r_b", RYDBERG_RADIUS)),
            d_min=float(doc["d_min"]),
            d_max=None if doc.get("d_max") is None else float(doc["d_max"]),
            row_spacing=None if doc.get("row_spacing") is None else float(doc["row_spacing"]),
            coord_bound=float(doc["coord_bound"]),
        )
        if kind == "rectangle":
            return RegisterProfile(
                shape="rectangle",
                width=float(shape["width"]),
                height=float(shape["height"]),
                capacity=int(doc.get("capacity", AQUILA_CAPACITY)),
                **kwargs,
            )
        if kind == "lattice":
            lattice = lattice_from_document(shape)
            return RegisterProfile(
                shape="lattice",
                lattice=lattice,
                capacity=int(doc.get("capacity", len(lattice.traps))),
                **kwargs,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"bad profile document: {exc}") from exc
    raise MalformedInputError(f"unknown shape type {kind!r}")


def load_profile(path: str | Path) -> RegisterProfile:
    return profile_from_document(json.loads(Path(path).read_text()))


def with_lattice(profile: RegisterProfile, lattice: "TrapLattice") -> RegisterProfile:
    return replace(profile, shape="lattice", lattice=lattice, capacity=len(lattice.traps))


def to_register_frame(coords: np.ndarray, profile: RegisterProfile) -> np.ndarray:
    """Move centred ``(-L, L)^2`` coordinates into the device frame.

    Rectangular registers are shifted so the origin lands on the register
    centre; lattice registers already share the centred frame of their traps.
    """
    c = np.asarray(coords, dtype=float).reshape(-1, 2)
    bound = profile.coord_bound
    outside = np.flatnonzero((np.abs(c) >= bound).any(axis=1))
    if outside.size:
        raise OutOfRegisterError(f"vertices {outside.tolist()} lie outside (-{bound}, {bound})^2")
    return c + np.asarray(profile.center)
