"""Scatterer boundaries, boundary conditions, apertures and sampling grids."""
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ParametricBoundary",
    "BoundaryCondition",
    "Component",
    "Scene",
    "Aperture",
    "SamplingGrid",
    "boundary_nodes",
    "make_aperture",
]

_KINDS = ("circle", "kite", "n_leaf")


@dataclass(frozen=True)
class ParametricBoundary:
    """Closed, counterclockwise parametric curve x(theta), theta in [0, 2pi).

    ``circle``: center + radius (cos, sin).
    ``kite``:   center + scale (cos t + 0.65 cos 2t - 0.65, 1.5 sin t).
    ``n_leaf``: center + scale r(t) (cos t, sin t), r(t) = 1 + 0.2 cos(n t).
    """

    kind: str
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    scale: float = 1.0
    n: int = 5

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.kind == "circle" and not self.radius > 0:
            raise ValueError("circle radius must be positive")
        if self.kind != "circle" and not self.scale > 0:
            raise ValueError("shape scale must be positive")
        if self.kind == "n_leaf" and (int(self.n) != self.n or self.n <= 0):
            raise ValueError("n_leaf requires a positive integer n")

    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0)):
        return cls("circle", center=center, radius=radius)

    @classmethod
    def kite(cls, scale=1.0, center=(0.0, 0.0)):
        return cls("kite", center=center, scale=scale)

    @classmethod
    def n_leaf(cls, n, scale=1.0, center=(0.0, 0.0)):
        return cls("n_leaf", center=center, scale=scale, n=int(n))

    def derivatives(self, theta):
        """Return x(theta), x'(theta), x''(theta), each of shape (len(theta), 2)."""
        t = np.asarray(theta, dtype=float)
        c, s = np.cos(t), np.sin(t)
        if self.kind == "circle":
            a = self.radius
            x = a * np.stack([c, s], -1)
            dx = a * np.stack([-s, c], -1)
            ddx = -x
        elif self.kind == "kite":
            a = self.scale
            c2, s2 = np.cos(2 * t), np.sin(2 * t)
            x = a * np.stack([c + 0.65 * c2 - 0.65, 1.5 * s], -1)
            dx = a * np.stack([-s - 1.3 * s2, 1.5 * c], -1)
            ddx = a * np.stack([-c - 2.6 * c2, -1.5 * s], -1)
        else:
            a, n = self.scale, self.n
            r = 1.0 + 0.2 * np.cos(n * t)
            dr = -0.2 * n * np.sin(n * t)
            ddr = -0.2 * n * n * np.cos(n * t)
            x = a * np.stack([r * c, r * s], -1)
            dx = a * np.stack([dr * c - r * s, dr * s + r * c], -1)
            ddx = a * np.stack([ddr * c - 2 * dr * s - r * c, ddr * s + 2 * dr * c - r * s], -1)
        return x + np.asarray(self.center), dx, ddx

    def radial_extent(self, origin=(0.0, 0.0), samples=2048):
        """Largest distance from ``origin`` to the curve."""
        th = 2 * np.pi * np.arange(samples) / samples
        x, _, _ = self.derivatives(th)
        return float(np.max(np.hypot(*(x - np.asarray(origin)).T)))

    def to_dict(self):
        d = {"kind": self.kind, "center": list(self.center)}
        if self.kind == "circle":
            d["radius"] = self.radius
        else:
            d["scale"] = self.scale
        if self.kind == "n_leaf":
            d["n"] = self.n
        return d


@dataclass(frozen=True)
class BoundaryCondition:
    """PEC, impedance (eta > 0, constant or upper/lower split) or penetrable (n0).

    For impedance, ``eta`` is a float or a pair ``(upper, lower)`` applied on
    theta in [0, pi) and [pi, 2 pi) respectively.
    """

    kind: str
    eta: object = None
    n0: float = None

    def __post_init__(self):
        if self.kind == "pec":
            return
        if self.kind == "impedance":
            vals = self.eta if isinstance(self.eta, (tuple, list)) else (self.eta,)
            if len(vals) not in (1, 2) or any(v is None or not float(v) > 0 for v in vals):
                raise ValueError("impedance requires eta > 0 (a value or an (upper, lower) pair)")
            object.__setattr__(self, "eta", tuple(float(v) for v in vals) if len(vals) == 2 else float(vals[0]))
            return
        if self.kind == "penetrable":
            if self.n0 is None or not self.n0 > 0:
                raise ValueError("penetrable requires n0 > 0")
            return
        raise ValueError(f"unknown boundary condition {self.kind!r}")

    @classmethod
    def pec(cls):
        return cls("pec")

    @classmethod
    def impedance(cls, eta):
        return cls("impedance", eta=eta)

    @classmethod
    def penetrable(cls, n0):
        return cls("penetrable", n0=float(n0))

    def eta_at(self, theta):
        theta = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
        if isinstance(self.eta, tuple):
            return np.where(theta < np.pi, self.eta[0], self.eta[1])
        return np.full(theta.shape, self.eta)

    @property
    def eta_constant(self):
        return not isinstance(self.eta, tuple)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "impedance":
            d["eta"] = list(self.eta) if isinstance(self.eta, tuple) else self.eta
        if self.kind == "penetrable":
            d["n0"] = self.n0
        return d


@dataclass(frozen=True)
class Component:
    boundary: ParametricBoundary
    bc: BoundaryCondition

    def to_dict(self):
        return {"shape": self.boundary.to_dict(), "bc": self.bc.to_dict()}


@dataclass(frozen=True)
class Scene:
    """Zero or more disjoint scatterers."""

    components: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @classmethod
    def single(cls, boundary, bc):
        return cls((Component(boundary, bc),))

    def __len__(self):
        return len(self.components)

    @property
    def is_empty(self):
        return not self.components

    def to_dict(self):
        return {"components": [c.to_dict() for c in self.components]}

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def boundary_nodes(boundary, n):
    """Equispaced parameter nodes theta_i = 2 pi i / n on a boundary.

    Returns (points, outward unit normals, jacobians |x'(theta_i)|).
    """
    if n < 8 or n % 2:
        raise ValueError("node count must be even and at least 8")
    theta = 2 * np.pi * np.arange(n) / n
    x, dx, _ = boundary.derivatives(theta)
    jac = np.hypot(dx[:, 0], dx[:, 1])
    normals = np.stack([dx[:, 1], -dx[:, 0]], -1) / jac[:, None]
    return x, normals, jac


@dataclass(frozen=True)
class Aperture:
    """Sources and receivers equispaced on two centered circles."""

    n_s: int
    r_s: float
    n_r: int
    r_r: float
    sources: np.ndarray = field(init=False, repr=False, compare=False)
    receivers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_s < 1 or self.n_r < 1 or not self.r_s > 0 or not self.r_r > 0:
            raise ValueError("aperture counts and radii must be positive")
        object.__setattr__(self, "sources", _ring(self.n_s, self.r_s))
        object.__setattr__(self, "receivers", _ring(self.n_r, self.r_r))

    @property
    def w_s(self):
        return 2 * np.pi * self.r_s / self.n_s

    @property
    def w_r(self):
        return 2 * np.pi * self.r_r / self.n_r

    @property
    def coincident(self):
        return self.n_s == self.n_r and self.r_s == self.r_r

    def to_dict(self):
        return {"n_s": self.n_s, "r_s": self.r_s, "n_r": self.n_r, "r_r": self.r_r}


def _ring(n, radius):
    th = 2 * np.pi * np.arange(n) / n
    pts = radius * np.stack([np.cos(th), np.sin(th)], -1)
    # exact axis points, e.g. (0, 1) rather than (6e-17, 1)
    pts[np.abs(pts) < 1e-14 * radius] = 0.0
    return pts


def make_aperture(n_s, r_s, n_r, r_r):
    return Aperture(int(n_s), float(r_s), int(n_r), float(r_r))


@dataclass(frozen=True)
class SamplingGrid:
    """Vertex-centred rectangular grid; values are stored as [iy, ix]."""

    a1: float
    b1: float
    a2: float
    b2: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1 or self.b1 < self.a1 or self.b2 < self.a2:
            raise ValueError("invalid sampling grid")

    @classmethod
    def square(cls, half_width, n):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def x1(self):
        return np.linspace(self.a1, self.b1, self.nx)

    @property
    def x2(self):
        return np.linspace(self.a2, self.b2, self.ny)

    @property
    def shape(self):
        return (self.ny, self.nx)

    def points(self):
        """Node coordinates, shape (ny, nx, 2)."""
        xx, yy = np.meshgrid(self.x1, self.x2)
        return np.stack([xx, yy], -1)

    def circumradius(self):
        return float(max(np.hypot(a, b) for a in (self.a1, self.b1) for b in (self.a2, self.b2)))

    def to_dict(self):
        return {"a1": self.a1, "b1": self.b1, "a2": self.a2, "b2": self.b2, "nx": self.nx, "ny": self.ny}
