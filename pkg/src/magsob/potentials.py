"""Magnetic and electric potentials, gauges, flux and curl.

Conventions: the magnetic operator is (-i grad - A).  A homogeneous
potential is given by its angular part, A(x) = A_ang(x / |x|) / |x|.  The
Aharonov-Bohm potential of flux alpha is alpha (-x2, x1, 0, ...) / r1^2,
singular on the axis {r1 = 0}.  An electric potential is a(theta) / |x|^2
(singular at the origin) or a / r1^2 (singular on the axis).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .quadrature import CylinderRule, _gl, focused_breaks, panel_rule, sphere_area


class MagneticPotential:
    """Base class.  Subclasses implement `field`.

    Attributes
    ----------
    dimension_N : int
    planar_symmetric : bool
        True when the field commutes with rotations of the (x1, x2) plane,
        so integrals over one Z_k sector can be multiplied by k.
    axis_winding : float
        Limit of r1 * A_theta at the axis.  Nonzero values force profiles to
        vanish on the axis.
    """

    dimension_N: int
    planar_symmetric: bool = False
    axis_winding: float = 0.0
    singular_set: str = "origin"

    def field(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return self.field(np.asarray(x, dtype=float))

    def cylindrical(self, r1, theta, rho):
        """Components (A_r1, A_theta, A_rho) at (r1 cos t, r1 sin t, rho, 0...)."""
        x, (er, et, ez) = _cyl_frame(r1, theta, rho, self.dimension_N)
        a = self.field(x)
        return (np.sum(a * er, axis=-1), np.sum(a * et, axis=-1),
                np.sum(a * ez, axis=-1))

    def describe(self) -> dict:
        return {"type": type(self).__name__, "dimension_N": self.dimension_N}


def _cyl_frame(r1, theta, rho, N):
    r1, theta, rho = np.broadcast_arrays(np.asarray(r1, float), np.asarray(theta, float),
                                         np.asarray(rho, float))
    c, s = np.cos(theta), np.sin(theta)
    z = np.zeros_like(r1)
    x = np.stack([r1 * c, r1 * s, rho] + [z] * (N - 3), axis=-1)
    er = np.stack([c, s, z] + [z] * (N - 3), axis=-1)
    et = np.stack([-s, c, z] + [z] * (N - 3), axis=-1)
    ez = np.stack([z, z, np.ones_like(z)] + [z] * (N - 3), axis=-1)
    return x, (er, et, ez)


@dataclass(frozen=True, eq=False)
class HomogeneousAngular(MagneticPotential):
    """A(x) = profile(x / |x|) / |x| with a bounded angular profile.

    The profile maps an array of unit vectors (..., N) to vectors (..., N).
    """

    profile: Callable[[np.ndarray], np.ndarray]
    dimension_N: int = 4
    name: str = "custom"
    params: dict = field(default_factory=dict)
    planar_symmetric: bool = False

    def __post_init__(self):
        if self.dimension_N < 3:
            raise ValueError("dimension_N must be at least 3")
        # boundedness, checked on a fixed set of directions
        t = np.random.default_rng(0).normal(size=(256, self.dimension_N))
        t /= np.linalg.norm(t, axis=1, keepdims=True)
        vals = np.asarray(self.profile(t), dtype=float)
        if vals.shape != t.shape or not np.all(np.isfinite(vals)):
            raise ValueError("angular profile must map unit vectors to finite vectors")

    def field(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        if np.any(r == 0):
            raise ValueError("homogeneous potential evaluated at the origin")
        return np.asarray(self.profile(x / r)) / r

    def describe(self):
        return {"type": "homogeneous", "name": self.name, "dimension_N": self.dimension_N,
                **{k: float(v) for k, v in self.params.items()}}


@dataclass(frozen=True, eq=False)
class RotationalPotential(HomogeneousAngular):
    """Angular profile b (-t2, t1, 0, ...), a divergence free swirl."""

    def cylindrical(self, r1, theta, rho):
        b = self.params.get("b", 0.0)
        r1, rho = np.broadcast_arrays(np.asarray(r1, float), np.asarray(rho, float))
        z = np.zeros(np.broadcast(r1, np.asarray(theta)).shape)
        return z, z + b * r1 / (r1**2 + rho**2), z


def zero_potential(dimension_N: int = 4) -> HomogeneousAngular:
    return RotationalPotential(lambda t: np.zeros_like(t), dimension_N, "zero",
                               {"b": 0.0}, True)


def rotational(b: float, dimension_N: int = 4) -> HomogeneousAngular:
    """Homogeneous preset A_ang(t) = b (-t2, t1, 0, ...)."""
    def prof(t, b=float(b)):
        out = np.zeros_like(t)
        out[..., 0] = -b * t[..., 1]
        out[..., 1] = b * t[..., 0]
        return out
    return RotationalPotential(prof, dimension_N, "rotational", {"b": float(b)}, True)


def gradient_potential(c: float, dimension_N: int = 4) -> HomogeneousAngular:
    """Homogeneous preset A_ang(t) = c (e1 - t1 t), the gradient of c x1 / |x|.

    Pure gauge away from the origin: its curl vanishes identically.
    """
    def prof(t, c=float(c)):
        out = -c * t[..., :1] * t
        out[..., 0] += c
        return out
    return HomogeneousAngular(prof, dimension_N, "gradient", {"c": float(c)}, False)


@dataclass(frozen=True, eq=False)
class AharonovBohm(MagneticPotential):
    """A(x) = alpha (-x2, x1, 0, ...) / (x1^2 + x2^2)."""

    flux_alpha: float = 0.5
    dimension_N: int = 4
    planar_symmetric: bool = True
    singular_set: str = "axis"

    def __post_init__(self):
        if not np.isfinite(self.flux_alpha):
            raise ValueError("flux must be finite")
        if self.dimension_N < 3:
            raise ValueError("dimension_N must be at least 3")

    @property
    def axis_winding(self) -> float:
        return float(self.flux_alpha)

    def field(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x[..., 0] ** 2 + x[..., 1] ** 2
        if np.any(r2 == 0):
            raise ValueError("Aharonov-Bohm potential evaluated on its axis")
        out = np.zeros_like(x)
        out[..., 0] = -self.flux_alpha * x[..., 1] / r2
        out[..., 1] = self.flux_alpha * x[..., 0] / r2
        return out

    def cylindrical(self, r1, theta, rho):
        r1 = np.asarray(r1, float)
        shape = np.broadcast(r1, np.asarray(theta), np.asarray(rho)).shape
        z = np.zeros(shape)
        return z, z + self.flux_alpha / r1, z

    def describe(self):
        return {"type": "aharonov_bohm", "flux_alpha": float(self.flux_alpha),
                "dimension_N": self.dimension_N}


@dataclass(frozen=True, eq=False)
class VectorField(MagneticPotential):
    """Arbitrary smooth vector field given by a callable x -> a(x)."""

    func: Callable[[np.ndarray], np.ndarray] = None
    dimension_N: int = 3
    name: str = "field"

    def field(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)))

    def describe(self):
        return {"type": "vector_field", "name": self.name, "dimension_N": self.dimension_N}


def make_potential(cfg: dict | None, dimension_N: int) -> MagneticPotential:
    """Build a potential from a plain mapping (used by config files)."""
    cfg = dict(cfg or {"type": "zero"})
    kind = cfg.pop("type", "zero")
    if kind == "zero":
        return zero_potential(dimension_N)
    if kind == "rotational":
        return rotational(float(cfg.get("b", 1.0)), dimension_N)
    if kind == "gradient":
        return gradient_potential(float(cfg.get("c", 1.0)), dimension_N)
    if kind in ("aharonov_bohm", "ab"):
        return AharonovBohm(float(cfg.get("flux_alpha", 0.5)), dimension_N)
    raise ValueError(f"unknown potential type {kind!r}")


# --------------------------------------------------------------------------
# electric potentials


@dataclass(frozen=True, eq=False)
class ElectricPotential:
    """a(x/|x|) / |x|^2 ("origin") or a / r1^2 ("axis").

    `a` is a constant; an optional angular `profile` replaces it by a
    function of unit vectors, with `a` then read as a bound on |profile|.
    """

    a: float = 0.0
    singular_set: str = "origin"
    profile: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.singular_set not in ("origin", "axis"):
            raise ValueError("singular_set must be 'origin' or 'axis'")
        if self.profile is not None and self.singular_set != "origin":
            raise ValueError("angular profiles are only defined for the origin type")
        if not np.isfinite(self.a):
            raise ValueError("electric coupling must be finite")

    def sup(self) -> float:
        """Upper bound of the angular coefficient."""
        return float(self.a)

    def coefficient(self, x: np.ndarray) -> np.ndarray:
        """Potential value a(x) (without the minus sign of the form)."""
        x = np.asarray(x, dtype=float)
        if self.singular_set == "axis":
            return self.a / (x[..., 0] ** 2 + x[..., 1] ** 2)
        r2 = np.sum(x**2, axis=-1)
        if self.profile is None:
            return self.a / r2
        return np.asarray(self.profile(x / np.sqrt(r2)[..., None])) / r2

    def cylindrical(self, r1, theta, rho, dimension_N: int) -> np.ndarray:
        r1, theta, rho = np.broadcast_arrays(np.asarray(r1, float), np.asarray(theta, float),
                                             np.asarray(rho, float))
        if self.singular_set == "axis":
            return self.a / r1**2
        if self.profile is None:
            return self.a / (r1**2 + rho**2)
        x, _ = _cyl_frame(r1, theta, rho, dimension_N)
        return self.coefficient(x)

    def describe(self) -> dict:
        return {"a": float(self.a), "singular_set": self.singular_set,
                "profile": self.profile is not None}


def as_electric(a: Union[float, ElectricPotential, None], singular_set: str = "origin"
                ) -> ElectricPotential:
    if a is None:
        return ElectricPotential(0.0, singular_set)
    if isinstance(a, ElectricPotential):
        return a
    return ElectricPotential(float(a), singular_set)


def hardy_bound(dimension_N: int) -> float:
    """(N - 2)^2 / 4."""
    return (dimension_N - 2) ** 2 / 4.0


# --------------------------------------------------------------------------
# flux and curl


def _as_field(A) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(A, MagneticPotential):
        return A.field
    if callable(A):
        return A
    raise TypeError("expected a MagneticPotential or a callable x -> A(x)")


def flux(A, dimension_N: int | None = None, radius: float = 1.0, n: int = 256) -> float:
    """(1 / 2 pi) times the circulation of A around the unit circle of the x1 x2 plane.

    The periodic trapezoid rule is spectrally accurate for smooth fields.
    """
    N = dimension_N or getattr(A, "dimension_N", None)
    if N is None:
        raise ValueError("dimension_N is required for callables")
    f = _as_field(A)
    t = 2.0 * np.pi * np.arange(n) / n
    x = np.zeros((n, N))
    x[:, 0], x[:, 1] = radius * np.cos(t), radius * np.sin(t)
    a = f(x)
    circ = np.mean(-a[:, 0] * np.sin(t) + a[:, 1] * np.cos(t)) * 2.0 * np.pi * radius
    return float(circ / (2.0 * np.pi))


@dataclass(frozen=True)
class AnnulusRegion:
    """{r_inner <= r1 <= r_outer} x [-half_height, half_height]^(N-2)."""

    r_inner: float
    r_outer: float
    half_height: float = 1.0
    n_r: int = 12
    n_theta: int = 32
    n_y: int = 6

    def __post_init__(self):
        if not self.r_outer > self.r_inner:
            raise ValueError("r_outer must exceed r_inner")
        if self.half_height <= 0:
            raise ValueError("half_height must be positive")


def curl_norm(A, region: AnnulusRegion, dimension_N: int | None = None,
              step: float = 1e-5) -> float:
    """L^N norm of the curl of A over `region`.

    |curl A|^2 = sum_{i<j} (d_i A_j - d_j A_i)^2, derivatives by central
    differences, midpoint rules in r1 and y and the periodic rule in theta.
    """
    N = dimension_N or getattr(A, "dimension_N", None)
    if N is None:
        raise ValueError("dimension_N is required for callables")
    if region.r_inner <= 0:
        raise ValueError("region touches the singular set of the potential")
    f = _as_field(A)
    hr = (region.r_outer - region.r_inner) / region.n_r
    r = region.r_inner + hr * (np.arange(region.n_r) + 0.5)
    t = 2 * np.pi * np.arange(region.n_theta) / region.n_theta
    hy = 2 * region.half_height / region.n_y
    y = -region.half_height + hy * (np.arange(region.n_y) + 0.5)
    grids = np.meshgrid(r, t, *([y] * (N - 2)), indexing="ij")
    R, T = grids[0].ravel(), grids[1].ravel()
    x = np.stack([R * np.cos(T), R * np.sin(T)] + [g.ravel() for g in grids[2:]], axis=-1)
    w = R * hr * (2 * np.pi / region.n_theta) * hy ** (N - 2)
    J = np.empty((x.shape[0], N, N))
    for i in range(N):
        e = np.zeros(N)
        e[i] = step
        J[:, i, :] = (f(x + e) - f(x - e)) / (2 * step)
    c2 = np.zeros(x.shape[0])
    for i in range(N):
        for j in range(i + 1, N):
            c2 += (J[:, i, j] - J[:, j, i]) ** 2
    return float(np.sum(w * c2 ** (N / 2.0)) ** (1.0 / N))


# --------------------------------------------------------------------------
# gauges


class PathDependentError(RuntimeError):
    """Path integrals of A disagree: nonzero curl or holonomy in the region."""

    def __init__(self, message: str, holonomy: float):
        super().__init__(message)
        self.holonomy = holonomy


@dataclass(frozen=True, eq=False)
class GaugePhase:
    """Real phase Theta sampled on a grid (biradial or planar polar)."""

    values: np.ndarray
    r: np.ndarray | None = None
    theta: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("gauge phase must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SectorRegion:
    """Planar sector {r_inner <= r <= r_outer, theta0 <= theta <= theta1} at y = 0."""

    r_inner: float
    r_outer: float
    theta0: float = 0.0
    theta1: float = np.pi / 2
    n_r: int = 33
    n_theta: int = 65

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        if not self.theta1 > self.theta0:
            raise ValueError("need theta1 > theta0")
        if self.theta1 - self.theta0 > 2 * np.pi + 1e-12:
            raise ValueError("sector wider than a full turn")

    @property
    def full_turn(self) -> bool:
        return self.theta1 - self.theta0 >= 2 * np.pi - 1e-12


def _cumulative(fun, lo, hi_nodes, n=6):
    """Cumulative integrals of fun from lo through each node of hi_nodes."""
    x, w = _gl(n)
    edges = np.concatenate([[lo], hi_nodes])
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    pts = a[:, None] + half[:, None] * (x[None, :] + 1)
    vals = fun(pts)
    return np.cumsum(np.sum(vals * (half[:, None] * w[None, :]), axis=-1))


def reconstruct_gauge(A, region: SectorRegion, dimension_N: int | None = None,
                      tol: float = 1e-6 * 2 * np.pi) -> GaugePhase:
    """Phase Theta with grad Theta = A on a planar sector.

    Theta is integrated along two families of paths from (r_inner, theta0):
    radial then angular, and angular then radial.  On a full annulus the
    second family runs clockwise.  If the families disagree by more than
    `tol` the field is not a gradient there and PathDependentError carries
    the discrepancy.
    """
    N = dimension_N or getattr(A, "dimension_N", None)
    if N is None:
        raise ValueError("dimension_N is required for callables")
    f = _as_field(A)
    r = np.linspace(region.r_inner, region.r_outer, region.n_r)
    th = np.linspace(region.theta0, region.theta1, region.n_theta)

    def comp(rr, tt, which):
        x = np.zeros(np.broadcast(rr, tt).shape + (N,))
        x[..., 0], x[..., 1] = rr * np.cos(tt), rr * np.sin(tt)
        a = f(x)
        if which == "r":
            return a[..., 0] * np.cos(tt) + a[..., 1] * np.sin(tt)
        return rr * (-a[..., 0] * np.sin(tt) + a[..., 1] * np.cos(tt))

    def radial(t0):
        out = _cumulative(lambda p: comp(p, t0, "r"), r[0], r[1:])
        return np.concatenate([[0.0], out])

    def angular(r0):
        out = _cumulative(lambda p: comp(r0, p, "t"), th[0], th[1:])
        return np.concatenate([[0.0], out])

    fam1 = np.empty((r.size, th.size))
    base = radial(th[0])
    for i, ri in enumerate(r):
        fam1[i] = base[i] + angular(ri)
    fam2 = np.empty_like(fam1)
    ang0 = angular(r[0])
    if region.full_turn:
        ang0 = ang0 - ang0[-1]
    for j, tj in enumerate(th):
        fam2[:, j] = ang0[j] + radial(tj)
    gap = fam1 - fam2
    if np.max(np.abs(gap)) > tol:
        hol = float(gap[0, -1]) if region.full_turn else float(np.max(np.abs(gap)))
        raise PathDependentError(
            f"path integrals disagree by {np.max(np.abs(gap)):.3e}", hol)
    return GaugePhase(fam1, r=r, theta=th)


def apply_gauge(u, theta: GaugePhase):
    """Multiply a field by e^{i Theta}.

    `u` is a Field2D (Theta must be sampled on its grid) or a plain array.
    """
    from .fields import Field2D
    if isinstance(u, Field2D):
        if theta.values.shape != u.values.shape:
            raise ValueError("gauge phase and field live on different grids")
        return u.with_values(u.values * np.exp(1j * theta.values))
    u = np.asarray(u)
    if theta.values.shape != u.shape:
        raise ValueError("gauge phase and field have different shapes")
    return u * np.exp(1j * theta.values)


def biradial_phase(grid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> GaugePhase:
    """Gauge phase Theta(r1, r2) sampled on a biradial grid."""
    R1, R2 = grid.mesh()
    return GaugePhase(np.asarray(fn(R1, R2), dtype=float))


# --------------------------------------------------------------------------
# translated bumps


@dataclass(frozen=True)
class RadialProfile:
    """Compactly supported radial profile u(x) = g(|x - c|)."""

    support: float = 1.0
    power: int = 4

    def value(self, s):
        s = np.asarray(s, dtype=float) / self.support
        return np.where(s < 1, (1 - s**2) ** self.power, 0.0)

    def derivative(self, s):
        s = np.asarray(s, dtype=float) / self.support
        return np.where(s < 1, -2 * self.power * s * (1 - s**2) ** (self.power - 1),
                        0.0) / self.support


def _radial_moments(profile: RadialProfile, N: int, p: float, n: int = 64):
    x, w = _gl(n)
    s = 0.5 * profile.support * (x + 1)
    ws = 0.5 * profile.support * w * sphere_area(N - 1) * s ** (N - 1)
    g, dg = profile.value(s), profile.derivative(s)
    return float(np.sum(ws * dg**2)), float(np.sum(ws * np.abs(g) ** p))


def free_quotient(profile: RadialProfile, dimension_N: int) -> float:
    """Dirichlet energy over the squared L^{2*} norm of the bump."""
    p = 2 * dimension_N / (dimension_N - 2)
    G, D = _radial_moments(profile, dimension_N, p)
    return G / D ** (2 / p)


def _bump_box_rule(N, d, supp, n):
    """Cylinder rule restricted to the box holding the bump support."""
    lo = max(d - supp, 0.0)
    sing = 1e-3 if lo == 0.0 else 0.125 * supp
    r1, w1 = panel_rule(focused_breaks(lo, d + supp, [(lo, sing), (d, 0.125 * supp)]), n)
    rho, wr = panel_rule(focused_breaks(0.0, supp, [(0.0, sing)]), n)
    half = np.pi if d <= supp else float(np.arcsin(supp / d))
    th, wt = panel_rule(focused_breaks(-half, half, [(0.0, half / 8)]), n)
    return CylinderRule(N, r1, w1, th, wt, rho, wr)


def translated_quotient(profile: RadialProfile, offsets: Sequence[float],
                        A: MagneticPotential | None, a=None, dimension_N: int | None = None,
                        domain_radius: float | None = None, n: int = 10) -> list[float]:
    """Rayleigh quotient of the bump translated to (d, 0, ..., 0).

    Dirichlet energy and L^{2*} norm are translation invariant and come from
    one dimensional rules; the potential terms are integrated with the
    reduced cylinder rule around each center.  A real bump has no
    paramagnetic term.
    """
    N = dimension_N or (A.dimension_N if A is not None else 4)
    A = A if A is not None else zero_potential(N)
    el = as_electric(a, getattr(A, "singular_set", "origin"))
    p = 2 * N / (N - 2)
    G, D = _radial_moments(profile, N, p)
    out = []
    for d in offsets:
        d = float(d)
        if d < 0:
            raise ValueError("offsets are distances and must be nonnegative")
        if domain_radius is not None and d + profile.support > domain_radius:
            raise ValueError(f"bump at offset {d} leaves the truncated domain")
        axis_sing = A.singular_set == "axis" or el.singular_set == "axis"
        if axis_sing and d - profile.support <= 0 and (el.a != 0 or A.axis_winding != 0):
            raise ValueError("bump support meets the singular axis")
        rule = _bump_box_rule(N, d, profile.support, n)
        pot = 0.0
        for r1, t, rho, w in rule.slabs():
            s = np.sqrt(np.maximum(r1**2 + d**2 - 2 * r1 * d * np.cos(t) + rho**2, 0.0))
            g2 = profile.value(s) ** 2
            if not np.any(g2):
                continue
            ar, at, az = A.cylindrical(r1, t, rho)
            V = ar**2 + at**2 + az**2 - el.cylindrical(r1, t, rho, N)
            pot += float(np.sum(w * V * g2))
        out.append((G + pot) / D ** (2 / p))
    return out
