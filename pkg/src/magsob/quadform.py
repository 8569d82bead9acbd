"""Discrete magnetic quadratic form and Rayleigh quotient on biradial grids.

For u = e^{i m theta} f(r1, r2) the form

    Q(u) = int |(-i grad - A) u|^2 - int V |u|^2

splits into difference quotients along r1 and r2, each edge carrying the
phase of A integrated along it, plus the node term (m / r1 - A_theta)^2 |f|^2.
Node coefficients are integrated against the hat functions of the nodes,
so singular coefficients get their exact weights.  The potential V is
a(theta)/|x|^2 or a/r1^2.  With link phases the
discrete form is exactly gauge covariant and satisfies the discrete
diamagnetic inequality, since | |f_b| - |f_a| | <= |f_b e^{-i phi} - f_a|.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import sparse
from scipy.special import gamma as gamma_fn

from .fields import (AxisRegularityError, Field2D, Grid2D, critical_exponent, integrate,
                     node_weights)
from .potentials import (ElectricPotential, GaugePhase, MagneticPotential,
                         as_electric, hardy_bound, zero_potential)
from .quadrature import _gl, sphere_area


class PositivityError(ValueError):
    """The electric coupling is too strong for the form to be positive."""


# --------------------------------------------------------------------------
# sectors


@dataclass(frozen=True)
class Radial:
    """Radial functions (no magnetic potential allowed)."""

    name: str = "radial"


@dataclass(frozen=True)
class Biradial:
    """Functions e^{i m theta} f(r1, r2)."""

    m: int = 0
    name: str = "biradial"


@dataclass(frozen=True)
class ZkSector:
    """Functions with u(g x) = e^{2 pi i m / k} u(x) for the rotation g by 2 pi / k."""

    k: int = 2
    m: int = 0
    name: str = "zk"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be positive")


SectorSpec = Union[Radial, Biradial, ZkSector]


@dataclass
class QuotientResult:
    """Value of a Rayleigh quotient with the thresholds it is compared to."""

    numerator: float
    denominator: float
    value: float
    sector: SectorSpec | None = None
    threshold_S: float = float("nan")
    threshold_kS: float | None = None
    error: float = 0.0
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        sec = None if self.sector is None else {"kind": type(self.sector).__name__,
                                                **vars(self.sector)}
        return {"numerator": self.numerator, "denominator": self.denominator,
                "value": self.value, "sector": sec, "threshold_S": self.threshold_S,
                "threshold_kS": self.threshold_kS, "error": self.error, "extras": self.extras}


# --------------------------------------------------------------------------
# positivity


def check_positivity(A: MagneticPotential | None, el: ElectricPotential, dimension_N: int,
                     mode_m: int | None = None) -> None:
    """Raise PositivityError when the electric coupling breaks coercivity.

    Only the positive part of the coupling matters.  For the origin type
    the bound is (N-2)^2/4; for the axis type it is (m - winding)^2 for the
    given mode, or the distance from the winding to the integers squared.
    """
    if el.singular_set == "origin":
        if el.sup() >= hardy_bound(dimension_N):
            raise PositivityError(
                f"sup a = {el.sup():g} must stay below (N-2)^2/4 = {hardy_bound(dimension_N):g}")
        return
    wind = A.axis_winding if A is not None else 0.0
    if mode_m is None:
        bound = (wind - np.round(wind)) ** 2
    else:
        bound = (mode_m - wind) ** 2
    if el.a > 0 and el.a >= bound:
        raise PositivityError(f"a = {el.a:g} must stay below the axis constant {bound:g}")


# --------------------------------------------------------------------------
# discretization


@dataclass(frozen=True, eq=False)
class BiradialOperator:
    """Edge phases and weighted node coefficients of the discrete form.

    Attributes
    ----------
    phi1, phi2 : link phases on r1 and r2 edges
    theta_w : hat-function integrals of (m / r1 - A_theta)^2 against the measure
    electric_w : the same for the electric potential V
    axis_coef : m - winding at the axis; nonzero values need f = 0 there
    axis_electric : True when V is singular on the axis
    """

    grid: Grid2D
    mode_m: int
    phi1: np.ndarray
    phi2: np.ndarray
    theta_w: np.ndarray
    electric_w: np.ndarray
    axis_coef: float
    axis_electric: bool

    def gauge_shifted(self, theta: GaugePhase) -> "BiradialOperator":
        """Operator for A + grad Theta with Theta biradial."""
        T = theta.values
        if T.shape != self.grid.shape:
            raise ValueError("gauge phase does not match the grid")
        return BiradialOperator(self.grid, self.mode_m,
                                self.phi1 + (T[1:, :] - T[:-1, :]),
                                self.phi2 + (T[:, 1:] - T[:, :-1]),
                                self.theta_w, self.electric_w, self.axis_coef,
                                self.axis_electric)

    @property
    def axis_pinned(self) -> bool:
        return abs(self.axis_coef) > 1e-14 or self.axis_electric

    def check_axis(self, f: np.ndarray, tol: float = 1e-12) -> None:
        if not self.axis_pinned:
            return
        scale = max(float(np.max(np.abs(f))), 1e-300)
        if np.max(np.abs(f[0, :])) > tol * scale:
            raise AxisRegularityError(
                "profile must vanish on the axis for this winding or axis potential")

    def energy(self, f: np.ndarray, electric: bool = True) -> float:
        g = self.grid
        d1 = f[1:, :] * np.exp(-1j * self.phi1) - f[:-1, :]
        d2 = f[:, 1:] * np.exp(-1j * self.phi2) - f[:, :-1]
        af2 = np.abs(f) ** 2
        e = (np.sum(g.edge1 * np.abs(d1) ** 2) + np.sum(g.edge2 * np.abs(d2) ** 2)
             + np.sum(self.theta_w * af2))
        if electric:
            e -= np.sum(self.electric_w * af2)
        return float(e)

    def matrix(self) -> sparse.csr_matrix:
        """Hermitian K with f^H K f = energy(f), nodes in C order (i, j)."""
        g = self.grid
        n1, n2 = g.shape
        idx = np.arange(n1 * n2).reshape(n1, n2)
        rows, cols, vals = [], [], []
        for a, b, E, ph in ((idx[:-1, :], idx[1:, :], g.edge1, self.phi1),
                            (idx[:, :-1], idx[:, 1:], g.edge2, self.phi2)):
            a, b, E, ph = a.ravel(), b.ravel(), E.ravel(), ph.ravel()
            rows += [a, b, a, b]
            cols += [a, b, b, a]
            vals += [E + 0j, E + 0j, -E * np.exp(-1j * ph), -E * np.exp(1j * ph)]
        diag = (self.theta_w - self.electric_w).ravel()
        rows.append(idx.ravel())
        cols.append(idx.ravel())
        vals.append(diag + 0j)
        K = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(n1 * n2, n1 * n2)).tocsr()
        if np.all(np.abs(K.data.imag) == 0):
            K = K.real.tocsr()
        return K


def discretize(grid: Grid2D, A: MagneticPotential | None = None, a=None,
               mode_m: int = 0, n_gauss: int = 4) -> BiradialOperator:
    """Build the discrete operator for potentials A and a on `grid`.

    A bare number a is read with the singular set of A: a / r1^2 for the
    Aharonov-Bohm potential, a / |x|^2 otherwise.
    """
    N = grid.spec.dimension_N
    A = A if A is not None else zero_potential(N)
    if A.dimension_N != N:
        raise ValueError("potential and grid have different dimensions")
    el = as_electric(a, A.singular_set)
    check_positivity(A, el, N, mode_m)
    r1, r2 = grid.r1, grid.r2
    x, w = _gl(n_gauss)
    # phases of A along the edges, in the half plane theta = 0
    h1 = np.diff(r1)
    p1 = r1[:-1, None] + 0.5 * h1[:, None] * (x[None, :] + 1)
    h2 = np.diff(r2)
    p2 = r2[:-1, None] + 0.5 * h2[:, None] * (x[None, :] + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ar, _, _ = A.cylindrical(p1[:, :, None], 0.0, r2[None, None, :])
        _, _, az = A.cylindrical(r1[:, None, None], 0.0, p2[None, :, :])
    phi1 = np.einsum("iqj,q,i->ij", ar, w, 0.5 * h1)
    phi2 = np.einsum("ijq,q,j->ij", az, w, 0.5 * h2)
    axis_coef = float(mode_m - A.axis_winding)
    axis_el = el.singular_set == "axis" and el.a != 0
    pinned = abs(axis_coef) > 1e-14 or axis_el

    def theta_coef(s1, s2):
        _, at, _ = A.cylindrical(s1, 0.0, s2)
        return (mode_m / s1 - at) ** 2

    theta_w = node_weights(grid, theta_coef, skip_axis=pinned)
    if el.a != 0 or el.profile is not None:
        electric_w = node_weights(grid, lambda s1, s2: el.cylindrical(s1, 0.0, s2, N),
                                  skip_axis=pinned)
    else:
        electric_w = np.zeros(grid.shape)
    for arr in (phi1, phi2, theta_w, electric_w):
        if not np.all(np.isfinite(arr)):
            raise ValueError("potential is not finite on the grid")
    return BiradialOperator(grid, int(mode_m), np.asarray(phi1, float), np.asarray(phi2, float),
                            theta_w, electric_w, axis_coef, axis_el)


Potential = Union[MagneticPotential, BiradialOperator, None]


def _operator(u: Field2D, A: Potential, a) -> BiradialOperator:
    if isinstance(A, BiradialOperator):
        if A.grid is not u.grid and A.grid.shape != u.grid.shape:
            raise ValueError("operator and field live on different grids")
        if A.mode_m != u.mode_m:
            raise ValueError("operator and field have different windings")
        return A
    return discretize(u.grid, A, a, u.mode_m)


def quadratic_form(u: Field2D, A: Potential = None, a=None) -> float:
    """Q_{A,a}(u) on the grid of u."""
    op = _operator(u, A, a)
    op.check_axis(u.values)
    return op.energy(u.values)


def dirichlet_energy(u: Field2D) -> float:
    """int |grad u|^2, including the angular part m^2 / r1^2 |f|^2."""
    return quadratic_form(u, None, None)


def diamagnetic_check(u: Field2D, A: Potential = None, a=None) -> float:
    """Q_A(u) - int |grad |u||^2 (electric terms cancel and are left out)."""
    op = _operator(u, A, a)
    op.check_axis(u.values)
    free = discretize(u.grid, None, None, 0)
    return op.energy(u.values, electric=False) - free.energy(np.abs(u.values), electric=False)


def _threshold_kS(sector, N):
    if isinstance(sector, ZkSector):
        return sector.k ** (2.0 / N) * sobolev_constant_estimate(N, rtol=1e-9)
    return None


def rayleigh_quotient(u: Field2D, A: Potential = None, a=None,
                      sector: SectorSpec | None = None) -> QuotientResult:
    """Q_{A,a}(u) / ||u||_{2*}^2."""
    N = u.grid.spec.dimension_N
    p = critical_exponent(N)
    num = quadratic_form(u, A, a)
    den = integrate(np.abs(u.values) ** p, u.grid) ** (2.0 / p)
    if den == 0:
        raise ValueError("zero field")
    return QuotientResult(num, den, num / den, sector or Biradial(u.mode_m),
                          sobolev_constant_estimate(N, rtol=1e-9), _threshold_kS(sector, N))


# --------------------------------------------------------------------------
# the Sobolev constant from the bubble


def _bubble_quotient(N: int, L: float, n: int = 20) -> float:
    b = [0.0, 1.0]
    while b[-1] < L:
        b.append(min(2 * b[-1], L))
    x, w = _gl(n)
    lo, hi = np.array(b[:-1])[:, None], np.array(b[1:])[:, None]
    r = (lo + 0.5 * (hi - lo) * (x + 1)).ravel()
    wr = (0.5 * (hi - lo) * w).ravel() * r ** (N - 1)
    p = 2 * N / (N - 2)
    dw = -(N - 2) * r * (1 + r**2) ** (-N / 2)
    ww = (1 + r**2) ** (-(N - 2) / 2)
    return float(np.sum(wr * dw**2) / np.sum(wr * ww**p) ** (2 / p) * sphere_area(N - 1) ** (1 - 2 / p))


@lru_cache(maxsize=32)
def sobolev_constant_estimate(dimension_N: int, rtol: float = 1e-5, n: int = 20) -> float:
    """Sobolev constant from the bubble quotient on growing truncated balls.

    The ball radius doubles until two successive values agree to `rtol`;
    `n` is the Gauss order on each dyadic radial panel.
    """
    if dimension_N < 3:
        raise ValueError("dimension_N must be at least 3")
    if n < 2:
        raise ValueError("need at least two nodes per panel")
    L = 16.0
    prev = _bubble_quotient(dimension_N, L, n)
    while L < 2.0**60:
        L *= 2
        cur = _bubble_quotient(dimension_N, L, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise RuntimeError("bubble quotient did not stabilize")


def sobolev_constant_closed_form(dimension_N: int) -> float:
    """pi N (N-2) (Gamma(N/2) / Gamma(N))^(2/N)."""
    N = dimension_N
    return float(np.pi * N * (N - 2) * (gamma_fn(N / 2) / gamma_fn(N)) ** (2.0 / N))


# --------------------------------------------------------------------------
# angular operator and Hardy constant


def _spectral_derivative(M: int) -> np.ndarray:
    """Periodic differentiation matrix on M (odd) equispaced points."""
    h = 2 * np.pi / M
    k = np.arange(M)
    diff = k[:, None] - k[None, :]
    with np.errstate(divide="ignore"):
        D = 0.5 * (-1.0) ** diff / np.sin(diff * h / 2)
    D[np.diag_indices(M)] = 0.0
    return D


def angular_eigenvalues(alpha: float, m_range: Sequence[int], n_points: int | None = None,
                        tol: float = 1e-8) -> list[float]:
    """Eigenvalues (m - alpha)^2 of (-i d/dtheta - alpha)^2 on the circle.

    Computed from a dense spectral discretization; the eigenvalue attached
    to each m is the one whose eigenvector overlaps most with e^{i m theta}.
    The closed form is checked and a mismatch above `tol` raises.
    """
    m_range = [int(m) for m in m_range]
    if not m_range:
        raise ValueError("empty m_range")
    if not np.isfinite(alpha):
        raise ValueError("flux must be finite")
    span = max(abs(m) for m in m_range) + int(np.ceil(abs(alpha))) + 2
    M = n_points or 2 * span + 1
    if M % 2 == 0:
        M += 1
    D = _spectral_derivative(M)
    B = -1j * D - alpha * np.eye(M)
    H = B @ B
    H = 0.5 * (H + H.conj().T)
    lam, vec = np.linalg.eigh(H)
    t = 2 * np.pi * np.arange(M) / M
    out = []
    for m in m_range:
        e = np.exp(1j * m * t) / np.sqrt(M)
        k = int(np.argmax(np.abs(e.conj() @ vec)))
        val = float(lam[k])
        if abs(val - (m - alpha) ** 2) > tol * max(1.0, (m - alpha) ** 2):
            raise RuntimeError(f"angular discretization failed for m={m}")
        out.append(val)
    return out


def hardy_constant_ab(alpha: float) -> float:
    """min over integers m of (m - alpha)^2, the squared distance of alpha to Z.

    `angular_eigenvalues` gives the same numbers from the discretized
    angular operator.
    """
    if not np.isfinite(alpha):
        raise ValueError("flux must be finite")
    d = abs(alpha - round(alpha))
    return float(d * d)


@dataclass(frozen=True)
class HardyStep:
    width: float
    quotient: float
    quotient_planar: float
    plateau_radius: float
    ramp: float


def _smoothstep_moments(n: int = 24):
    x, w = _gl(n)
    s = 0.5 * (x + 1)
    w = 0.5 * w
    g = 3 * s**2 - 2 * s**3
    dg = 6 * s - 6 * s**2
    return s, w, g, dg


def hardy_optimality_sweep(alpha: float, widths: Sequence[float], dimension_N: int = 4,
                           plateau_exp: float = 2.0, ramp_exp: float = 1.5,
                           r_max: float | None = None) -> list[HardyStep]:
    """Quotients int |(-i grad - A) v|^2 / int |v|^2/r1^2 for near optimizers.

    v = e^{i m theta} g(r1) eta(|y|) where g is a plateau of `width` log
    units in r1 (smooth ramps of the same length on each side, support
    ending at r1 = 1), and eta equals one on the ball of radius
    width**plateau_exp with a ramp of length width**ramp_exp.  The integrals
    separate and are done with Gauss rules on each smooth piece.  The
    planar quotient drops the y factor.
    """
    N = dimension_N
    if N < 3:
        raise ValueError("dimension_N must be at least 3")
    widths = [float(L) for L in widths]
    if any(L <= 0 for L in widths) or np.any(np.diff(widths) <= 0):
        raise ValueError("widths must be positive and increasing")
    if ramp_exp <= (N - 2) / 2:
        raise ValueError("ramp exponent must exceed (N-2)/2")
    m = int(np.round(alpha))
    H0 = (m - alpha) ** 2
    s, w, g, dg = _smoothstep_moments()
    out = []
    for L in widths:
        rho, delta = L**plateau_exp, L**ramp_exp
        if r_max is not None and (rho + delta > r_max or r_max < 1.0):
            raise ValueError("domain truncation too small for the requested widths")
        # log variable t in [-4L, 0]: ramp up on [-4L, -3L], plateau, ramp down on [-L, 0]
        G2 = 2 * L + 2 * L * np.sum(w * g**2)
        dG2 = 2 * np.sum(w * dg**2) / L
        t_up = -4 * L + L * s
        t_dn = -L * s  # g = smoothstep(s) at t = -L s
        t_pl, w_pl = _panel_exp(-3 * L, -L)
        Ge = (L * np.sum(w * g**2 * np.exp(2 * t_up)) + np.sum(w_pl * np.exp(2 * t_pl))
              + L * np.sum(w * g**2 * np.exp(2 * t_dn)))
        # y factor with weight s^(N-3)
        rr = rho + delta * (1 - s)  # ramp from 1 at rho to 0 at rho + delta, eta = g(s)
        eta2 = rho ** (N - 2) / (N - 2) + delta * np.sum(w * g**2 * rr ** (N - 3))
        deta2 = np.sum(w * dg**2 * rr ** (N - 3)) / delta
        planar = H0 + dG2 / G2
        out.append(HardyStep(L, planar + (Ge / G2) * (deta2 / eta2), planar, rho, delta))
    return out


def _panel_exp(a, b, n=24):
    x, w = _gl(n)
    pts, wts = [], []
    edges = np.linspace(a, b, int(np.ceil((b - a) / 2)) + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts.append(lo + 0.5 * (hi - lo) * (x + 1))
        wts.append(0.5 * (hi - lo) * w)
    return np.concatenate(pts), np.concatenate(wts)
