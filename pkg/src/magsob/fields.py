"""Biradial grids, fields and measures.

A function u(x) = e^{i m theta} f(r1, r2) on R^N, with r1 = |(x1, x2)|,
theta the polar angle in that plane and r2 = |(x3, ..., xN)|, is stored as
the complex profile f on a tensor grid in (r1, r2).  Integrals over R^N
reduce to the weighted planar measure c_N r1 r2^(N-3) dr1 dr2 with
c_N = 2 pi |S^(N-3)|.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .quadrature import sphere_area


def measure_constant(dimension_N: int) -> float:
    """c_N such that dx = c_N r1 r2^(N-3) dr1 dr2 for biradial integrands."""
    if dimension_N < 3:
        raise ValueError("dimension_N must be at least 3")
    return 2.0 * np.pi * sphere_area(dimension_N - 3)


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid on [0, r1_max] x [0, r2_max].

    Node j along an axis sits at r_max * (j / (n - 1)) ** grading_exponent,
    so exponents above one cluster nodes near the axis and the origin.
    """

    dimension_N: int = 4
    r1_max: float = 10.0
    r2_max: float = 10.0
    n1: int = 64
    n2: int = 64
    grading_exponent: float = 1.0

    def __post_init__(self):
        if int(self.dimension_N) != self.dimension_N or self.dimension_N < 3:
            raise ValueError("dimension_N must be an integer >= 3")
        if not (self.r1_max > 0 and self.r2_max > 0):
            raise ValueError("r1_max and r2_max must be positive")
        if self.n1 < 8 or self.n2 < 8:
            raise ValueError("need at least 8 nodes per axis")
        if not self.grading_exponent >= 1.0:
            raise ValueError("grading_exponent must be >= 1")

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same box with the spacing divided by `factor` (nested nodes)."""
        return GridSpec(self.dimension_N, self.r1_max, self.r2_max,
                        (self.n1 - 1) * factor + 1, (self.n2 - 1) * factor + 1,
                        self.grading_exponent)

    def scaled(self, s: float) -> "GridSpec":
        return GridSpec(self.dimension_N, self.r1_max * s, self.r2_max * s,
                        self.n1, self.n2, self.grading_exponent)


def _nodes(r_max: float, n: int, p: float) -> np.ndarray:
    return r_max * (np.arange(n) / (n - 1)) ** p


def _trapezoid(r: np.ndarray) -> np.ndarray:
    h = np.diff(r)
    t = np.zeros_like(r)
    t[:-1] += 0.5 * h
    t[1:] += 0.5 * h
    return t


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Nodes, node weights and edge weights of a biradial grid.

    `weights[i, j]` integrates a nodal function against the measure.
    `edge1[i, j]` (shape (n1-1, n2)) and `edge2[i, j]` (shape (n1, n2-1))
    weigh squared differences on the edges, so that
    sum(edge * |f_b - f_a|^2) approximates the Dirichlet integral.
    """

    spec: GridSpec
    r1: np.ndarray
    r2: np.ndarray
    weights: np.ndarray
    edge1: np.ndarray
    edge2: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.spec.n1, self.spec.n2)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r1, self.r2, indexing="ij")


def hat_moments(r: np.ndarray, power: float, n: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Integrals of the hat functions on nodes r against t^power.

    Returns (H, C): H[i] = int hat_i(t) t^power dt and C[i] = int over the
    cell [r_i, r_(i+1)] of t^power dt.
    """
    from .quadrature import _gl
    x, w = _gl(n)
    u = 0.5 * (x + 1.0)
    h = np.diff(r)
    t = r[:-1, None] + h[:, None] * u[None, :]
    g = t**power * (0.5 * w)[None, :] * h[:, None]
    H = np.zeros_like(r)
    H[:-1] += np.sum(g * (1 - u), axis=1)
    H[1:] += np.sum(g * u, axis=1)
    return H, np.sum(g, axis=1)


def make_grid(spec: GridSpec) -> Grid2D:
    """Build the grid with node and edge weights.

    Node weights are the product trapezoid rule for the measure (they vanish
    on the axis, and at the origin for N >= 4, which keeps single node
    spikes expensive).  Edge weights integrate the measure exactly: an r1
    edge has weight c_N (cell integral of r1) / h1^2 times H2_j, where
    H2_j = int hat_j(r2) r2^(N-3) dr2, and symmetrically for r2 edges.
    """
    N = spec.dimension_N
    p = spec.grading_exponent
    r1 = _nodes(spec.r1_max, spec.n1, p)
    r2 = _nodes(spec.r2_max, spec.n2, p)
    c = measure_constant(N)
    H1, C1 = hat_moments(r1, 1)
    H2, C2 = hat_moments(r2, N - 3)
    # r2 ** 0 is 1 at r2 = 0, which is the right weight for N = 3
    weights = c * np.outer(_trapezoid(r1) * r1, _trapezoid(r2) * r2 ** (N - 3))
    edge1 = c * np.outer(C1 / np.diff(r1) ** 2, H2)
    edge2 = c * np.outer(H1, C2 / np.diff(r2) ** 2)
    for a in (weights, edge1, edge2):
        a.setflags(write=False)
    return Grid2D(spec, r1, r2, weights, edge1, edge2)


def node_weights(grid: "Grid2D", coef: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 n: int = 6, skip_axis: bool = False) -> np.ndarray:
    """c_N int hat_i(r1) hat_j(r2) coef(r1, r2) r1 r2^(N-3) over each node's support.

    Cell by cell Gauss rules; coefficients may be singular on the axis or at
    the origin as long as the weighted integrand stays integrable.  With
    `skip_axis` the weights of axis nodes are set to zero (those nodes are
    pinned to zero by the caller).
    """
    from .quadrature import _gl
    N = grid.spec.dimension_N
    x, w = _gl(n)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    r1, r2 = grid.r1, grid.r2
    h1, h2 = np.diff(r1), np.diff(r2)
    P1 = r1[:-1, None] + h1[:, None] * u[None, :]          # (n1-1, q)
    P2 = r2[:-1, None] + h2[:, None] * u[None, :]          # (n2-1, q)
    X1 = P1[:, None, :, None]
    X2 = P2[None, :, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.asarray(coef(X1, X2), dtype=float) * X1 * X2 ** (N - 3)
    vals = np.broadcast_to(vals, (r1.size - 1, r2.size - 1, n, n))
    vals = vals * (w[:, None] * w[None, :]) * (h1[:, None] * h2[None, :])[:, :, None, None]
    out = np.zeros(grid.shape)
    a, b = 1 - u, u
    out[:-1, :-1] += np.einsum("ijpq,p,q->ij", vals, a, a)
    out[1:, :-1] += np.einsum("ijpq,p,q->ij", vals, b, a)
    out[:-1, 1:] += np.einsum("ijpq,p,q->ij", vals, a, b)
    out[1:, 1:] += np.einsum("ijpq,p,q->ij", vals, b, b)
    out *= measure_constant(N)
    if skip_axis:
        out[0, :] = 0.0
    return out


class AxisRegularityError(ValueError):
    """A field with nonzero winding does not vanish on the axis r1 = 0."""


@dataclass(frozen=True, eq=False)
class Field2D:
    """Profile f of u = e^{i m theta} f(r1, r2) sampled on a grid."""

    grid: Grid2D
    mode_m: int
    values: np.ndarray
    axis_tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values have shape {v.shape}, grid is {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if int(self.mode_m) != self.mode_m:
            raise ValueError("mode_m must be an integer")
        if self.mode_m != 0:
            scale = max(float(np.max(np.abs(v))), 1e-300)
            if np.max(np.abs(v[0, :])) > self.axis_tol * scale:
                raise AxisRegularityError(
                    f"winding m={self.mode_m} requires the profile to vanish at r1=0")
        object.__setattr__(self, "values", np.asarray(v, dtype=complex))

    @classmethod
    def from_function(cls, grid: Grid2D, fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      mode_m: int = 0) -> "Field2D":
        R1, R2 = grid.mesh()
        return cls(grid, mode_m, np.asarray(fn(R1, R2), dtype=complex))

    def with_values(self, values: np.ndarray) -> "Field2D":
        return Field2D(self.grid, self.mode_m, values)

    def abs(self) -> "Field2D":
        """|u| as a winding-free field."""
        return Field2D(self.grid, 0, np.abs(self.values))


Integrand = Union[Field2D, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def integrate(f: Integrand, grid: Grid2D | None = None):
    """Integral over R^N of a biradial function.

    `f` may be a Field2D (its profile is integrated), an array of nodal
    values or a callable of (r1, r2).  Real input gives a float.
    """
    if isinstance(f, Field2D):
        grid, vals = f.grid, f.values
    else:
        if grid is None:
            raise ValueError("a grid is needed for arrays and callables")
        if callable(f):
            R1, R2 = grid.mesh()
            vals = np.asarray(f(R1, R2))
        else:
            vals = np.asarray(f)
    if vals.shape != grid.shape:
        raise ValueError("sample array does not match the grid")
    if not np.all(np.isfinite(vals)):
        raise ValueError("integrand is not finite on the grid")
    total = np.sum(grid.weights * vals)
    if np.iscomplexobj(total):
        return complex(total) if total.imag != 0 else float(total.real)
    return float(total)


def lp_norm(u: Field2D, p: float) -> float:
    """(integral |u|^p)^(1/p)."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    return integrate(np.abs(u.values) ** p, u.grid) ** (1.0 / p)


def critical_exponent(dimension_N: int) -> float:
    """2* = 2N / (N - 2)."""
    return 2.0 * dimension_N / (dimension_N - 2.0)


# --------------------------------------------------------------------------
# one dimensional radial grid


@dataclass(frozen=True)
class RadialGridSpec:
    dimension_N: int = 4
    r_max: float = 50.0
    n: int = 400
    grading_exponent: float = 2.0

    def __post_init__(self):
        if self.dimension_N < 3:
            raise ValueError("dimension_N must be at least 3")
        if self.n < 3 or not self.r_max > 0 or not self.grading_exponent >= 1:
            raise ValueError("invalid radial grid")


@dataclass(frozen=True, eq=False)
class RadialGrid:
    spec: RadialGridSpec
    r: np.ndarray
    weights: np.ndarray
    edges: np.ndarray


def make_radial_grid(spec: RadialGridSpec) -> RadialGrid:
    """Nodes, trapezoid node weights |S^(N-1)| t_i r_i^(N-1) and exact edge
    weights |S^(N-1)| (cell integral of r^(N-1)) / h^2."""
    N = spec.dimension_N
    r = _nodes(spec.r_max, spec.n, spec.grading_exponent)
    cap = sphere_area(N - 1)
    _, C = hat_moments(r, N - 1)
    return RadialGrid(spec, r, cap * _trapezoid(r) * r ** (N - 1), cap * C / np.diff(r) ** 2)


# --------------------------------------------------------------------------
# serialization


def _header(u: Field2D) -> dict:
    d = asdict(u.grid.spec)
    d["mode_m"] = int(u.mode_m)
    return d


def save_field(u: Field2D, path: str | Path) -> Path:
    """Write a field as CSV (suffix .csv) or flat binary (anything else).

    Both layouts list nodes with r2 as the slow index and r1 as the fast
    index.  The CSV has one comment line holding the grid parameters as
    JSON, then a header row r1,r2,re,im.  The binary layout is one JSON
    header line followed by little-endian complex128 values.
    """
    path = Path(path)
    head = json.dumps(_header(u), sort_keys=True)
    vals = u.values.T  # rows over r2, columns over r1
    if path.suffix == ".csv":
        R1, R2 = u.grid.mesh()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {head}\n")
            fh.write("r1,r2,re,im\n")
            for a, b, z in zip(R1.T.ravel(), R2.T.ravel(), vals.ravel()):
                fh.write(f"{float(a)!r},{float(b)!r},{float(z.real)!r},{float(z.imag)!r}\n")
    else:
        with open(path, "wb") as fh:
            fh.write(head.encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(vals, dtype="<c16").tobytes())
    return path


def load_field(path: str | Path) -> Field2D:
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, encoding="utf-8") as fh:
            head = json.loads(fh.readline()[1:].strip())
            data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        z = data[:, 2] + 1j * data[:, 3]
    else:
        with open(path, "rb") as fh:
            head = json.loads(fh.readline().decode("utf-8"))
            z = np.frombuffer(fh.read(), dtype="<c16")
    m = head.pop("mode_m")
    spec = GridSpec(**head)
    grid = make_grid(spec)
    vals = z.reshape(spec.n2, spec.n1).T
    return Field2D(grid, m, vals)
