"""Quadrature building blocks.

Composite Gauss-Legendre rules on graded panels, a reduced rule for
integrands with a planar rotation and an SO(N-2) symmetry, a two-center
rule for functions of the distances to two points, and a randomized
quasi Monte Carlo estimator used as an independent oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import special
from scipy.stats import qmc


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^d in R^(d+1)."""
    if d < 0:
        raise ValueError("sphere dimension must be nonnegative")
    return float(2.0 * np.pi ** ((d + 1) / 2.0) / special.gamma((d + 1) / 2.0))


@lru_cache(maxsize=64)
def _gl(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks: Sequence[float], n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite n-point Gauss-Legendre rule over consecutive breakpoints."""
    b = np.asarray(breaks, dtype=float)
    if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    x, w = _gl(n)
    lo, hi = b[:-1, None], b[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def tail_rule(start: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule for [start, inf) through r = start / t, t in (0, 1]."""
    x, w = _gl(n)
    t = 0.5 * (x + 1.0)
    return start / t, 0.5 * w * start / t**2


def focused_breaks(lo: float, hi: float, foci: Sequence[tuple[float, float]],
                   ratio: float = 2.0) -> np.ndarray:
    """Breakpoints on [lo, hi] that grade geometrically toward each focus.

    Each focus is a pair (position, h0): panels next to the position have
    width h0 and widen by `ratio` moving away from it.
    """
    pts = [lo, hi]
    for f, h0 in foci:
        if not lo <= f <= hi:
            continue
        pts.append(f)
        h = h0
        while f - h > lo or f + h < hi:
            pts.extend((f - h, f + h))
            h *= ratio
    b = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
    # drop slivers produced by overlapping sequences
    keep = [b[0]]
    for v in b[1:]:
        if v - keep[-1] > 1e-12 * max(1.0, abs(v)):
            keep.append(v)
    keep[-1] = hi
    return np.asarray(keep)


def half_line_rule(foci: Sequence[tuple[float, float]], n: int, far: float,
                   extra: Sequence[float] = (), ratio: float = 2.0
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Rule on [0, inf): graded panels up to `far` and a mapped tail."""
    b = focused_breaks(0.0, far, foci, ratio)
    if extra:
        b = np.unique(np.concatenate([b, [e for e in extra if 0.0 < e < far]]))
    x1, w1 = panel_rule(b, n)
    x2, w2 = tail_rule(far, n)
    return np.concatenate([x1, x2]), np.concatenate([w1, w2])


# --------------------------------------------------------------------------
# reduced rule in (r1, theta, rho) coordinates


@dataclass(frozen=True)
class CylinderRule:
    """Tensor rule in coordinates x = (r1 cos t, r1 sin t, rho * omega).

    The measure is r1 |S^(N-3)| rho^(N-3) dr1 dt drho, which integrates any
    function invariant under rotations of the last N-2 coordinates.  The
    angular rule covers `sectors`, a list of (center, half_width) pairs.
    """

    dimension_N: int
    r1: np.ndarray
    w1: np.ndarray
    theta: np.ndarray
    wt: np.ndarray
    rho: np.ndarray
    wr: np.ndarray

    def slabs(self, chunk: int = 8) -> Iterator[tuple[np.ndarray, ...]]:
        """Yield (r1, theta, rho, weight) blocks broadcast to a common shape."""
        N = self.dimension_N
        cap = sphere_area(N - 3)
        wrho = cap * self.wr * self.rho ** (N - 3)
        T = self.theta[None, :, None]
        P = self.rho[None, None, :]
        WT = self.wt[None, :, None] * wrho[None, None, :]
        for s in range(0, self.r1.size, chunk):
            r = self.r1[s:s + chunk, None, None]
            w = (self.w1[s:s + chunk] * self.r1[s:s + chunk])[:, None, None] * WT
            yield r, T, P, w

    @property
    def size(self) -> int:
        return self.r1.size * self.theta.size * self.rho.size


def cylinder_rule(dimension_N: int, R: float, sectors: Sequence[tuple[float, float]],
                  n: int = 8, r1_extra: Sequence[float] = (),
                  h_bump: float = 0.5, h_origin: float = 1e-3,
                  far_factor: float = 1e3, ratio: float = 3.0) -> CylinderRule:
    """Rule adapted to unit-scale bumps on the circle of radius R.

    Panels grade toward the origin, toward r1 = R, toward the bump angles
    and toward any extra r1 breakpoints (for instance cutoff radii).
    """
    if dimension_N < 3:
        raise ValueError("dimension must be at least 3")
    far = far_factor * max(R, 1.0)
    foci = [(0.0, h_origin)]
    if R > 0:
        foci.append((R, h_bump))
    foci.extend((e, h_bump) for e in r1_extra if e > 0)
    r1, w1 = half_line_rule(foci, n, far, extra=r1_extra, ratio=ratio)
    rho, wr = half_line_rule([(0.0, h_origin), (0.0, h_bump)], n, far, ratio=ratio)
    ht = h_bump / R if R > 0 else np.pi / 8
    th, wt = [], []
    for c, half in sectors:
        b = focused_breaks(-half, half, [(0.0, ht)], ratio)
        x, w = panel_rule(b, n)
        th.append(x + c)
        wt.append(w)
    return CylinderRule(dimension_N, r1, w1, np.concatenate(th), np.concatenate(wt), rho, wr)


# --------------------------------------------------------------------------
# two-center rule


def two_center_integral(f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        a: Sequence[float], b: Sequence[float], dimension_N: int,
                        n: int = 12, h0: float = 0.125, far: float | None = None
                        ) -> tuple[float, float]:
    """Integral over R^N of f(|x - a|, |x - b|).

    The space is split by the bisecting hyperplane; each half is written in
    spherical coordinates (s, phi) around its own center, phi measured from
    the direction pointing toward the other center.  Returns the value
    and the difference against a lower order rule as an error estimate.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (dimension_N,) or b.shape != (dimension_N,):
        raise ValueError("centers must be points of R^N")
    d = float(np.linalg.norm(a - b))
    if d == 0.0:
        raise ValueError("coincident centers")
    vals = [_two_center(f, d, dimension_N, m, h0, far) for m in (n, n - 4)]
    return vals[0], abs(vals[0] - vals[1])


def _two_center(f, d, N, n, h0, far):
    half = 0.5 * d
    far = far if far is not None else 1e3 * max(d, 1.0)
    foci = [(0.0, min(h0, half / 4)), (half, min(h0, half / 4))]
    s, ws = half_line_rule(foci, n, far, extra=[half])
    x, w = _gl(n)
    # inner angle: phi in [phi_min(s), pi] with cos(phi_min) = min(1, d/(2s))
    phimin = np.arccos(np.minimum(1.0, half / s))
    # grade the angular rule toward phi_min, where the integrand meets the bisector
    sub = np.array([0.0, 0.125, 0.25, 0.5, 1.0])
    total = 0.0
    cap = sphere_area(N - 2)
    for swap in (False, True):
        acc = 0.0
        for k in range(sub.size - 1):
            lo = phimin + sub[k] * (np.pi - phimin)
            hi = phimin + sub[k + 1] * (np.pi - phimin)
            ph = 0.5 * (hi - lo)[:, None] * (x[None, :] + 1.0) + lo[:, None]
            wp = 0.5 * (hi - lo)[:, None] * w[None, :]
            S = s[:, None]
            # phi = pi points away from the other center
            t = np.sqrt(np.maximum(S**2 + d**2 - 2.0 * S * d * np.cos(ph), 0.0))
            vals = f(t, S) if swap else f(S, t)
            jac = cap * S ** (N - 1) * np.sin(ph) ** (N - 2)
            acc += np.sum(ws[:, None] * wp * jac * vals)
        total += acc
    return float(total)


# --------------------------------------------------------------------------
# randomized quasi Monte Carlo with a heavy tailed mixture proposal


@dataclass(frozen=True)
class MixtureProposal:
    """Equal mixture of multivariate Student t laws centered at `centers`."""

    centers: np.ndarray
    scale: float = 1.0
    dof: float = 1.0

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        c = np.asarray(self.centers)
        N = c.shape[1]
        nu, sig = self.dof, self.scale
        lognorm = (special.gammaln((nu + N) / 2) - special.gammaln(nu / 2)
                   - 0.5 * N * np.log(nu * np.pi) - N * np.log(sig))
        q = np.sum((x[:, None, :] - c[None, :, :]) ** 2, axis=-1) / (nu * sig**2)
        comp = lognorm - 0.5 * (nu + N) * np.log1p(q)
        return special.logsumexp(comp, axis=1) - np.log(c.shape[0])


def qmc_integral(f: Callable[[np.ndarray], np.ndarray], proposal: MixtureProposal,
                 n_points: int = 2**16, n_scrambles: int = 8, seed: int = 0
                 ) -> tuple[float, float]:
    """Importance sampled integral of f over R^N with scrambled Sobol points.

    Returns the mean over independent scrambles and its standard error.
    """
    N = np.asarray(proposal.centers).shape[1]
    m = int(np.log2(n_points))
    if 2**m != n_points:
        raise ValueError("n_points must be a power of two")
    rng = np.random.default_rng(seed)
    ests = []
    for _ in range(n_scrambles):
        sob = qmc.Sobol(d=N + 2, scramble=True, seed=rng)
        u = sob.random_base2(m)
        # separate uniforms for component choice, N normals and the chi-square
        x = _mixture_sample(proposal, u)
        vals = f(x) * np.exp(-proposal.logpdf(x))
        ests.append(float(np.mean(vals)))
    ests = np.asarray(ests)
    return float(ests.mean()), float(ests.std(ddof=1) / np.sqrt(ests.size))


def _mixture_sample(p: MixtureProposal, u: np.ndarray) -> np.ndarray:
    c = np.asarray(p.centers)
    K, N = c.shape
    eps = 1e-15
    idx = np.minimum((u[:, 0] * K).astype(int), K - 1)
    z = special.ndtri(np.clip(u[:, 1:N + 1], eps, 1 - eps))
    g = 2.0 * special.gammaincinv(p.dof / 2, np.clip(u[:, N + 1], eps, 1 - eps))
    return c[idx] + p.scale * z / np.sqrt(g / p.dof)[:, None]
