"""Constrained minimization of Rayleigh quotients in symmetry sectors.

The discrete quotient f^H K f / (sum w |f|^p)^(2/p) is minimized by a
normalized gradient flow: the constraint sum w |f|^p = 1 is restored by
rescaling after each step, and the gradient is taken in the metric of K
itself (a Sobolev gradient), which makes the step size mesh independent.
Steps are accepted by an Armijo test with backtracking.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .fields import (Field2D, GridSpec, RadialGridSpec, critical_exponent, hat_moments,
                     make_grid, make_radial_grid)
from .potentials import ElectricPotential, MagneticPotential, as_electric
from .quadform import Biradial, Radial, SectorSpec, ZkSector, discretize, \
    sobolev_constant_estimate
from .quadrature import sphere_area


class DivergenceError(RuntimeError):
    """The flow produced non finite values."""


@dataclass(frozen=True)
class MinimizerOptions:
    max_iterations: int = 2000
    tol: float = 1e-9
    step: float = 1.0
    step_policy: str = "backtracking"
    preconditioner: bool = True
    restarts: int = 0
    seed: int = 0
    patience: int = 5
    core_fraction: float = 0.6
    escape_window: int = 50
    initial_scale: float = 0.1
    conjugate: bool = True
    residual_tol: float = 1e-7
    max_step: float = 8.0

    def __post_init__(self):
        if self.step_policy not in ("backtracking", "fixed"):
            raise ValueError("step_policy must be 'backtracking' or 'fixed'")
        if self.max_iterations < 1 or self.step <= 0 or self.tol <= 0:
            raise ValueError("invalid minimizer options")


@dataclass
class MinimizerResult:
    sector: SectorSpec
    value: float
    converged: bool
    iterations: int
    residual: float
    verdict: str
    field: Field2D | None = None
    radial_values: np.ndarray | None = None
    log: list = dc_field(default_factory=list)
    diagnostics: dict = dc_field(default_factory=dict)
    grid: dict = dc_field(default_factory=dict)
    runtime: float = 0.0

    def summary(self) -> dict:
        return {"sector": type(self.sector).__name__, "value": self.value,
                "converged": self.converged, "iterations": self.iterations,
                "residual": self.residual, "verdict": self.verdict,
                "diagnostics": self.diagnostics, "grid": self.grid}

    def write_log(self, path: str | Path) -> Path:
        """Iteration log as CSV with columns iteration, quotient, residual, step."""
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "quotient", "residual", "step"])
            for e in self.log:
                w.writerow([e["iteration"], repr(float(e["value"])), repr(float(e["residual"])),
                            repr(float(e["step"]))])
        return path


# --------------------------------------------------------------------------
# discrete problems


@dataclass
class _Problem:
    K: sparse.csr_matrix
    w: np.ndarray
    p: float
    free: np.ndarray          # indices of free nodes in the full vector
    shape: tuple
    radius: np.ndarray        # |x| at free nodes, for diagnostics
    box: float
    h_min: float

    def embed(self, f):
        out = np.zeros(int(np.prod(self.shape)), dtype=f.dtype)
        out[self.free] = f
        return out.reshape(self.shape)


def _radial_problem(spec: RadialGridSpec, a: ElectricPotential) -> _Problem:
    g = make_radial_grid(spec)
    N = spec.dimension_N
    n = g.r.size
    cap = sphere_area(N - 1)
    # a / r^2 against the hat functions: |S^(N-1)| int hat_i r^(N-3)
    V = a.a * cap * hat_moments(g.r, N - 3)[0]
    e = g.edges
    main = np.zeros(n)
    main[:-1] += e
    main[1:] += e
    main -= V
    K = sparse.diags([main, -e, -e], [0, 1, -1], format="csr")
    free = np.arange(n - 1)
    return _Problem(K[free][:, free].tocsr(), g.weights[free], critical_exponent(N), free,
                    (n,), g.r[free], spec.r_max, float(g.r[1]))


def _biradial_problem(spec: GridSpec, A, a, m) -> _Problem:
    g = make_grid(spec)
    op = discretize(g, A, a, m)
    K = op.matrix()
    n1, n2 = g.shape
    mask = np.ones(g.shape, bool)
    mask[-1, :] = False
    mask[:, -1] = False
    if op.axis_pinned:
        mask[0, :] = False
    # nodes without edges or weight (the origin when N >= 4) carry no energy
    mask &= (abs(K).sum(axis=1).A.ravel() > 0).reshape(g.shape)
    free = np.flatnonzero(mask.ravel())
    R1, R2 = g.mesh()
    rad = np.sqrt(R1**2 + R2**2).ravel()[free]
    return _Problem(K[free][:, free].tocsr(), g.weights.ravel()[free],
                    critical_exponent(spec.dimension_N), free, g.shape, rad,
                    min(spec.r1_max, spec.r2_max), float(min(g.r1[1], g.r2[1])))


def _initial(prob: _Problem, scale: float, pinned_r1: np.ndarray | None, m: int,
             rng: np.random.Generator | None) -> np.ndarray:
    s = scale * prob.box
    f = (1 + (prob.radius / s) ** 2) ** (-1.0)
    if pinned_r1 is not None:
        f = f * (pinned_r1 / (s + pinned_r1)) ** max(abs(m), 1)
    if rng is not None:
        f = f * (1 + 0.3 * np.tanh(rng.normal(size=f.size)))
    return f.astype(float)


# --------------------------------------------------------------------------
# flow


def _normalize(f, w, p):
    D = np.sum(w * np.abs(f) ** p)
    return f / D ** (1 / p)


def _flow(prob: _Problem, f0: np.ndarray, opts: MinimizerOptions):
    K, w, p = prob.K, prob.w, prob.p
    lu = splu(K.tocsc()) if opts.preconditioner else None

    def solve(g):
        if lu is None:
            return g / np.maximum(K.diagonal(), 1e-300)
        if np.iscomplexobj(g) and not np.iscomplexobj(K.data):
            return lu.solve(g.real) + 1j * lu.solve(g.imag)
        return lu.solve(g)

    f = _normalize(f0, w, p)
    J = float(np.real(np.vdot(f, K @ f)))
    tau = opts.step
    log = []
    stall = 0
    out_core = 0
    flags = {"escape": False, "concentration": False}
    converged = False
    res = np.inf
    it = 0
    s_prev = g_prev = Pg_prev = None
    for it in range(1, opts.max_iterations + 1):
        g = K @ f - J * w * np.abs(f) ** (p - 2) * f
        Pg = solve(g)
        gPg = float(np.real(np.vdot(g, Pg)))
        res = np.sqrt(max(gPg, 0.0) / max(J, 1e-300))
        if not np.isfinite(res):
            raise DivergenceError("non finite gradient")
        if res < opts.residual_tol:
            converged = True
            break
        # Polak-Ribiere+ direction in the metric of K
        s = -Pg
        if opts.conjugate and s_prev is not None:
            beta = float(np.real(np.vdot(g, Pg - Pg_prev))) / max(
                float(np.real(np.vdot(g_prev, Pg_prev))), 1e-300)
            s = -Pg + max(beta, 0.0) * s_prev
        slope = float(np.real(np.vdot(g, s)))
        if slope >= 0:
            s, slope = -Pg, -gPg
        accepted = False
        t = tau
        for _ in range(60):
            fn = _normalize(f + t * s, w, p)
            Jn = float(np.real(np.vdot(fn, K @ fn)))
            if not np.isfinite(Jn):
                raise DivergenceError("non finite quotient")
            if opts.step_policy == "fixed" or Jn <= J + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            log.append({"iteration": it, "value": J, "residual": res, "step": 0.0})
            converged = res < 1e-5
            break
        # keep the direction in the tangent scale of the new iterate
        scale = 1.0 / np.sum(w * np.abs(f + t * s) ** p) ** (1 / p)
        s_prev, g_prev, Pg_prev = s * scale, g, Pg
        rel = (J - Jn) / abs(J)
        f, J = fn, Jn
        tau = min(opts.max_step, 2 * t) if opts.step_policy == "backtracking" else tau
        log.append({"iteration": it, "value": J, "residual": res, "step": t})
        # escape and concentration diagnostics
        mass = w * np.abs(f) ** p
        rc = float(np.sum(mass * prob.radius))
        if rc > opts.core_fraction * prob.box or rc < 3 * prob.h_min:
            out_core += 1
        else:
            out_core = 0
        if out_core >= opts.escape_window:
            flags["escape" if rc > opts.core_fraction * prob.box else "concentration"] = True
        stall = stall + 1 if abs(rel) < opts.tol else 0
        if stall >= opts.patience:
            converged = True
            break
    mass = w * np.abs(f) ** p
    flags["center_radius"] = float(np.sum(mass * prob.radius))
    return f, J, converged, it, res, log, flags


def _verdict(converged, flags):
    if flags.get("escape") or flags.get("concentration"):
        return "not_attained"
    return "converged" if converged else "max_iterations"


def minimize_sector(sector: SectorSpec, A: MagneticPotential | None = None, a=None,
                    grid: GridSpec | RadialGridSpec | None = None,
                    opts: MinimizerOptions | None = None) -> MinimizerResult:
    """Minimize the quotient over a radial or biradial sector.

    Z_k sectors are not discretized on grids; their infima are bounded
    above by multi-bump test functions (see `bubbles.multibump_quotient`).
    A bare number a takes the singular set of A, as in `discretize`.
    """
    opts = opts or MinimizerOptions()
    t0 = time.perf_counter()
    if isinstance(sector, ZkSector):
        raise NotImplementedError("Z_k sectors are bounded with multibump_quotient")
    el = as_electric(a, A.singular_set if A is not None else "origin")
    if isinstance(sector, Radial):
        if A is not None and not _is_zero(A):
            raise ValueError("the radial sector needs A = 0")
        if el.singular_set != "origin" or el.profile is not None:
            raise ValueError("the radial sector needs a constant a / |x|^2 potential")
        spec = grid or RadialGridSpec()
        if not isinstance(spec, RadialGridSpec):
            raise TypeError("radial sector needs a RadialGridSpec")
        from .quadform import check_positivity
        check_positivity(None, el, spec.dimension_N)
        prob = _radial_problem(spec, el)
        pinned, m = None, 0
    else:
        spec = grid or GridSpec()
        if not isinstance(spec, GridSpec):
            raise TypeError("biradial sector needs a GridSpec")
        m = sector.m
        prob = _biradial_problem(spec, A, el, m)
        pinned = None
        if discretize(make_grid(spec), A, el, m).axis_pinned:
            pinned = np.repeat(make_grid(spec).r1, spec.n2)[prob.free]
    rng = np.random.default_rng(opts.seed)
    best = None
    for attempt in range(opts.restarts + 1):
        scale = opts.initial_scale if attempt == 0 else float(rng.uniform(0.05, 0.2))
        f0 = _initial(prob, scale, pinned, m, rng if attempt else None)
        out = _flow(prob, f0, opts)
        if best is None or out[1] < best[1]:
            best = out
    f, J, conv, it, res, log, flags = best
    res_field = None
    radial_values = None
    full = prob.embed(f)
    if isinstance(sector, Radial):
        radial_values = full.real
    else:
        res_field = Field2D(make_grid(spec), m, full)
    return MinimizerResult(sector, J, conv, it, res, _verdict(conv, flags), res_field,
                           radial_values, log, flags, _spec_dict(spec),
                           time.perf_counter() - t0)


def _spec_dict(spec):
    from dataclasses import asdict
    return asdict(spec)


def _is_zero(A) -> bool:
    params = getattr(A, "params", None)
    return getattr(A, "name", None) == "zero" or (params is not None and params.get("b") == 0.0
                                                  and getattr(A, "name", "") == "rotational")


def radial_infimum(a: float, grid: RadialGridSpec | None = None,
                   opts: MinimizerOptions | None = None) -> float:
    """Infimum of the quotient with V = a / |x|^2 over radial functions."""
    return minimize_sector(Radial(), None, a, grid, opts).value


def radial_infimum_exact(a: float, dimension_N: int) -> float:
    """S (1 - 4a/(N-2)^2)^((N-1)/N), from the Emden-Fowler substitution."""
    N = dimension_N
    return sobolev_constant_estimate(N, 1e-9) * (1 - 4 * a / (N - 2) ** 2) ** ((N - 1) / N)


def biradial_instability_coupling(dimension_N: int) -> float:
    """Coupling below which the radial extremal stops minimizing among
    biradial functions.

    In the variables u = |x|^(-(N-2)/2) v(log|x|, omega) the radial extremal
    is v0 = c sech(kappa t) with mass L = (N-2)^2/4 - a.  The linearized
    operator has lowest eigenvalue -L (p^2/4 - 1) along t, and the degree two
    harmonic |x'|^2 (N-2) - 2 |x''|^2 (invariant under O(2) x O(N-2)) has
    eigenvalue 2N on the sphere.  The radial extremal is unstable once
    L (p^2/4 - 1) > 2N, that is a < -(N-2)^2 (N+1) / (4 (N-1)).
    """
    N = dimension_N
    if N < 3:
        raise ValueError("dimension must be at least 3")
    return -((N - 2) ** 2) * (N + 1) / (4.0 * (N - 1))


def critical_coupling(dimension_N: int, k: int, grid: RadialGridSpec | None = None,
                      opts: MinimizerOptions | None = None, lo: float = -20.0,
                      xtol: float = 1e-4) -> float:
    """Coupling a* < 0 where the radial infimum equals k^(2/N) S, by bisection."""
    N = dimension_N
    grid = grid or RadialGridSpec(dimension_N=N)
    target = k ** (2 / N) * sobolev_constant_estimate(N, 1e-9)
    hi = 0.0
    if radial_infimum(lo, grid, opts) < target:
        raise ValueError("lower end of the bracket is still below the target")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if radial_infimum(mid, grid, opts) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grid_ladder(sector: SectorSpec, A, a, specs: Sequence, opts: MinimizerOptions | None = None
                ) -> tuple[float, float, list[MinimizerResult]]:
    """Minimize on each grid; return the finest value and its change from the previous one."""
    res = [minimize_sector(sector, A, a, s, opts) for s in specs]
    if len(res) < 2:
        raise ValueError("a ladder needs at least two grids")
    return res[-1].value, abs(res[-1].value - res[-2].value), res


def default_ladder(dimension_N: int, sector: SectorSpec, box: float = 60.0):
    if isinstance(sector, Radial):
        return [RadialGridSpec(dimension_N, box * 4, n, 2.0) for n in (400, 800)]
    return [GridSpec(dimension_N, box, box, n, n, 2.0) for n in (97, 193)]


def el_residual(u: Field2D, A: MagneticPotential | None = None, a=None) -> float:
    """Relative residual of the Euler-Lagrange equation at u.

    The equation -Delta_A u - V u = |u|^(p-2) u is tested on interior
    nodes (outer boundary values are taken as given).  u is first scaled so
    the Lagrange multiplier is one, and the residual is measured in the
    dual norm of the interior operator, relative to the size of K u.
    """
    g = u.grid
    N = g.spec.dimension_N
    p = critical_exponent(N)
    op = discretize(g, A, a, u.mode_m)
    op.check_axis(u.values)
    K = op.matrix()
    mask = np.ones(g.shape, bool)
    mask[-1, :] = False
    mask[:, -1] = False
    if op.axis_pinned:
        mask[0, :] = False
    mask &= (abs(K).sum(axis=1).A.ravel() > 0).reshape(g.shape)
    free = np.flatnonzero(mask.ravel())
    f = u.values.ravel()
    Kf = (K @ f)[free]
    wf = g.weights.ravel()[free] * np.abs(f[free]) ** (p - 2) * f[free]
    lam = float(np.real(np.vdot(f[free], Kf)) / np.real(np.vdot(f[free], wf)))
    if lam <= 0:
        raise ValueError("nonpositive Lagrange multiplier")
    c = lam ** (1 / (p - 2))
    r = c * Kf - c ** (p - 1) * wf
    lu = splu(K[free][:, free].tocsc())
    sol = lu.solve(r.real) + (1j * lu.solve(r.imag) if np.iscomplexobj(r) else 0)
    ref = lu.solve((c * Kf).real) + (1j * lu.solve((c * Kf).imag) if np.iscomplexobj(Kf) else 0)
    return float(np.sqrt(abs(np.vdot(r, sol)) / abs(np.vdot(c * Kf, ref))))


# --------------------------------------------------------------------------
# chain report


def verdict(margin: float, error: float) -> str:
    if margin > error:
        return "holds"
    if margin < -error:
        return "violated"
    return "inconclusive"


@dataclass
class ChainReport:
    dimension_N: int
    k: int
    a: float
    flux_alpha: float
    sobolev_S: float
    threshold: float
    legs: list = dc_field(default_factory=list)

    @property
    def verdicts(self) -> list[str]:
        return [leg["verdict"] for leg in self.legs]

    def leg(self, name: str) -> dict:
        for leg in self.legs:
            if leg["name"] == name:
                return leg
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"dimension_N": self.dimension_N, "k": self.k, "a": self.a,
                "flux_alpha": self.flux_alpha, "sobolev_S": self.sobolev_S,
                "threshold_kS": self.threshold, "legs": self.legs}


def symmetry_breaking_report(dimension_N: int, a: float, flux_alpha: float, k: int,
                             R_values: Sequence[float] = (25.0, 50.0, 100.0),
                             cutoff: float = 1.0,
                             radial_specs: Sequence[RadialGridSpec] | None = None,
                             biradial_specs: Sequence[GridSpec] | None = None,
                             opts: MinimizerOptions | None = None,
                             include_biradial: bool = True) -> ChainReport:
    """Evaluate each inequality of the symmetry breaking chain.

    Legs, with V = a / r1^2 next to the flux line and a / |x|^2 otherwise:
      biradial infimum with A  >=  biradial infimum without A
      biradial infimum without A  =  radial infimum
      radial infimum  >=  k^(2/N) S
      k^(2/N) S  >  multi-bump quotient (best over R_values)
    Errors are differences between the two finest grids, or quadrature
    error estimates for the multi-bump values.
    """
    from .bubbles import BubbleConfig, multibump_quotient
    from .potentials import AharonovBohm

    N = dimension_N
    S = sobolev_constant_estimate(N, 1e-9)
    thr = k ** (2 / N) * S
    rep = ChainReport(N, k, a, flux_alpha, S, thr)
    rs = radial_specs or default_ladder(N, Radial())
    rad, rad_err, _ = grid_ladder(Radial(), None, a, rs, opts)
    if include_biradial:
        bs = biradial_specs or default_ladder(N, Biradial())
        AB = AharonovBohm(flux_alpha, N)
        m = int(np.round(flux_alpha))
        bi_A, bi_A_err, _ = grid_ladder(Biradial(m), AB, ElectricPotential(a, "axis"), bs, opts)
        bi_0, bi_0_err, _ = grid_ladder(Biradial(0), None, a, bs, opts)
        e = bi_A_err + bi_0_err
        rep.legs.append({"name": "magnetic_vs_free_biradial", "lhs": bi_A, "rhs": bi_0,
                         "margin": bi_A - bi_0, "error": e, "verdict": verdict(bi_A - bi_0, e)})
        e = bi_0_err + rad_err
        rep.legs.append({"name": "biradial_equals_radial", "lhs": bi_0, "rhs": rad,
                         "margin": -abs(bi_0 - rad), "error": e,
                         "verdict": "holds" if abs(bi_0 - rad) <= e else "violated"})
    rep.legs.append({"name": "radial_above_threshold", "lhs": rad, "rhs": thr,
                     "margin": rad - thr, "error": rad_err, "verdict": verdict(rad - thr, rad_err)})
    best = None
    for R in R_values:
        cfg = BubbleConfig(N, k, 0, float(R), cutoff=cutoff)
        q = multibump_quotient(cfg, AharonovBohm(flux_alpha, N), ElectricPotential(a, "axis"))
        if best is None or q.value < best[1].value:
            best = (R, q)
    R, q = best
    rep.legs.append({"name": "threshold_above_multibump", "lhs": thr, "rhs": q.value,
                     "margin": thr - q.value, "error": q.error, "R": R,
                     "verdict": verdict(thr - q.value, q.error)})
    return rep
