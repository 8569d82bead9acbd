"""Bubbles, multi-bump test functions and their interaction integrals.

A bubble is w(x) = (N(N-2))^((N-2)/4) (1 + |x - x0|^2)^(-(N-2)/2).  The
multi-bump function of a configuration (k, m, R) is

    U = sum_j e^{2 pi i j m / k} w_j,   w_j centered at R (cos t_j, sin t_j, 0, ...),

with t_j = t_0 + 2 pi j / k.  Its interaction integrals are computed with
the reduced cylinder rule (deterministic, error from two Gauss orders);
pair integrals use the two-center rule and a randomized quasi Monte Carlo
estimate serves as an independent check.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .potentials import (AharonovBohm, ElectricPotential, MagneticPotential, as_electric,
                         zero_potential)
from .quadform import QuotientResult, ZkSector, sobolev_constant_estimate
from .quadrature import (MixtureProposal, cylinder_rule, qmc_integral,
                         two_center_integral)


def bubble_constant(dimension_N: int) -> float:
    return (dimension_N * (dimension_N - 2.0)) ** ((dimension_N - 2.0) / 4.0)


def bubble(center: Sequence[float], dimension_N: int | None = None
           ) -> Callable[[np.ndarray], np.ndarray]:
    """The bubble centered at `center` as a callable on arrays (..., N)."""
    c = np.asarray(center, dtype=float)
    N = dimension_N or c.size
    if c.shape != (N,):
        raise ValueError("center must be a point of R^N")
    if N < 3:
        raise ValueError("dimension must be at least 3")
    cN = bubble_constant(N)

    def w(x):
        d2 = np.sum((np.asarray(x, dtype=float) - c) ** 2, axis=-1)
        return cN * (1.0 + d2) ** (-(N - 2) / 2.0)
    return w


def adjacent_distance(k: int, R: float) -> float:
    """Distance between adjacent centers, 2 R sin(pi / k)."""
    if k < 2:
        raise ValueError("need at least two centers")
    if R <= 0:
        raise ValueError("R must be positive")
    return 2.0 * R * math.sin(math.pi / k)


def smoothstep_cutoff(r1, eps: float):
    """phi rising from 0 at r1 = eps to 1 at r1 = 2 eps (C^1 cubic), and phi'."""
    s = np.clip((np.asarray(r1, dtype=float) - eps) / eps, 0.0, 1.0)
    return 3 * s**2 - 2 * s**3, (6 * s - 6 * s**2) / eps


@dataclass(frozen=True)
class BubbleConfig:
    """Multi-bump configuration.

    Attributes
    ----------
    dimension_N : int, at least 4
    k : int, number of bumps
    winding_m : int, phase e^{2 pi i m / k} between consecutive bumps
    R : float, radius of the circle of centers in the (x1, x2) plane
    base_angle : float, polar angle of the first center
    cutoff : float or None, eps of the cutoff vanishing for r1 < eps
    """

    dimension_N: int = 4
    k: int = 2
    winding_m: int = 0
    R: float = 50.0
    base_angle: float = 0.0
    cutoff: float | None = None

    def __post_init__(self):
        if int(self.dimension_N) != self.dimension_N or self.dimension_N < 4:
            raise ValueError("multi-bump configurations need N >= 4")
        if self.k < 1:
            raise ValueError("k must be positive")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ValueError("cutoff must be positive")
        if self.cutoff is not None and 2 * self.cutoff >= self.R - 1:
            raise ValueError("cutoff region reaches the bump centers")

    @property
    def angles(self) -> np.ndarray:
        return self.base_angle + 2 * np.pi * np.arange(self.k) / self.k

    @property
    def phases(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.winding_m * np.arange(self.k) / self.k)

    def centers(self) -> np.ndarray:
        c = np.zeros((self.k, self.dimension_N))
        c[:, 0] = self.R * np.cos(self.angles)
        c[:, 1] = self.R * np.sin(self.angles)
        return c

    def with_R(self, R: float) -> "BubbleConfig":
        return BubbleConfig(self.dimension_N, self.k, self.winding_m, float(R),
                            self.base_angle, self.cutoff)


def center_distance(i: int, j: int, config: BubbleConfig) -> float:
    """|x_i - x_j| = 2 R |sin(pi (i - j) / k)|."""
    k = config.k
    if not (0 <= i < k and 0 <= j < k):
        raise ValueError("center indices must lie in [0, k)")
    return 2.0 * config.R * abs(math.sin(math.pi * (i - j) / k))


def multibump(config: BubbleConfig) -> Callable[[np.ndarray], np.ndarray]:
    """U(x) as a complex valued callable."""
    ws = [bubble(c, config.dimension_N) for c in config.centers()]
    ph = config.phases

    def U(x):
        return sum(p * w(x) for p, w in zip(ph, ws))
    return U


# --------------------------------------------------------------------------
# integrals over the cylinder rule

_QUANTITIES = ("den", "den_cut", "grad2", "alpha", "alpha_abs", "beta", "gamma",
               "beta_cut", "cross", "phi2_grad2", "A2_cut", "psi", "numerator")


@dataclass
class MultibumpIntegrals:
    config: BubbleConfig
    values: dict
    errors: dict
    points: int

    def __getitem__(self, name):
        return self.values[name]


def _accumulate(config: BubbleConfig, A: MagneticPotential, el: ElectricPotential, n: int):
    N, k, R = config.dimension_N, config.k, config.R
    p = 2.0 * N / (N - 2.0)
    cN = bubble_constant(N)
    sym = A.planar_symmetric and el.profile is None
    half = np.pi / k
    if sym:
        sectors, mult = [(config.base_angle, half)], float(k)
    else:
        sectors, mult = [(t, half) for t in config.angles], 1.0
    eps = config.cutoff
    extra = [eps, 2 * eps] if eps else []
    rule = cylinder_rule(N, R, sectors, n=n, r1_extra=extra)
    acc = dict.fromkeys(_QUANTITIES, 0.0)
    angles, phases = config.angles, config.phases
    for r1, T, P, W in rule.slabs():
        shape = np.broadcast(r1, T, P).shape
        U = np.zeros(shape, complex)
        Ur = np.zeros(shape, complex)
        Ut = np.zeros(shape, complex)
        Uz = np.zeros(shape, complex)
        s_wp = np.zeros(shape)        # sum w_j^p
        s_wp1 = np.zeros(shape)       # sum w_j^(p-1)
        s_w = np.zeros(shape)
        s_pw = np.zeros(shape, complex)  # sum p_j w_j^(p-1)
        for tj, pj in zip(angles, phases):
            dlt = T - tj
            cs, sn = np.cos(dlt), np.sin(dlt)
            q = 1.0 + r1**2 + R**2 - 2 * r1 * R * cs + P**2
            w = cN * q ** (-(N - 2) / 2.0)
            g = -(N - 2) * cN * q ** (-N / 2.0)
            U += pj * w
            Ur += pj * g * (r1 - R * cs)
            Ut += pj * g * (R * sn)
            Uz += pj * g * P
            wp1 = w ** (p - 1)
            s_wp += wp1 * w
            s_wp1 += wp1
            s_w += w
            s_pw += pj * wp1
        aU2 = np.abs(U) ** 2
        grad2 = np.abs(Ur) ** 2 + np.abs(Ut) ** 2 + np.abs(Uz) ** 2
        ar, at, az = A.cylindrical(r1, T, P)
        A2 = ar**2 + at**2 + az**2
        V = el.cylindrical(r1, T, P, N) if (el.a != 0 or el.profile is not None) else 0.0
        if eps:
            phi, dphi = smoothstep_cutoff(r1, eps)
            phi = np.broadcast_to(phi, shape)
            dphi = np.broadcast_to(dphi, shape)
        else:
            phi, dphi = np.ones(shape), np.zeros(shape)
        phi2 = phi**2
        Up = aU2 ** (p / 2)
        AgradU = ar * Ur + at * Ut + az * Uz
        # direct |(-i grad - A)(phi U)|^2 - V phi^2 |U|^2
        vr = -1j * (phi * Ur + dphi * U) - ar * phi * U
        vt = -1j * phi * Ut - at * phi * U
        vz = -1j * phi * Uz - az * phi * U
        num = np.abs(vr) ** 2 + np.abs(vt) ** 2 + np.abs(vz) ** 2 - V * phi2 * aU2
        terms = {
            "den": Up,
            "den_cut": phi**p * Up,
            "grad2": grad2,
            "alpha": np.real(s_pw * np.conj(U)) - s_wp,
            "alpha_abs": s_wp1 * s_w - s_wp,
            "beta": (A2 - V) * phi2 * aU2,
            "gamma": np.imag(AgradU * np.conj(U)) * phi2,
            "beta_cut": dphi**2 * aU2,
            "cross": 2 * np.real(phi * dphi * Ur * np.conj(U)),
            "phi2_grad2": phi2 * grad2,
            "A2_cut": phi2 * A2 * aU2,
            "psi": (1 - phi**p) * Up,
            "numerator": num,
        }
        for key, val in terms.items():
            acc[key] += float(np.sum(W * val))
    return {key: mult * v for key, v in acc.items()}, rule.size


_CACHE: dict = {}


def _key(config, A, el, n):
    try:
        a_key = json.dumps(A.describe(), sort_keys=True)
        if getattr(A, "name", "") == "custom" or isinstance(A, MagneticPotential) and \
                type(A).__name__ in ("VectorField",):
            a_key += str(id(A))
    except Exception:
        a_key = str(id(A))
    e_key = json.dumps(el.describe(), sort_keys=True) + (str(id(el.profile)) if el.profile else "")
    return (config, a_key, e_key, n)


def multibump_integrals(config: BubbleConfig, A: MagneticPotential | None = None, a=None,
                        order: int = 6) -> MultibumpIntegrals:
    """All interaction integrals of a configuration, with error estimates.

    Errors are differences between Gauss orders `order` and `order - 2`.
    """
    N = config.dimension_N
    A = A if A is not None else zero_potential(N)
    if A.dimension_N != N:
        raise ValueError("potential and configuration have different dimensions")
    el = as_electric(a, A.singular_set)
    if isinstance(A, AharonovBohm) and config.cutoff is None:
        raise ValueError("the Aharonov-Bohm potential needs a cutoff around its axis")
    if el.singular_set == "axis" and config.cutoff is None and el.a != 0:
        raise ValueError("an axis potential needs a cutoff around the axis")
    key = _key(config, A, el, order)
    if key not in _CACHE:
        hi, npts = _accumulate(config, A, el, order)
        lo, _ = _accumulate(config, A, el, order - 2)
        err = {q: abs(hi[q] - lo[q]) + 1e-14 * abs(hi[q]) for q in hi}
        if len(_CACHE) > 256:
            _CACHE.clear()
        _CACHE[key] = MultibumpIntegrals(config, hi, err, npts)
    return _CACHE[key]


# --------------------------------------------------------------------------
# interaction terms


@dataclass
class InteractionReport:
    """alpha, beta, gamma of a configuration and, with a cutoff, the terms
    eta, xi, zeta, psi of the cut off expansion."""

    config: BubbleConfig
    values: dict
    errors: dict

    def as_dict(self) -> dict:
        return {"config": asdict(self.config), "values": self.values, "errors": self.errors}


def interaction_alpha(config: BubbleConfig) -> tuple[float, float]:
    """sum_{i != j} Re(p_i conj p_j) int w_i^(2*-1) w_j."""
    I = multibump_integrals(config)
    return I["alpha"], I.errors["alpha"]


def interaction_beta(config: BubbleConfig, a=None, A: MagneticPotential | None = None
                     ) -> tuple[float, float]:
    """int (|A|^2 - V) |U|^2 (times phi^2 when the configuration has a cutoff)."""
    I = multibump_integrals(config, A, a)
    return I["beta"], I.errors["beta"]


def interaction_gamma(config: BubbleConfig, A: MagneticPotential | None = None
                      ) -> tuple[float, float]:
    """Re(-i int A . grad U conj U); the form is Q(U) = ... - 2 gamma."""
    I = multibump_integrals(config, A, None)
    return I["gamma"], I.errors["gamma"]


def interaction_report(config: BubbleConfig, A: MagneticPotential | None = None, a=None
                       ) -> InteractionReport:
    I = multibump_integrals(config, A, a)
    v, e = I.values, I.errors
    vals = {"alpha": v["alpha"], "beta": v["beta"], "gamma": v["gamma"]}
    errs = {"alpha": e["alpha"], "beta": e["beta"], "gamma": e["gamma"]}
    if config.cutoff is not None:
        bc, pg, a2 = v["beta_cut"], v["phi2_grad2"], v["A2_cut"]
        vals.update(eta=v["beta"], zeta=v["gamma"], psi=v["psi"], beta_cut=bc,
                    gamma_cut=2 * math.sqrt(max(pg * bc, 0.0)),
                    xi=2 * math.sqrt(max(bc * a2, 0.0)), cross=v["cross"])
        errs.update(eta=e["beta"], zeta=e["gamma"], psi=e["psi"], beta_cut=e["beta_cut"],
                    gamma_cut=_sqrt_err(pg, bc, e["phi2_grad2"], e["beta_cut"]),
                    xi=_sqrt_err(bc, a2, e["beta_cut"], e["A2_cut"]), cross=e["cross"])
    return InteractionReport(config, vals, errs)


def ab_extras(config: BubbleConfig, flux_alpha: float, a: float = 0.0) -> dict:
    """eta, xi, psi, zeta with errors for the Aharonov-Bohm potential, as
    {name: (value, error)}.  The electric term is a / r1^2."""
    if config.cutoff is None:
        raise ValueError("the Aharonov-Bohm terms need a configuration with a cutoff")
    N = config.dimension_N
    r = interaction_report(config, AharonovBohm(flux_alpha, N), ElectricPotential(a, "axis"))
    return {q: (r.values[q], r.errors[q]) for q in ("eta", "xi", "psi", "zeta")}


def _sqrt_err(x, y, ex, ey):
    if x <= 0 or y <= 0:
        return 2 * math.sqrt(max(ex * abs(y), 0) + max(ey * abs(x), 0))
    return math.sqrt(x * y) * (ex / x + ey / y)


def gamma_qmc(config: BubbleConfig, A: MagneticPotential, n_points: int = 2**16,
              n_scrambles: int = 16, seed: int = 0) -> tuple[float, float]:
    """gamma by importance sampled scrambled Sobol points in R^N.

    The proposal mixes heavy tailed laws at the bump centers and at the
    origin, where a homogeneous A is singular like 1 / |x|; without the
    origin component the scramble spread understates the error.
    """
    N = config.dimension_N
    C = config.centers()
    ph = config.phases
    cN = bubble_constant(N)

    def integrand(x):
        U = np.zeros(x.shape[0], complex)
        G = np.zeros(x.shape, complex)
        for c, pj in zip(C, ph):
            d = x - c
            q = 1.0 + np.sum(d**2, axis=1)
            U += pj * cN * q ** (-(N - 2) / 2)
            G += (pj * (-(N - 2)) * cN * q ** (-N / 2))[:, None] * d
        a = A.field(x)
        if config.cutoff is not None:
            phi, _ = smoothstep_cutoff(np.hypot(x[:, 0], x[:, 1]), config.cutoff)
        else:
            phi = 1.0
        return np.imag(np.sum(a * G, axis=1) * np.conj(U)) * phi**2

    prop = MixtureProposal(np.vstack([C, np.zeros(N)]))
    return qmc_integral(integrand, prop, n_points, n_scrambles, seed)


def pair_integral(config: BubbleConfig, kind: str = "product") -> tuple[float, float]:
    """Two-center integrals of the first two bumps.

    "product": int (w_0 w_1)^(2*/2);  "alpha_pair": int w_0^(2*-1) w_1.
    """
    N = config.dimension_N
    C = config.centers()
    if C.shape[0] < 2:
        raise ValueError("need at least two bumps")
    p = 2.0 * N / (N - 2.0)
    cN = bubble_constant(N)
    w = lambda s: cN * (1 + s**2) ** (-(N - 2) / 2.0)
    if kind == "product":
        f = lambda s, t: (w(s) * w(t)) ** (p / 2)
    elif kind == "alpha_pair":
        f = lambda s, t: w(s) ** (p - 1) * w(t)
    else:
        raise ValueError(f"unknown pair integral {kind!r}")
    return two_center_integral(f, C[0], C[1], N)


def gamma_kernel(config: BubbleConfig, order: int = 6) -> tuple[float, float]:
    """int |grad w_1| w_0 / |x| over R^N (three centers: origin, x_0, x_1)."""
    N, R = config.dimension_N, config.R
    cN = bubble_constant(N)
    t0, t1 = config.angles[:2]
    vals = []
    for n in (order, order - 2):
        rule = cylinder_rule(N, R, [(t, np.pi / config.k) for t in config.angles], n=n)
        tot = 0.0
        for r1, T, P, W in rule.slabs():
            q0 = 1 + r1**2 + R**2 - 2 * r1 * R * np.cos(T - t0) + P**2
            q1 = 1 + r1**2 + R**2 - 2 * r1 * R * np.cos(T - t1) + P**2
            gw1 = (N - 2) * cN * q1 ** (-N / 2) * np.sqrt(q1 - 1)
            w0 = cN * q0 ** (-(N - 2) / 2)
            tot += float(np.sum(W * gw1 * w0 / np.sqrt(r1**2 + P**2)))
        vals.append(tot)
    return vals[0], abs(vals[0] - vals[1])


# --------------------------------------------------------------------------
# quotients and bounds


def _threshold(config):
    N = config.dimension_N
    return config.k ** (2.0 / N) * sobolev_constant_estimate(N, 1e-9)


def multibump_quotient(config: BubbleConfig, A: MagneticPotential | None = None, a=None
                       ) -> QuotientResult:
    """Q_{A,a}(phi U) / ||phi U||_{2*}^2, with phi = 1 without a cutoff.

    The numerator is integrated directly.  `extras["assembled"]` holds the
    expansion k S^(N/2) + alpha + beta - 2 gamma (no cutoff), or its upper
    bound k S^(N/2) + alpha + beta_cut + gamma_cut + eta + xi - 2 zeta.
    """
    N = config.dimension_N
    p = 2.0 * N / (N - 2.0)
    I = multibump_integrals(config, A, a)
    v, e = I.values, I.errors
    S = sobolev_constant_estimate(N, 1e-9)
    base = config.k * S ** (N / 2)
    den = v["den_cut"] ** (2 / p)
    q = v["numerator"] / den
    err = q * (e["numerator"] / abs(v["numerator"]) + (2 / p) * e["den_cut"] / v["den_cut"])
    if config.cutoff is None:
        assembled = base + v["alpha"] + v["beta"] - 2 * v["gamma"]
    else:
        r = interaction_report(config, A, a).values
        assembled = (base + r["alpha"] + r["beta_cut"] + r["gamma_cut"] + r["eta"] + r["xi"]
                     - 2 * r["zeta"])
    thr = _threshold(config)
    verdict = "below" if thr - q > err else ("not_below" if q - thr > err else "inconclusive")
    return QuotientResult(v["numerator"], den, q, ZkSector(config.k, config.winding_m), S, thr,
                          err, {"assembled": assembled, "assembled_quotient": assembled / den,
                                "verdict": verdict, "grad2_identity_gap":
                                v["grad2"] - (base + v["alpha"])})


@dataclass
class LowerBoundCheck:
    lhs: float
    rhs: float
    margin: float
    error: float
    holds: bool | None
    separation: float
    separation_required: float | None
    separation_ok: bool | None


def denominator_lower_bound_check(config: BubbleConfig, delta: float,
                                  K_delta: float | None = None, order: int = 6,
                                  max_order: int = 10) -> LowerBoundCheck:
    """int |U|^(2*) >= k S^(N/2) + 2* (1 - delta) alpha.

    The quadrature order is raised in steps of two up to `max_order` while
    the margin is within the error estimate; `holds` is None when it still
    is.  The
    separation hypothesis d^2 / log d >= K_delta (k-1)^(2/(N-2)) on the
    adjacent distance d is reported, not enforced.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if config.cutoff is not None:
        config = BubbleConfig(config.dimension_N, config.k, config.winding_m, config.R,
                              config.base_angle, None)
    N = config.dimension_N
    p = 2.0 * N / (N - 2.0)
    S = sobolev_constant_estimate(N, 1e-9)
    while True:
        I = multibump_integrals(config, order=order)
        lhs = I["den"]
        rhs = config.k * S ** (N / 2) + p * (1 - delta) * I["alpha"]
        err = I.errors["den"] + p * (1 - delta) * I.errors["alpha"] + abs(rhs) * 1e-9
        m = lhs - rhs
        holds = True if m > err else (False if m < -err else None)
        if holds is not None or order + 2 > max_order:
            break
        order += 2
    if config.k >= 2:
        d = adjacent_distance(config.k, config.R)
        sep = d**2 / math.log(d) if d > 1 else float("nan")
    else:
        sep = float("inf")
    req = None if K_delta is None else K_delta * (config.k - 1) ** (2 / (N - 2))
    ok = None if req is None else bool(sep >= req)
    return LowerBoundCheck(lhs, rhs, m, err, holds, sep, req, ok)


def calibrate_K_delta(delta: float = 0.5, dimension_N: int = 4, k: int = 2,
                      R_values: Sequence[float] = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
                      ) -> float:
    """Smallest separation constant for which the bound holds on the sweep.

    Returns d^2 / log d at the smallest R from which the check passes for
    every larger R in the sweep.
    """
    Rs = sorted(float(R) for R in R_values)
    ok = [denominator_lower_bound_check(BubbleConfig(dimension_N, k, 0, R), delta).holds
          for R in Rs]
    start = None
    for i in range(len(Rs) - 1, -1, -1):
        if ok[i] is True:
            start = i
        else:
            break
    if start is None:
        raise RuntimeError("the bound fails at the largest R of the sweep")
    for R in Rs[start:]:
        d = adjacent_distance(k, R)
        if d > 1:
            return d**2 / math.log(d)
    raise RuntimeError("no admissible separation in the sweep")


# --------------------------------------------------------------------------
# slopes and schedules


def predicted_exponent(quantity: str, dimension_N: int) -> tuple[float, int]:
    """Power of R and power of log R in the asymptotic rate of a quantity."""
    N = dimension_N
    table = {
        "alpha": (-(N - 2), 0),
        "pair": (-N, 1),
        "beta": (-2, 1 if N == 4 else 0),
        "eta": (-2, 1 if N == 4 else 0),
        "gamma": (-2, 0) if N == 4 else ((-3, 0) if N == 5 else (-(N - 2), 0)),
        "zeta": (-2, 0) if N == 4 else ((-3, 0) if N == 5 else (-(N - 2), 0)),
        "gamma_kernel": (-(N - 2), 0),
        "psi": (-2 * N, 0),
        "xi": (-3, 0) if N == 4 else (-(N - 1), 0),
    }
    if quantity not in table:
        raise ValueError(f"unknown quantity {quantity!r}")
    return table[quantity]


@dataclass
class SlopeFit:
    quantity: str
    R_values: list
    values: list
    errors: list
    slope: float
    raw_slope: float
    log_power: int
    predicted: float
    local_slopes: list
    nonpositive: list = field(default_factory=list)

    @property
    def deviation(self) -> float:
        return self.slope - self.predicted

    def as_dict(self) -> dict:
        return asdict(self)


def quantity_value(quantity: str, config: BubbleConfig, A=None, a=None) -> tuple[float, float]:
    if quantity == "pair":
        return pair_integral(config, "product")
    if quantity == "gamma_kernel":
        return gamma_kernel(config)
    if quantity == "alpha":
        I = multibump_integrals(config, A, a)
        return I["alpha"], I.errors["alpha"]
    r = interaction_report(config, A, a)
    if quantity not in r.values:
        raise ValueError(f"{quantity!r} needs a configuration with a cutoff")
    return r.values[quantity], r.errors[quantity]


def asymptotic_slope(quantity: str, R_values: Sequence[float], config: BubbleConfig,
                     A: MagneticPotential | None = None, a=None,
                     log_power: int | None = None) -> SlopeFit:
    """Least squares slope of log|q| against log R.

    With a log correction of power L the fit is of log|q| - L log log R,
    which removes the drift of rates like log R / R^2.  The raw slope is
    reported alongside.
    """
    Rs = [float(R) for R in R_values]
    if len(Rs) < 2 or any(R <= 1 for R in Rs):
        raise ValueError("need at least two radii above one")
    pred, lp = predicted_exponent(quantity, config.dimension_N)
    lp = lp if log_power is None else int(log_power)
    vals, errs, bad = [], [], []
    for R in Rs:
        v, e = quantity_value(quantity, config.with_R(R), A, a)
        vals.append(v)
        errs.append(e)
        if v <= 0:
            bad.append(R)
    x = np.log(Rs)
    if any(v == 0 for v in vals):
        # identically vanishing quantities (for instance gamma without winding) have no slope
        nan = float("nan")
        return SlopeFit(quantity, Rs, vals, errs, nan, nan, lp, float(pred),
                        [nan] * (len(Rs) - 1), bad)
    y = np.log(np.abs(vals))
    raw = float(np.polyfit(x, y, 1)[0])
    slope = float(np.polyfit(x, y - lp * np.log(np.log(Rs)), 1)[0])
    local = list(np.diff(y) / np.diff(x))
    return SlopeFit(quantity, Rs, vals, errs, slope, raw, lp, float(pred),
                    [float(s) for s in local], bad)


@dataclass
class SchedulePoint:
    k: int
    R: float
    requests: dict


def parameter_selection(dimension_N: int, epsilon_target: float,
                        k_values: Sequence[int] = (2, 3, 4), growth: float | None = None
                        ) -> list[SchedulePoint]:
    """(k, R) pairs with k^(N-1) / R^(N-2) <= epsilon, R growing slightly faster.

    R_k = epsilon^(-1/(N-2)) k^((N-1)/(N-2) + growth), so k^((N-1)/(N-2)) / R
    tends to zero.  Each pair is annotated with order-of-magnitude proxies
    for the three smallness requests: alpha / k small, alpha above beta,
    alpha above gamma, using alpha ~ k^(N-1) / R^(N-2), beta ~ k^2 L(R) / R^2
    with L = log R for N = 4 and 1 otherwise, and gamma ~ k^2 / R^2.
    """
    N = dimension_N
    if N < 4:
        raise ValueError("schedules need N >= 4")
    if not 0 < epsilon_target < 1:
        raise ValueError("epsilon_target must lie in (0, 1)")
    ks = [int(k) for k in k_values]
    if any(k < 2 for k in ks):
        raise ValueError("k = 1 has no symmetry breaking")
    if growth is None:
        growth = 0.25 if N == 4 else 0.5 * ((N - 3) / (N - 4) - (N - 1) / (N - 2))
    out = []
    for k in ks:
        R = epsilon_target ** (-1 / (N - 2)) * k ** ((N - 1) / (N - 2) + growth)
        alpha = k ** (N - 1) / R ** (N - 2)
        L = math.log(R) if N == 4 else 1.0
        beta = k**2 * L / R**2
        gamma = k**2 / R**2
        req = {"alpha_over_k_small": alpha / k <= epsilon_target,
               "alpha_above_beta": alpha > beta,
               "alpha_above_gamma": alpha > gamma}
        if N >= 5:
            req["below_upper_rate"] = R <= k ** ((N - 3) / (N - 4))
        out.append(SchedulePoint(k, float(R), req))
    if N >= 5 and not any(pt.requests["below_upper_rate"] for pt in out):
        raise ValueError("no pair satisfies the upper growth constraint at this scale")
    return out
