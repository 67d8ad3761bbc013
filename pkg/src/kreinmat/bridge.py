"""Travelling pulses of the regularized suspension-bridge equation.

Steady states in the frame moving with speed ``c`` solve

    u'''' + c^2 u'' + e^u - 1 = 0

and their linear stability is the quadratic star-even problem

    lam^2 v + lam (-2c v') + A_0(U) v = 0,   A_0(U) = d^4 + c^2 d^2 + e^U.

Everything is discretized with periodic fourth-order finite differences on
``x = -L + h * arange(N)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import (NegativeD2, NewtonDivergence, OutOfRange, PulseCollapse,
                     WrongBranch)
from .hki import census_check, hki_for
from .kreinmatrix import (Subspace, krein_matrix_at, make_subspace,
                          small_z_reduction)
from .pencil import StarEvenPencil, polynomial_spectrum, validate_pencil
from .tolerances import DEFAULT, Tolerances

SQRT2 = np.sqrt(2.0)
C_SEED = 1.2  # continuation start for speeds where the seed alone fails


def linear_rates(c: float):
    """Decay and oscillation rates of the tails, roots of mu^4 + c^2 mu^2 + 1."""
    if not 0.0 < c < SQRT2:
        raise OutOfRange(f"c={c} outside (0, sqrt 2)")
    return np.sqrt(2.0 - c * c) / 2.0, np.sqrt(2.0 + c * c) / 2.0


def essential_band(c: float):
    """``rho = min_r (c r + sqrt(1 + r^4))``; the band is ``{i r : |r| >= rho}``."""
    if not 0.0 < c < SQRT2:
        raise OutOfRange(f"c={c} outside (0, sqrt 2)")
    res = minimize_scalar(lambda r: c * r + np.sqrt(1.0 + r ** 4), bounds=(-10.0, 0.0),
                          method="bounded", options={"xatol": 1e-12})
    rho = float(res.fun)
    return rho, f"{{i r : |r| >= {rho!r}}}"


def a0_band_edge(c: float) -> float:
    """Bottom of the essential spectrum of A_0, min_k k^4 - c^2 k^2 + 1."""
    return 1.0 - c ** 4 / 4.0


# ----------------------------------------------------------------------------
# grid

def _circ(stencil, N, scale):
    col = np.zeros(N)
    for off, w in stencil.items():
        col[off % N] += w
    return sla.circulant(col) * scale


@dataclass(frozen=True)
class BridgeGrid:
    N: int = 512
    L: float = 60.0

    def __post_init__(self):
        if self.N % 2 or self.N < 8:
            raise ValueError("N must be even and at least 8")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @cached_property
    def D1(self) -> np.ndarray:
        # circulant(col)[i, j] = col[i - j]
        return _circ({-1: 2 / 3, 1: -2 / 3, -2: -1 / 12, 2: 1 / 12}, self.N, 1 / self.h)

    @cached_property
    def D2(self) -> np.ndarray:
        return _circ({0: -5 / 2, 1: 4 / 3, -1: 4 / 3, 2: -1 / 12, -2: -1 / 12},
                     self.N, 1 / self.h ** 2)

    @cached_property
    def D4(self) -> np.ndarray:
        return _circ({0: 28 / 3, 1: -13 / 2, -1: -13 / 2, 2: 2.0, -2: 2.0,
                      3: -1 / 6, -3: -1 / 6}, self.N, 1 / self.h ** 4)

    @cached_property
    def even(self) -> np.ndarray:
        """Expansion from samples on x <= 0 to an even grid function."""
        N, half = self.N, self.N // 2
        E = np.zeros((N, half + 1))
        for j in range(N):
            r = j if j <= half else N - j
            E[j, r] = 1.0
        return E

    def inner(self, u, v) -> float:
        return float(self.h * np.vdot(u, v).real)

    def norm(self, u) -> float:
        return float(np.sqrt(self.inner(u, u)))


def primary_grid(c: float, N: int = 512, h_max: float = 1.0 / 3.0) -> BridgeGrid:
    """Grid with e^{-alpha L} < 1e-10; N is raised if needed to keep h <= h_max."""
    alpha, _ = linear_rates(c)
    L = 23.0 / alpha
    N = max(N, 2 * int(np.ceil(L / h_max)))
    return BridgeGrid(N, float(L))


# ----------------------------------------------------------------------------
# profiles

@dataclass
class PulseProfile:
    u: np.ndarray
    c: float
    residual_norm: float
    alpha: float
    beta: float
    peaks: list
    kind: str = "primary"
    grid: BridgeGrid = field(default_factory=BridgeGrid)
    m: Optional[int] = None
    ks: tuple = ()
    xtilde: Optional[float] = None
    remainder_norm: Optional[float] = None

    @property
    def x(self):
        return self.grid.x

    @property
    def n_pulses(self) -> int:
        return len(self.peaks)

    @property
    def half_distances(self) -> list:
        p = self.peaks
        return [0.5 * (b - a) for a, b in zip(p[:-1], p[1:])]

    @property
    def x_min(self) -> Optional[float]:
        d = self.half_distances
        return min(d) if d else None

    def ux(self):
        return self.grid.D1 @ self.u

    def to_json(self) -> dict:
        return {
            "kind": self.kind, "c": repr(float(self.c)), "N": self.grid.N,
            "L": repr(float(self.grid.L)), "m": self.m, "ks": list(self.ks),
            "xtilde": None if self.xtilde is None else repr(float(self.xtilde)),
            "residual_norm": float(self.residual_norm),
            "peaks": [repr(float(p)) for p in self.peaks],
            "u": [repr(float(v)) for v in self.u],
        }

    @classmethod
    def from_json(cls, doc) -> "PulseProfile":
        if isinstance(doc, str):
            doc = json.loads(doc)
        c = float(doc["c"])
        alpha, beta = linear_rates(c)
        xt = doc.get("xtilde")
        return cls(np.array([float(v) for v in doc["u"]]), c, doc["residual_norm"],
                   alpha, beta, [float(p) for p in doc["peaks"]], doc["kind"],
                   BridgeGrid(int(doc["N"]), float(doc["L"])), doc.get("m"),
                   tuple(doc.get("ks", ())), None if xt is None else float(xt))


def residual(u, c, grid: BridgeGrid):
    return grid.D4 @ u + c * c * (grid.D2 @ u) + np.expm1(np.minimum(u, 700.0))


def a0_matrix(u, c, grid: BridgeGrid) -> np.ndarray:
    A = grid.D4 + c * c * grid.D2 + np.diag(np.exp(u))
    return 0.5 * (A + A.T)


def residual_floor(u, c, grid: BridgeGrid) -> float:
    """Rounding level of the residual: the stencils sum terms of size
    |D4| |u| ~ |u| / h^4 that cancel."""
    mag = np.abs(grid.D4) @ np.abs(u) + c * c * (np.abs(grid.D2) @ np.abs(u))
    return 10.0 * np.finfo(float).eps * float(mag.max())


def _newton(u, c, grid, tol, maxiter=60, even=True, phase=None):
    """Damped Newton; ``even`` solves in the even subspace, otherwise the
    translation mode is fixed by the bordered condition <phase, du> = 0.

    The target is ``max(tol, residual_floor)``.
    """
    u = np.array(u, dtype=float)
    tol = max(tol, residual_floor(u, c, grid))
    F = residual(u, c, grid)
    r = np.abs(F).max()
    E = grid.even
    half = grid.N // 2
    for _ in range(maxiter):
        if r <= tol:
            return u, r, True
        J = a0_matrix(u, c, grid)
        if even:
            du = E @ np.linalg.solve((J @ E)[:half + 1], -F[:half + 1])
        else:
            n = grid.N
            B = np.zeros((n + 1, n + 1))
            B[:n, :n], B[:n, n], B[n, :n] = J, phase, phase
            du = np.linalg.solve(B, np.concatenate([-F, [0.0]]))[:n]
        t = 1.0
        while True:
            un = u + t * du
            Fn = residual(un, c, grid)
            rn = np.abs(Fn).max()
            if np.isfinite(rn) and (rn < (1 - 0.25 * t) * r or t < 1.0 / 64):
                break
            t *= 0.5
        if not np.isfinite(rn):
            break
        u, F, r = un, Fn, rn
    return u, r, r <= tol


def find_peaks(u, grid: BridgeGrid, frac: float = 0.5) -> list:
    """Abscissae of local extrema of |u| above ``frac * max|u|``, parabola-refined."""
    a = np.abs(u)
    top = a.max()
    N, h = grid.N, grid.h
    out = []
    for i in range(N):
        l, r = a[(i - 1) % N], a[(i + 1) % N]
        if a[i] >= frac * top and a[i] > l and a[i] >= r:
            den = l - 2 * a[i] + r
            shift = 0.5 * (l - r) / den if den != 0 else 0.0
            out.append(float(grid.x[i] + shift * h))
    return sorted(out)


def _seed(a, c, grid):
    alpha, beta = linear_rates(c)
    x = grid.x
    return a * np.exp(-alpha * np.abs(x)) * np.cos(beta * x)


def solve_primary_pulse(c: float, grid: Optional[BridgeGrid] = None,
                        guess=None, tol: float = 1e-10) -> PulseProfile:
    """Even primary pulse centred at x = 0.

    Without a ``guess`` the amplitude ``a`` of the seed
    ``a exp(-alpha |x|) cos(beta x)`` is chosen by a coarse line search on
    the residual; seeds are tried in order of increasing residual, and if
    all fail the pulse is continued in c from ``C_SEED``.
    """
    alpha, beta = linear_rates(c)
    grid = primary_grid(c) if grid is None else grid
    if guess is not None:
        seeds = [np.asarray(guess, dtype=float)]
    else:
        amps = np.arange(-3.0, -16.0, -1.0)
        res = [np.abs(residual(_seed(a, c, grid), c, grid)).max() for a in amps]
        seeds = [_seed(amps[k], c, grid) for k in np.argsort(res)]
    best, collapsed = None, False
    for s in seeds:
        u, r, ok = _newton(s, c, grid, tol)
        if ok and np.abs(u).max() < 1e-6:
            collapsed = True
            continue
        if ok:
            u = 0.5 * (u + u[(-np.arange(grid.N)) % grid.N])
            r = float(np.abs(residual(u, c, grid)).max())
            return PulseProfile(u, c, r, alpha, beta, [0.0], "primary", grid)
        if best is None or r < best:
            best = r
    if guess is None and c != C_SEED:
        # continuation from a speed where the seed works
        steps = np.linspace(C_SEED, c, max(2, int(np.ceil(abs(c - C_SEED) / 0.02)) + 1))
        u = None
        try:
            for ci in steps[:-1]:
                u = solve_primary_pulse(float(ci), grid, u, tol).u
            return solve_primary_pulse(c, grid, u, tol)
        except (NewtonDivergence, WrongBranch):
            pass
    if collapsed:
        raise WrongBranch(f"Newton converged to the zero solution at c={c}")
    raise NewtonDivergence(f"primary pulse at c={c} did not converge", best)


def derivative_in_c(profile: PulseProfile) -> np.ndarray:
    """dU/dc from A_0 U_c = -2c U'' in the even subspace."""
    g, c = profile.grid, profile.c
    E, half = g.even, g.N // 2
    A = a0_matrix(profile.u, c, g)
    rhs = -2.0 * c * (g.D2 @ profile.u)
    return E @ np.linalg.solve((A @ E)[:half + 1], rhs[:half + 1])


def d2_analytic(profile: PulseProfile) -> float:
    """-d/dc (c ||U'||^2) via U_c (integration by parts)."""
    g, c = profile.grid, profile.c
    ux = profile.ux()
    uc = derivative_in_c(profile)
    return -(g.inner(ux, ux) + 2.0 * c * g.inner(ux, g.D1 @ uc))


@dataclass
class PulseFamily:
    c_grid: np.ndarray
    profiles: list
    momentum: np.ndarray
    d2: np.ndarray

    def at(self, c: float) -> PulseProfile:
        k = int(np.argmin(np.abs(self.c_grid - c)))
        return self.profiles[k]

    def d2_at(self, c: float) -> float:
        k = int(np.argmin(np.abs(self.c_grid - c)))
        return float(self.d2[k])

    def norm_ux(self, c: float) -> float:
        p = self.at(c)
        return p.grid.norm(p.ux())

    def to_csv(self) -> str:
        lines = ["c,momentum,d2"]
        for c, q, d in zip(self.c_grid, self.momentum, self.d2):
            lines.append(f"{float(c)!r},{float(q)!r},{float(d)!r}")
        return "\n".join(lines) + "\n"


def build_family(c_values: Sequence[float], grid: Optional[BridgeGrid] = None,
                 tol: float = 1e-10) -> PulseFamily:
    """Primary pulses by continuation in c on a common grid; d2 by centred
    differences of the momentum c ||U'||^2 (NaN at the two ends)."""
    cs = np.asarray(c_values, dtype=float)
    if np.any(np.diff(cs) <= 0):
        raise ValueError("c_values must be increasing")
    if grid is None:
        grid = primary_grid(float(cs.max()))
    profiles, guess = [], None
    for c in cs:
        p = solve_primary_pulse(float(c), grid, guess, tol)
        profiles.append(p)
        guess = p.u
    mom = np.array([c * grid.inner(p.ux(), p.ux()) for c, p in zip(cs, profiles)])
    d2 = np.full(cs.size, np.nan)
    if cs.size >= 3:
        d2[1:-1] = -(mom[2:] - mom[:-2]) / (cs[2:] - cs[:-2])
    return PulseFamily(cs, profiles, mom, d2)


def family_around(c: float, dc: float = 1e-3, grid: Optional[BridgeGrid] = None) -> PulseFamily:
    return build_family([c - dc, c, c + dc], grid)


# ----------------------------------------------------------------------------
# multi-pulses

def _translate(primary: PulseProfile):
    x, u = primary.x, primary.u
    # close the periodic profile so the spline covers [-L, L]
    spl = CubicSpline(np.append(x, primary.grid.L), np.append(u, u[0]))
    L = primary.grid.L

    def at(y):
        y = np.asarray(y)
        out = np.zeros_like(y, dtype=float)
        inside = np.abs(y) <= L
        out[inside] = spl(y[inside])
        return out
    return at


def peak_positions(primary: PulseProfile, m: int, ks: Sequence[int], xtilde: float):
    X = [np.pi / (2 * primary.beta) * (2 * m + k) + xtilde for k in ks]
    p = np.concatenate([[0.0], np.cumsum(2.0 * np.asarray(X))])
    return p - 0.5 * (p[0] + p[-1])


def multipulse_grid(primary: PulseProfile, m: int, ks: Sequence[int], N: int = 512,
                    xtilde: Optional[float] = None) -> BridgeGrid:
    xt = np.pi / (2 * primary.beta) if xtilde is None else xtilde
    extent = peak_positions(primary, m, ks, xt)[-1]
    return BridgeGrid(N, float(extent + 10.0 / primary.alpha))


def _guess(primary, grid, m, ks, xtilde):
    f = _translate(primary)
    return sum(f(grid.x - p) for p in peak_positions(primary, m, ks, xtilde))


def _correction(u, c, grid, even):
    F = residual(u, c, grid)
    J = a0_matrix(u, c, grid)
    if even:
        half = grid.N // 2
        y = np.linalg.lstsq((J @ grid.even)[:half + 1], F[:half + 1], rcond=None)[0]
        return float(np.abs(grid.even @ y).max())
    return float(np.abs(np.linalg.lstsq(J, F, rcond=None)[0]).max())


def calibrate_xtilde(primary: PulseProfile, m: int, ks: Sequence[int],
                     grid: Optional[BridgeGrid] = None, npts: int = 16) -> float:
    """Offset in [0, pi/(2 beta)) minimizing the first Newton correction of
    the sum-of-translates guess."""
    per = np.pi / (2 * primary.beta)
    grid = multipulse_grid(primary, m, ks) if grid is None else grid
    even = list(ks) == list(ks)[::-1]
    cost = lambda t: _correction(_guess(primary, grid, m, ks, t), primary.c, grid, even)
    ts = per * np.arange(npts) / npts
    vals = [cost(t) for t in ts]
    k = int(np.argmin(vals))
    step = per / npts
    res = minimize_scalar(cost, bounds=(ts[k] - step, ts[k] + step), method="bounded",
                          options={"xatol": 1e-4})
    return float(res.x % per)


def construct_multipulse(primary: PulseProfile, m: int, ks: Sequence[int],
                         N: Optional[int] = None, xtilde: Optional[float] = None,
                         tol: float = 1e-10) -> PulseProfile:
    """n-pulse with half peak distances X_j = (pi / (2 beta)) (2m + k_j) + X~."""
    ks = tuple(int(k) for k in ks)
    if not ks:
        return primary
    if m < 0 or any(k < 0 for k in ks):
        raise ValueError("m and k_j must be nonnegative")
    if not any(k in (0, 1) for k in ks):
        raise ValueError("at least one k_j must be 0 or 1")
    N = primary.grid.N if N is None else N
    grid = multipulse_grid(primary, m, ks, N)
    if xtilde is None:
        xtilde = calibrate_xtilde(primary, m, ks, grid)
    guess = _guess(primary, grid, m, ks, xtilde)
    even = list(ks) == list(ks)[::-1]
    phase = None if even else grid.D1 @ guess
    u, r, ok = _newton(guess, primary.c, grid, tol, even=even, phase=phase)
    if not ok:
        raise NewtonDivergence(f"{len(ks) + 1}-pulse (m={m}, ks={ks}) did not converge", r)
    if even:
        u = 0.5 * (u + u[(-np.arange(grid.N)) % grid.N])
        r = float(np.abs(residual(u, primary.c, grid)).max())
    peaks = find_peaks(u, grid)
    if len(peaks) < len(ks) + 1:
        raise PulseCollapse(f"expected {len(ks) + 1} peaks, found {len(peaks)}")
    return PulseProfile(u, primary.c, r, primary.alpha, primary.beta, peaks,
                        f"multi{ks}", grid, m, ks, xtilde,
                        float(np.abs(u - guess).max()))


# ----------------------------------------------------------------------------
# spectra

@dataclass
class A0Spectrum:
    values: np.ndarray
    vectors: np.ndarray
    small: np.ndarray  # indices of |nu| < delta_report
    kernel: int  # index of the translation eigenvalue
    delta_report: float
    band_edge: float  # first eigenvalue above the small cluster
    band_edge_exact: float

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.values[self.small] < 0)) + int(
            np.sum(self.values < -self.delta_report))

    @property
    def nus(self) -> np.ndarray:
        """Small eigenvalues other than the translation one."""
        return np.array([self.values[k] for k in self.small if k != self.kernel])

    def to_json(self) -> dict:
        return {
            "eigenvalues": [repr(float(v)) for v in self.values],
            "small": [repr(float(self.values[k])) for k in self.small],
            "kernel": repr(float(self.values[self.kernel])),
            "delta_report": self.delta_report,
            "band_edge": self.band_edge, "band_edge_exact": self.band_edge_exact,
        }


def a0_spectrum(profile: PulseProfile) -> A0Spectrum:
    """Full eigensolve of A_0(U); small eigenvalues are those below
    ``0.1 * min(|lam_-|, 1 - c^4/4)`` in magnitude."""
    g = profile.grid
    w, V = np.linalg.eigh(a0_matrix(profile.u, profile.c, g))
    edge = a0_band_edge(profile.c)
    delta = 0.1 * min(abs(w[0]), edge)
    small = np.flatnonzero(np.abs(w) < delta)
    ux = profile.ux()
    ux = ux / np.linalg.norm(ux)
    kernel = int(small[np.argmax(np.abs(V[:, small].T @ ux))]) if small.size else -1
    above = w[w > delta]
    return A0Spectrum(w, V, small, kernel, delta,
                      float(above[0]) if above.size else np.nan, edge)


def quadratic_pencil(profile: PulseProfile, tol: Tolerances = DEFAULT) -> StarEvenPencil:
    g, c = profile.grid, profile.c
    return validate_pencil((a0_matrix(profile.u, c, g), -2.0 * c * g.D1,
                            np.eye(g.N)), tol)


def band_filter(c: float, margin: float = 0.98):
    rho, _ = essential_band(c)
    return lambda lam: abs(lam.imag) >= margin * rho


def zero_radius(pencil: StarEvenPencil) -> float:
    """Radius around 0 tagged as the translation eigenvalue.

    The kernel carries a Jordan chain, which the companion eigensolver splits
    into a pair of size ``sqrt(eps * ||P||)``.
    """
    return 10.0 * np.sqrt(np.finfo(float).eps * pencil.scale)


def quadratic_spectrum(profile: PulseProfile, tol: Tolerances = DEFAULT):
    pencil = quadratic_pencil(profile, tol)
    return polynomial_spectrum(pencil, tol, zero_radius=zero_radius(pencil),
                               exclude=band_filter(profile.c))


def bridge_tolerances(tol: Tolerances = DEFAULT) -> Tolerances:
    """Kernel cut at rounding level: ||A_0|| ~ h^-4 is large, so the default
    relative ``tol_zero`` would swallow exponentially small eigenvalues."""
    return tol.replace(tol_zero=min(tol.tol_zero, 1e3 * np.finfo(float).eps))


def bridge_index(profile: PulseProfile, tol: Tolerances = DEFAULT):
    """Index formula and census for the quadratic problem of ``profile``."""
    tb = bridge_tolerances(tol)
    pencil = quadratic_pencil(profile, tol)
    rep = hki_for(pencil, tb)
    spec = polynomial_spectrum(pencil, tol, zero_radius=zero_radius(pencil),
                               exclude=band_filter(profile.c))
    ok, detail = census_check(rep, spec)
    return rep, spec, ok, detail


@dataclass
class InteractionPair:
    nu: float
    lam: complex  # the root with positive real or imaginary part
    kind: str  # real | imaginary | kernel
    signature: Optional[str]

    def to_json(self):
        return {"nu": self.nu, "lam": [self.lam.real, self.lam.imag],
                "kind": self.kind, "signature": self.signature}


def interaction_prediction(norm_ux: float, d2: float, nus) -> list:
    """Leading-order interaction eigenvalues ``+-||U'|| sqrt(nu / d2)``."""
    if not d2 > 0:
        raise NegativeD2(f"d''(c) = {d2} is not positive")
    out = []
    for nu in nus:
        nu = float(nu)
        mag = norm_ux * np.sqrt(abs(nu) / d2)
        if nu == 0.0:
            out.append(InteractionPair(0.0, 0j, "kernel", None))
        elif nu < 0:
            out.append(InteractionPair(nu, complex(0.0, mag), "imaginary", "negative"))
        else:
            out.append(InteractionPair(nu, complex(mag, 0.0), "real", None))
    return out


@dataclass
class KreinDiagonalReport:
    x_min: float
    nus: np.ndarray
    z: np.ndarray
    coefficients: np.ndarray  # C0..C3, scaled to ||s||^2 = ||U'||^2
    z_star: float
    offdiag_ratio: float
    k1_norm: float
    d2_fit: float
    d2_family: float
    norm_ux2: float
    k2_formula: float
    K2_exact: np.ndarray

    @property
    def d2_rel_err(self) -> float:
        return abs(self.d2_fit - self.d2_family) / abs(self.d2_family)

    def model(self, z):
        return sum(c * z ** j for j, c in enumerate(self.coefficients))

    def to_json(self) -> dict:
        return {
            "x_min": self.x_min, "nus": [float(v) for v in self.nus],
            "z_star": self.z_star, "offdiag_ratio": self.offdiag_ratio,
            "k1_norm": self.k1_norm, "d2_fit": self.d2_fit,
            "d2_family": self.d2_family, "d2_rel_err": self.d2_rel_err,
            "norm_ux2": self.norm_ux2, "k2_formula": self.k2_formula,
            "C0": np.real(self.coefficients[0]).tolist(),
            "C1": np.real(self.coefficients[1]).tolist(),
            "C2": np.real(self.coefficients[2]).tolist(),
        }


def small_subspace(profile: PulseProfile, spec: Optional[A0Spectrum] = None) -> Subspace:
    spec = a0_spectrum(profile) if spec is None else spec
    return make_subspace(spec.vectors[:, spec.small], "small eigenvalues of A_0",
                         spec.values[spec.small])


def verify_krein_diagonal(profile: PulseProfile, primary: PulseProfile, d2_family: float,
                          z0: float = 0.02, levels: int = 5,
                          tol: Tolerances = DEFAULT) -> KreinDiagonalReport:
    """Fit -K_S(z)/z = C0 + z C1 + z^2 C2 + z^3 C3 on z = +-z0 2^-k, with S
    spanned by the eigenvectors of the small eigenvalues of A_0.

    With eigenvectors normalized to ||s||^2 = ||U'||^2 the constant term is
    ||U'||^2 diag(nu) and the quadratic one should be d''(c) I.  By parity
    the even terms are exactly diagonal, so the off-diagonal ratio is taken
    from the fitted model at the interaction scale
    ``z* = ||U'|| sqrt(max|nu| / d'')``.
    """
    spec = a0_spectrum(profile)
    S = small_subspace(profile, spec)
    pencil = quadratic_pencil(profile, tol)
    zs = z0 * 2.0 ** -np.arange(levels)
    zs = np.concatenate([-zs[::-1], zs])
    n = S.size
    F = np.array([-krein_matrix_at(pencil, S, z, tol).matrix / z for z in zs])
    V = np.vander(zs, 4, increasing=True)
    coef = np.linalg.lstsq(V, F.reshape(len(zs), -1), rcond=None)[0].reshape(4, n, n)
    g = primary.grid
    nux2 = g.inner(primary.ux(), primary.ux())
    coef = coef * nux2
    nus = spec.values[spec.small]
    z_star = float(np.sqrt(nux2 * np.abs(nus).max() / abs(d2_family)))
    Fs = sum(c * z_star ** j for j, c in enumerate(coef))
    off = np.abs(Fs - np.diag(np.diag(Fs)))
    red = small_z_reduction(pencil, S, tol)
    uc = derivative_in_c(primary)
    return KreinDiagonalReport(
        x_min=float(profile.x_min), nus=nus, z=zs, coefficients=coef, z_star=z_star,
        offdiag_ratio=float(off.max() / np.abs(np.diag(Fs)).max()),
        k1_norm=float(np.abs(coef[1]).max()),
        d2_fit=float(np.real(np.mean(np.diag(coef[2])))),
        d2_family=float(d2_family), norm_ux2=nux2,
        k2_formula=-2.0 * primary.c * g.inner(g.D2 @ primary.u, uc),
        K2_exact=-red.K2 * nux2,
    )
