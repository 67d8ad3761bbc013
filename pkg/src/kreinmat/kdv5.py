"""Small periodic waves of a fifth-order KdV equation and their Bloch spectra.

In the scaled travelling frame ``y = ell * z`` the steady problem is

    (2/15) ell^4 u'''' - b ell^2 u'' - c0 u + (3/2) u^2
        + (ell^2/2) (u')^2 + ell^2 u u'' = 0,

solved for a 2pi-periodic even ``u`` by Fourier-Galerkin Newton iteration.
The Bloch problem at wavenumber ``mu`` is written as the linear star-even
pencil ``A_0 + lam A_1`` with ``A_1 = diag(1 / (i (n + mu)))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NewtonDivergence, ResonanceDetected
from .hki import negative_index
from .kreinmatrix import (KreinCurveSet, locate_poles, locate_zeros,
                          select_subspace, trace_branches)
from .pencil import StarEvenPencil, pencil_eigenvalues
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Kdv5Params:
    b: float = -8.0 / 15.0
    ell: float = 1.0
    M: int = 32

    @property
    def c0(self) -> float:
        return 2.0 / 15.0 * self.ell ** 4 + self.b * self.ell ** 2

    def check_resonance(self, tol: float = 1e-8):
        for k in range(0, self.M + 1):
            if k == 1:
                continue
            if abs(dispersion(k, 0.0, self)) < tol:
                raise ResonanceDetected(f"d({k}, 0) vanishes for b={self.b}")


def symbol(kappa, params: Kdv5Params, ell: Optional[float] = None):
    """Symbol of the linear part minus c0 at (real) wavenumber ``kappa``."""
    ell = params.ell if ell is None else ell
    kappa = np.asarray(kappa, dtype=float)
    return (2.0 / 15.0) * (ell * kappa) ** 4 + params.b * (ell * kappa) ** 2 - params.c0


def dispersion(n, mu, params: Kdv5Params = Kdv5Params()):
    return symbol(np.asarray(n) + np.asarray(mu), params)


def dispersion_curves(mu_grid, n_range, params: Kdv5Params = Kdv5Params()):
    """Rows ``(mu, n, z_n(mu), d(n, mu), signature)``.

    Negative signature marks curves where ``d < 0`` (zeros of a Krein
    eigenvalue); the others carry poles.
    """
    rows = []
    for n in n_range:
        for mu in mu_grid:
            d = float(dispersion(n, mu, params))
            z = -(n + mu) * d
            rows.append((float(mu), int(n), z, d, "negative" if d < 0 else "positive"))
    return rows


@dataclass(frozen=True)
class Collision:
    mu: float
    n_neg: int
    n_pos: int
    z: float


def predict_collisions(params: Kdv5Params = Kdv5Params(), n_range=range(-4, 5),
                       mu_range=(1e-3, 0.5), npts=2001) -> list:
    """Crossings of a negative-signature curve with a positive-signature one."""
    mus = np.linspace(mu_range[0], mu_range[1], npts)
    z = {n: -(n + mus) * dispersion(n, mus, params) for n in n_range}
    out = []
    ns = list(n_range)
    for i, a in enumerate(ns):
        for b in ns[i + 1:]:
            diff = z[a] - z[b]
            f = lambda m: float(-(a + m) * dispersion(a, m, params)
                                + (b + m) * dispersion(b, m, params))
            for k in np.flatnonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) <= 0):
                if diff[k] == 0.0 and k > 0:
                    continue
                lo, hi = mus[k], mus[k + 1]
                ms = lo if diff[k] == 0.0 else brentq(f, lo, hi, xtol=1e-14, rtol=1e-15)
                da, db = float(dispersion(a, ms, params)), float(dispersion(b, ms, params))
                if da * db >= 0:
                    continue
                neg, pos = (a, b) if da < 0 else (b, a)
                out.append(Collision(float(ms), neg, pos, float(-(a + ms) * da)))
    out.sort(key=lambda c: c.mu)
    return out


# ----------------------------------------------------------------------------
# periodic wave

@dataclass
class PeriodicWave:
    fourier_coeffs: np.ndarray  # U_k, k = -M..M
    epsilon: float
    ell: float
    residual_norm: float
    params: Kdv5Params = field(default_factory=Kdv5Params)

    @property
    def M(self) -> int:
        return (self.fourier_coeffs.size - 1) // 2

    def coefficient(self, k: int) -> complex:
        return self.fourier_coeffs[k + self.M] if abs(k) <= self.M else 0.0

    def profile(self, y):
        k = np.arange(-self.M, self.M + 1)
        return np.real(np.exp(1j * np.outer(y, k)) @ self.fourier_coeffs)

    def to_json(self) -> dict:
        return {
            "b": self.params.b, "M": self.M, "epsilon": float(self.epsilon),
            "ell": repr(float(self.ell)), "residual_norm": float(self.residual_norm),
            "coefficients": [repr(float(c.real)) for c in self.fourier_coeffs],
        }

    @classmethod
    def from_json(cls, doc) -> "PeriodicWave":
        if isinstance(doc, str):
            doc = json.loads(doc)
        coeffs = np.array([float(c) for c in doc["coefficients"]], dtype=complex)
        params = Kdv5Params(b=doc["b"], M=int(doc["M"]))
        return cls(coeffs, doc["epsilon"], float(doc["ell"]), doc["residual_norm"], params)


def _real_space(cos_coeffs, nq):
    """u, u_y, u_yy on ``nq`` points from cosine-mode amplitudes U_0..U_M."""
    M = cos_coeffs.size - 1
    spec = np.zeros(nq, dtype=complex)
    spec[:M + 1] = cos_coeffs
    spec[nq - M:] = cos_coeffs[1:][::-1]
    k = np.fft.fftfreq(nq, 1.0 / nq)
    u = np.fft.ifft(spec).real * nq
    uy = np.fft.ifft(1j * k * spec).real * nq
    uyy = np.fft.ifft(-k ** 2 * spec).real * nq
    return u, uy, uyy


def _project(f, M):
    return (np.fft.fft(f) / f.size)[:M + 1].real


def _residual(cos_coeffs, ell, params):
    M = cos_coeffs.size - 1
    nq = 4 * (M + 1)
    u, uy, uyy = _real_space(cos_coeffs, nq)
    f = 1.5 * u ** 2 + ell ** 2 * (0.5 * uy ** 2 + u * uyy)
    lin = symbol(np.arange(M + 1), params, ell) * cos_coeffs
    return lin + _project(f, M)


def _residual_dell(cos_coeffs, ell, params):
    M = cos_coeffs.size - 1
    nq = 4 * (M + 1)
    u, uy, uyy = _real_space(cos_coeffs, nq)
    k = np.arange(M + 1)
    # c0 is tied to ell0 and is held fixed
    dlin = ((8.0 / 15.0) * ell ** 3 * k ** 4 + 2 * params.b * ell * k ** 2) * cos_coeffs
    return dlin + _project(2 * ell * (0.5 * uy ** 2 + u * uyy), M)


def _a0_matrix(coeffs_full, mu, ell, params, M):
    """Galerkin matrix of L_mu - c0 + f'(U) on modes -M..M."""
    n = np.arange(-M, M + 1)
    Mw = (coeffs_full.size - 1) // 2
    kk = n[:, None] - n[None, :]
    Uk = np.zeros(kk.shape, dtype=complex)
    inside = np.abs(kk) <= Mw
    Uk[inside] = coeffs_full[kk[inside] + Mw]
    km = (n + mu)[None, :]
    A0 = Uk * (3.0 - ell ** 2 * (kk * km + kk ** 2 + km ** 2))
    A0[np.diag_indices_from(A0)] += symbol(n + mu, params, ell)
    return A0


def _full_from_cos(cos_coeffs):
    return np.concatenate([cos_coeffs[1:][::-1], cos_coeffs]).astype(complex)


def solve_periodic_wave(params: Kdv5Params = Kdv5Params(), amplitude_target: float = 0.0,
                        M: Optional[int] = None, tol: Optional[float] = None,
                        maxiter: int = 50, guess: Optional[PeriodicWave] = None) -> PeriodicWave:
    """Even 2pi-periodic wave with cos(y) amplitude ``amplitude_target``.

    Unknowns are the cosine coefficients other than the first one, plus
    ``ell``; ``c`` stays at ``c0``.  Large amplitudes are reached by natural
    continuation from smaller ones when a direct solve fails.
    """
    params.check_resonance()
    M = params.M if M is None else M
    tol = DEFAULT.tol_newton if tol is None else tol
    A = float(amplitude_target)
    if A == 0.0:
        return PeriodicWave(np.zeros(2 * M + 1, dtype=complex), 0.0, params.ell, 0.0, params)
    try:
        return _newton_wave(params, A, M, tol, maxiter, guess)
    except NewtonDivergence:
        if guess is not None:
            raise
    wave = None
    for a in np.linspace(0, A, 9)[1:]:
        wave = _newton_wave(params, a, M, tol, maxiter, wave)
    return wave


def _newton_wave(params, A, M, tol, maxiter, guess):
    c = np.zeros(M + 1)
    ell = params.ell
    if guess is not None:
        g = guess.fourier_coeffs.real
        Mg = guess.M
        m = min(M, Mg)
        c[:m + 1] = g[Mg:Mg + m + 1]
        ell = guess.ell
    c[1] = A / 2.0
    free = np.r_[0, np.arange(2, M + 1)]
    res = _residual(c, ell, params)
    for it in range(maxiter):
        nr = np.abs(res).max()
        if nr <= tol:
            return PeriodicWave(_full_from_cos(c), A, ell, float(nr), params)
        A0 = _a0_matrix(_full_from_cos(c), 0.0, ell, params, M).real
        # fold the +-m columns onto the cosine unknowns
        Jc = A0[M:, M:].copy()
        Jc[:, 1:] += A0[M:, M - 1::-1]
        J = np.column_stack([Jc[:, free], _residual_dell(c, ell, params)])
        step = np.linalg.solve(J, -res)
        c[free] += step[:-1]
        ell += step[-1]
        res = _residual(c, ell, params)
        if not np.all(np.isfinite(res)) or np.abs(res).max() > 1e6:
            break
    nr = float(np.abs(res).max())
    if nr <= tol:
        return PeriodicWave(_full_from_cos(c), A, ell, nr, params)
    raise NewtonDivergence(f"wave Newton did not converge (residual {nr:.2e})", nr)


# ----------------------------------------------------------------------------
# Bloch pencil

@dataclass(frozen=True)
class BlochPencil(StarEvenPencil):
    mu: float = 0.0

    @property
    def A0(self):
        return self.coefficients[0]

    @property
    def A1(self):
        return self.coefficients[1]

    @property
    def modes(self):
        M = (self.dimension - 1) // 2
        return np.arange(-M, M + 1)


def bloch_pencil(wave: PeriodicWave, mu: float, M: Optional[int] = None) -> BlochPencil:
    if not 0.0 < mu <= 0.5:
        raise ValueError("mu must lie in (0, 1/2]")
    M = wave.params.M if M is None else M
    A0 = _a0_matrix(wave.fourier_coeffs, mu, wave.ell, wave.params, M)
    A0 = 0.5 * (A0 + A0.conj().T)
    A1 = np.diag(1.0 / (1j * (np.arange(-M, M + 1) + mu)))
    A0.setflags(write=False)
    A1.setflags(write=False)
    return BlochPencil((A0, A1), mu=float(mu))


def bloch_index(wave: PeriodicWave, mu: float, M: Optional[int] = None) -> int:
    """n(A_0(mu)) with the zero window at rounding level.

    ||A_0|| grows like M^4, so the default relative window would hide the
    O(mu - mu_ch) eigenvalue that changes sign at an index transition.
    """
    A0 = bloch_pencil(wave, mu, M).A0
    scale = np.linalg.norm(A0, 2)
    return negative_index(A0, tol_zero=1e3 * np.finfo(float).eps * scale)


@dataclass
class Bubble:
    mu_lo: float
    mu_hi: float
    max_real: float
    mu_peak: float
    imag_at_peak: float

    @property
    def center(self):
        return 0.5 * (self.mu_lo + self.mu_hi)

    @property
    def width(self):
        return self.mu_hi - self.mu_lo


@dataclass
class ScanResult:
    mu: np.ndarray
    max_real: np.ndarray
    imag_of_max: np.ndarray
    bubbles: list
    spectra: Optional[list] = None

    def to_csv(self) -> str:
        lines = ["mu,max_re_lambda,im_lambda_at_max"]
        for m, r, i in zip(self.mu, self.max_real, self.imag_of_max):
            lines.append(f"{m!r},{r!r},{i!r}")
        return "\n".join(lines) + "\n"


def _max_real(wave, mu, M):
    lam = pencil_eigenvalues(bloch_pencil(wave, mu, M))
    j = int(np.argmax(np.abs(lam.real)))
    return abs(lam[j].real), lam[j].imag, lam


def _edge(wave, stable, unstable, M, tol_unstable, xtol):
    while abs(unstable - stable) > xtol:
        m = 0.5 * (stable + unstable)
        if _max_real(wave, m, M)[0] > tol_unstable:
            unstable = m
        else:
            stable = m
    return unstable


def bloch_scan(wave: PeriodicWave, mu_grid: Sequence[float], M: Optional[int] = None,
               tol_unstable: float = 1e-6, keep_spectra: bool = False,
               refine_edges: float = 0.0) -> ScanResult:
    """max |Re lam| over the Bloch spectrum for each ``mu`` plus bubble intervals.

    A bubble is a maximal run of consecutive grid values with
    ``max |Re lam| > tol_unstable``; its interval is the span of those
    grid values, or with ``refine_edges > 0`` the edges bisected between the
    last stable and first unstable grid value down to that width.
    """
    mu_grid = np.sort(np.asarray(mu_grid, dtype=float))
    mr = np.zeros(mu_grid.size)
    im = np.zeros(mu_grid.size)
    spectra = [] if keep_spectra else None
    for k, mu in enumerate(mu_grid):
        mr[k], im[k], lam = _max_real(wave, mu, M)
        if keep_spectra:
            spectra.append(lam)
    bubbles = []
    unstable = mr > tol_unstable
    k = 0
    while k < mu_grid.size:
        if unstable[k]:
            j = k
            while j + 1 < mu_grid.size and unstable[j + 1]:
                j += 1
            p = k + int(np.argmax(mr[k:j + 1]))
            lo, hi = mu_grid[k], mu_grid[j]
            if refine_edges > 0:
                if k > 0:
                    lo = _edge(wave, mu_grid[k - 1], lo, M, tol_unstable, refine_edges)
                if j + 1 < mu_grid.size:
                    hi = _edge(wave, mu_grid[j + 1], hi, M, tol_unstable, refine_edges)
            bubbles.append(Bubble(float(lo), float(hi), mr[p], mu_grid[p], im[p]))
            k = j + 1
        else:
            k += 1
    return ScanResult(mu_grid, mr, im, bubbles, spectra)


def default_scan_grid(params: Kdv5Params = Kdv5Params(), npts: int = 400,
                      window: float = 1.5e-2, mu_min: float = 1e-3):
    """Coarse grid on [mu_min, 1/2] plus dense windows around predicted collisions."""
    cols = predict_collisions(params)
    ncoarse = npts - 100 * len(cols)
    parts = [np.linspace(mu_min, 0.5, ncoarse)]
    for c in cols:
        parts.append(np.linspace(max(mu_min, c.mu - window), min(0.5, c.mu + window), 100))
    return np.unique(np.concatenate(parts))


def kdv5_krein_curves(wave: PeriodicWave, mu: float, z_grid, M: Optional[int] = None,
                      tol: Tolerances = DEFAULT) -> KreinCurveSet:
    pencil = bloch_pencil(wave, mu, M)
    S = select_subspace(pencil.A0, tol)
    curves = trace_branches(pencil, S, z_grid, tol)
    locate_zeros(curves, pencil, S, tol)
    curves.poles = locate_poles(pencil, S, (float(z_grid[0]), float(z_grid[-1])), tol)
    return curves
