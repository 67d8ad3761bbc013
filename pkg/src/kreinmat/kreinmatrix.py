"""The Krein matrix of a star-even pencil and its eigenvalue branches.

For a subspace ``S`` with orthonormal basis ``s`` and complement basis ``q``
the (scaled) Krein matrix is

    K_S(z) = -z [ s^H P s - (q^H P s)^H (q^H P q)^{-1} (q^H P s) ],  P = P(iz).

Its eigenvalues ``r_j(z)`` vanish at purely imaginary eigenvalues ``iz`` and
the slope at a simple zero gives the Krein signature.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .errors import (ComplementSingular, EmptySubspace, ProjectedSingular,
                     SingularConstraint)
from .pencil import (StarEvenPencil, evaluate, evaluate_derivative,
                     finite_eigenvalues, pencil_eigenvalues)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Subspace:
    basis: np.ndarray
    origin: str = "user-supplied"
    source_eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    complement: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.basis.shape[1]

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]


def _complete(basis: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(basis, mode="complete")
    return q[:, basis.shape[1]:]


def make_subspace(basis, origin="user-supplied", source_eigenvalues=None):
    """Orthonormalize ``basis`` and attach a QR-completed complement."""
    basis = np.atleast_2d(np.asarray(basis, dtype=complex))
    if basis.shape[1] == 0:
        raise EmptySubspace("empty subspace")
    q, _ = np.linalg.qr(basis)
    # keep the given vectors when they are already orthonormal so that
    # spectral bases stay aligned with their eigenvalues
    if np.allclose(basis.conj().T @ basis, np.eye(basis.shape[1]), atol=1e-12):
        q = basis
    src = np.zeros(0) if source_eigenvalues is None else np.asarray(source_eigenvalues)
    return Subspace(q, origin, src, _complete(q))


def select_subspace(A0: np.ndarray, tol: Tolerances = DEFAULT) -> Subspace:
    """Negative space plus kernel of the Hermitian matrix ``A0``."""
    w, v = np.linalg.eigh(A0)
    cut = tol.tol_zero * max(np.abs(w).max(initial=0.0), 1e-300)
    sel = w < cut
    if not np.any(sel):
        raise EmptySubspace("A_0 is positive definite")
    return Subspace(v[:, sel].astype(complex), "negative-plus-kernel", w[sel],
                    v[:, ~sel].astype(complex))


def select_small_subspace(A0: np.ndarray, count: int) -> Subspace:
    """Eigenvectors of the ``count`` eigenvalues of ``A0`` nearest zero."""
    w, v = np.linalg.eigh(A0)
    order = np.argsort(np.abs(w))
    sel = np.sort(order[:count])
    rest = np.setdiff1d(np.arange(w.size), sel)
    return Subspace(v[:, sel].astype(complex), "small-eigs", w[sel],
                    v[:, rest].astype(complex))


@dataclass
class KreinEvaluation:
    z: float
    matrix: np.ndarray
    projected_invertible: bool
    cond_estimate: float


def _pieces(pencil, S, z):
    """Blocks of P(iz) in the (s, q) basis.

    The complement block C is scaled by congruence with D^{-1/2}, where
    D = sum_j |z|^j |diag(q^H A_j q)| bounds the diagonal without
    cancellation.  The Schur complement is unchanged, but the condition
    estimate no longer reflects the spread of scales along the diagonal
    (e.g. high Fourier modes), only the proximity of a pole.
    """
    P = evaluate(pencil, 1j * z)
    s, q = S.basis, S.complement
    Pss = s.conj().T @ P @ s
    if q.shape[1] == 0:
        return P, Pss, None, None, None, None, 1.0
    B = q.conj().T @ P @ s
    C = q.conj().T @ P @ q
    dsum = sum(abs(z) ** j * np.abs(np.einsum("ij,ij->j", q.conj(), a @ q))
               for j, a in enumerate(pencil.coefficients))
    d = np.sqrt(dsum)
    d[d == 0] = 1.0
    Cs = C / np.outer(d, d)
    w, V = np.linalg.eigh(0.5 * (Cs + Cs.conj().T))
    aw = np.abs(w)
    cond = float(aw.max() / aw.min()) if aw.min() > 0 else np.inf
    return P, Pss, B, d, w, V, cond


def _cinv(d, w, V, X):
    """C^{-1} X from the scaled decomposition."""
    return (V @ ((V.conj().T @ (X / d[:, None])) / w[:, None])) / d[:, None]


def krein_matrix_at(pencil: StarEvenPencil, S: Subspace, z: float,
                    tol: Tolerances = DEFAULT, strict: bool = False) -> KreinEvaluation:
    z = float(z)
    P, Pss, B, d, w, V, cond = _pieces(pencil, S, z)
    if B is None:
        return KreinEvaluation(z, -z * Pss, True, 1.0)
    ok = cond <= tol.cond_max
    if not ok and strict:
        raise ProjectedSingular(f"projected pencil singular near z={z} (cond {cond:.2e})")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        VB = V.conj().T @ (B / d[:, None])
        inner = VB.conj().T @ (VB / w[:, None])
        K = -z * (Pss - inner)
    return KreinEvaluation(z, K, bool(ok), cond)


def krein_matrix_unscaled_derivative(pencil, S, z, tol=DEFAULT):
    """Derivative of ``-K_S(z)/z`` with respect to real ``z``."""
    P, Pss, B, d, w, V, cond = _pieces(pencil, S, z)
    D = 1j * evaluate_derivative(pencil, 1j * z)  # d/dz P(iz), Hermitian
    s, q = S.basis, S.complement
    Dss = s.conj().T @ D @ s
    if B is None:
        return Dss
    if cond > tol.cond_max:
        raise ProjectedSingular(f"projected pencil singular near z={z} (cond {cond:.2e})")
    Dqs = q.conj().T @ D @ s
    Dqq = q.conj().T @ D @ q
    CinvB = _cinv(d, w, V, B)
    R = Dqs.conj().T @ CinvB
    return Dss - (R + R.conj().T - CinvB.conj().T @ Dqq @ CinvB)


def krein_matrix_derivative(pencil: StarEvenPencil, S: Subspace, z: float,
                            tol: Tolerances = DEFAULT) -> np.ndarray:
    """Derivative of the scaled Krein matrix ``K_S(z)``."""
    z = float(z)
    ev = krein_matrix_at(pencil, S, z, tol, strict=True)
    K0 = ev.matrix / (-z) if z != 0 else None
    dK0 = krein_matrix_unscaled_derivative(pencil, S, z, tol)
    if K0 is None:
        P = evaluate(pencil, 0.0)
        s, q = S.basis, S.complement
        K0 = s.conj().T @ P @ s
        if q.shape[1]:
            B = q.conj().T @ P @ s
            K0 = K0 - B.conj().T @ np.linalg.solve(q.conj().T @ P @ q, B)
    return -K0 - z * dK0


# ----------------------------------------------------------------------------
# branches, zeros, poles

@dataclass
class KreinZero:
    z: float
    branch: int
    slope: float
    signature: str  # positive | negative | degenerate
    residual: float

    def to_json(self):
        return {"z": repr(self.z), "branch": self.branch, "slope": repr(self.slope),
                "signature": self.signature, "residual": self.residual}


@dataclass
class KreinPole:
    z: float
    removable: bool

    def to_json(self):
        return {"z": repr(self.z), "removable": self.removable}


@dataclass
class KreinCurveSet:
    grid: np.ndarray
    values: np.ndarray            # (m, n_S) with nan at gaps
    vectors: np.ndarray           # (m, n_S, n_S), columns follow branches
    valid: np.ndarray
    discontinuities: list = field(default_factory=list)
    zeros: list = field(default_factory=list)
    poles: list = field(default_factory=list)

    @property
    def gaps(self):
        out, start = [], None
        for k, ok in enumerate(self.valid):
            if not ok and start is None:
                start = k
            if ok and start is not None:
                out.append((float(self.grid[start]), float(self.grid[k - 1])))
                start = None
        if start is not None:
            out.append((float(self.grid[start]), float(self.grid[-1])))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        nb = self.values.shape[1]
        w.writerow(["z"] + [f"r_{j + 1}" for j in range(nb)] + ["valid"])
        for z, row, ok in zip(self.grid, self.values, self.valid):
            w.writerow([repr(float(z))] + [repr(float(v)) for v in row] + [int(ok)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "zeros": [z.to_json() for z in self.zeros],
            "poles": [p.to_json() for p in self.poles],
            "gaps": self.gaps,
            "discontinuities": self.discontinuities,
        }


def _eig_sorted(K):
    w, v = np.linalg.eigh(0.5 * (K + K.conj().T))
    return w, v


def pole_parameters(pencil: StarEvenPencil, S: Subspace, z_range,
                    tol: Tolerances = DEFAULT) -> np.ndarray:
    """Real ``z`` in ``z_range`` where the projected pencil is singular."""
    if S.complement.shape[1] == 0:
        return np.zeros(0)
    lo, hi = z_range
    lams = finite_eigenvalues(projected_pencil(pencil, S))
    sel = [l.imag for l in lams
           if abs(l.real) <= tol.tol_pair * max(1.0, abs(l)) and lo <= l.imag <= hi]
    return np.sort(np.array(sel, dtype=float))


def trace_branches(pencil: StarEvenPencil, S: Subspace, grid: Sequence[float],
                   tol: Tolerances = DEFAULT, refine_poles: bool = True) -> KreinCurveSet:
    """Track Krein eigenvalues along ``grid``.

    With ``refine_poles`` the grid is augmented by points just left and right
    of every pole inside it, so that a zero sitting next to a pole within
    one grid cell still shows up as a sign change.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if refine_poles and grid.size > 1:
        poles = pole_parameters(pencil, S, (grid[0], grid[-1]), tol)
        d = 1e-7 * np.maximum(1.0, np.abs(poles))
        extra = np.concatenate([poles - d, poles + d])
        extra = extra[(extra > grid[0]) & (extra < grid[-1])]
        grid = np.unique(np.concatenate([grid, extra]))
    m, ns = grid.size, S.size
    values = np.full((m, ns), np.nan)
    vectors = np.full((m, ns, ns), np.nan, dtype=complex)
    valid = np.zeros(m, dtype=bool)
    disc = []
    prev = None
    for k, z in enumerate(grid):
        ev = krein_matrix_at(pencil, S, z, tol)
        if not ev.projected_invertible or not np.all(np.isfinite(ev.matrix)):
            continue
        w, v = _eig_sorted(ev.matrix)
        if prev is not None:
            overlap = np.abs(prev.conj().T @ v)
            rows, cols = linear_sum_assignment(-overlap)
            perm = cols[np.argsort(rows)]
            w, v = w[perm], v[:, perm]
            for j in range(ns):
                if overlap[j, perm[j]] < tol.overlap_min:
                    disc.append((float(z), j))
        values[k], vectors[k], valid[k] = w, v, True
        prev = v
    return KreinCurveSet(grid, values, vectors, valid, disc)


def _brackets(curves, pencil, S, tol):
    """Adjacent valid grid pairs; the pair around ``z = 0`` is split at ``+-eps``
    so that the trivial zero of the ``-z`` prefactor is never bracketed."""
    g, vals, vecs, ok = curves.grid, curves.values, curves.vectors, curves.valid
    out = []
    for k in range(g.size - 1):
        if not (ok[k] and ok[k + 1]):
            continue
        a, b = g[k], g[k + 1]
        if not (a <= 0.0 <= b):
            out.append((a, b, vals[k], vals[k + 1], vecs[k], vecs[k + 1]))
            continue
        eps = 1e-9 * max(1.0, b - a)
        pts = []
        for z in (-eps, eps):
            w, v = _eig_sorted(krein_matrix_at(pencil, S, z, tol).matrix)
            ref = vecs[k] if z < 0 else vecs[k + 1]
            perm = linear_sum_assignment(-np.abs(ref.conj().T @ v))[1]
            pts.append((w[perm], v[:, perm]))
        if a < -eps:
            out.append((a, -eps, vals[k], pts[0][0], vecs[k], pts[0][1]))
        if b > eps:
            out.append((eps, b, pts[1][0], vals[k + 1], pts[1][1], vecs[k + 1]))
    return out


def _neg_count(pencil, S, z, tol, strict=False):
    ev = krein_matrix_at(pencil, S, z, tol)
    K = ev.matrix
    if not np.all(np.isfinite(K)) or (strict and not ev.projected_invertible):
        return None, None, None  # on (or numerically at) a pole
    w, v = _eig_sorted(K)
    return int(np.sum(w < 0)), w, v


def _count_changes(pencil, S, a, b, na, nb, tol, depth=0):
    """Points in (a, b) where the number of negative Krein eigenvalues jumps.

    Between poles ``K_S`` is Hermitian and analytic, so the count changes
    exactly at zeros; this needs no branch labels and is immune to avoided
    crossings.
    """
    if na == nb:
        return []
    m = 0.5 * (a + b)
    if not a < m < b or b - a <= 4 * np.finfo(float).eps * max(abs(a), abs(b)) or depth > 200:
        return [m]
    nm = _neg_count(pencil, S, m, tol)[0]
    if nm is None:
        return [m]
    return (_count_changes(pencil, S, a, m, na, nm, tol, depth + 1)
            + _count_changes(pencil, S, m, b, nm, nb, tol, depth + 1))


def locate_zeros(curves: KreinCurveSet, pencil: StarEvenPencil, S: Subspace,
                 tol: Tolerances = DEFAULT) -> KreinCurveSet:
    """Refine zeros of the Krein eigenvalues and classify them by slope.

    Each valid grid bracket is searched for jumps in the number of negative
    Krein eigenvalues (bisection).  The pole-adjacent points inserted by
    ``trace_branches`` separate poles from zeros; a refined point whose
    smallest Krein eigenvalue is not small relative to ``||K_S||`` is a pole
    crossing and is discarded.  The trivial zero at ``z = 0`` is never
    reported.
    """
    zeros = []
    g = curves.grid
    poles = pole_parameters(pencil, S, (g[0] - 1.0, g[-1] + 1.0), tol) if g.size else np.zeros(0)
    for a, b, ra_all, rb_all, va, vb in _brackets(curves, pencil, S, tol):
        na, nb = int(np.sum(ra_all < 0)), int(np.sum(rb_all < 0))
        cands = _count_changes(pencil, S, a, b, na, nb, tol)
        # exact zero on the right end point of the bracket
        if np.any(rb_all == 0.0):
            cands.append(b)
        for zs in cands:
            # a branch passing through infinity also flips the count
            if poles.size and np.min(np.abs(poles - zs)) <= 2e-7 * max(1.0, abs(zs)):
                continue
            n0, w, v = _neg_count(pencil, S, zs, tol, strict=True)
            if n0 is None:
                continue
            k = int(np.argmin(np.abs(w)))
            r, knorm = w[k], float(np.abs(w).max())
            if abs(r) > tol.tol_zero_r * max(1.0, knorm):
                continue
            try:
                dK = krein_matrix_derivative(pencil, S, zs, tol)
            except ProjectedSingular:
                continue
            slope = float((v[:, k].conj() @ dK @ v[:, k]).real)
            if abs(slope) < tol.tol_slope:
                sig = "degenerate"
            else:
                sig = "positive" if slope > 0 else "negative"
            j = int(np.argmax(np.abs(va.conj().T @ v[:, k])))
            zeros.append(KreinZero(float(zs), j, slope, sig, float(abs(r))))
    if curves.valid[0] and curves.grid[0] != 0.0:
        for j in np.flatnonzero(curves.values[0] == 0.0):
            zeros.append(_grid_zero(pencil, S, curves.grid[0], int(j), tol))
    zeros.sort(key=lambda t: t.z)
    curves.zeros = zeros
    return curves


def _grid_zero(pencil, S, z, j, tol):
    w, v = _eig_sorted(krein_matrix_at(pencil, S, z, tol).matrix)
    k = int(np.argmin(np.abs(w)))
    dK = krein_matrix_derivative(pencil, S, z, tol)
    slope = float((v[:, k].conj() @ dK @ v[:, k]).real)
    sig = "degenerate" if abs(slope) < tol.tol_slope else ("positive" if slope > 0 else "negative")
    return KreinZero(float(z), j, slope, sig, 0.0)


def projected_pencil(pencil: StarEvenPencil, S: Subspace) -> StarEvenPencil:
    return pencil.transformed(S.complement)


def locate_poles(pencil: StarEvenPencil, S: Subspace, z_range,
                 tol: Tolerances = DEFAULT) -> list:
    """Real poles of the Krein matrix in ``z_range`` with removability flag."""
    if S.complement.shape[1] == 0:
        return []
    lo, hi = z_range
    lams = finite_eigenvalues(projected_pencil(pencil, S))
    imag = [l.imag for l in lams
            if abs(l.real) <= tol.tol_pair * max(1.0, abs(l)) and lo <= l.imag <= hi]
    imag = np.sort(np.array(imag))
    allfeat = np.sort(np.concatenate([imag, pencil_eigenvalues(pencil).imag]))
    poles = []
    for zp in imag:
        if abs(zp) < tol.tol_pair:
            continue
        others = np.abs(allfeat - zp)
        others = others[others > 1e-9 * max(1.0, abs(zp))]
        gap = others.min() if others.size else 1.0
        delta = min(1e-3 * max(1.0, abs(zp)), 0.05 * gap)
        poles.append(KreinPole(float(zp), _removable(pencil, S, zp, delta, tol)))
    return poles


def _removable(pencil, S, zp, delta, tol):
    """Ratio test: a genuine pole makes ``|det K|`` grow as ``z -> zp``."""
    mags = []
    for d in (delta, delta / 10, delta / 100):
        vals = []
        for z in (zp - d, zp + d):
            ev = krein_matrix_at(pencil, S, z, tol.replace(cond_max=np.inf))
            vals.append(abs(np.linalg.det(ev.matrix)))
        mags.append(max(vals))
    ratios = [mags[i + 1] / max(mags[i], 1e-300) for i in range(2)]
    return not all(r > np.sqrt(10.0) for r in ratios)


# ----------------------------------------------------------------------------
# small-z reduction

@dataclass
class SmallZReduction:
    M0: np.ndarray
    K1: np.ndarray
    K2: np.ndarray

    def model(self, z):
        """Model of ``-K_S(z)/z`` for real ``z``."""
        return self.M0 + z * self.K1 - z ** 2 * self.K2


def small_z_reduction(pencil: StarEvenPencil, S: Subspace,
                      tol: Tolerances = DEFAULT) -> SmallZReduction:
    A = pencil.coefficients
    s, q = S.basis, S.complement
    M0 = s.conj().T @ A[0] @ s
    K1 = s.conj().T @ (1j * A[1]) @ s
    C = q.conj().T @ A[0] @ q
    w, V = np.linalg.eigh(0.5 * (C + C.conj().T))
    if w.size and np.abs(w).min() < tol.tol_zero * max(np.abs(w).max(), 1.0):
        raise ComplementSingular("A_0 restricted to the complement is singular")
    Y = q.conj().T @ A[1] @ s
    inner = V.conj().T @ Y
    # A_1 skew: -(A_1 P A_1)|_S = (q^H A_1 s)^H C^{-1} (q^H A_1 s)
    K2 = inner.conj().T @ (inner / w[:, None])
    if pencil.degree == 2:
        K2 = s.conj().T @ A[2] @ s + K2
    return SmallZReduction(M0, K1, K2)


def interaction_eigenvalues(M0: np.ndarray, K2: np.ndarray,
                            tol: Tolerances = DEFAULT) -> np.ndarray:
    """Solve ``M0 v = alpha K2 v`` and return ``lam = +-i sqrt(alpha)``."""
    M0 = np.atleast_2d(M0)
    K2 = np.atleast_2d(K2)
    sv = np.linalg.svd(K2, compute_uv=False)
    if sv[-1] <= tol.tol_rank * max(sv[0], 1.0):
        raise SingularConstraint("K2 is singular")
    alpha = sla.eigvals(M0, K2)
    root = np.sqrt(alpha.astype(complex))
    lam = np.concatenate([1j * root, -1j * root])
    return lam[np.lexsort((lam.imag, lam.real))]


def curves_json(curves: KreinCurveSet) -> str:
    return json.dumps(curves.to_json(), indent=1, sort_keys=True)
