"""Hamiltonian-Krein index from coefficient data and from a spectral census."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import KernelMapViolation, NearZeroEigenvalue, SingularConstraint
from .pencil import SpectrumReport
from .tolerances import DEFAULT, Tolerances


@dataclass
class IndexReport:
    n_A0: int
    n_constraint: int
    K_Ham_formula: int
    n_A2: Optional[int] = None
    kernel_dim: int = 0
    census: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "n_A0": self.n_A0,
            "n_A2": self.n_A2,
            "n_constraint": self.n_constraint,
            "kernel_dim": self.kernel_dim,
            "K_Ham_formula": self.K_Ham_formula,
            "census": None if self.census is None else list(self.census),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def negative_index(H, tol_zero: Optional[float] = None,
                   tol: Tolerances = DEFAULT) -> int:
    """Number of eigenvalues of the Hermitian ``H`` below ``-tol_zero``.

    ``tol_zero`` defaults to ``tol.tol_zero * ||H||``.
    """
    H = np.atleast_2d(np.asarray(H))
    if H.size == 0:
        return 0
    w = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    if tol_zero is None:
        tol_zero = tol.tol_zero * max(np.abs(w).max(), 1e-300)
    if np.any(np.abs(w) < tol_zero):
        warnings.warn(f"{int(np.sum(np.abs(w) < tol_zero))} eigenvalue(s) inside "
                      f"the zero window {tol_zero:.1e}", NearZeroEigenvalue, stacklevel=2)
    return int(np.sum(w < -tol_zero))


def _split_kernel(A0, tol):
    w, v = np.linalg.eigh(0.5 * (A0 + A0.conj().T))
    cut = tol.tol_zero * max(np.abs(w).max(initial=0.0), 1e-300)
    ker = np.abs(w) <= cut
    return w, v, ker, cut


def _constraint(A0, A1, A2, tol):
    """n(A_0) and the constraint matrix on ker(A_0)."""
    w, v, ker, cut = _split_kernel(A0, tol)
    n_A0 = int(np.sum(w < -cut))
    K, Q, wq = v[:, ker], v[:, ~ker], w[~ker]
    if K.shape[1] == 0:
        return n_A0, np.zeros((0, 0)), 0
    a1 = np.linalg.norm(A1, 2)
    leak = np.linalg.norm(K.conj().T @ A1 @ K, 2) if K.size else 0.0
    if leak > np.sqrt(tol.tol_zero) * max(a1, 1e-300):
        raise KernelMapViolation(f"A_1 does not map ker(A_0) into its complement "
                                 f"(leak {leak:.2e})")
    Y = Q.conj().T @ A1 @ K
    # -A_1 A_0^{-1} A_1 restricted to the kernel, A_1 skew
    C = Y.conj().T @ (Y / wq[:, None])
    if A2 is not None:
        C = K.conj().T @ A2 @ K + C
    sv = np.linalg.svd(C, compute_uv=False)
    if sv.size and sv[-1] <= tol.tol_rank * max(sv[0], np.linalg.norm(A0, 2), 1.0):
        raise SingularConstraint("constraint matrix on ker(A_0) is singular")
    return n_A0, C, K.shape[1]


def hki_linear(A0, A1, tol: Tolerances = DEFAULT) -> IndexReport:
    n_A0, C, kdim = _constraint(np.asarray(A0), np.asarray(A1), None, tol)
    nc = negative_index(C, 0.0) if kdim else 0
    return IndexReport(n_A0, nc, n_A0 - nc, kernel_dim=kdim)


def hki_quadratic(A0, A1, A2, tol: Tolerances = DEFAULT) -> IndexReport:
    A2 = np.asarray(A2)
    n_A0, C, kdim = _constraint(np.asarray(A0), np.asarray(A1), A2, tol)
    n_A2 = negative_index(A2, tol=tol)
    nc = negative_index(C, 0.0) if kdim else 0
    return IndexReport(n_A0, nc, n_A0 + n_A2 - nc, n_A2=n_A2, kernel_dim=kdim)


def hki_for(pencil, tol: Tolerances = DEFAULT) -> IndexReport:
    a = pencil.coefficients
    if pencil.degree == 1:
        return hki_linear(a[0], a[1], tol)
    return hki_quadratic(a[0], a[1], a[2], tol)


def census_check(report: IndexReport, spectrum: SpectrumReport):
    """Compare the formula index with ``k_r + k_c + k_i^-``.

    Returns ``(ok, detail)``; ``detail`` lists unindexed (Jordan) eigenvalues.
    """
    census = (spectrum.k_r, spectrum.k_c, spectrum.k_i_minus,
              spectrum.K_Ham_from_census)
    report.census = census
    ok = report.K_Ham_formula == census[3] and not spectrum.unindexed
    detail = {
        "K_Ham_formula": report.K_Ham_formula,
        "k_r": census[0], "k_c": census[1], "k_i_minus": census[2],
        "unindexed": [complex(z) for z in spectrum.unindexed],
    }
    return ok, detail
