"""Star-even matrix pencils and their polynomial eigenvalue problem.

A pencil of degree ``n`` is ``P(lam) = sum_j lam**j A_j`` where the even
coefficients are Hermitian and the odd ones skew-Hermitian.  Its spectrum is
symmetric under ``lam -> -conj(lam)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .errors import (LinearizationFailure, NotImaginary, NotSemiSimple,
                     SingularLeadingCoefficient, SymmetryViolation)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class StarEvenPencil:
    coefficients: tuple

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def dimension(self) -> int:
        return self.coefficients[0].shape[0]

    @cached_property
    def norms(self) -> tuple:
        """Spectral norms of the coefficients."""
        return tuple(float(np.linalg.norm(a, 2)) for a in self.coefficients)

    @property
    def scale(self) -> float:
        return max(self.norms)

    def __call__(self, lam):
        return evaluate(self, lam)

    def derivative(self, lam):
        return evaluate_derivative(self, lam)

    def transformed(self, basis: np.ndarray) -> "StarEvenPencil":
        """Pencil with coefficients ``basis^H A_j basis`` (no validation)."""
        return StarEvenPencil(tuple(basis.conj().T @ a @ basis
                                    for a in self.coefficients))

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "dimension": self.dimension,
            "coefficients": [[[float(v.real), float(v.imag)]
                              for v in np.ravel(a)] for a in self.coefficients],
        }

    @classmethod
    def from_json(cls, doc, tol: Tolerances = DEFAULT) -> "StarEvenPencil":
        if isinstance(doc, str):
            doc = json.loads(doc)
        n = int(doc["dimension"])
        mats = []
        for flat in doc["coefficients"]:
            arr = np.asarray(flat, dtype=float)
            mats.append((arr[:, 0] + 1j * arr[:, 1]).reshape(n, n))
        if len(mats) != int(doc["degree"]) + 1:
            raise ValueError("degree does not match number of coefficients")
        return validate_pencil(mats, tol)


def validate_pencil(coeffs: Sequence, tol: Tolerances = DEFAULT) -> StarEvenPencil:
    """Check the star-even structure and return an immutable pencil.

    Raises
    ------
    SymmetryViolation
        Some coefficient breaks the Hermitian/skew-Hermitian pattern; the
        exception carries the entrywise max deviation of every failing term.
    SingularLeadingCoefficient
        The leading coefficient is numerically singular.
    """
    mats = [np.array(a, dtype=complex) for a in coeffs]
    if not 2 <= len(mats) <= 3:
        raise ValueError("only degree 1 and 2 pencils are supported")
    n = mats[0].shape[0]
    for a in mats:
        if a.ndim != 2 or a.shape != (n, n):
            raise ValueError("coefficients must be square and of equal size")
    scale = max(1.0, max(np.abs(a).max(initial=0.0) for a in mats))
    bad = {}
    for j, a in enumerate(mats):
        sign = 1 if j % 2 == 0 else -1
        dev = float(np.abs(a - sign * a.conj().T).max(initial=0.0))
        if dev > tol.tol_sym * scale:
            bad[j] = dev
    if bad:
        parts = ", ".join(f"A_{j}: {d:.3e}" for j, d in bad.items())
        raise SymmetryViolation(f"star-even structure violated ({parts})", bad)
    for j, a in enumerate(mats):
        sign = 1 if j % 2 == 0 else -1
        mats[j] = 0.5 * (a + sign * a.conj().T)
        mats[j].setflags(write=False)
    sv = np.linalg.svd(mats[-1], compute_uv=False)
    if sv[-1] <= tol.tol_rank * max(sv[0], 1.0):
        raise SingularLeadingCoefficient(
            f"sigma_min(A_{len(mats) - 1}) = {sv[-1]:.3e}")
    return StarEvenPencil(tuple(mats))


def evaluate(pencil: StarEvenPencil, lam) -> np.ndarray:
    out = np.zeros_like(pencil.coefficients[0], dtype=complex)
    for a in reversed(pencil.coefficients):
        out = out * lam + a
    return out


def evaluate_derivative(pencil: StarEvenPencil, lam) -> np.ndarray:
    out = np.zeros_like(pencil.coefficients[0], dtype=complex)
    for j in range(pencil.degree, 0, -1):
        out = out * lam + j * pencil.coefficients[j]
    return out


# ----------------------------------------------------------------------------
# spectrum

@dataclass
class PolyEigenvalue:
    lam: complex
    eigenvectors: np.ndarray  # N x g, orthonormal columns
    algebraic_multiplicity: int = 1
    geometric_multiplicity: int = 1
    krein_index: Optional[int] = None
    residual: float = 0.0
    tag: str = "point"  # point | zero | essential-band

    @property
    def semisimple(self) -> bool:
        return self.geometric_multiplicity == self.algebraic_multiplicity

    @property
    def is_imaginary(self) -> bool:
        return self.lam.real == 0.0 and self.lam.imag != 0.0

    def to_json(self) -> dict:
        return {
            "lambda": [repr(float(self.lam.real)), repr(float(self.lam.imag))],
            "algebraic_multiplicity": self.algebraic_multiplicity,
            "geometric_multiplicity": self.geometric_multiplicity,
            "krein_index": self.krein_index,
            "residual": float(self.residual),
            "tag": self.tag,
        }


@dataclass
class SpectrumReport:
    eigenvalues: list
    k_r: int = 0
    k_c: int = 0
    k_i_minus: int = 0
    unindexed: list = field(default_factory=list)

    @property
    def K_Ham_from_census(self) -> int:
        return self.k_r + self.k_c + self.k_i_minus

    @property
    def values(self) -> np.ndarray:
        """All eigenvalues repeated by algebraic multiplicity."""
        out = []
        for e in self.eigenvalues:
            out.extend([e.lam] * e.algebraic_multiplicity)
        return np.array(out, dtype=complex)

    def point_spectrum(self):
        return [e for e in self.eigenvalues if e.tag == "point"]

    def to_json(self) -> dict:
        return {
            "eigenvalues": [e.to_json() for e in self.eigenvalues],
            "k_r": self.k_r,
            "k_c": self.k_c,
            "k_i_minus": self.k_i_minus,
            "K_Ham_from_census": self.K_Ham_from_census,
            "unindexed": [[repr(float(z.real)), repr(float(z.imag))]
                          for z in self.unindexed],
        }


def _companion(pencil: StarEvenPencil) -> np.ndarray:
    a = pencil.coefficients
    n = pencil.dimension
    lead = sla.lu_factor(a[-1])
    if pencil.degree == 1:
        return -sla.lu_solve(lead, a[0])
    top = np.hstack([np.zeros((n, n)), np.eye(n)])
    bottom = -np.hstack([sla.lu_solve(lead, a[0]), sla.lu_solve(lead, a[1])])
    comp = np.vstack([top, bottom])
    if all(np.isrealobj(x) or not np.any(x.imag) for x in a):
        comp = comp.real
    return comp


def pencil_eigenvalues(pencil: StarEvenPencil) -> np.ndarray:
    """Eigenvalues only (no vectors, no bookkeeping)."""
    try:
        return sla.eigvals(_companion(pencil))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise LinearizationFailure(str(exc)) from exc


def finite_eigenvalues(pencil: StarEvenPencil) -> np.ndarray:
    """Finite eigenvalues of a pencil whose leading term may be singular.

    Uses the generalized (QZ) form of the companion linearization, so it
    also applies to unvalidated projected pencils.
    """
    a = pencil.coefficients
    n = pencil.dimension
    if pencil.degree == 1:
        A, B = a[0], -a[1]
    else:
        I, Z = np.eye(n), np.zeros((n, n))
        A = np.block([[Z, I], [-a[0], -a[1]]])
        B = np.block([[I, Z], [Z, a[2]]])
    try:
        w = sla.eigvals(A, B, homogeneous_eigvals=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise LinearizationFailure(str(exc)) from exc
    alpha, beta = w
    scale = np.abs(alpha) + np.abs(beta)
    ok = np.abs(beta) > 1e-12 * scale
    return alpha[ok] / beta[ok]


def relative_residual(pencil: StarEvenPencil, lam, v) -> float:
    denom = sum(abs(lam) ** j * a for j, a in enumerate(pencil.norms))
    return float(np.linalg.norm(evaluate(pencil, lam) @ v) / denom)


def _clusters(lams: np.ndarray, rel: float) -> np.ndarray:
    """Single-linkage groups under ``|a - b| <= rel * max(1, |a|, |b|)``."""
    if lams.size < 2:
        return np.zeros(lams.size, dtype=int)
    mag = np.maximum(1.0, np.abs(lams))
    D = np.abs(lams[:, None] - lams[None, :]) / np.maximum(mag[:, None], mag[None, :])
    np.fill_diagonal(D, 0.0)
    return fcluster(linkage(squareform(D, checks=False), method="single"), rel,
                    criterion="distance") - 1


def krein_index_of(pencil: StarEvenPencil, eig: PolyEigenvalue,
                   tol: Tolerances = DEFAULT) -> int:
    """Negative Krein index of a semi-simple purely imaginary eigenvalue.

    Counts negative eigenvalues of ``-lam0 * E^H [i P'(i lam0)] E`` where
    ``E`` spans the eigenspace and ``lam = i lam0``.
    """
    lam = complex(eig.lam)
    if abs(lam.real) > tol.tol_pair * max(1.0, abs(lam)) or lam.imag == 0:
        raise NotImaginary(f"eigenvalue {lam} is not purely imaginary")
    if not eig.semisimple:
        raise NotSemiSimple(f"eigenvalue {lam} has a Jordan chain")
    lam0 = lam.imag
    E = eig.eigenvectors
    H = -lam0 * (E.conj().T @ (1j * evaluate_derivative(pencil, 1j * lam0)) @ E)
    w = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    # definiteness on the eigenspace is guaranteed for semi-simple eigenvalues;
    # a vanishing form signals a hidden Jordan chain
    size = sum(j * abs(lam0) ** j * a for j, a in enumerate(pencil.norms))
    if np.min(np.abs(w)) <= 1e3 * np.finfo(float).eps * size:
        raise NotSemiSimple(f"Krein form degenerate at {lam}")
    return int(np.sum(w < 0))


def polynomial_spectrum(pencil: StarEvenPencil, tol: Tolerances = DEFAULT,
                        zero_radius: float = 0.0,
                        exclude: Optional[Callable[[complex], bool]] = None,
                        ) -> SpectrumReport:
    """Full spectrum with multiplicities, Krein indices and index census.

    Parameters
    ----------
    zero_radius : eigenvalues with ``|lam| <= zero_radius`` are tagged as the
        zero eigenvalue and left out of the census.
    exclude : predicate marking eigenvalues (e.g. a discretized essential
        band) that are tagged ``essential-band`` and left out of the census.
    """
    comp = _companion(pencil)
    try:
        lams, vecs = sla.eig(comp)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise LinearizationFailure(str(exc)) from exc
    if not np.all(np.isfinite(lams)):
        raise LinearizationFailure("non-finite eigenvalues")
    n = pencil.dimension
    vecs = vecs[:n]

    labels = _clusters(lams, tol.tol_cluster)
    report = SpectrumReport(eigenvalues=[])
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        lam = complex(lams[idx].mean())
        if abs(lam.real) < tol.tol_pair * max(1.0, abs(lam)):
            lam = complex(0.0, lam.imag)
        if abs(lam.imag) < tol.tol_pair * max(1.0, abs(lam)):
            lam = complex(lam.real, 0.0)
        if idx.size == 1:
            v = vecs[:, idx]
            E = v / np.linalg.norm(v)
            geo = 1
        else:
            radius = tol.tol_cluster * max(1.0, abs(lam))
            u, s, vh = np.linalg.svd(evaluate(pencil, lam))
            cut = max(tol.tol_rank * s[0], radius * pencil.scale)
            geo = max(1, int(np.sum(s <= cut)))
            geo = min(geo, idx.size)
            E = vh[-geo:].conj().T
        res = max(relative_residual(pencil, lam, E[:, k]) for k in range(E.shape[1]))
        eig = PolyEigenvalue(lam, E, idx.size, geo, residual=res)
        if abs(lam) <= zero_radius:
            eig.tag = "zero"
        elif exclude is not None and exclude(lam):
            eig.tag = "essential-band"
        report.eigenvalues.append(eig)

    report.eigenvalues.sort(key=lambda e: (e.lam.real, e.lam.imag))
    for eig in report.eigenvalues:
        if eig.tag != "point":
            continue
        lam = eig.lam
        if lam.imag == 0.0 and lam.real > 0:
            report.k_r += eig.algebraic_multiplicity
        elif lam.real > 0:
            report.k_c += eig.algebraic_multiplicity
        elif lam.real == 0.0 and lam.imag != 0.0:
            try:
                eig.krein_index = krein_index_of(pencil, eig, tol)
                report.k_i_minus += eig.krein_index
            except NotSemiSimple:
                report.unindexed.append(lam)
    return report


def check_pairing(lams: np.ndarray, tol: Tolerances = DEFAULT) -> float:
    """Largest distance from ``-conj(lam)`` to the spectrum, relative."""
    lams = np.asarray(lams)
    if lams.size == 0:
        return 0.0
    mirror = -lams.conj()
    d = np.abs(mirror[:, None] - lams[None, :]).min(axis=1)
    return float(np.max(d / np.maximum(1.0, np.abs(lams))))
