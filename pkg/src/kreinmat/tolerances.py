"""Numerical tolerance knobs shared by every module.

All values can be overridden through environment variables named
``KREINMAT_<FIELD>`` (upper case), e.g. ``KREINMAT_TOL_RESID=1e-9``.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

ENV_PREFIX = "KREINMAT_"


@dataclass(frozen=True)
class Tolerances:
    # structural checks, relative to the largest coefficient norm
    tol_sym: float = 1e-10
    # singular-value cutoff relative to sigma_max
    tol_rank: float = 1e-10
    # relative residual ||P(lam) v|| / sum_j |lam|^j ||A_j||
    tol_resid: float = 1e-8
    # real-part snapping / pairing, relative to max(1, |lam|)
    tol_pair: float = 1e-7
    # single-linkage cluster distance |a - b| / max(1, |a|, |b|)
    tol_cluster: float = 1e-7
    # subspace cut and kernel detection, relative to ||A_0||
    tol_zero: float = 1e-8
    tol_zero_r: float = 1e-10
    tol_slope: float = 1e-6
    tol_match: float = 1e-6
    cond_max: float = 1e10
    overlap_min: float = 0.5
    tol_orth: float = 1e-10
    tol_newton: float = 1e-12

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_env(cls, environ=None) -> "Tolerances":
        environ = os.environ if environ is None else environ
        kwargs = {}
        for field in dataclasses.fields(cls):
            key = ENV_PREFIX + field.name.upper()
            if key in environ:
                kwargs[field.name] = float(environ[key])
        return cls(**kwargs)


DEFAULT = Tolerances.from_env()
