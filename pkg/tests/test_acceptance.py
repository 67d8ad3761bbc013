"""Acceptance criteria 1-11 at their stated tolerances.

Each criterion records one PASS/FAIL line, printed at the end of the
session by ``conftest.pytest_terminal_summary``.  Two criteria do not hold
as stated (3: second bubble centre; 6: slope constant); their tests keep
the literal checks and are marked strict xfail.
"""

import time
import warnings

import numpy as np
import pytest

import oracles
from kreinmat import validate_pencil
from kreinmat.bridge import (a0_band_edge, a0_spectrum, bridge_index,
                             construct_multipulse, essential_band, family_around,
                             interaction_prediction, quadratic_spectrum,
                             solve_primary_pulse, verify_krein_diagonal)
from kreinmat.errors import EmptySubspace, NearZeroEigenvalue
from kreinmat.hki import census_check, hki_for
from kreinmat.kdv5 import (Kdv5Params, bloch_index, bloch_pencil, bloch_scan,
                           default_scan_grid, kdv5_krein_curves, predict_collisions,
                           solve_periodic_wave)
from kreinmat.kreinmatrix import (krein_matrix_at, krein_matrix_derivative,
                                  locate_zeros, pole_parameters, select_subspace,
                                  trace_branches)
from kreinmat.pencil import polynomial_spectrum

from conftest import record

P = Kdv5Params()
MU1 = 0.1 * (5 - np.sqrt(5 * (2 * np.sqrt(129) - 21)))
MU2 = 1 - np.sqrt(10) / 5
MU_CH = 2 - np.sqrt(3)
C = 1.2


@pytest.fixture(scope="module")
def bridge():
    fam = family_around(C)
    prim = fam.at(C)
    pulses = {(m, k): construct_multipulse(prim, m, (k,)) for m in (2, 3, 4) for k in (0, 1)}
    return fam, prim, pulses


# -- 1 ----------------------------------------------------------------------------

def test_criterion_1_collisions():
    t = time.perf_counter()
    cols = predict_collisions(P)
    dt = time.perf_counter() - t
    mus = sorted(c.mu for c in cols)
    err1 = min(abs(m - MU1) for m in mus)
    err2 = min(abs(m - MU2) for m in mus)
    ok = err1 <= 1e-8 and err2 <= 1e-8 and dt < 1.0
    record(1, ok, f"mu* errors {err1:.1e}, {err2:.1e} (tol 1e-8), {dt:.2f} s")
    assert ok


# -- 2 ----------------------------------------------------------------------------

def test_criterion_2_index_transition():
    t = time.perf_counter()
    flat = solve_periodic_wave(P, 0.0)
    count = lambda mu: bloch_index(flat, mu)
    low = [count(mu) for mu in np.arange(0.05, 0.2501, 0.01)]
    high = [count(mu) for mu in np.arange(0.28, 0.4901, 0.01)]
    a, b = 0.25, 0.28
    while b - a > 1e-6:
        m = 0.5 * (a + b)
        a, b = (m, b) if count(m) == 1 else (a, m)
    dt = time.perf_counter() - t
    ok = (set(low) == {1} and set(high) == {2} and a <= MU_CH <= b and dt < 5.0)
    record(2, ok, f"n(A0)=1 on 0.05..0.25, 2 on 0.28..0.49; bracket [{a:.7f}, {b:.7f}] "
                  f"around {MU_CH:.7f}, {dt:.2f} s")
    assert ok


# -- 3 ----------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="second bubble centre sits 8.5e-3 below the eps=0 "
                   "collision value (O(eps^2) drift); see decision log")
def test_criterion_3_bubbles():
    t = time.perf_counter()
    wave = solve_periodic_wave(P, 0.023)
    res = bloch_scan(wave, default_scan_grid(P, 400), refine_edges=1e-7)
    dt = time.perf_counter() - t
    bubbles = res.bubbles
    parts = []
    ok = len(bubbles) == 2 and dt < 300
    for b, target in zip(bubbles, (MU1, MU2)):
        inside = (res.mu >= b.mu_lo) & (res.mu <= b.mu_hi) & (res.max_real > 1e-6)
        im_min = float(np.abs(res.imag_of_max[inside]).min())
        off = abs(b.center - target)
        ok &= 1e-4 <= b.width <= 1e-2 and off <= 5e-3 and im_min > 0.1
        parts.append(f"[{b.mu_lo:.5f}, {b.mu_hi:.5f}] width {b.width:.1e} "
                     f"centre offset {off:.1e} min|Im| {im_min:.3f}")
    record(3, ok, f"{len(bubbles)} bubbles: " + "; ".join(parts) + f"; {dt:.1f} s")
    assert len(bubbles) == 2
    for b, target in zip(bubbles, (MU1, MU2)):
        assert 1e-4 <= b.width <= 1e-2
        assert abs(b.center - target) <= 5e-3


# -- 4 ----------------------------------------------------------------------------

def test_criterion_4_krein_saddle_node():
    mu = 0.3585
    window = np.linspace(-0.16, -0.08, 801)
    ladder = (0.002, 0.005, 0.01, 0.015, 0.02, 0.023)
    rows = []
    for a in ladder:
        curves = kdv5_krein_curves(solve_periodic_wave(P, a), mu, window)
        rows.append(sorted((z.z, z.signature) for z in curves.zeros))
    counts = [len(r) for r in rows]
    opposite = all(sorted(s for _, s in r) == ["negative", "positive"]
                   for r in rows if len(r) == 2)
    k = counts.index(0) if 0 in counts else len(counts)
    ok = (counts[0] == 2 and opposite and 0 < k < len(counts)
          and all(c == 2 for c in counts[:k]) and all(c == 0 for c in counts[k:]))
    gaps = [r[1][0] - r[0][0] for r in rows if len(r) == 2]
    ok &= bool(np.all(np.diff(gaps) < 0))
    record(4, ok, f"zeros in z-window at mu={mu} for eps {ladder}: {counts}; "
                  f"pair gap shrinks {gaps[0]:.4f} -> {gaps[-1]:.4f}")
    assert ok


# -- 5 ----------------------------------------------------------------------------

def _brute_rho(c):
    f = lambda r: c * r + np.sqrt(1 + r ** 4)
    r = np.linspace(-10, 0, 200001)
    k = int(np.argmin(f(r)))
    r = np.linspace(r[max(k - 1, 0)], r[min(k + 1, r.size - 1)], 200001)
    return float(f(r).min())


def test_criterion_5_essential_spectra():
    p = solve_primary_pulse(1.3)
    s = a0_spectrum(p)
    edge_err = abs(s.band_edge - (1 - 1.3 ** 4 / 4))
    rho_err = max(abs(essential_band(c)[0] - _brute_rho(c)) for c in (0.5, 1.0, 1.2, 1.3, 1.4))
    ok = p.grid.N == 512 and edge_err <= 2e-3 and rho_err <= 1e-10
    record(5, ok, f"A0 band edge {s.band_edge:.6f} vs {a0_band_edge(1.3):.6f} "
                  f"(err {edge_err:.1e}, tol 2e-3); rho vs brute grid {rho_err:.1e}")
    assert ok


# -- 6 ----------------------------------------------------------------------------

def _small_data(pulses):
    out = {}
    for (m, k), p in pulses.items():
        s = a0_spectrum(p)
        out[(m, k)] = (s.nus, abs(s.values[s.kernel]), p.x_min)
    return out


def test_criterion_6_signs(bridge):
    data = _small_data(bridge[2])
    for m in (2, 3, 4):
        nu0, ker0, _ = data[(m, 0)]
        nu1, ker1, _ = data[(m, 1)]
        assert nu0.size == 1 and nu0[0] > 0 and ker0 < 1e-8
        assert nu1.size == 1 and nu1[0] < 0 and ker1 < 1e-8
    for k in (0, 1):
        mags = [abs(data[(m, k)][0][0]) for m in (2, 3, 4)]
        assert mags[0] > mags[1] > mags[2]


@pytest.mark.xfail(strict=True, reason="per unit m X_min grows by pi/beta, so the slope is "
                   "-2 alpha pi/beta, half the stated constant; see decision log")
def test_criterion_6_small_eigenvalues(bridge):
    fam, prim, pulses = bridge
    data = _small_data(pulses)
    alpha, beta = prim.alpha, prim.beta
    target = -2 * alpha * (np.pi / beta) * 2
    signs_ok = all(data[(m, 0)][0].size == 1 and data[(m, 0)][0][0] > 0
                   and data[(m, 1)][0].size == 1 and data[(m, 1)][0][0] < 0
                   for m in (2, 3, 4))
    slopes, xslopes, mono = [], [], True
    for k in (0, 1):
        ms = np.array([2, 3, 4])
        mags = np.array([abs(data[(m, k)][0][0]) for m in ms])
        xs = np.array([data[(m, k)][2] for m in ms])
        mono &= bool(np.all(np.diff(mags) < 0))
        slopes.append(np.polyfit(ms, np.log(mags), 1)[0])
        xslopes.append(np.polyfit(xs, np.log(mags), 1)[0])
    rel = [abs(s - target) / abs(target) for s in slopes]
    ok = signs_ok and mono and max(rel) <= 0.25
    record(6, ok, f"signs {'ok' if signs_ok else 'wrong'}, monotone {mono}; slope per m "
                  f"{slopes[0]:.3f}/{slopes[1]:.3f} vs {target:.3f} (rel err "
                  f"{max(rel):.2f}, tol 0.25); slope vs X_min {xslopes[0]:.3f}/"
                  f"{xslopes[1]:.3f} vs -2 alpha = {-2 * alpha:.3f}")
    assert signs_ok and mono
    assert max(rel) <= 0.25


# -- 7 ----------------------------------------------------------------------------

def test_criterion_7_quadratic_spectra(bridge):
    fam, prim, pulses = bridge
    d2, nux = fam.d2_at(C), fam.norm_ux(C)
    t = time.perf_counter()
    errs, ok = {}, True
    for m in (2, 3):
        for k in (0, 1):
            p = pulses[(m, k)]
            spec = quadratic_spectrum(p)
            pts = sorted((e for e in spec.eigenvalues if e.tag == "point"), key=lambda e: abs(e.lam))
            near = pts[:2]
            pred = interaction_prediction(nux, d2, a0_spectrum(p).nus)[0]
            if k == 0:
                ok &= all(e.lam.imag == 0 for e in near) and sorted(
                    np.sign([e.lam.real for e in near])) == [-1, 1]
                lam = max(e.lam.real for e in near)
                errs[(m, k)] = abs(lam - pred.lam.real) / abs(pred.lam.real)
            else:
                ok &= all(e.lam.real == 0 and e.krein_index == 1 for e in near)
                lam = max(e.lam.imag for e in near)
                errs[(m, k)] = abs(lam - pred.lam.imag) / abs(pred.lam.imag)
    dt = time.perf_counter() - t
    for k in (0, 1):
        ok &= errs[(2, k)] < 0.1 and errs[(3, k)] < errs[(2, k)]
    ok &= dt < 600
    record(7, ok, "prediction rel. error m=2 -> m=3: "
                  f"pulse 0 {errs[(2, 0)]:.4f} -> {errs[(3, 0)]:.4f}, "
                  f"pulse 1 {errs[(2, 1)]:.4f} -> {errs[(3, 1)]:.4f}; {dt:.1f} s at N=512")
    assert ok


# -- 8 ----------------------------------------------------------------------------

def test_criterion_8_krein_diagonal(bridge):
    fam, prim, pulses = bridge
    reps = [verify_krein_diagonal(pulses[(m, 1)], prim, fam.d2_at(C)) for m in (2, 3, 4)]
    ratios = [r.offdiag_ratio for r in reps]
    d2err = [r.d2_rel_err for r in reps]
    ok = bool(np.all(np.diff(ratios) < 0)) and max(d2err) <= 0.05
    record(8, ok, "off-diagonal ratio " + " > ".join(f"{v:.4f}" for v in ratios)
           + "; z^2 coefficient vs d'' rel. error " + ", ".join(f"{v:.4f}" for v in d2err))
    assert ok


# -- 9 ----------------------------------------------------------------------------

def test_criterion_9_census(bridge):
    rng = np.random.default_rng(909)
    rand_ok = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearZeroEigenvalue)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            p = validate_pencil(oracles.random_structured(rng, n, int(rng.integers(1, 3))))
            rand_ok += census_check(hki_for(p), polynomial_spectrum(p))[0]
    kdv_ok = 0
    samples = [(mu, eps) for eps in (0.01, 0.023) for mu in (0.1, 0.2045, 0.3, 0.359, 0.45)]
    waves = {eps: solve_periodic_wave(P, eps) for eps in (0.01, 0.023)}
    for mu, eps in samples:
        pen = bloch_pencil(waves[eps], mu)
        kdv_ok += census_check(hki_for(pen), polynomial_spectrum(pen))[0]
    pulses = bridge[2]
    kham = {}
    br_ok = True
    for k, expect in ((0, 1), (1, 2)):
        rep, spec, ok, _ = bridge_index(pulses[(2, k)])
        kham[k] = rep.K_Ham_formula
        br_ok &= ok and rep.K_Ham_formula == expect
    ok = rand_ok == 200 and kdv_ok == len(samples) and br_ok
    record(9, ok, f"random {rand_ok}/200, KdV5 {kdv_ok}/{len(samples)}, bridge K_Ham "
                  f"{kham[0]} and {kham[1]} (expect 1 and 2)")
    assert ok


# -- 10 ---------------------------------------------------------------------------

def _null_vector(coeffs, z):
    P = sum((1j * z) ** j * a for j, a in enumerate(coeffs))
    return np.linalg.svd(P)[2][-1].conj()


def test_criterion_10_oracle_equivalence():
    rng = np.random.default_rng(2024)
    trials, bad_zero, bad_sig, n_zeros = 0, 0, 0, 0
    while trials < 100:
        n = int(rng.integers(2, 7))
        deg = int(rng.integers(1, 3))
        p = validate_pencil(oracles.random_structured(rng, n, deg))
        try:
            S = select_subspace(p.coefficients[0])
        except EmptySubspace:
            continue
        trials += 1
        lam = polynomial_spectrum(p).values
        zmax = 1.2 * max(np.abs(lam).max(), 1.0)
        curves = locate_zeros(trace_branches(p, S, np.linspace(-zmax, zmax, 3001)), p, S)
        roots = oracles.imaginary_roots(p.coefficients, zmax, 8000)
        roots = roots[np.abs(roots) > 1e-12]
        for zr in curves.zeros:
            n_zeros += 1
            d = np.abs(roots - zr.z)
            if d.size == 0 or d.min() > 1e-8:
                bad_zero += 1
                continue
            z0 = roots[int(np.argmin(d))]
            direct = oracles.krein_sign_direct(p.coefficients, z0, _null_vector(p.coefficients, z0))
            if (zr.signature == "negative") != (direct < 0):
                bad_sig += 1
        # every imaginary root whose eigenvector is not orthogonal to S is a zero
        zs = np.array([zr.z for zr in curves.zeros])
        for z0 in roots:
            v = _null_vector(p.coefficients, z0)
            if np.linalg.norm(S.basis.conj().T @ v) > 1e-6 and (
                    zs.size == 0 or np.abs(zs - z0).min() > 1e-8):
                bad_zero += 1
    ok = bad_zero == 0 and bad_sig == 0
    record(10, ok, f"{trials} trials, {n_zeros} zeros: {bad_zero} unmatched, "
                   f"{bad_sig} signature mismatches")
    assert ok


# -- 11 ---------------------------------------------------------------------------

def test_criterion_11_derivative():
    rng = np.random.default_rng(1111)
    errs = []
    while len(errs) < 50:
        n = int(rng.integers(2, 7))
        p = validate_pencil(oracles.random_structured(rng, n, int(rng.integers(1, 3))))
        try:
            S = select_subspace(p.coefficients[0])
        except EmptySubspace:
            continue
        z = float(rng.uniform(-2, 2))
        poles = pole_parameters(p, S, (-10.0, 10.0))
        if abs(z) < 1e-2 or (poles.size and np.abs(poles - z).min() < 0.05):
            continue
        h = 1e-5 * max(1.0, abs(z))
        fd = (krein_matrix_at(p, S, z + h).matrix - krein_matrix_at(p, S, z - h).matrix) / (2 * h)
        an = krein_matrix_derivative(p, S, z)
        errs.append(np.linalg.norm(an - fd) / np.linalg.norm(an))
    worst = max(errs)
    ok = worst <= 1e-5
    record(11, ok, f"50 samples, max relative error {worst:.1e} (tol 1e-5)")
    assert ok
