"""Command-line front end.

    kreinmat <scenario> [--param value]... --out DIR [--seed N]

Every scenario writes its data files, SVG plots and a ``manifest.json``
listing each file with its size and sha256.  Reruns with the same
arguments give byte-identical output.  Tolerance knobs are read from
``KREINMAT_*`` environment variables at run time.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from . import bridge as br
from . import kdv5
from .errors import ConfigInvalid, KreinError, NearZeroEigenvalue, SolverError
from .hki import census_check, hki_for
from .kreinmatrix import (locate_poles, locate_zeros, select_subspace,
                          trace_branches)
from .pencil import StarEvenPencil, polynomial_spectrum, validate_pencil
from .svgplot import COLORS, Panel, render_svg
from .tolerances import Tolerances


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


# parameter name -> (parser, default)
B_DEFAULT = -8.0 / 15.0
SCENARIOS = {
    "core-demo": {"pencil": (str, ""), "zmin": (float, -3.0), "zmax": (float, 3.0),
                  "npts": (int, 601), "trials": (int, 20), "dim": (int, 4)},
    "kdv5-dispersion": {"b": (float, B_DEFAULT), "mu_min": (float, 0.0),
                        "mu_max": (float, 0.5), "npts": (int, 201),
                        "n_min": (int, -3), "n_max": (int, 3)},
    "kdv5-wave": {"b": (float, B_DEFAULT), "amplitude": (float, 0.023), "M": (int, 32)},
    "kdv5-scan": {"b": (float, B_DEFAULT), "amplitude": (float, 0.023), "M": (int, 32),
                  "npts": (int, 400), "refine": (float, 1e-7)},
    "kdv5-krein": {"b": (float, B_DEFAULT), "amplitudes": (_floats, (0.0, 0.023)),
                   "mu": (float, 0.3585), "M": (int, 32), "zmin": (float, -1.0),
                   "zmax": (float, 1.0), "npts": (int, 801), "zoom_min": (float, -0.16),
                   "zoom_max": (float, -0.08)},
    "bridge-pulse": {"c": (float, 1.3), "N": (int, 512), "dc": (float, 1e-3)},
    "bridge-multipulse": {"c": (float, 1.2), "m": (int, 2), "ks": (_ints, (0,)),
                          "N": (int, 512)},
    "bridge-spectrum": {"c": (float, 1.2), "m": (int, 2), "ks": (_ints, (1,)),
                        "N": (int, 512), "window": (float, 1.0)},
    "bridge-krein": {"c": (float, 1.2), "m_min": (int, 2), "m_max": (int, 4),
                     "k": (int, 1), "N": (int, 512)},
}


@dataclass
class RunConfig:
    scenario: str
    parameters: dict
    output_dir: str
    seed: int = 0

    @classmethod
    def build(cls, scenario, raw: dict, output_dir, seed=0) -> "RunConfig":
        if scenario not in SCENARIOS:
            raise ConfigInvalid(f"unknown scenario {scenario!r}")
        spec = SCENARIOS[scenario]
        unknown = sorted(set(raw) - set(spec))
        if unknown:
            raise ConfigInvalid(f"unknown parameter(s) for {scenario}: {', '.join(unknown)}")
        params = {}
        for key, (parse, default) in spec.items():
            if key not in raw:
                params[key] = default
                continue
            try:
                params[key] = parse(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid(f"bad value for --{key}: {raw[key]!r}") from exc
        cfg = cls(scenario, params, str(output_dir), int(seed))
        cfg.validate()
        return cfg

    def validate(self):
        p, s = self.parameters, self.scenario

        def need(ok, msg):
            if not ok:
                raise ConfigInvalid(msg)

        for key in ("npts", "N", "M", "trials", "dim"):
            if key in p:
                need(p[key] > (1 if key != "trials" else -1), f"{key} must be positive")
        if "c" in p:
            need(0 < p["c"] < np.sqrt(2), "c must lie in (0, sqrt 2)")
        for lo, hi in (("zmin", "zmax"), ("mu_min", "mu_max"), ("n_min", "n_max"),
                       ("zoom_min", "zoom_max"), ("m_min", "m_max")):
            if lo in p:
                need(p[lo] <= p[hi] if lo == "m_min" else p[lo] < p[hi],
                     f"{lo} must be below {hi}")
        if "mu" in p:
            need(0 < p["mu"] <= 0.5, "mu must lie in (0, 1/2]")
        if "mu_max" in p:
            need(0 <= p["mu_min"] and p["mu_max"] <= 1.0, "mu range must lie in [0, 1]")
        if "ks" in p:
            need(len(p["ks"]) > 0 and all(k >= 0 for k in p["ks"])
                 and any(k in (0, 1) for k in p["ks"]),
                 "ks needs nonnegative entries, at least one of them 0 or 1")
        if "m" in p:
            need(p["m"] >= 1, "m must be at least 1")
        if "m_min" in p:
            need(p["m_min"] >= 1 and p["k"] in (0, 1), "need m_min >= 1 and k in {0, 1}")
        if "amplitude" in p:
            need(p["amplitude"] >= 0, "amplitude must be nonnegative")
        if "amplitudes" in p:
            need(len(p["amplitudes"]) > 0 and min(p["amplitudes"]) >= 0,
                 "amplitudes must be nonnegative")
        if s == "core-demo" and p["pencil"]:
            need(os.path.isfile(p["pencil"]), f"pencil file {p['pencil']!r} not found")


# ----------------------------------------------------------------------------
# output helpers

def _num(v) -> str:
    return repr(float(v))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


@dataclass
class Outputs:
    files: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def add(self, name: str, text: str):
        self.files[name] = text


def _lam(z) -> list:
    return [_num(z.real), _num(z.imag)]


# ----------------------------------------------------------------------------
# scenarios

def _demo_pencil():
    return validate_pencil((np.diag([-1.0, 1.0]), np.array([[0.0, 1.0], [-1.0, 0.0]])))


def _random_pencil(rng, n, degree):
    """Random complex star-even pencil; degree 2 gets A_2 = I."""
    out = []
    for j in range(2):
        X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        out.append(0.5 * (X + X.conj().T) if j % 2 == 0 else 0.5 * (X - X.conj().T))
    if degree == 2:
        out.append(np.eye(n))
    return validate_pencil(out)


def _curve_panel(curves, title, ylim=None, xlim=None):
    p = Panel(title=title, xlabel="z", ylabel="r_j(z)", hlines=[0.0])
    for j in range(curves.values.shape[1]):
        p.line(curves.grid, curves.values[:, j], color=COLORS[j % len(COLORS)])
    neg = [z.z for z in curves.zeros if z.signature == "negative"]
    pos = [z.z for z in curves.zeros if z.signature != "negative"]
    if pos:
        p.scatter(pos, np.zeros(len(pos)), marker="circle", color="black", label="zero, slope > 0")
    if neg:
        p.scatter(neg, np.zeros(len(neg)), marker="square", color="black", size=4,
                  label="zero, slope < 0")
    poles = [q.z for q in curves.poles]
    if poles:
        p.scatter(poles, np.zeros(len(poles)), marker="x", color=COLORS[1], size=5, label="pole")
    vals = curves.values[np.isfinite(curves.values)]
    if ylim is None and vals.size:
        s = float(np.quantile(np.abs(vals), 0.9)) or 1.0
        ylim = (-1.5 * s, 1.5 * s)
    p.ylim, p.xlim = ylim, xlim
    return p


def _curves(pencil, S, grid, tol):
    c = trace_branches(pencil, S, grid, tol)
    locate_zeros(c, pencil, S, tol)
    c.poles = locate_poles(pencil, S, (float(grid[0]), float(grid[-1])), tol)
    return c


def run_core_demo(p, rng, tol, out: Outputs):
    if p["pencil"]:
        with open(p["pencil"], encoding="utf-8") as fh:
            pencil = StarEvenPencil.from_json(json.load(fh), tol)
    else:
        pencil = _demo_pencil()
    spec = polynomial_spectrum(pencil, tol)
    rep = hki_for(pencil, tol)
    ok, detail = census_check(rep, spec)
    out.add("pencil.json", _json(pencil.to_json()))
    out.add("spectrum.json", _json(spec.to_json()))
    out.add("index.json", _json({"report": rep.to_json(), "census_ok": ok,
                                 "unindexed": [_lam(z) for z in detail["unindexed"]]}))
    S = select_subspace(pencil.coefficients[0], tol)
    grid = np.linspace(p["zmin"], p["zmax"], p["npts"])
    curves = _curves(pencil, S, grid, tol)
    out.add("krein_curves.csv", curves.to_csv())
    out.add("krein.json", _json(curves.to_json()))
    lam = spec.values
    sp = Panel(title="polynomial eigenvalues", xlabel="Re", ylabel="Im")
    sp.scatter(lam.real, lam.imag, color=COLORS[0])
    out.add("krein.svg", render_svg([_curve_panel(curves, "Krein eigenvalues"), sp], ncols=2))

    trials = []
    for t in range(p["trials"]):
        degree = 1 + t % 2
        pen = _random_pencil(rng, p["dim"], degree)
        sp_t = polynomial_spectrum(pen, tol)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearZeroEigenvalue)
            rep_t = hki_for(pen, tol)
        ok_t, _ = census_check(rep_t, sp_t)
        trials.append({"trial": t, "degree": degree, "K_Ham_formula": rep_t.K_Ham_formula,
                       "census": list(rep_t.census), "ok": ok_t})
    out.add("random_census.json", _json({"dim": p["dim"], "trials": trials,
                                         "passed": sum(t["ok"] for t in trials)}))
    out.summary.update(k_r=spec.k_r, k_c=spec.k_c, k_i_minus=spec.k_i_minus,
                       census_ok=ok, random_passed=sum(t["ok"] for t in trials))


def run_kdv5_dispersion(p, rng, tol, out: Outputs):
    params = kdv5.Kdv5Params(b=p["b"])
    mus = np.linspace(p["mu_min"], p["mu_max"], p["npts"])
    ns = range(p["n_min"], p["n_max"] + 1)
    rows = kdv5.dispersion_curves(mus, ns, params)
    out.add("dispersion.csv", _csv(["mu", "n", "z", "d", "signature"], rows))
    cols = kdv5.predict_collisions(params, ns, (max(p["mu_min"], 1e-3), p["mu_max"]))
    out.add("collisions.json", _json([{"mu": _num(c.mu), "n_neg": c.n_neg, "n_pos": c.n_pos,
                                       "z": _num(c.z)} for c in cols]))
    panel = Panel(title=f"dispersion curves, b = {p['b']:.4g}", xlabel="mu", ylabel="z")
    for j, n in enumerate(ns):
        d = kdv5.dispersion(n, mus, params)
        z = -(n + mus) * d
        # split into signature runs so each run is drawn with one style
        for neg in (False, True):
            zz = np.where((d < 0) == neg, z, np.nan)
            panel.line(mus, zz, color=COLORS[j % len(COLORS)], dashed=neg,
                       label=f"n = {n}" if not neg else None)
    if cols:
        panel.scatter([c.mu for c in cols], [c.z for c in cols], marker="circle",
                      color="black", size=4, label="collision")
    panel.ylim = (-2.0, 2.0)
    out.add("dispersion.svg", render_svg([panel], panel_size=(640, 420)))
    out.summary["collisions"] = [c.mu for c in cols]


def run_kdv5_wave(p, rng, tol, out: Outputs):
    params = kdv5.Kdv5Params(b=p["b"], M=p["M"])
    params.check_resonance()
    wave = kdv5.solve_periodic_wave(params, p["amplitude"])
    out.add("wave.json", _json(wave.to_json()))
    y = np.linspace(0, 2 * np.pi, 257)
    u = wave.profile(y)
    out.add("profile.csv", _csv(["y", "u"], zip(y, u)))
    k = np.arange(0, wave.M + 1)
    mags = np.abs([wave.coefficient(j) for j in k])
    p1 = Panel(title="wave profile", xlabel="y", ylabel="u").line(y, u)
    p2 = Panel(title="Fourier coefficients", xlabel="k", ylabel="log10 |U_k|")
    good = mags > 0
    if good.any():
        p2.scatter(k[good], np.log10(mags[good]))
    out.add("wave.svg", render_svg([p1, p2], ncols=2))
    out.summary.update(ell=wave.ell, residual_norm=wave.residual_norm)


def run_kdv5_scan(p, rng, tol, out: Outputs):
    params = kdv5.Kdv5Params(b=p["b"], M=p["M"])
    params.check_resonance()
    wave = kdv5.solve_periodic_wave(params, p["amplitude"])
    grid = kdv5.default_scan_grid(params, p["npts"])
    res = kdv5.bloch_scan(wave, grid, refine_edges=p["refine"])
    cols = kdv5.predict_collisions(params)
    out.add("scan.csv", res.to_csv())
    bubbles = []
    for b in res.bubbles:
        near = min(cols, key=lambda c: abs(c.mu - b.center)) if cols else None
        bubbles.append({"mu_lo": _num(b.mu_lo), "mu_hi": _num(b.mu_hi),
                        "center": _num(b.center), "width": _num(b.width),
                        "max_real": _num(b.max_real), "mu_peak": _num(b.mu_peak),
                        "imag_at_peak": _num(b.imag_at_peak),
                        "nearest_collision": None if near is None else _num(near.mu)})
    out.add("bubbles.json", _json({"amplitude": _num(p["amplitude"]), "ell": _num(wave.ell),
                                   "bubbles": bubbles,
                                   "collisions": [_num(c.mu) for c in cols]}))
    panel = Panel(title=f"Bloch scan, amplitude {p['amplitude']:.4g}", xlabel="mu",
                  ylabel="max |Re lambda|", vlines=[c.mu for c in cols])
    panel.line(res.mu, res.max_real)
    out.add("scan.svg", render_svg([panel], panel_size=(640, 360)))
    out.summary["bubbles"] = [[b.mu_lo, b.mu_hi] for b in res.bubbles]


def run_kdv5_krein(p, rng, tol, out: Outputs):
    params = kdv5.Kdv5Params(b=p["b"], M=p["M"])
    params.check_resonance()
    z_full = np.linspace(p["zmin"], p["zmax"], p["npts"])
    z_zoom = np.linspace(p["zoom_min"], p["zoom_max"], p["npts"])
    panels, report = [], []
    for a in p["amplitudes"]:
        wave = kdv5.solve_periodic_wave(params, a)
        full = kdv5.kdv5_krein_curves(wave, p["mu"], z_full, tol=tol)
        zoom = kdv5.kdv5_krein_curves(wave, p["mu"], z_zoom, tol=tol)
        tag = f"A{a:.4g}"
        out.add(f"krein_{tag}.csv", full.to_csv())
        out.add(f"krein_{tag}_zoom.csv", zoom.to_csv())
        report.append({"amplitude": _num(a), "full": full.to_json(), "zoom": zoom.to_json(),
                       "zoom_zero_count": len(zoom.zeros)})
        panels.append(_curve_panel(full, f"amplitude {a:.4g}", ylim=(-1.0, 1.0)))
        panels.append(_curve_panel(zoom, f"amplitude {a:.4g}, blow-up"))
    out.add("krein.json", _json({"mu": _num(p["mu"]), "window": [p["zoom_min"], p["zoom_max"]],
                                 "amplitudes": report}))
    out.add("krein.svg", render_svg(panels, ncols=2))
    out.summary["zoom_zero_counts"] = [r["zoom_zero_count"] for r in report]


def _profile_panels(prof, spec: br.A0Spectrum, title):
    p1 = Panel(title=title, xlabel="x", ylabel="u").line(prof.x, prof.u)
    w = spec.values[spec.values < 2.0 * spec.band_edge_exact]
    p2 = Panel(title="A_0 eigenvalues", xlabel="index", ylabel="nu",
               hlines=[0.0, spec.band_edge_exact])
    p2.scatter(np.arange(w.size), w)
    p2.scatter([0], [spec.band_edge_exact], marker="cross", color=COLORS[1], size=5,
               label="band edge 1 - c^4/4")
    return [p1, p2]


def _a0_doc(spec: br.A0Spectrum):
    doc = spec.to_json()
    doc["nus"] = [_num(v) for v in spec.nus]
    doc["n_negative"] = spec.n_negative
    return doc


def _primary(c, N):
    return br.solve_primary_pulse(c, br.primary_grid(c, N))


def run_bridge_pulse(p, rng, tol, out: Outputs):
    c = p["c"]
    grid = br.primary_grid(c, p["N"])
    fam = br.family_around(c, p["dc"], grid)
    prof = fam.at(c)
    spec = br.a0_spectrum(prof)
    rho, _ = br.essential_band(c)
    out.add("profile.json", _json(prof.to_json()))
    out.add("profile.csv", _csv(["x", "u"], zip(prof.x, prof.u)))
    out.add("a0_spectrum.json", _json(_a0_doc(spec)))
    out.add("family.csv", fam.to_csv())
    alpha, beta = br.linear_rates(c)
    out.add("pulse.json", _json({
        "c": _num(c), "alpha": _num(alpha), "beta": _num(beta), "rho": _num(rho),
        "band_edge_a0": _num(spec.band_edge), "band_edge_exact": _num(spec.band_edge_exact),
        "d2": _num(fam.d2_at(c)), "d2_analytic": _num(br.d2_analytic(prof)),
        "norm_ux": _num(fam.norm_ux(c)), "residual_norm": prof.residual_norm}))
    out.add("pulse.svg", render_svg(_profile_panels(prof, spec, f"primary pulse, c = {c:.4g}"),
                                    ncols=2))
    out.summary.update(band_edge=spec.band_edge, d2=fam.d2_at(c))


def _multipulse(p):
    prim = _primary(p["c"], p["N"])
    return prim, br.construct_multipulse(prim, p["m"], p["ks"])


def run_bridge_multipulse(p, rng, tol, out: Outputs):
    prim, prof = _multipulse(p)
    spec = br.a0_spectrum(prof)
    out.add("profile.json", _json(prof.to_json()))
    out.add("profile.csv", _csv(["x", "u"], zip(prof.x, prof.u)))
    doc = _a0_doc(spec)
    doc.update(peaks=[_num(v) for v in prof.peaks], x_min=_num(prof.x_min),
               xtilde=_num(prof.xtilde), residual_norm=prof.residual_norm,
               remainder_norm=prof.remainder_norm)
    out.add("a0_spectrum.json", _json(doc))
    ks = ",".join(map(str, p["ks"]))
    out.add("multipulse.svg", render_svg(
        _profile_panels(prof, spec, f"pulse m = {p['m']}, ks = ({ks})"), ncols=2))
    out.summary.update(nus=[float(v) for v in spec.nus], x_min=prof.x_min)


def run_bridge_spectrum(p, rng, tol, out: Outputs):
    prim, prof = _multipulse(p)
    fam = br.family_around(p["c"], grid=prim.grid)
    rep, spec, ok, detail = br.bridge_index(prof, tol)
    nus = br.a0_spectrum(prof).nus
    pred = br.interaction_prediction(fam.norm_ux(p["c"]), fam.d2_at(p["c"]), nus)
    rows = []
    for e in sorted(spec.eigenvalues, key=lambda e: (abs(e.lam), e.lam.imag, e.lam.real)):
        rows.append([_num(e.lam.real), _num(e.lam.imag), e.tag,
                     "" if e.krein_index is None else e.krein_index,
                     e.algebraic_multiplicity])
    out.add("spectrum.csv", _csv(["re", "im", "tag", "krein_index", "alg_mult"], rows))
    out.add("spectrum.json", _json(spec.to_json()))
    out.add("census.json", _json({"report": rep.to_json(), "census_ok": ok,
                                  "unindexed": [_lam(z) for z in detail["unindexed"]]}))
    out.add("prediction.json", _json({"d2": _num(fam.d2_at(p["c"])),
                                      "norm_ux": _num(fam.norm_ux(p["c"])),
                                      "pairs": [q.to_json() for q in pred]}))
    rho, _ = br.essential_band(p["c"])
    win = p["window"]
    panel = Panel(title="quadratic eigenvalues", xlabel="Re lambda", ylabel="Im lambda",
                  xlim=(-win, win), ylim=(-win, win))
    pts = spec.eigenvalues
    groups = {"essential band": [], "point, positive": [], "point, negative": [], "zero": []}
    for e in pts:
        if e.tag == "essential-band":
            groups["essential band"].append(e.lam)
        elif e.tag == "zero":
            groups["zero"].append(e.lam)
        elif e.krein_index:
            groups["point, negative"].append(e.lam)
        else:
            groups["point, positive"].append(e.lam)
    styles = {"essential band": ("circle", "#999999", 2.0), "point, positive": ("circle", COLORS[0], 3.5),
              "point, negative": ("square", COLORS[3], 4.0), "zero": ("x", "black", 4.0)}
    for name, vals in groups.items():
        if vals:
            v = np.array(vals)
            mk, col, size = styles[name]
            panel.scatter(v.real, v.imag, marker=mk, color=col, size=size, label=name)
    panel.scatter([0.0, 0.0], [rho, -rho], marker="cross", color=COLORS[1], size=6,
                  label="band edge")
    out.add("spectrum.svg", render_svg([panel], panel_size=(480, 480)))
    out.summary.update(K_Ham=rep.K_Ham_formula, census_ok=ok)


def run_bridge_krein(p, rng, tol, out: Outputs):
    c = p["c"]
    grid = br.primary_grid(c, p["N"])
    fam = br.family_around(c, grid=grid)
    prim = fam.at(c)
    d2 = fam.d2_at(c)
    reps, rows = [], []
    for m in range(p["m_min"], p["m_max"] + 1):
        prof = br.construct_multipulse(prim, m, (p["k"],))
        r = br.verify_krein_diagonal(prof, prim, d2, tol=tol)
        doc = r.to_json()
        doc["m"] = m
        reps.append(doc)
        rows.append([m, r.x_min, float(r.nus.min()), float(r.nus.max()), r.offdiag_ratio,
                     r.k1_norm, r.d2_fit, r.d2_family, r.d2_rel_err])
    out.add("krein_diagonal.json", _json({"c": _num(c), "k": p["k"], "reports": reps}))
    out.add("krein_diagonal.csv", _csv(["m", "x_min", "nu_min", "nu_max", "offdiag_ratio",
                                        "k1_norm", "d2_fit", "d2_family", "d2_rel_err"], rows))
    xs = np.array([r[1] for r in rows])
    p1 = Panel(title="diagonal dominance", xlabel="X_min", ylabel="log10 ratio")
    p1.line(xs, np.log10([r[4] for r in rows]))
    p1.scatter(xs, np.log10([r[4] for r in rows]))
    p2 = Panel(title="|K_1| and |nu|", xlabel="X_min", ylabel="log10")
    p2.line(xs, np.log10([r[5] for r in rows]), label="|K_1|")
    p2.line(xs, np.log10([max(abs(r[2]), abs(r[3])) for r in rows]), color=COLORS[1],
            dashed=True, label="max |nu|")
    out.add("krein_diagonal.svg", render_svg([p1, p2], ncols=2))
    out.summary.update(offdiag_ratio=[r[4] for r in rows], d2_rel_err=[r[8] for r in rows])


RUNNERS: dict = {
    "core-demo": run_core_demo,
    "kdv5-dispersion": run_kdv5_dispersion,
    "kdv5-wave": run_kdv5_wave,
    "kdv5-scan": run_kdv5_scan,
    "kdv5-krein": run_kdv5_krein,
    "bridge-pulse": run_bridge_pulse,
    "bridge-multipulse": run_bridge_multipulse,
    "bridge-spectrum": run_bridge_spectrum,
    "bridge-krein": run_bridge_krein,
}


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _echo(params: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def run(config: RunConfig, tol: Optional[Tolerances] = None):
    """Run one scenario; returns ``(exit_status, manifest)``."""
    tol = Tolerances.from_env() if tol is None else tol
    rng = np.random.default_rng(config.seed)
    out = Outputs()
    status, error = "ok", None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearZeroEigenvalue)
            RUNNERS[config.scenario](config.parameters, rng, tol, out)
    except ConfigInvalid:
        raise
    except KreinError as exc:
        err = SolverError(exc)
        status, error = "error", err.to_dict()
        out.add("error.json", _json(error))
    os.makedirs(config.output_dir, exist_ok=True)
    files = []
    for name in sorted(out.files):
        text = out.files[name]
        with open(os.path.join(config.output_dir, name), "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(text)
        files.append({"name": name, "bytes": len(text.encode("utf-8")), "sha256": _sha(text)})
    manifest = {
        "scenario": config.scenario, "parameters": _echo(config.parameters),
        "seed": config.seed, "version": __version__, "status": status,
        "tolerances": asdict(tol), "files": files,
        "summary": json.loads(_json(out.summary)),
    }
    if error is not None:
        manifest["error"] = error
    with open(os.path.join(config.output_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(_json(manifest))
    return (0 if status == "ok" else 1), manifest


def _parse_params(extra) -> dict:
    raw = {}
    k = 0
    while k < len(extra):
        tok = extra[k]
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigInvalid(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            k += 1
        else:
            if k + 1 >= len(extra):
                raise ConfigInvalid(f"missing value for {tok}")
            val = extra[k + 1]
            k += 2
        key = key.replace("-", "_")
        if key in raw:
            raise ConfigInvalid(f"parameter --{key} given twice")
        raw[key] = val
    return raw


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kreinmat",
        description="Krein-matrix scenarios: spectra, indices and plots.",
        epilog="scenario parameters: " + "; ".join(
            f"{s}: " + ", ".join(f"--{k}" for k in spec) for s, spec in SCENARIOS.items()))
    ap.add_argument("scenario", choices=sorted(SCENARIOS))
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized demos")
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        cfg = RunConfig.build(args.scenario, _parse_params(extra), args.out, args.seed)
        try:
            tol = Tolerances.from_env()
        except ValueError as exc:
            raise ConfigInvalid(f"bad tolerance override: {exc}") from exc
        status, manifest = run(cfg, tol)
    except ConfigInvalid as exc:
        print(f"kreinmat: {exc}", file=sys.stderr)
        return 2
    if status:
        print(f"kreinmat: {manifest['error']['message']}", file=sys.stderr)
    else:
        print(os.path.join(cfg.output_dir, "manifest.json"))
    return status


if __name__ == "__main__":
    sys.exit(main())
