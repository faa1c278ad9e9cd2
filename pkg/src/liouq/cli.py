"""Experiment runner: ``liouq <kind> [--config FILE] [--out DIR] [--seed N]``.

Every experiment writes ``report.json`` plus CSV / gnuplot matrix artifacts into
the output directory. Exit status: 0 when every check passes, 1 when a check
fails, 2 for an invalid config, 3 when the numerics abort.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .algebra import (
    PhasePolynomial,
    Polynomial,
    groenewold_demo,
    span_defects,
    verify_identities,
    verify_tables,
)
from .dynamics import NumericHamiltonian, action_field, observed_order, pde_residual
from .evolution import (
    MODES,
    EvolutionConfig,
    assemble_psi,
    decoupling_residuals,
    evolve,
    gaussian_ensemble,
    superposition_check,
)
from .grid import INTERPOLATION_ORDERS, PhaseGrid
from .quantum_ref import (
    CoherentStateSpec,
    coherent_state,
    harmonic_bridge,
    harmonic_potential,
    l2_distance_up_to_phase,
    projected_hamiltonian_check,
    schrodinger_run,
)

SCHEMA = "liouq/1"
REPORT_SCHEMA = "liouq-report/1"
KINDS = (
    "verify-algebra",
    "tables",
    "groenewold",
    "evolve",
    "decoupling",
    "superposition",
    "compare-schrodinger",
    "action-field",
)
EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
U64_MAX = 2**64 - 1

_HARMONIC = {"mass": 1.0, "potential": [0.0, 0.0, 0.5]}
_FREE = {"mass": 1.0, "potential": [0.0]}

DEFAULTS = {
    "verify-algebra": {"n_pairs": 200, "dofs": [1, 2, 3], "max_degree": 4},
    "tables": {"mass": 1},
    "groenewold": {"a": None, "b": None},
    "evolve": {
        "hamiltonian": _HARMONIC,
        "grid": {"half_width": 6.5, "n": 128},
        "evolution": {"mode": "extended", "hbar": 1.0, "dt": 1e-3, "interpolation": "cubic", "integrator": None},
        "initial": {"q0": 0.5, "p0": 0.0, "sigma_q": 1.0, "sigma_p": 1.0, "phase": [[0.0]]},
        "t_final": 1.0,
        "snapshots": 4,
        "tolerances": {"norm_drift": 1e-4},
    },
    "decoupling": {
        "hamiltonian": _FREE,
        "mode": "extended",
        "half_width": 4.0,
        "inner_half_width": 2.5,
        "levels": [[65, 0.02], [129, 0.01], [257, 0.005]],
        "initial": {"q0": 0.3, "p0": -0.2, "sigma_q": 0.6, "sigma_p": 0.6, "phase": [[0.0, 0.0], [0.0, 0.2], [0.0], [0.1]]},
        "t_final": 0.4,
        "tolerances": {"min_ratio": 3.5},
    },
    "superposition": {
        "hamiltonian": _HARMONIC,
        "grid": {"half_width": 6.0, "n": 64},
        "evolution": {"mode": "extended", "hbar": 1.0, "dt": 5e-4, "interpolation": "cubic", "integrator": None},
        "initial": {"q0": -1.0, "p0": 0.5, "sigma_q": 0.6, "sigma_p": 0.6, "phase": [[0.0]]},
        "second": {"q0": 1.2, "p0": -0.3, "sigma_q": 0.6, "sigma_p": 0.6, "phase": [[0.0, 1.0]]},
        "t_final": 0.3,
        "tolerances": {"defect": 1e-6},
    },
    "compare-schrodinger": {
        "coherent": {"q0": 1.0, "p0": 0.0, "sigma_q": None, "omega": 1.0, "mass": 1.0, "hbar": 1.0},
        "grid": {"half_width": 6.5, "n": 256},
        "times": [0.0, math.pi / 4, math.pi / 2],
        "dt": 1e-3,
        "nq": 512,
        "q_window": [-10.0, 10.0],
        "control_sigma_p": 1.0,
        "tolerances": {"marginal_linf": 2e-3, "control_min": 1e-2, "revival_l2": 1e-6, "norm": 1e-10},
    },
    "action-field": {
        "hamiltonian": _HARMONIC,
        "half_width": 3.0,
        "inner_half_width": 2.0,
        "levels": [[41, 0.02], [81, 0.01], [161, 0.005]],
        "substeps": 10,
        "t": 0.5,
        "initial_phase": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.1]],
        "initial_phase_wave": 0.3,
        "tolerances": {"min_order": 1.9},
    },
}


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    tolerance: object = None
    relation: str = "<="

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "status": "pass" if self.passed else "fail",
            "value": self.value,
            "relation": self.relation,
            "tolerance": self.tolerance,
        }


@dataclass
class RunReport:
    kind: str
    config: dict
    seed: int
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error is not None:
            return "aborted"
        return "pass" if all(c.passed for c in self.checks) else "fail"

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def check(self, name, value, tolerance=None, relation="<=", passed=None) -> Check:
        if passed is None:
            passed = _compare(value, tolerance, relation)
        c = Check(name, bool(passed), value, tolerance, relation)
        self.checks.append(c)
        return c

    def to_json(self, with_timing: bool = True) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "kind": self.kind,
            "status": self.status,
            "seed": self.seed,
            "config": self.config,
            "checks": [c.to_json() for c in self.checks],
            "results": self.results,
            "artifacts": list(self.artifacts),
        }
        if self.error is not None:
            out["error"] = self.error
        if with_timing:
            out["timing"] = self.timing
        return out


def _compare(value, tol, relation) -> bool:
    if relation == "<=":
        return value <= tol
    if relation == ">=":
        return value >= tol
    if relation == ">":
        return value > tol
    if relation == "==":
        return value == tol
    if relation == "!=":
        return value != tol
    raise ValueError(f"unknown relation {relation!r}")


# objects replaced as a whole rather than merged key by key
_ATOMIC = ("hamiltonian", "a", "b")


def _merge(base, override):
    if isinstance(base, dict) and isinstance(override, dict):
        out = copy.deepcopy(base)
        for k, v in override.items():
            out[k] = _merge(base[k], v) if k in base and k not in _ATOMIC else copy.deepcopy(v)
        return out
    return copy.deepcopy(override)


def resolve(config: dict | None, kind: str | None = None) -> dict:
    """Fill in built-in defaults for ``kind`` (taken from the config when omitted)."""
    config = dict(config or {})
    kind = kind or config.get("kind")
    if kind not in KINDS:
        raise ConfigError([f"kind must be one of {', '.join(KINDS)}"])
    out = _merge(DEFAULTS[kind], {k: v for k, v in config.items() if k not in ("schema", "kind", "seed")})
    out["schema"] = config.get("schema", SCHEMA)
    out["kind"] = kind
    out["seed"] = config.get("seed", 0)
    return out


# validation -----------------------------------------------------------------

def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _positive(v, name, out):
    if not _is_num(v) or v <= 0:
        out.append(f"{name} must be positive")


def _coeff_matrix(v, name, out):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) and r for r in v):
        out.append(f"{name} must be a non-empty list of coefficient rows")
        return
    if not all(_is_num(x) for r in v for x in r):
        out.append(f"{name} must contain finite numbers")


def _validate_hamiltonian(h, out, separable_only=False):
    if not isinstance(h, dict):
        out.append("hamiltonian must be an object")
        return
    if h.get("time_dependent") or "time" in h or "t" in h:
        out.append("time-dependent Hamiltonians are not supported: H must be autonomous")
    if "coefficients" in h:
        if separable_only:
            out.append("this experiment needs a separable hamiltonian (mass, potential)")
        _coeff_matrix(h["coefficients"], "hamiltonian.coefficients", out)
        return
    _positive(h.get("mass"), "mass", out)
    pot = h.get("potential", [0.0])
    if not isinstance(pot, list) or not pot or not all(_is_num(x) for x in pot):
        out.append("hamiltonian.potential must be a non-empty list of finite numbers")


def _validate_grid(g, out, prefix="grid"):
    if not isinstance(g, dict):
        out.append(f"{prefix} must be an object")
        return
    if "q" in g or "p" in g:
        for ax in ("q", "p"):
            r = g.get(ax)
            if not (isinstance(r, list) and len(r) == 2 and all(_is_num(x) for x in r) and r[1] > r[0]):
                out.append(f"{prefix}.{ax} must be [min, max] with max > min")
        for key in ("nq", "np"):
            n = g.get(key)
            if not isinstance(n, int) or n < 8:
                out.append(f"{prefix}.{key} must be an integer >= 8")
        return
    _positive(g.get("half_width"), f"{prefix}.half_width", out)
    n = g.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 8:
        out.append(f"{prefix}.n must be an integer >= 8")


def _validate_evolution(e, out):
    if not isinstance(e, dict):
        out.append("evolution must be an object")
        return
    _positive(e.get("dt"), "dt", out)
    _positive(e.get("hbar"), "hbar", out)
    if e.get("mode") not in MODES:
        out.append(f"mode must be one of {', '.join(MODES)}")
    if e.get("interpolation") not in INTERPOLATION_ORDERS:
        out.append(f"interpolation must be one of {', '.join(INTERPOLATION_ORDERS)}")
    if e.get("integrator") not in (None, "verlet", "rk4"):
        out.append("integrator must be verlet, rk4 or null")


def _validate_gaussian(s, out, prefix):
    if not isinstance(s, dict):
        out.append(f"{prefix} must be an object")
        return
    for k in ("q0", "p0"):
        if not _is_num(s.get(k)):
            out.append(f"{prefix}.{k} must be a finite number")
    _positive(s.get("sigma_q"), f"{prefix}.sigma_q", out)
    _positive(s.get("sigma_p"), f"{prefix}.sigma_p", out)
    if "phase" in s:
        _coeff_matrix(s["phase"], f"{prefix}.phase", out)


def _validate_levels(levels, out):
    if not isinstance(levels, list) or len(levels) < 2:
        out.append("levels must list at least two [n, dt] refinement levels")
        return
    for lv in levels:
        if not (isinstance(lv, list) and len(lv) == 2 and isinstance(lv[0], int) and lv[0] >= 8 and _is_num(lv[1]) and lv[1] > 0):
            out.append("each level must be [n >= 8, dt > 0]")
            return


def validate(config: dict | None, kind: str | None = None) -> list:
    """All violations found in ``config`` after defaults are applied; empty means valid."""
    out: list = []
    if config is not None and not isinstance(config, dict):
        return ["config must be a JSON object"]
    raw = config or {}
    if "schema" in raw and raw["schema"] != SCHEMA:
        out.append(f"schema must be {SCHEMA!r}")
    if kind and raw.get("kind") not in (None, kind):
        out.append(f"config is for kind {raw.get('kind')!r}, not {kind!r}")
    try:
        cfg = resolve(raw, kind)
    except ConfigError as e:
        return out + e.violations
    seed = cfg["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= U64_MAX:
        out.append("seed must be an integer in [0, 2^64)")
    k = cfg["kind"]
    if k == "verify-algebra":
        if not isinstance(cfg["n_pairs"], int) or cfg["n_pairs"] < 1:
            out.append("n_pairs must be a positive integer")
        if not isinstance(cfg["dofs"], list) or not cfg["dofs"] or not all(d in (1, 2, 3) for d in cfg["dofs"]):
            out.append("dofs must be a non-empty subset of [1, 2, 3]")
        if not isinstance(cfg["max_degree"], int) or not 0 <= cfg["max_degree"] <= 6:
            out.append("max_degree must be an integer in [0, 6]")
    elif k == "tables":
        try:
            if Fraction(str(cfg["mass"])) <= 0:
                out.append("mass must be positive")
        except (ValueError, ZeroDivisionError):
            out.append("mass must be a rational number")
    elif k == "groenewold":
        for key in ("a", "b"):
            if cfg[key] is not None:
                try:
                    p = Polynomial.from_json(cfg[key])
                    if not isinstance(p, PhasePolynomial) or p.dof != 1:
                        out.append(f"{key} must be a one-dof phase-space polynomial")
                except Exception as e:  # malformed JSON structure
                    out.append(f"{key} is not a valid polynomial: {e}")
    elif k in ("evolve", "superposition"):
        _validate_hamiltonian(cfg["hamiltonian"], out)
        _validate_grid(cfg["grid"], out)
        _validate_evolution(cfg["evolution"], out)
        _validate_gaussian(cfg["initial"], out, "initial")
        if k == "superposition":
            _validate_gaussian(cfg["second"], out, "second")
        if not _is_num(cfg["t_final"]) or cfg["t_final"] < 0:
            out.append("t_final must be non-negative")
        if k == "evolve" and (not isinstance(cfg["snapshots"], int) or cfg["snapshots"] < 1):
            out.append("snapshots must be a positive integer")
    elif k == "decoupling":
        _validate_hamiltonian(cfg["hamiltonian"], out)
        if cfg["mode"] not in MODES:
            out.append(f"mode must be one of {', '.join(MODES)}")
        _positive(cfg["half_width"], "half_width", out)
        _positive(cfg["inner_half_width"], "inner_half_width", out)
        _validate_levels(cfg["levels"], out)
        _validate_gaussian(cfg["initial"], out, "initial")
        _positive(cfg["t_final"], "t_final", out)
    elif k == "compare-schrodinger":
        c = cfg["coherent"]
        for key in ("q0", "p0"):
            if not _is_num(c.get(key)):
                out.append(f"coherent.{key} must be a finite number")
        for key in ("omega", "mass", "hbar"):
            _positive(c.get(key), f"coherent.{key}", out)
        if c.get("sigma_q") is not None:
            _positive(c["sigma_q"], "coherent.sigma_q", out)
        _validate_grid(cfg["grid"], out)
        _positive(cfg["dt"], "dt", out)
        if not isinstance(cfg["times"], list) or not cfg["times"] or not all(_is_num(t) and t >= 0 for t in cfg["times"]):
            out.append("times must be a non-empty list of non-negative numbers")
        if not isinstance(cfg["nq"], int) or cfg["nq"] < 8:
            out.append("nq must be an integer >= 8")
        w = cfg["q_window"]
        if not (isinstance(w, list) and len(w) == 2 and all(_is_num(x) for x in w) and w[1] > w[0]):
            out.append("q_window must be [min, max] with max > min")
        if cfg["control_sigma_p"] is not None:
            _positive(cfg["control_sigma_p"], "control_sigma_p", out)
    elif k == "action-field":
        _validate_hamiltonian(cfg["hamiltonian"], out)
        _positive(cfg["half_width"], "half_width", out)
        _positive(cfg["inner_half_width"], "inner_half_width", out)
        _validate_levels(cfg["levels"], out)
        _positive(cfg["t"], "t", out)
        if not isinstance(cfg["substeps"], int) or cfg["substeps"] < 1:
            out.append("substeps must be a positive integer")
        _coeff_matrix(cfg["initial_phase"], "initial_phase", out)
        if not _is_num(cfg["initial_phase_wave"]):
            out.append("initial_phase_wave must be a finite number")
    return out


# builders -------------------------------------------------------------------

def build_hamiltonian(h: dict) -> NumericHamiltonian:
    if "coefficients" in h:
        return NumericHamiltonian(_ragged(h["coefficients"]))
    return NumericHamiltonian.separable(h["mass"], h.get("potential", [0.0]))


def build_grid(g: dict) -> PhaseGrid:
    if "q" in g:
        return PhaseGrid(g["q"][0], g["q"][1], g["p"][0], g["p"][1], g["nq"], g["np"])
    center = tuple(g.get("center", (0.0, 0.0)))
    return PhaseGrid.square(g["half_width"], g["n"], center)


def build_evolution(e: dict) -> EvolutionConfig:
    return EvolutionConfig(e["mode"], e["hbar"], e["dt"], e["interpolation"], e["integrator"])


def _ragged(rows) -> np.ndarray:
    width = max(len(r) for r in rows)
    return np.array([list(r) + [0.0] * (width - len(r)) for r in rows], dtype=float)


def phase_function(rows):
    """``S(q, p) = sum c[i][j] q^i p^j`` as a vectorized callable."""
    c = _ragged(rows)
    return lambda q, p, *_: np.polynomial.polynomial.polyval2d(q, p, c)


def build_ensemble(grid: PhaseGrid, s: dict):
    return gaussian_ensemble(grid, s["q0"], s["p0"], s["sigma_q"], s["sigma_p"],
                             S0=phase_function(s.get("phase", [[0.0]])))


# experiments ------------------------------------------------------------------

def _exp_verify_algebra(cfg, rep: RunReport, out: Path):
    r = verify_identities(cfg["n_pairs"], rep.seed, tuple(cfg["dofs"]), cfg["max_degree"])
    for name, n_fail in r.counts().items():
        rep.check(f"identity:{name}", n_fail, 0, "==")
    rep.check("unit:L_1 == 1", r.unit_ok, True, "==")
    rep.check("unit:D_1 == 0 != 1", r.kvn_unit_fails, True, "==")
    rep.results["identities"] = r.to_json()


def _exp_tables(cfg, rep: RunReport, out: Path):
    r = verify_tables(Fraction(str(cfg["mass"])))
    for kind in ("poisson", "commutator", "translation"):
        for rel, ok in r.relations(kind).items():
            rep.check(f"{kind}:{rel}", ok, True, "==")
    rep.results["tables"] = r.to_json()
    rows = {
        "entry": np.arange(len(r.entries)),
        "passed": np.array([e.passed for e in r.entries], dtype=float),
    }
    io.write_columns_csv(out / "tables.csv", rows)
    io.write_json(out / "table_entries.json", [
        {"name": e.name, "passed": e.passed, "got": e.got, "expected": e.expected} for e in r.entries
    ])
    rep.artifacts += ["tables.csv", "table_entries.json"]


def _exp_groenewold(cfg, rep: RunReport, out: Path):
    a = Polynomial.from_json(cfg["a"]) if cfg["a"] is not None else None
    b = Polynomial.from_json(cfg["b"]) if cfg["b"] is not None else None
    g = groenewold_demo(a, b)
    rep.check("difference is nonzero", not g.preserved, True, "==")
    broken = sorted(f"{x},{y}" for (x, y), d in span_defects().items() if not d.preserved)
    rep.check("span {1,q,p,l,t} preserved", len(broken), 0, "==")
    rep.results["groenewold"] = {k: v for k, v in g.to_json().items() if k != "difference_json"}
    rep.results["span_failures"] = broken
    io.write_json(out / "difference.json", g.difference.to_json())
    rep.artifacts.append("difference.json")


def _write_snapshot(out: Path, stem: str, f, hbar, rep: RunReport):
    io.write_field_csv(out / f"{stem}.csv", f, hbar)
    io.write_matrix_dat(out / f"{stem}_amp.dat", f.grid, f.amp)
    io.write_matrix_dat(out / f"{stem}_phase.dat", f.grid, f.phase)
    rep.artifacts += [f"{stem}.csv", f"{stem}_amp.dat", f"{stem}_phase.dat"]


def _exp_evolve(cfg, rep: RunReport, out: Path):
    H = build_hamiltonian(cfg["hamiltonian"])
    grid = build_grid(cfg["grid"])
    ecfg = build_evolution(cfg["evolution"])
    f0 = build_ensemble(grid, cfg["initial"])
    t_final = cfg["t_final"]
    n_steps = int(np.ceil(t_final / ecfg.dt - 1e-9))
    store = max(1, n_steps // cfg["snapshots"]) if n_steps else 1
    run = evolve(f0, H, ecfg, t_final, store_every=store)
    drift = float(np.max(np.abs(run.norms - run.norms[0])) / run.norms[0])
    rep.check("relative norm drift", drift, cfg["tolerances"]["norm_drift"])
    if t_final == 0:
        same = bool(np.array_equal(run.final.amp, f0.amp) and np.array_equal(run.final.phase, f0.phase))
        rep.check("t_final = 0 leaves the state unchanged", same, True, "==")
    rep.results.update({
        "steps": run.steps,
        "dt": run.dt,
        "norm_initial": float(run.norms[0]),
        "norm_final": float(run.norms[-1]),
        "max_shift_cells": run.max_shift_cells,
        "grid": grid.to_json(),
        "snapshot_times": run.times,
    })
    _write_snapshot(out, "initial", f0, ecfg.hbar, rep)
    _write_snapshot(out, "final", run.final, ecfg.hbar, rep)
    io.write_columns_csv(out / "norms.csv", {"t": run.dt * np.arange(len(run.norms)), "norm": run.norms})
    rep.artifacts.append("norms.csv")


def _exp_decoupling(cfg, rep: RunReport, out: Path):
    H = build_hamiltonian(cfg["hamiltonian"])
    mode = cfg["mode"]
    inner = cfg["inner_half_width"]
    ra, rp, ns, dts = [], [], [], []
    for n, dt in cfg["levels"]:
        grid = PhaseGrid.square(cfg["half_width"], n)
        f0 = build_ensemble(grid, cfg["initial"])
        run = evolve(f0, H, EvolutionConfig(mode=mode, dt=dt), cfg["t_final"], store_every=1)
        r_amp, r_phase = decoupling_residuals(run.history, H, mode)
        qq, pp = grid.mesh()
        mask = (np.abs(qq) <= inner) & (np.abs(pp) <= inner)
        ra.append(float(np.nanmax(np.abs(r_amp[mask]))))
        rp.append(float(np.nanmax(np.abs(r_phase[mask]))))
        ns.append(n)
        dts.append(dt)
    tol = cfg["tolerances"]["min_ratio"]
    for i in range(len(ra) - 1):
        rep.check(f"amp residual ratio level {i}->{i + 1}", ra[i] / ra[i + 1], tol, ">=")
        rep.check(f"phase residual ratio level {i}->{i + 1}", rp[i] / rp[i + 1], tol, ">=")
    rep.results.update({"n": ns, "dt": dts, "r_amp": ra, "r_phase": rp, "mode": mode})
    io.write_columns_csv(out / "residuals.csv", {"n": ns, "dt": dts, "r_amp": ra, "r_phase": rp})
    rep.artifacts.append("residuals.csv")


def _exp_superposition(cfg, rep: RunReport, out: Path):
    H = build_hamiltonian(cfg["hamiltonian"])
    grid = build_grid(cfg["grid"])
    ecfg = build_evolution(cfg["evolution"])
    f1 = build_ensemble(grid, cfg["initial"])
    f2 = build_ensemble(grid, cfg["second"])
    r = superposition_check(f1, f2, H, ecfg, cfg["t_final"])
    tol = cfg["tolerances"]["defect"]
    rep.check("superposition defect", r.defect, tol)
    rep.check("i-scaling defect", r.scaling_defect, tol)
    rep.results.update({"defect": r.defect, "scaling_defect": r.scaling_defect,
                        "norm_1": r.norm_1, "norm_2": r.norm_2})
    psi = assemble_psi(f1, ecfg.hbar).values + assemble_psi(f2, ecfg.hbar).values
    io.write_matrix_dat(out / "initial_abs_psi.dat", grid, np.abs(psi))
    rep.artifacts.append("initial_abs_psi.dat")


def _exp_compare_schrodinger(cfg, rep: RunReport, out: Path):
    c = cfg["coherent"]
    spec = CoherentStateSpec(c["q0"], c["p0"], c["sigma_q"], c["omega"], c["mass"], c["hbar"])
    grid = build_grid(cfg["grid"])
    tol = cfg["tolerances"]
    times = [float(t) for t in cfg["times"]]
    matched = harmonic_bridge(spec, grid, times, None, cfg["dt"], cfg["nq"], tuple(cfg["q_window"]))
    for i, cmp in enumerate(matched.comparisons):
        rep.check(f"matched marginal L_inf at t={cmp.t:.6g}", cmp.linf, tol["marginal_linf"])
        io.write_columns_csv(out / f"marginal_{i}.csv", {"q": cmp.q, "classical": cmp.classical, "quantum": cmp.quantum})
        rep.artifacts.append(f"marginal_{i}.csv")
    rep.results["matched"] = matched.to_json()
    if cfg["control_sigma_p"] is not None:
        control = harmonic_bridge(spec, grid, [max(times)], cfg["control_sigma_p"], cfg["dt"], cfg["nq"],
                                  tuple(cfg["q_window"]))
        rep.check(f"mismatched sigma_p={cfg['control_sigma_p']} L_inf at t={max(times):.6g}",
                  control.max_linf, tol["control_min"], ">")
        rep.results["control"] = control.to_json()
    psi0 = coherent_state(spec, cfg["q_window"][0], cfg["q_window"][1], cfg["nq"])
    V = harmonic_potential(spec.mass, spec.omega)
    run = schrodinger_run(psi0, V, spec.period, cfg["dt"])
    rep.check("coherent-state revival L2", l2_distance_up_to_phase(psi0, run.final), tol["revival_l2"])
    rep.check("split-step norm drift", run.norm_drift, tol["norm"])
    H = NumericHamiltonian.harmonic(spec.mass, spec.omega).to_polynomial()
    proj = projected_hamiltonian_check(H, spec.hbar)
    rep.check("projected Hamiltonian matches solver generator", proj.passed, True, "==")
    rep.results["projected_hamiltonian"] = proj.to_json()
    io.write_wavefunction_csv(out / "quantum_period.csv", run.final)
    rep.artifacts.append("quantum_period.csv")


def _exp_action_field(cfg, rep: RunReport, out: Path):
    H = build_hamiltonian(cfg["hamiltonian"])
    poly = phase_function(cfg["initial_phase"])
    amp = cfg["initial_phase_wave"]

    def S_s(q, p, *_):
        return poly(q, p) + amp * np.sin(q) * np.cos(0.7 * p)

    t = cfg["t"]
    errs = []
    S_fine = grid = None
    for n, dt in cfg["levels"]:
        grid = PhaseGrid.square(cfg["half_width"], n)
        times = [t - dt, t, t + dt]
        hist = [action_field(H, grid, 0.0, tt, dt / cfg["substeps"], S_s=S_s)[0] for tt in times]
        r = pde_residual(times, hist, H, grid)
        qq, pp = grid.mesh()
        mask = (np.abs(qq) <= cfg["inner_half_width"]) & (np.abs(pp) <= cfg["inner_half_width"])
        errs.append(float(np.nanmax(np.abs(r[mask]))))
        S_fine = hist[1]
    orders = observed_order(errs).tolist()
    for i, o in enumerate(orders):
        rep.check(f"observed order level {i}->{i + 1}", o, cfg["tolerances"]["min_order"], ">=")
    rep.results.update({"levels": cfg["levels"], "residual_max": errs, "orders": orders})
    io.write_matrix_dat(out / "action.dat", grid, S_fine)
    io.write_columns_csv(out / "residuals.csv", {"n": [lv[0] for lv in cfg["levels"]],
                                                 "dt": [lv[1] for lv in cfg["levels"]], "residual": errs})
    rep.artifacts += ["action.dat", "residuals.csv"]


EXPERIMENTS = {
    "verify-algebra": _exp_verify_algebra,
    "tables": _exp_tables,
    "groenewold": _exp_groenewold,
    "evolve": _exp_evolve,
    "decoupling": _exp_decoupling,
    "superposition": _exp_superposition,
    "compare-schrodinger": _exp_compare_schrodinger,
    "action-field": _exp_action_field,
}


def run(config: dict | None, kind: str | None = None, out_dir=None, seed: int | None = None) -> RunReport:
    """Validate, execute and write ``report.json`` (plus artifacts) into ``out_dir``.

    Raises :class:`ConfigError` for invalid configs. Numerical failures
    (``ArithmeticError``) are recorded in the report as an abort and re-raised.
    """
    config = dict(config or {})
    if seed is not None:
        config["seed"] = seed
    violations = validate(config, kind)
    if violations:
        raise ConfigError(violations)
    cfg = resolve(config, kind)
    out = Path(out_dir) if out_dir is not None else Path(f"liouq-{cfg['kind']}")
    out.mkdir(parents=True, exist_ok=True)
    rep = RunReport(cfg["kind"], cfg, cfg["seed"])
    t0 = time.perf_counter()
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            EXPERIMENTS[cfg["kind"]](cfg, rep, out)
        rep.results["warnings"] = sorted({str(w.message) for w in caught})
    except ArithmeticError as e:
        rep.error = f"{type(e).__name__}: {e}"
        raise
    except ValueError as e:
        rep.error = f"{type(e).__name__}: {e}"
        raise ConfigError([str(e)]) from e
    finally:
        rep.timing = {"wall_seconds": time.perf_counter() - t0}
        io.write_json(out / "report.json", rep.to_json())
    return rep


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liouq", description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", type=Path, help="JSON experiment config (built-in defaults when omitted)")
    ap.add_argument("--out", type=Path, help="output directory (default ./liouq-<kind>)")
    ap.add_argument("--seed", type=int, help="random seed, overrides the config")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    config = None
    if args.config is not None:
        try:
            config = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"liouq: cannot read config: {e}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        rep = run(config, args.kind, args.out, args.seed)
    except ConfigError as e:
        for v in e.violations:
            print(f"liouq: config: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as e:
        print(f"liouq: numerical abort: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    for c in rep.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.value} {c.relation} {c.tolerance}")
    print(f"{rep.kind}: {rep.status}")
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
