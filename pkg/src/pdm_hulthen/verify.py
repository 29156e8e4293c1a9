"""Verification campaign: every energy route against the finite-difference
oracle, a structural identity suite, refinement orders and the figure trends.

``build_report`` returns plain JSON-ready data. Nothing in it depends on wall
time or on dict ordering, so serializing with ``sort_keys`` is reproducible
byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import FieldConfig, ModelParams, PhysicalConstants
from .errors import NoRootInBracket, NonMonotoneRefinement, NonRealOnBracket, PdmError
from .figures import DEFAULT_M0_VALUES, figure_trends
from .nu import NATURAL, closed_form_levels, compute_aux, energy_from_quantization, theta_identity_check
from .oracle import (
    RadialGrid,
    b_inner,
    build_sl_problem,
    count_nodes,
    drift_coefficient,
    integrating_factor,
    log_integrating_factor,
    residual_norm,
    richardson_order,
    solve_eigenproblem,
)
from .wavefunction import inner_edge_collapse, ode_exponents, terminating_energy

MATCH_RTOL = 1e-3
THETA_RTOL = 1e-12
MU_RTOL = 1e-6
ORTHO_TOL = 1e-10
NODE_LEVELS = 4


@dataclass(frozen=True)
class VerifyConfig:
    params: ModelParams
    fields: FieldConfig
    consts: PhysicalConstants
    grid: RadialGrid
    m_values: tuple[int, ...] = (0,)
    n_max: int = 2
    lambda_values: tuple[float, ...] = (0.05, 0.1, 0.2)
    m0_values: tuple[float, ...] = DEFAULT_M0_VALUES
    identity_draws: int = 10_000
    seed: int = 20240101
    figures: bool = True
    jobs: int = 1


def _num(x) -> float | None:
    return float(x) if x is not None and math.isfinite(x) else None


def jsonable(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into None."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _reason(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def compare(name: str, a: float | None, b: float | None, *, why_a: str | None = None,
            why_b: str | None = None, rtol: float = MATCH_RTOL) -> dict:
    """MATCH when both values exist and |a - b| <= rtol |b|; otherwise MISMATCH with a reason."""
    rec = {"pair": name, "a": _num(a), "b": _num(b), "rel_dev": None, "status": "MISMATCH", "reason": None}
    if rec["a"] is None or rec["b"] is None:
        missing = [w for w, v in ((why_a or "first value invalid", rec["a"]),
                                  (why_b or "second value invalid", rec["b"])) if v is None]
        rec["reason"] = "; ".join(missing)
        return rec
    dev = abs(rec["a"] - rec["b"]) / max(abs(rec["b"]), np.finfo(float).tiny)
    rec["rel_dev"] = dev
    if dev <= rtol:
        rec["status"] = "MATCH"
    else:
        rec["reason"] = f"relative deviation {dev:.6g} exceeds {rtol:g}"
    return rec


def _root(n, m, p, f, consts):
    try:
        return energy_from_quantization(n, m, p, f, consts).value, None
    except (NoRootInBracket, NonRealOnBracket) as exc:
        return None, _reason(exc)


def _indicial(n, m, p, f, consts):
    try:
        lv = terminating_energy(n, m, p, f, consts)
    except (PdmError, ValueError) as exc:
        return None, _reason(exc)
    if not lv.valid:
        return None, "indicial: no terminating solution (b <= 0)"
    return lv.value, None


def spectrum_records(cfg: VerifyConfig) -> tuple[list[dict], dict]:
    """One record per (n, m) plus the structural data of the oracle solves."""
    p, f, consts = cfg.params, cfg.fields, cfg.consts
    records, structure = [], {}
    k = max(cfg.n_max + 1, NODE_LEVELS)
    for m in cfg.m_values:
        slp = build_sl_problem(p, f, m, consts, cfg.grid)
        sol = solve_eigenproblem(slp, k)
        structure[str(m)] = _structure(slp, sol, p, f, m, consts)
        for n in range(cfg.n_max + 1):
            oracle = float(sol.eigenvalues[n])
            root, why_root = _root(n, m, p, f, consts)
            closed = closed_form_levels(n, m, p, f, consts)
            plus, minus = closed["plus"].value, closed["minus"].value
            why_cf = "closed form: negative discriminant or non-real W1"
            ind, why_ind = _indicial(n, m, p, f, consts)
            records.append({
                "n": n,
                "m": m,
                "E_oracle": oracle,
                "E_nu_root": _num(root),
                "E_closed_plus": _num(plus),
                "E_closed_minus": _num(minus),
                "E_indicial": _num(ind),
                "comparisons": [
                    compare("nu_root_vs_oracle", root, oracle, why_a=why_root),
                    compare("closed_plus_vs_nu_root", plus, root, why_a=why_cf, why_b=why_root),
                    compare("closed_minus_vs_nu_root", minus, root, why_a=why_cf, why_b=why_root),
                    compare("closed_plus_vs_oracle", plus, oracle, why_a=why_cf),
                    compare("closed_minus_vs_oracle", minus, oracle, why_a=why_cf),
                    compare("indicial_vs_oracle", ind, oracle, why_a=why_ind),
                ],
            })
    return records, structure


def _structure(slp, sol, p, f, m, consts) -> dict:
    vecs = sol.eigenvectors
    gram = np.array([[b_inner(slp, a, b) for b in vecs] for a in vecs])
    off = gram - np.diag(np.diag(gram))
    nodes = [count_nodes(v) for v in vecs[:NODE_LEVELS]]
    residuals = [residual_norm(float(e), v, p, f, m, consts, slp.grid)
                 for e, v in zip(sol.eigenvalues, vecs)]
    return {
        "eigenvalues": [float(e) for e in sol.eigenvalues],
        "orthogonality_max_offdiag": float(np.max(np.abs(off))),
        "orthogonality_passed": bool(np.max(np.abs(off)) < ORTHO_TOL),
        "node_counts": nodes,
        "node_counts_passed": nodes == list(range(len(nodes))),
        "oracle_residuals": residuals,
    }


def theta_identity_suite(draws: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        consts = PhysicalConstants(*rng.uniform(0.5, 2.0, size=4))
        p = ModelParams(v0=1.0, v1=0.1, lam=float(rng.uniform(1e-6, 3.0)), q=1.0, m0=1.0)
        f = FieldConfig(b0=float(rng.uniform(0.0, 5.0)), phi_ab=float(rng.uniform(-10.0, 10.0)))
        m = int(rng.integers(-5, 6))
        theta = compute_aux(p, f, m, consts).theta
        worst = max(worst, theta_identity_check(p, f, m, consts) / max(1.0, abs(theta)))
    return {"draws": draws, "seed": seed, "max_scaled_residual": worst, "passed": worst <= THETA_RTOL}


def mu_log_derivative_suite(p: ModelParams, grid: RadialGrid, samples: int = 200) -> dict:
    """Central difference of ln mu against P for the configured q and a few others.

    The step shrinks with the distance to the radius where 1 - q e^{-lambda rho}
    vanishes, so points next to it are differenced as accurately as the rest.
    """
    out = {}
    worst_all = 0.0
    for q in sorted({p.q, 2.0, 0.5, -1.0, -2.0}):
        pq = replace(p, q=q)
        singular = math.log(q) / p.lam if q > 0 else -math.inf
        lo = max(grid.rho_min, singular + 1e-3 / p.lam)
        rho = np.linspace(lo, grid.rho_max, samples)
        step = 1e-4 * np.minimum(1.0 / p.lam, rho - singular)
        num = (log_integrating_factor(rho + step, pq) - log_integrating_factor(rho - step, pq)) / (2 * step)
        exact = drift_coefficient(rho, pq)
        mask = exact != 0
        worst = float(np.max(np.abs(num - exact)[mask] / np.abs(exact[mask]))) if mask.any() else 0.0
        out[repr(float(q))] = worst
        worst_all = max(worst_all, worst)
    return {"max_relative_error": worst_all, "per_q": out, "passed": worst_all <= MU_RTOL}


def q_minus_one_suite(p: ModelParams, grid: RadialGrid) -> dict:
    mu = integrating_factor(grid.nodes, replace(p, q=-1.0))
    return {"passed": bool(np.all(mu == 1.0))}


def omega_bilinearity_suite(draws: int, seed: int) -> dict:
    rng = np.random.default_rng(seed + 1)
    p = ModelParams(v0=1.0, v1=0.1, lam=0.1, q=1.0, m0=1.0)
    ok = True
    for _ in range(draws):
        consts = PhysicalConstants(*rng.uniform(0.5, 2.0, size=4))
        m = int(rng.integers(-5, 6))
        phi = float(rng.uniform(-10.0, 10.0))
        w = compute_aux(p, FieldConfig(0.0, phi), m, consts).omega
        w2m = compute_aux(p, FieldConfig(0.0, phi), 2 * m, consts).omega
        w2p = compute_aux(p, FieldConfig(0.0, 2 * phi), m, consts).omega
        ok = ok and w2m == 2 * w and w2p == 2 * w
    return {"draws": draws, "passed": bool(ok)}


def convergence_records(cfg: VerifyConfig, levels: int = 3) -> dict:
    """Eigenvalues on grids with 1x, 2x, 4x the intervals; fitted order per level."""
    p, f, consts, g = cfg.params, cfg.fields, cfg.consts, cfg.grid
    intervals = g.n_points - 1
    grids = [RadialGrid(g.rho_min, g.rho_max, intervals * s + 1) for s in (1, 2, 4)]
    out = {}
    for m in cfg.m_values:
        vals = np.array([solve_eigenproblem(build_sl_problem(p, f, m, consts, gr), levels).eigenvalues
                         for gr in grids])
        per_level = []
        for j in range(levels):
            rec = {"level": j, "eigenvalues": [float(v) for v in vals[:, j]], "order": None, "reason": None}
            try:
                rec["order"] = richardson_order([gr.h for gr in grids], vals[:, j])
            except NonMonotoneRefinement as exc:
                rec["reason"] = _reason(exc)
            per_level.append(rec)
        out[str(m)] = {
            "n_points": [gr.n_points for gr in grids],
            "levels": per_level,
            "inner_edge_collapse": inner_edge_collapse(p, f, m, consts),
            "inner_edge_exponents": _inner_exponents(p, f, m, consts),
        }
    return out


def _inner_exponents(p, f, m, consts):
    try:
        ex = ode_exponents(compute_aux(p, f, m, consts), p.q, p.lam)
    except PdmError as exc:
        return {"at_zero": None, "at_infinity": None, "reason": _reason(exc)}
    return {"at_zero": list(ex.at_zero), "at_infinity": list(ex.at_infinity), "reason": None}


def closed_form_grid(cfg: VerifyConfig) -> list[dict]:
    """Closed form (both signs) against the quantization root over lambda x M0."""
    out = []
    for lam in cfg.lambda_values:
        for m0 in cfg.m0_values:
            p = replace(cfg.params, lam=lam, m0=m0)
            for m in cfg.m_values:
                for n in range(cfg.n_max + 1):
                    root, why_root = _root(n, m, p, cfg.fields, cfg.consts)
                    closed = closed_form_levels(n, m, p, cfg.fields, cfg.consts)
                    why_cf = "closed form: negative discriminant or non-real W1"
                    out.append({
                        "lambda": lam,
                        "M0": m0,
                        "n": n,
                        "m": m,
                        "comparisons": [
                            compare("closed_plus_vs_nu_root", closed["plus"].value, root,
                                    why_a=why_cf, why_b=why_root),
                            compare("closed_minus_vs_nu_root", closed["minus"].value, root,
                                    why_a=why_cf, why_b=why_root),
                        ],
                    })
    return out


def build_report(cfg: VerifyConfig) -> dict:
    """The full campaign.

    ``suite_passed`` covers the oracle-anchored structural checks only;
    energy mismatches between routes are recorded as data.
    Raises ConvergenceFailure if the eigensolver itself fails.
    """
    records, structure = spectrum_records(cfg)
    identities = {
        "theta_completed_square": theta_identity_suite(cfg.identity_draws, cfg.seed),
        "mu_log_derivative": mu_log_derivative_suite(cfg.params, cfg.grid),
        "q_minus_one_mu_identically_one": q_minus_one_suite(cfg.params, cfg.grid),
        "omega_bilinear": omega_bilinearity_suite(cfg.identity_draws, cfg.seed),
    }
    structural_ok = all(s["orthogonality_passed"] and s["node_counts_passed"] for s in structure.values())
    report = {
        "match_rtol": MATCH_RTOL,
        "spectrum": records,
        "oracle_structure": structure,
        "identities": identities,
        "convergence": convergence_records(cfg),
        "closed_form_grid": closed_form_grid(cfg),
        "suite_passed": structural_ok and all(v["passed"] for v in identities.values()),
    }
    if cfg.figures:
        report["figure_trends"] = figure_trends(cfg.jobs)
    return jsonable(report)
