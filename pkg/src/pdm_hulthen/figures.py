"""Parameter presets for the profile and energy-sweep figures, plus the trend
checks applied to the swept series.

The original figure parameters are unknown. Every preset here is a
reconstruction in natural units: q = 1, lambda = 0.1, V0 = 1, V1 = 0.1,
m = 1, B in [0, 5], flux in [0, 10], M0 in {0.4, 0.5, 0.6}. For the flux
sweeps the field is held at B0 = 2.5, the middle of the field range.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import FieldConfig, ModelParams, PhysicalConstants
from .errors import NoRootInBracket, NonRealOnBracket
from .nu import NATURAL, closed_form_levels, energy_from_quantization

SWEEP_VARIABLES = ("b0", "flux", "m0")
SWEEP_BRANCHES = ("plus", "minus", "root")
DEFAULT_M0_VALUES = (0.4, 0.5, 0.6)


@dataclass(frozen=True)
class ProfilePreset:
    kind: str
    q_values: tuple[float, ...]
    m0_values: tuple[float, ...]


PROFILE_PRESETS = {
    "fig1": ProfilePreset("potential", (3.0, 4.0), (0.5,)),
    "fig2": ProfilePreset("potential", (-1.0, -2.0, -3.0), (0.5,)),
    "fig3": ProfilePreset("mass", (3.0, 4.0), DEFAULT_M0_VALUES),
    "fig4": ProfilePreset("mass", (-1.0, -2.0, -3.0), DEFAULT_M0_VALUES),
}


@dataclass(frozen=True)
class SweepPreset:
    variable: str
    branch: str
    start: float
    stop: float
    num: int
    params: ModelParams
    field: FieldConfig
    m: int = 1
    n: int = 0
    m0_values: tuple[float, ...] = DEFAULT_M0_VALUES


FIGURE_PARAMS = ModelParams(v0=1.0, v1=0.1, lam=0.1, q=1.0, m0=0.5)
FLUX_SWEEP_FIELD = 2.5

SWEEP_PRESETS = {
    "fig5": SweepPreset("b0", "plus", 0.0, 5.0, 51, FIGURE_PARAMS, FieldConfig(0.0, 0.0)),
    "fig6": SweepPreset("flux", "plus", 0.0, 10.0, 51, FIGURE_PARAMS, FieldConfig(FLUX_SWEEP_FIELD, 0.0)),
    "fig7": SweepPreset("b0", "minus", 0.0, 5.0, 51, FIGURE_PARAMS, FieldConfig(0.0, 0.0)),
    "fig8": SweepPreset("flux", "minus", 0.0, 10.0, 51, FIGURE_PARAMS, FieldConfig(FLUX_SWEEP_FIELD, 0.0)),
}


@dataclass(frozen=True)
class SweepPoint:
    sweep_value: float
    m0: float
    branch: str
    energy: float

    @property
    def valid(self) -> bool:
        return math.isfinite(self.energy)


def _apply(variable: str, value: float, m0: float, p: ModelParams,
           f: FieldConfig) -> tuple[ModelParams, FieldConfig]:
    if variable == "b0":
        return replace(p, m0=m0), replace(f, b0=value)
    if variable == "flux":
        return replace(p, m0=m0), replace(f, phi_ab=value)
    if variable == "m0":
        return replace(p, m0=value), f
    raise ValueError(f"unknown sweep variable {variable!r}")


def point_energy(branch: str, n: int, m: int, p: ModelParams, f: FieldConfig,
                 consts: PhysicalConstants = NATURAL) -> float:
    """Energy of one branch at one parameter point, nan when that branch has no valid level."""
    if branch in ("plus", "minus"):
        return closed_form_levels(n, m, p, f, consts)[branch].value
    if branch == "root":
        try:
            return energy_from_quantization(n, m, p, f, consts).value
        except (NoRootInBracket, NonRealOnBracket):
            return math.nan
    raise ValueError(f"unknown branch {branch!r}")


def run_sweep(variable: str, values, branches, p: ModelParams, f: FieldConfig, *,
              m: int = 1, n: int = 0, m0_values=DEFAULT_M0_VALUES,
              consts: PhysicalConstants = NATURAL, jobs: int = 1) -> list[SweepPoint]:
    """Evaluate every (M0, branch, value) point; rows come back in that nesting order.

    With ``variable="m0"`` the swept value is the mass and ``m0_values`` is ignored.
    """
    if variable not in SWEEP_VARIABLES:
        raise ValueError(f"unknown sweep variable {variable!r}")
    series_m0 = (None,) if variable == "m0" else tuple(m0_values)
    tasks = []
    for m0 in series_m0:
        for branch in branches:
            for v in values:
                mass = float(v) if m0 is None else float(m0)
                tasks.append((float(v), mass, branch))

    def evaluate(task):
        v, mass, branch = task
        pp, ff = _apply(variable, v, mass, p, f)
        return SweepPoint(v, mass, branch, point_energy(branch, n, m, pp, ff, consts))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(evaluate, tasks))
    return [evaluate(t) for t in tasks]


def preset_values(preset: SweepPreset) -> np.ndarray:
    return np.linspace(preset.start, preset.stop, preset.num)


def run_preset(name: str, branch: str | None = None, jobs: int = 1) -> list[SweepPoint]:
    pr = SWEEP_PRESETS[name]
    return run_sweep(pr.variable, preset_values(pr), (branch or pr.branch,), pr.params, pr.field,
                     m=pr.m, n=pr.n, m0_values=pr.m0_values, jobs=jobs)


def series(points, m0: float, branch: str) -> tuple[np.ndarray, np.ndarray]:
    """Valid (sweep_value, E) pairs of one series."""
    sel = [(pt.sweep_value, pt.energy) for pt in points
           if pt.m0 == m0 and pt.branch == branch and pt.valid]
    if not sel:
        return np.empty(0), np.empty(0)
    x, y = zip(*sel)
    return np.asarray(x), np.asarray(y)


def strictly_decreasing(y) -> bool:
    y = np.asarray(y, dtype=float)
    return y.size >= 2 and bool(np.all(np.diff(y) < 0))


def linear_fit_r2(x, y) -> float:
    """Coefficient of determination of the least-squares line through (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        return math.nan
    coef = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - np.polyval(coef, x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else math.nan


def _series_checks(points, branch: str, m0_values, check: str) -> list[dict]:
    out = []
    for m0 in m0_values:
        x, y = series(points, m0, branch)
        total = sum(1 for pt in points if pt.m0 == m0 and pt.branch == branch)
        rec = {"M0": m0, "branch": branch, "n_points": total, "n_valid": int(x.size)}
        if check == "decreasing":
            rec["passed"] = strictly_decreasing(y)
        else:
            r2 = linear_fit_r2(x, y)
            rec["r2"] = r2
            rec["passed"] = bool(r2 > 0.999)
        out.append(rec)
    return out


def _trend(name: str, check: str, jobs: int) -> dict:
    """Run one preset; fall back to the quantization roots if its branch is invalid everywhere."""
    pr = SWEEP_PRESETS[name]
    points = run_preset(name, jobs=jobs)
    branch = pr.branch
    fallback = not any(pt.valid for pt in points)
    if fallback:
        branch = "root"
        points = run_preset(name, branch="root", jobs=jobs)
    records = _series_checks(points, branch, pr.m0_values, check)
    return {
        "preset": name,
        "check": check,
        "branch": branch,
        "fallback_to_root": fallback,
        "series": records,
        "passed": all(r["passed"] for r in records),
    }


def mass_ordering_at_zero_flux(jobs: int = 1) -> dict:
    """At flux 0 the series for the M0 values must be strictly ordered (either direction), per branch."""
    out = {}
    for name in ("fig6", "fig8"):
        pr = SWEEP_PRESETS[name]
        pts = run_sweep("flux", [0.0], (pr.branch,), pr.params, pr.field, m=pr.m, n=pr.n,
                        m0_values=pr.m0_values, jobs=jobs)
        e = [pt.energy for pt in pts]
        finite = all(math.isfinite(v) for v in e)
        d = np.diff(e)
        ordered = finite and (bool(np.all(d > 0)) or bool(np.all(d < 0)))
        out[pr.branch] = {"M0": list(pr.m0_values), "E": e, "passed": ordered}
    return {"check": "ordered_in_M0_at_zero_flux", "branches": out,
            "passed": all(v["passed"] for v in out.values())}


def figure_trends(jobs: int = 1) -> dict:
    """All qualitative figure claims checked on the shipped presets."""
    return {
        "minus_decreasing_in_b0": _trend("fig7", "decreasing", jobs),
        "minus_linear_in_flux": _trend("fig8", "linear", jobs),
        "plus_decreasing_in_flux": _trend("fig6", "decreasing", jobs),
        "mass_ordering": mass_ordering_at_zero_flux(jobs),
    }
