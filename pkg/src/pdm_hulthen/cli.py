"""Command-line interface.

Subcommands ``profile``, ``spectrum``, ``sweep``, ``wavefunction``, ``thermo``
and ``verify``. Settings resolve as defaults < preset < config file < flags.
The config file is flat ``key = value`` text with ``#`` comments; keys are
the long flag names with dashes or underscores (``n_max = 3``).

Exit codes: 0 success, 2 invalid parameters, 3 no valid level, 4 numerical
failure.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (
    DomainSpec,
    FieldConfig,
    ModelParams,
    PhysicalConstants,
    mass_value,
    potential_value,
)
from .errors import (
    ConvergenceFailure,
    DivergentNorm,
    EmptySpectrum,
    NoRootInBracket,
    NonRealCoefficient,
    NonRealOnBracket,
    PdmError,
    ResidualTooLarge,
)
from .figures import DEFAULT_M0_VALUES, PROFILE_PRESETS, SWEEP_PRESETS, run_sweep
from .nu import EnergyLevel, closed_form_levels, energy_from_quantization, enumerate_bound_states
from .oracle import RadialGrid, default_grid, solve_radial
from .thermo import spectrum_energies, thermo_quantities
from .verify import VerifyConfig, build_report
from .wavefunction import assemble_wavefunction, norm_integral, terminating_energy

EXIT_OK, EXIT_INVALID, EXIT_EMPTY, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(Exception):
    pass


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Key:
    convert: Callable
    default: object
    help: str
    choices: tuple | None = None


KEYS: dict[str, Key] = {
    # model
    "v0": Key(float, 1.0, "Hulthen strength V0"),
    "v1": Key(float, 0.1, "Coulomb-like strength V1"),
    "lambda": Key(float, 0.1, "screening / mass constant lambda"),
    "q": Key(float, 1.0, "deformation parameter q"),
    "m0": Key(float, 1.0, "mass scale M0"),
    "b0": Key(float, 0.0, "magnetic field B0"),
    "flux": Key(float, 0.0, "Aharonov-Bohm flux"),
    "m": Key(int, 0, "magnetic quantum number"),
    "n": Key(int, 0, "radial quantum number"),
    "n_max": Key(int, 2, "highest radial quantum number"),
    "hbar": Key(float, 1.0, "reduced Planck constant"),
    "e_charge": Key(float, 1.0, "charge unit"),
    "c_light": Key(float, 1.0, "speed of light"),
    "k_boltzmann": Key(float, 1.0, "Boltzmann constant"),
    # grid
    "grid_points": Key(int, 4000, "grid nodes including both ends"),
    "rho_min": Key(float, None, "inner grid end (default just above the singular radius)"),
    "rho_max": Key(float, None, "outer grid end (default 60/lambda)"),
    # output
    "output": Key(str, None, "output path (default stdout)"),
    "format": Key(str, "csv", "output format", ("csv", "json")),
    # profile
    "kind": Key(str, "potential", "profile kind", ("potential", "mass")),
    "preset": Key(str, None, "figure preset", tuple(sorted({*PROFILE_PRESETS, *SWEEP_PRESETS}))),
    "q_values": Key(_float_list, None, "comma-separated q values for profiles"),
    "m0_values": Key(_float_list, None, "comma-separated M0 values (sweep default 0.4,0.5,0.6)"),
    # sweep
    "variable": Key(str, "b0", "swept parameter", ("b0", "flux", "m0")),
    "branch": Key(str, "both", "energy branch", ("plus", "minus", "root", "both", "all")),
    "start": Key(float, None, "first sweep value"),
    "stop": Key(float, None, "last sweep value"),
    "num": Key(int, 51, "number of sweep values"),
    "jobs": Key(int, 1, "worker threads for sweeps"),
    # wavefunction
    "level_source": Key(str, "indicial", "energy used for the wave function",
                        ("indicial", "nu_root", "plus", "minus", "oracle")),
    "exponents": Key(str, "ode", "edge exponents", ("ode", "tabulated")),
    "residual_tol": Key(float, None, "absolute residual tolerance (default relative 2e-2)"),
    # thermo
    "beta_min": Key(float, 0.1, "smallest beta"),
    "beta_max": Key(float, 10.0, "largest beta"),
    "beta_num": Key(int, 100, "number of beta values"),
    "d_beta": Key(float, None, "finite-difference step in beta (default 1e-4 beta)"),
    "spectrum_source": Key(str, "nu_root", "levels entering Z",
                           ("nu_root", "plus", "minus", "indicial", "oracle")),
    "energies": Key(_float_list, None, "explicit comma-separated energies for Z"),
    "m_values": Key(_int_list, None, "comma-separated m values (thermo: sum over them)"),
    # verify
    "lambda_values": Key(_float_list, (0.05, 0.1, 0.2), "lambda values of the closed-form audit grid"),
    "identity_draws": Key(int, 10_000, "random draws per identity check"),
    "seed": Key(int, 20240101, "seed of the identity draws"),
    "figures": Key(_bool, True, "include figure-trend checks in the report"),
}


def _canonical(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(" #", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = _canonical(key)
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _convert(key: str, value):
    spec = KEYS[key]
    if value is None or (isinstance(value, str) and value.lower() == "none"):
        return None
    try:
        v = spec.convert(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {value!r}") from exc
    if spec.choices is not None and v not in spec.choices:
        raise ConfigError(f"{key}: {v!r} is not one of {', '.join(spec.choices)}")
    return v


def preset_settings(name: str) -> dict:
    if name in PROFILE_PRESETS:
        pr = PROFILE_PRESETS[name]
        base = SWEEP_PRESETS["fig5"].params
        return {"kind": pr.kind, "q_values": pr.q_values, "m0_values": pr.m0_values,
                "v0": base.v0, "v1": base.v1, "lambda": base.lam}
    pr = SWEEP_PRESETS[name]
    return {
        "variable": pr.variable, "branch": pr.branch, "start": pr.start, "stop": pr.stop,
        "num": pr.num, "v0": pr.params.v0, "v1": pr.params.v1, "lambda": pr.params.lam,
        "q": pr.params.q, "m0": pr.params.m0, "b0": pr.field.b0, "flux": pr.field.phi_ab,
        "m": pr.m, "n": pr.n, "m0_values": pr.m0_values,
    }


def resolve_config(file_values: dict[str, str], flag_values: dict) -> dict:
    """defaults < preset < config file < flags."""
    explicit = {k: _convert(k, v) for k, v in file_values.items()}
    explicit.update({k: _convert(k, v) for k, v in flag_values.items()})
    cfg = {k: spec.default for k, spec in KEYS.items()}
    preset = explicit.get("preset")
    if preset is not None:
        cfg.update(preset_settings(preset))
    cfg.update(explicit)
    return cfg


# -- model objects ---------------------------------------------------------

def model_params(cfg: dict, **override) -> ModelParams:
    vals = dict(v0=cfg["v0"], v1=cfg["v1"], lam=cfg["lambda"], q=cfg["q"], m0=cfg["m0"])
    vals.update(override)
    return ModelParams(**vals)


def field_config(cfg: dict) -> FieldConfig:
    return FieldConfig(b0=cfg["b0"], phi_ab=cfg["flux"])


def constants(cfg: dict) -> PhysicalConstants:
    return PhysicalConstants(cfg["hbar"], cfg["e_charge"], cfg["c_light"], cfg["k_boltzmann"])


def radial_grid(cfg: dict, p: ModelParams) -> RadialGrid:
    return default_grid(p, cfg["grid_points"], cfg["rho_min"], cfg["rho_max"])


# -- output ----------------------------------------------------------------

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g") if math.isfinite(value) else ""
    if isinstance(value, (list, tuple)):
        return ",".join(fmt(v) for v in value)
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


@dataclass
class Table:
    columns: list[str]
    blocks: list[tuple[dict | None, list[list]]] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def add_block(self, rows, label: dict | None = None):
        self.blocks.append((label, rows))


def render_csv(command: str, cfg: dict, table: Table) -> str:
    buf = io.StringIO()
    buf.write(f"# command = {command}\n")
    for k in sorted(cfg):
        buf.write(f"# {k} = {fmt(cfg[k])}\n")
    for k in sorted(table.notes):
        buf.write(f"# {k} = {fmt(table.notes[k])}\n")
    buf.write(",".join(table.columns) + "\n")
    for label, rows in table.blocks:
        if label:
            buf.write("# series " + " ".join(f"{k}={fmt(v)}" for k, v in label.items()) + "\n")
        for row in rows:
            buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def render_json(command: str, cfg: dict, table: Table) -> str:
    doc = {
        "command": command,
        "config": {k: _json_value(v) for k, v in cfg.items()},
        "notes": {k: _json_value(v) for k, v in table.notes.items()},
        "columns": table.columns,
        "series": [{"label": {k: _json_value(v) for k, v in (label or {}).items()},
                    "rows": [[_json_value(v) for v in row] for row in rows]}
                   for label, rows in table.blocks],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def emit(text: str, cfg: dict):
    if cfg["output"] is None:
        sys.stdout.write(text)
    else:
        with open(cfg["output"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def emit_table(command: str, cfg: dict, table: Table):
    render = render_json if cfg["format"] == "json" else render_csv
    emit(render(command, cfg, table), cfg)


# -- commands --------------------------------------------------------------

def cmd_profile(cfg: dict) -> int:
    kind = cfg["kind"]
    q_values = cfg["q_values"] or (cfg["q"],)
    m0_values = cfg["m0_values"] or (cfg["m0"],)
    if kind == "potential":
        m0_values = (cfg["m0"] if cfg["m0_values"] is None else m0_values[0],)
    table = Table(["rho", "value"])
    for q in q_values:
        for m0 in m0_values:
            p = model_params(cfg, q=q, m0=m0)
            dom = DomainSpec.for_params(p, cfg["rho_min"], cfg["rho_max"])
            rho = np.linspace(dom.rho_min, dom.rho_max, cfg["grid_points"])
            values = potential_value(rho, p) if kind == "potential" else mass_value(rho, p)
            label = {"q": q} if kind == "potential" else {"q": q, "M0": m0}
            table.add_block([[r, v] for r, v in zip(rho, values)], label)
    emit_table("profile", cfg, table)
    return EXIT_OK


def cmd_spectrum(cfg: dict) -> int:
    p, f, consts = model_params(cfg), field_config(cfg), constants(cfg)
    table = Table(["n", "m", "E_closed_plus", "E_closed_minus", "E_nu_root",
                   "valid_plus", "valid_minus", "valid_root"])
    rows, any_valid = [], False
    for m in cfg["m_values"] or (cfg["m"],):
        spec = enumerate_bound_states(m, p, f, consts, cfg["n_max"])
        any_valid = any_valid or spec.any_valid()
        for r in spec.rows:
            rows.append([r.n, m, r.plus.value, r.minus.value, r.root.value,
                         r.plus.valid, r.minus.valid, r.root.valid])
    table.add_block(rows)
    emit_table("spectrum", cfg, table)
    if not any_valid:
        print("error: no valid level for these parameters", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


_SWEEP_RANGES = {"b0": (0.0, 5.0), "flux": (0.0, 10.0), "m0": (0.4, 0.6)}
_BRANCH_SETS = {"both": ("plus", "minus"), "all": ("plus", "minus", "root")}


def cmd_sweep(cfg: dict) -> int:
    variable = cfg["variable"]
    lo, hi = _SWEEP_RANGES[variable]
    start = lo if cfg["start"] is None else cfg["start"]
    stop = hi if cfg["stop"] is None else cfg["stop"]
    if cfg["num"] < 1:
        raise ConfigError("num must be >= 1")
    values = np.linspace(start, stop, cfg["num"])
    if variable == "b0" and np.any(values < 0):
        raise ConfigError("b0 sweep must stay >= 0")
    if variable == "m0" and np.any(values <= 0):
        raise ConfigError("m0 sweep must stay > 0")
    branches = _BRANCH_SETS.get(cfg["branch"], (cfg["branch"],))
    p, f = model_params(cfg), field_config(cfg)
    points = run_sweep(variable, values, branches, p, f, m=cfg["m"], n=cfg["n"],
                       m0_values=cfg["m0_values"] or DEFAULT_M0_VALUES,
                       consts=constants(cfg), jobs=max(1, cfg["jobs"]))
    table = Table(["sweep_value", "M0", "branch", "E"])
    table.add_block([[pt.sweep_value, pt.m0, pt.branch, pt.energy] for pt in points])
    emit_table("sweep", cfg, table)
    return EXIT_OK


class LevelUnavailable(Exception):
    pass


def _level(cfg, source, n, m, p, f, consts, grid=None):
    """EnergyLevel for the wavefunction command, or LevelUnavailable."""
    try:
        if source == "indicial":
            lv = terminating_energy(n, m, p, f, consts)
        elif source == "nu_root":
            lv = energy_from_quantization(n, m, p, f, consts)
        elif source in ("plus", "minus"):
            lv = closed_form_levels(n, m, p, f, consts)[source]
        else:
            sol = solve_radial(p, f, m, consts, grid, n + 1)
            lv = EnergyLevel(n, m, float(sol.eigenvalues[n]), None, True, "oracle")
    except (NoRootInBracket, NonRealOnBracket, NonRealCoefficient) as exc:
        raise LevelUnavailable(f"{type(exc).__name__}: {exc}") from exc
    if not lv.valid:
        raise LevelUnavailable(f"level n={n}, m={m} from {source} is not valid")
    return lv


def cmd_wavefunction(cfg: dict) -> int:
    p, f, consts = model_params(cfg), field_config(cfg), constants(cfg)
    grid = radial_grid(cfg, p)
    try:
        lv = _level(cfg, cfg["level_source"], cfg["n"], cfg["m"], p, f, consts, grid)
    except LevelUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    sample = assemble_wavefunction(lv, p, f, consts, grid, tol=cfg["residual_tol"],
                                   exponents=cfg["exponents"])
    table = Table(["rho", "R_normalized"])
    table.notes = {"energy": lv.value, "norm_integral": norm_integral(sample), "residual": sample.residual}
    table.add_block([[r, v] for r, v in zip(grid.nodes, sample.values)])
    emit_table("wavefunction", cfg, table)
    return EXIT_OK


def _thermo_levels(cfg, p, f, consts):
    if cfg["energies"] is not None:
        return list(cfg["energies"])
    source = cfg["spectrum_source"]
    out = []
    for m in cfg["m_values"] or (cfg["m"],):
        if source == "oracle":
            grid = radial_grid(cfg, p)
            out.extend(float(e) for e in solve_radial(p, f, m, consts, grid, cfg["n_max"] + 1).eigenvalues)
        elif source == "indicial":
            for n in range(cfg["n_max"] + 1):
                try:
                    lv = terminating_energy(n, m, p, f, consts)
                except NonRealCoefficient:
                    continue
                if lv.valid:
                    out.append(lv.value)
        else:
            column = {"nu_root": "nu_root", "plus": "plus", "minus": "minus"}[source]
            out.extend(enumerate_bound_states(m, p, f, consts, cfg["n_max"]).energies(column))
    return out


def cmd_thermo(cfg: dict) -> int:
    p, f, consts = model_params(cfg), field_config(cfg), constants(cfg)
    levels = spectrum_energies(_thermo_levels(cfg, p, f, consts))
    if not 0 < cfg["beta_min"] <= cfg["beta_max"]:
        raise ConfigError("need 0 < beta_min <= beta_max")
    betas = np.linspace(cfg["beta_min"], cfg["beta_max"], cfg["beta_num"])
    table = Table(["beta", "Z", "F", "U", "S", "C"])
    rows, worst = [], 0.0
    for b in betas:
        r = thermo_quantities(levels, float(b), cfg["d_beta"], consts.k_boltzmann)
        worst = max(worst, r.identity_residual())
        rows.append([r.beta, r.z_value, r.free_energy, r.internal_energy, r.entropy, r.heat_capacity])
    table.notes = {"levels": list(levels), "max_identity_residual": worst,
                   "m_summed": cfg["m_values"] is not None and cfg["energies"] is None}
    table.add_block(rows)
    emit_table("thermo", cfg, table)
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    p, f, consts = model_params(cfg), field_config(cfg), constants(cfg)
    vc = VerifyConfig(
        params=p, fields=f, consts=consts, grid=radial_grid(cfg, p),
        m_values=cfg["m_values"] or (cfg["m"],), n_max=cfg["n_max"],
        lambda_values=cfg["lambda_values"], m0_values=cfg["m0_values"] or DEFAULT_M0_VALUES,
        identity_draws=cfg["identity_draws"], seed=cfg["seed"], figures=cfg["figures"],
        jobs=max(1, cfg["jobs"]),
    )
    report = build_report(vc)
    report["config"] = {k: _json_value(v) for k, v in cfg.items()}
    emit(json.dumps(report, sort_keys=True, indent=2) + "\n", cfg)
    return EXIT_OK if report["suite_passed"] else EXIT_NUMERICAL


COMMANDS = {
    "profile": (cmd_profile, "potential or mass profile versus rho",
                ("kind", "preset", "q_values", "m0_values")),
    "spectrum": (cmd_spectrum, "closed-form and quantization-root energies", ("m_values",)),
    "sweep": (cmd_sweep, "energy versus B0, flux or M0",
              ("preset", "variable", "branch", "start", "stop", "num", "m0_values", "jobs")),
    "wavefunction": (cmd_wavefunction, "normalized radial wave function",
                     ("level_source", "exponents", "residual_tol")),
    "thermo": (cmd_thermo, "partition function and derived quantities",
               ("beta_min", "beta_max", "beta_num", "d_beta", "spectrum_source", "energies", "m_values")),
    "verify": (cmd_verify, "cross-method verification report (JSON)",
               ("m_values", "lambda_values", "m0_values", "identity_draws", "seed", "figures", "jobs")),
}

COMMON = ("v0", "v1", "lambda", "q", "m0", "b0", "flux", "m", "n", "n_max", "hbar", "e_charge",
          "c_light", "k_boltzmann", "grid_points", "rho_min", "rho_max", "output", "format")


def _add_flag(parser: argparse.ArgumentParser, key: str):
    spec = KEYS[key]
    parser.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS,
                        metavar=key.upper(), help=spec.help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdm-hulthen",
        description="Bound states of a position-dependent-mass particle in a Hulthen plus "
                    "Coulomb-like potential with magnetic and Aharonov-Bohm fields.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, extra) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", default=None, help="flat key = value settings file")
        for key in COMMON + extra:
            _add_flag(sp, key)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        file_values = {}
        if args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                file_values = parse_config_text(fh.read())
        cfg = resolve_config(file_values, flags)
        handler = COMMANDS[args.command][0]
        return handler(cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except EmptySpectrum as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ConvergenceFailure, ResidualTooLarge, DivergentNorm, NonRealCoefficient) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PdmError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
