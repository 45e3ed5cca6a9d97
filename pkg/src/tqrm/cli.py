"""Command-line driver: ``tqrm <command> [flags]``.

Every command writes ``<out>/<name>.csv`` (header row with units, values in
'%.17g') and a JSON sidecar ``<name>.json`` describing the run.  Settings come
from flags, then a ``--config`` key=value file, then built-in defaults.
Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures (the error is also printed to stderr as JSON).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .errors import ParameterError, TQRMError
from .gfunction import POLE_GUARD, find_roots, g_values, nearest_pole_distance
from .meanfield import ground_energy_curve, minimize_alpha, resonant_alpha0
from .model import (
    FockTruncation,
    ModelParams,
    Sector,
    build_hamiltonian,
    build_sector_hamiltonian,
    commutator_norm,
    exchange_operator,
    parity_operator,
    appendix_assembly_report,
    verify_tripartite_reduction,
)
from .phonon import (
    PhaseSpaceGrid,
    ReferenceState,
    RefKind,
    fidelity,
    mean_phonon_number,
    position_density,
    purity,
    quadrature_variances,
    reference_density,
    wigner,
)
from .physparams import LengthConvention, PhysicalIonParams, derive_trap, model_params_from_physical
from .spectra import converged_ground_state, eigensolve, ordered_map, partial_trace_phonon, resolve_threads, spectrum_sweep

COMMANDS = ("spectrum", "gfun", "roots", "meanfield", "ground", "density", "wigner", "fidelity", "physical", "verify")

DEFAULTS = {
    "omega": 1.0,
    "Omega": 0.0,
    "eps": 0.0,
    "g": 0.0,
    "nmax": 120,
    "gscan": None,
    "emin": -1.0,
    "emax": 3.0,
    "estep": 1e-3,
    "k": 8,
    "sector": "full",
    "observable": "nb",
    "out": ".",
    "name": None,
    "threads": 1,
    "plot": False,
    "si": False,
    "oracle_nmax": 240,
    "xmin": -8.0,
    "xmax": 8.0,
    "nx": 161,
    "pmin": -8.0,
    "pmax": 8.0,
    "np": 161,
    "ref": "auto",
    "alpha": None,
    "eta": 0.1,
    "mass": 88.0,
    "charge": 1,
    "nu": "2pi*2.02e6",
    "omega_drive": "2pi*25e3",
    "vd": "-2pi*174.7e12",
    "convention": "trap",
    "detuning": "0",
    "seed": 0,
}

SECTORS = {s.value: s for s in Sector}
OBSERVABLES = ("nb", "energy", "varx", "varp", "purity", "all")


class ConfigError(Exception):
    pass


def parse_angular(text) -> float:
    """Number with an optional '2pi*' prefix, e.g. '2pi*2.02e6'."""
    s = str(text).strip().replace(" ", "")
    sign = 1.0
    if s.startswith("-"):
        sign, s = -1.0, s[1:]
    factor = 1.0
    if s.lower().startswith("2pi*"):
        factor, s = 2 * math.pi, s[4:]
    try:
        return sign * factor * float(s)
    except ValueError as err:
        raise ConfigError(f"cannot read {text!r} as a number") from err


def parse_scan(text) -> np.ndarray:
    """'a:b:step' to an inclusive, uniform grid."""
    try:
        a, b, step = (float(x) for x in str(text).split(":"))
    except ValueError as err:
        raise ConfigError(f"scan must look like start:stop:step, got {text!r}") from err
    if not step > 0 or b < a:
        raise ConfigError(f"scan {text!r} needs step > 0 and stop >= start")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


def read_config(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}")
        values[key] = value
    return values


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"cannot read {value!r} as a boolean")


_FLOATS = ("omega", "Omega", "eps", "g", "emin", "emax", "estep", "xmin", "xmax", "pmin", "pmax", "eta", "mass")
_INTS = ("nmax", "k", "threads", "oracle_nmax", "nx", "np", "charge", "seed")


def resolve(flags: dict, config_path: str | None) -> dict:
    """Merge defaults, config file and explicit flags, then convert types."""
    settings = dict(DEFAULTS)
    if config_path:
        settings.update(read_config(config_path))
    settings.update(flags)
    try:
        for key in _FLOATS:
            settings[key] = float(settings[key])
        for key in _INTS:
            settings[key] = int(settings[key])
        if settings["alpha"] is not None:
            settings["alpha"] = float(settings["alpha"])
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
    for key in ("plot", "si"):
        settings[key] = _bool(settings[key])
    if settings["sector"] not in SECTORS:
        raise ConfigError(f"sector must be one of {sorted(SECTORS)}")
    if settings["observable"] not in OBSERVABLES:
        raise ConfigError(f"observable must be one of {OBSERVABLES}")
    if settings["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return settings


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    model = common.add_argument_group("model")
    model.add_argument("--omega", help="phonon frequency (default 1)")
    model.add_argument("--Omega", help="Rabi frequency (default 0)")
    model.add_argument("--eps", help="detuning epsilon (default 0)")
    model.add_argument("--g", help="tripartite coupling (default 0)")
    model.add_argument("--nmax", help="Fock cutoff (default 120)")
    grids = common.add_argument_group("grids")
    grids.add_argument("--gscan", help="coupling grid start:stop:step")
    grids.add_argument("--emin", help="lower energy (default -1)")
    grids.add_argument("--emax", help="upper energy (default 3)")
    grids.add_argument("--estep", help="energy step (default 1e-3)")
    grids.add_argument("--k", help="number of levels per sweep row (default 8)")
    grids.add_argument("--sector", help=f"one of {', '.join(SECTORS)} (default full)")
    grids.add_argument("--observable", help=f"one of {', '.join(OBSERVABLES)} (default nb)")
    grids.add_argument("--oracle-nmax", dest="oracle_nmax", help="cutoff for the ED cross-check of roots")
    for key in ("xmin", "xmax", "nx", "pmin", "pmax", "np"):
        grids.add_argument(f"--{key}", help=f"phase-space grid {key}")
    refs = common.add_argument_group("reference states")
    refs.add_argument("--ref", help="auto, vacuum, coherent, cat_plus, cat_minus or mixture")
    refs.add_argument("--alpha", help="amplitude of the reference state")
    refs.add_argument("--eta", help="Lamb-Dicke parameter for 'verify appendix' (default 0.1)")
    phys = common.add_argument_group("physical parameters ('2pi*' prefix allowed)")
    phys.add_argument("--mass", help="ion mass in amu (default 88)")
    phys.add_argument("--charge", help="net charge in units of e (default 1)")
    phys.add_argument("--nu", help="axial trap frequency, rad/s")
    phys.add_argument("--omega-drive", dest="omega_drive", help="Rabi frequency, rad/s")
    phys.add_argument("--vd", help="dipolar slope V'_d, rad/s per metre")
    phys.add_argument("--convention", help="trap or breathing (oscillator length convention)")
    phys.add_argument("--detuning", help="laser detuning, rad/s")
    run = common.add_argument_group("run")
    run.add_argument("--out", help="output directory (default .)")
    run.add_argument("--name", help="base name of the output files (default: command)")
    run.add_argument("--threads", help="worker threads; TQRM_THREADS overrides")
    run.add_argument("--plot", action="store_const", const=True, help="also write an SVG plot")
    run.add_argument("--si", action="store_const", const=True, help="energies in rad/s using --nu")
    run.add_argument("--seed", help="seed recorded for randomized runs (default 0)")
    run.add_argument("--config", help="key=value file with defaults for any flag")

    parser = argparse.ArgumentParser(prog="tqrm", description="Tripartite quantum Rabi model toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "spectrum": "lowest levels along a coupling scan (exact diagonalization)",
        "gfun": "G-function on an energy grid",
        "roots": "G-function zeros with exact-diagonalization cross-check",
        "meanfield": "mean-field minimum, or the ground-energy curve with --gscan",
        "ground": "ground-state observables along a coupling scan",
        "density": "phonon position density of the ground state",
        "wigner": "phonon Wigner function of the ground state",
        "fidelity": "fidelity, purity and variances against a reference state",
        "physical": "map trapped-ion parameters to model couplings",
        "verify": "operator identity and symmetry checks",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name], argument_default=argparse.SUPPRESS)
        if name == "verify":
            p.add_argument("what", choices=("appendix", "reduction", "symmetry"))
    return parser


def model_params(s: dict) -> ModelParams:
    return ModelParams(s["omega"], s["Omega"], s["eps"], s["g"])


def physical_params(s: dict) -> PhysicalIonParams:
    conv = {"trap": LengthConvention.TRAP_MODE, "breathing": LengthConvention.BREATHING_MODE}
    if s["convention"] not in conv:
        raise ConfigError("convention must be 'trap' or 'breathing'")
    return PhysicalIonParams(
        mass_amu=s["mass"],
        net_charge=s["charge"],
        nu=parse_angular(s["nu"]),
        Omega_drive=parse_angular(s["omega_drive"]),
        Vd_slope=parse_angular(s["vd"]),
        lb_convention=conv[s["convention"]],
    )


class Output:
    """One CSV data product plus its sidecar."""

    def __init__(self, settings: dict, command: str):
        self.settings = settings
        self.command = command
        self.dir = settings["out"]
        self.name = settings["name"] or command
        self.started = time.perf_counter()
        self.meta: dict = {}
        self.energy_scale = 1.0
        self.energy_unit = "omega"
        if settings["si"]:
            self.energy_scale = math.sqrt(3.0) * parse_angular(settings["nu"])
            self.energy_unit = "rad/s"
        try:
            os.makedirs(self.dir, exist_ok=True)
        except OSError as err:
            raise ConfigError(f"cannot create output directory {self.dir!r}: {err}") from err
        if not os.access(self.dir, os.W_OK):
            raise ConfigError(f"output directory {self.dir!r} is not writable")

    def path(self, suffix: str) -> str:
        return os.path.join(self.dir, f"{self.name}{suffix}")

    def write(self, columns, rows) -> str:
        """columns: list of (name, unit, description)."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        header = ",".join(f"{n} [{u}]" if u else n for n, u, _ in columns)
        lines = [header]
        for row in rows:
            lines.append(",".join("%.17g" % v for v in row))
        path = self.path(".csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        self.columns = columns
        return path

    def finish(self, extra_files=()) -> str:
        meta = {
            "command": self.command,
            "library_version": __version__,
            "config": {k: v for k, v in sorted(self.settings.items())},
            "threads": resolve_threads(self.settings["threads"]),
            "wall_time_s": time.perf_counter() - self.started,
            "energy_unit": self.energy_unit,
            "csv": os.path.basename(self.path(".csv")),
            "columns": [{"name": n, "unit": u, "description": d} for n, u, d in getattr(self, "columns", [])],
            "extra_files": [os.path.basename(f) for f in extra_files],
        }
        meta.update(self.meta)
        path = self.path(".json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        return path


def _require_gscan(s: dict) -> np.ndarray:
    if s["gscan"] is None:
        raise ConfigError("this command needs --gscan start:stop:step")
    return parse_scan(s["gscan"])


def cmd_spectrum(s, out):
    params = model_params(s)
    grid = _require_gscan(s) if s["gscan"] is not None else np.array([params.g])
    trunc = FockTruncation(s["nmax"])
    table = spectrum_sweep(params, grid, trunc, SECTORS[s["sector"]], s["k"], s["threads"])
    table[:, 1:] *= out.energy_scale
    cols = [("g", "omega", "coupling")] + [
        (f"E{i}", out.energy_unit, f"level {i} counted from the lowest") for i in range(1, table.shape[1])
    ]
    out.meta["truncation"] = {"n_max": s["nmax"]}
    out.write(cols, table)
    if s["plot"]:
        lines = [(table[:, 0], table[:, i]) for i in range(1, table.shape[1])]
        return [line_plot(out.path(".svg"), lines, "g / omega", f"E [{out.energy_unit}]")]
    return []


def cmd_gfun(s, out):
    params = model_params(s)
    E = np.arange(s["emin"], s["emax"] + 0.5 * s["estep"], s["estep"])
    value, _, M_used, settled = g_values(E, params, strict=False)
    valid = settled & (nearest_pole_distance(E, params, int(M_used.max())) > POLE_GUARD * params.omega)
    cols = [
        ("E", out.energy_unit, "trial energy"),
        ("G", "", "G-function value"),
        ("valid_flag", "", "1 outside pole guard bands with a settled series"),
    ]
    out.write(cols, np.column_stack([E * out.energy_scale, value, valid.astype(float)]))
    if s["plot"]:
        shown = np.where(valid, np.clip(value, -5, 5), np.nan)
        return [line_plot(out.path(".svg"), [(E, shown)], "E / omega", "G (clipped)")]
    return []


def cmd_roots(s, out):
    params = model_params(s)
    oracle = s["oracle_nmax"] if s["oracle_nmax"] > 0 else None
    records = find_roots(params, (s["emin"], s["emax"]), trunc_for_oracle=oracle)
    kinds = {"regular": 0.0, "exceptional_candidate": 1.0, "spurious": 2.0}
    rows = [
        (r.E * out.energy_scale, r.residual_G, math.nan if r.ed_match is None else r.ed_match, kinds[r.kind.value])
        for r in records
    ]
    cols = [
        ("E_root", out.energy_unit, "triplet level from a zero of G"),
        ("residual", "", "|G| over its normaliser at the root"),
        ("ed_match", "omega", "distance to the nearest exact-diagonalization level"),
        ("kind", "", "0 regular, 1 exceptional candidate"),
    ]
    out.meta["oracle_n_max"] = oracle
    out.write(cols, np.array(rows).reshape(-1, 4))
    for r in records:
        print(f"{r.E:.12f}  residual={r.residual_G:.2e}  ed_match={r.ed_match}  {r.kind.value}")
    return []


def cmd_meanfield(s, out):
    params = model_params(s)
    if s["gscan"] is None:
        r = minimize_alpha(params)
        cols = [
            ("g", "omega", "coupling"),
            ("alpha_star", "", "minimising amplitude"),
            ("E_G", out.energy_unit, "mean-field ground energy"),
        ]
        out.meta["branch"] = r.branch.value
        out.meta["degenerate"] = r.degenerate
        out.write(cols, [[params.g, r.alpha_star, r.energy * out.energy_scale]])
        print(json.dumps({"alpha_star": r.alpha_star, "energy": r.energy, "branch": r.branch.value}))
        return []
    grid = _require_gscan(s)
    curve = ground_energy_curve(params, grid)
    alphas = ordered_map(lambda g: minimize_alpha(replace(params, g=float(g))).alpha_star, grid, s["threads"])
    cols = [
        ("g", "omega", "coupling"),
        ("E_G", out.energy_unit, "mean-field ground energy"),
        ("dE_dg", "", "first derivative"),
        ("d2E_dg2", "1/omega", "second derivative"),
        ("alpha_star", "", "minimising amplitude"),
    ]
    table = np.column_stack([curve.table(), alphas])
    table[:, 1] *= out.energy_scale
    out.meta["transition_cell"] = curve.transition_cell
    out.meta["transition_jump"] = curve.transition_jump
    out.write(cols, table)
    if s["plot"]:
        return [line_plot(out.path(".svg"), [(grid, curve.energy)], "g / omega", "E_G")]
    return []


def _ground_rho(params, nmax):
    gs = converged_ground_state(params, FockTruncation(nmax))
    return gs, partial_trace_phonon(gs.state, gs.n_max_used)


def cmd_ground(s, out):
    params = model_params(s)
    grid = _require_gscan(s) if s["gscan"] is not None else np.array([params.g])

    def row(g):
        gs, rho = _ground_rho(replace(params, g=float(g)), s["nmax"])
        vx, vp = quadrature_variances(rho)
        return [g, gs.energy, mean_phonon_number(rho), vx, vp, purity(rho), gs.n_max_used]

    table = np.array(ordered_map(row, grid, s["threads"]))
    table[:, 1] *= out.energy_scale
    names = {
        "energy": ("E0", out.energy_unit, "ground energy"),
        "nb": ("nb", "", "mean phonon number <a^+a>"),
        "varx": ("varX", "", "variance of X = (a + a^+)/sqrt2"),
        "varp": ("varP", "", "variance of P = i(a^+ - a)/sqrt2"),
        "purity": ("purity", "", "Tr rho_b^2"),
    }
    index = {"energy": 1, "nb": 2, "varx": 3, "varp": 4, "purity": 5}
    chosen = list(index) if s["observable"] == "all" else [s["observable"]]
    cols = [("g", "omega", "coupling")] + [names[c] for c in chosen] + [("n_max_used", "", "converged cutoff")]
    keep = [0] + [index[c] for c in chosen] + [6]
    out.write(cols, table[:, keep])
    if s["plot"]:
        lines = [(table[:, 0], table[:, index[c]]) for c in chosen]
        return [line_plot(out.path(".svg"), lines, "g / omega", ", ".join(chosen))]
    return []


def cmd_density(s, out):
    params = model_params(s)
    gs, rho = _ground_rho(params, s["nmax"])
    x = np.linspace(s["xmin"], s["xmax"], s["nx"])
    dens = position_density(rho, x)
    out.meta["n_max_used"] = gs.n_max_used
    out.write([("x", "", "dimensionless position"), ("rho", "", "probability density")], np.column_stack([x, dens]))
    if s["plot"]:
        return [line_plot(out.path(".svg"), [(x, dens)], "x", "rho_b(x)")]
    return []


def cmd_wigner(s, out):
    params = model_params(s)
    gs, rho = _ground_rho(params, s["nmax"])
    grid = PhaseSpaceGrid(s["xmin"], s["xmax"], s["pmin"], s["pmax"], s["nx"], s["np"])
    W = wigner(rho, grid)
    X, P = np.meshgrid(grid.x, grid.p, indexing="ij")
    out.meta["n_max_used"] = gs.n_max_used
    out.meta["min_W"] = float(W.min())
    cols = [("x", "", "position"), ("p", "", "momentum"), ("W", "", "Wigner function")]
    out.write(cols, np.column_stack([X.ravel(), P.ravel(), W.ravel()]))
    if s["plot"]:
        return [heatmap(out.path(".svg"), grid.x, grid.p, W)]
    return []


def _reference(s, params, n_max):
    kind = s["ref"]
    alpha = s["alpha"]
    if kind == "auto":
        if params.epsilon == 0:
            kind = "mixture"
            alpha = resonant_alpha0(params) if alpha is None else alpha
        else:
            kind = "coherent"
            alpha = -params.g / params.omega if alpha is None else alpha
    try:
        ref_kind = RefKind(kind)
    except ValueError as err:
        raise ConfigError(f"unknown reference {kind!r}") from err
    return ReferenceState(ref_kind, 0.0 if alpha is None else alpha, n_max)


def cmd_fidelity(s, out):
    params = model_params(s)
    gs, rho = _ground_rho(params, s["nmax"])
    ref = _reference(s, params, gs.n_max_used)
    sigma = reference_density(ref)
    vx, vp = quadrature_variances(rho)
    row = [params.g, fidelity(rho, sigma), purity(rho), vx, vp, mean_phonon_number(rho)]
    cols = [
        ("g", "omega", "coupling"),
        ("fidelity", "", "Uhlmann-Jozsa fidelity with the reference"),
        ("purity", "", "Tr rho_b^2"),
        ("varX", "", "variance of X"),
        ("varP", "", "variance of P"),
        ("nb", "", "<a^+a>"),
    ]
    out.meta["reference"] = {"kind": ref.kind.value, "alpha": ref.alpha}
    out.meta["n_max_used"] = gs.n_max_used
    out.write(cols, [row])
    print(json.dumps(dict(zip([c[0] for c in cols], row))))
    return []


def cmd_physical(s, out):
    p = physical_params(s)
    rows = []
    cols = [
        ("convention", "", "0 trap mode, 1 breathing mode"),
        ("l0", "m", "equilibrium separation"),
        ("omega_breathing", "rad/s", "breathing-mode frequency"),
        ("l_b", "m", "oscillator length"),
        ("g", "rad/s", "tripartite coupling"),
        ("g_c", "rad/s", "critical coupling"),
        ("ratio", "", "g / g_c"),
    ]
    print(f"{'convention':<12}{'l0 [um]':>12}{'l_b [nm]':>12}{'g/2pi [kHz]':>14}{'g_c/2pi [kHz]':>15}{'g/g_c':>10}")
    for code, conv in enumerate((LengthConvention.TRAP_MODE, LengthConvention.BREATHING_MODE)):
        d = derive_trap(replace(p, lb_convention=conv))
        rows.append([code, d.l0, d.omega_breathing, d.l_b, d.g, d.g_c, d.ratio])
        print(
            f"{conv.value:<12}{d.l0 * 1e6:>12.4f}{d.l_b * 1e9:>12.4f}"
            f"{d.g / (2 * math.pi) / 1e3:>14.4f}{d.g_c / (2 * math.pi) / 1e3:>15.4f}{d.ratio:>10.4f}"
        )
    scaled = model_params_from_physical(p, parse_angular(s["detuning"]))
    normalised = {"model_params": asdict(scaled.params), "scale_rad_per_s": scaled.scale, "convention": p.lb_convention.value}
    print(json.dumps(normalised))
    out.meta.update(normalised)
    out.write(cols, rows)
    return []


def cmd_verify(s, out, what):
    params = model_params(s)
    ok = True
    if what == "reduction":
        residual = verify_tripartite_reduction(params.g, s["nmax"])
        bound = 1e-14
        ok = residual <= bound
        cols = [("g", "omega", "coupling"), ("residual", "", "max-norm of the operator difference")]
        out.write(cols, [[params.g, residual]])
        print(f"reduction residual {residual:.3e} (bound {bound:.1e})")
    elif what == "appendix":
        rep = appendix_assembly_report(params.g, s["eta"], 8)
        ok = rep.residual <= 1e-13
        cols = [
            ("breathing_residual", "", "breathing-mode terms vs -g(a+a^+)(sz1+sz2+1)"),
            ("cm_residual", "", "c.m. term vs multiple of (sz2 - sz1)"),
            ("cm_symmetric_projection", "", "c.m. term on exchange-symmetric states"),
            ("single_spin_residual", "", "single-spin terms vs -g(sx1+sx2)"),
            ("printed_single_spin_residual", "", "single-spin terms vs -g(sz1+sx2)"),
            ("printed_cm_residual", "", "c.m. mismatch with equal ion signs"),
            ("constant_norm", "", "size of the constant Stark term"),
        ]
        out.write(cols, [list(asdict(rep).values())])
        print(f"appendix residual {rep.residual:.3e}")
        for name, value in asdict(rep).items():
            print(f"  {name:<30}{value:.3e}")
    else:
        n = min(s["nmax"], 60)
        H = build_hamiltonian(params, n)
        exch = commutator_norm(H, exchange_operator(n))
        resonant = replace(params, epsilon=0.0)
        Hs = build_sector_hamiltonian(resonant, n, Sector.RESONANT_COLLECTIVE)
        par = commutator_norm(Hs, parity_operator(n))
        union = np.sort(
            np.concatenate(
                [
                    eigensolve(build_sector_hamiltonian(resonant, n, sec)).values
                    for sec in (Sector.RESONANT_COLLECTIVE, Sector.RESONANT_PLUS, Sector.RESONANT_MINUS)
                ]
            )
        )
        full = eigensolve(build_hamiltonian(resonant, n)).values
        diff = float(np.max(np.abs(union - full)))
        ok = exch <= 1e-12 and par <= 1e-12 and diff <= 1e-10
        cols = [
            ("exchange_commutator", "", "max |[H, SWAP]|"),
            ("parity_commutator", "", "max |[H_s, parity]| at eps = 0"),
            ("sector_union_error", "omega", "resonant sector spectra vs full spectrum"),
        ]
        out.write(cols, [[exch, par, diff]])
        print(f"exchange {exch:.3e}  parity {par:.3e}  sector union {diff:.3e}")
    out.meta["passed"] = bool(ok)
    return ok


RUNNERS = {
    "spectrum": cmd_spectrum,
    "gfun": cmd_gfun,
    "roots": cmd_roots,
    "meanfield": cmd_meanfield,
    "ground": cmd_ground,
    "density": cmd_density,
    "wigner": cmd_wigner,
    "fidelity": cmd_fidelity,
    "physical": cmd_physical,
}


def _fail(code: int, err: BaseException) -> int:
    payload = {"error": type(err).__name__, "message": str(err)}
    cause = getattr(err, "cause", None)
    if cause is not None:
        payload["cause"] = {"error": type(cause).__name__, "message": str(cause)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    what = args.pop("what", None)
    config = args.pop("config", None)
    flags = {k: v for k, v in args.items()}
    try:
        settings = resolve(flags, config)
        out = Output(settings, command if what is None else f"{command}_{what}")
        if command == "verify":
            ok = cmd_verify(settings, out, what)
            out.finish()
            return 0 if ok else 3
        extra = RUNNERS[command](settings, out)
        out.finish(extra)
    except (ConfigError, ParameterError) as err:
        return _fail(2, err)
    except (TQRMError, np.linalg.LinAlgError, FloatingPointError) as err:
        return _fail(3, err)
    return 0


# ---------------------------------------------------------------- SVG output

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def _scale(values, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (np.asarray(values) - lo) * (b - a) / span


def line_plot(path, lines, xlabel, ylabel, width=640, height=420) -> str:
    """Polylines with a frame and axis labels; NaN breaks a line."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in lines])
    ys = np.concatenate([np.asarray(y, float) for _, y in lines])
    finite = np.isfinite(ys)
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    y0, y1 = (float(ys[finite].min()), float(ys[finite].max())) if finite.any() else (0.0, 1.0)
    left, right, top, bottom = 70, width - 20, 20, height - 50
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="black"/>',
    ]
    for i, (x, y) in enumerate(lines):
        px = _scale(x, x0, x1, left, right)
        py = _scale(y, y0, y1, bottom, top)
        segment = []
        for u, v in zip(px, py):
            if np.isfinite(v):
                segment.append(f"{u:.2f},{v:.2f}")
            elif segment:
                parts.append(_polyline(segment, _PALETTE[i % len(_PALETTE)]))
                segment = []
        if segment:
            parts.append(_polyline(segment, _PALETTE[i % len(_PALETTE)]))
    parts += [
        f'<text x="{(left + right) / 2}" y="{height - 15}" text-anchor="middle">{xlabel}</text>',
        f'<text x="15" y="{(top + bottom) / 2}" transform="rotate(-90 15 {(top + bottom) / 2})" '
        f'text-anchor="middle">{ylabel}</text>',
        f'<text x="{left}" y="{bottom + 18}">{x0:.4g}</text>',
        f'<text x="{right}" y="{bottom + 18}" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{left - 5}" y="{bottom}" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{left - 5}" y="{top + 10}" text-anchor="end">{y1:.4g}</text>',
        "</svg>",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


def _polyline(points, colour):
    return f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{" ".join(points)}"/>'


def heatmap(path, x, p, W, cell=3) -> str:
    """Diverging blue-white-red map of W[i, j] with x across and p upwards."""
    W = np.asarray(W, float)
    vmax = float(np.max(np.abs(W))) or 1.0
    nx, n_p = W.shape
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cell}" height="{n_p * cell}">']
    for i in range(nx):
        for j in range(n_p):
            t = W[i, j] / vmax
            if t >= 0:
                r, g, b = 255, int(255 * (1 - t)), int(255 * (1 - t))
            else:
                r, g, b = int(255 * (1 + t)), int(255 * (1 + t)), 255
            parts.append(
                f'<rect x="{i * cell}" y="{(n_p - 1 - j) * cell}" width="{cell}" height="{cell}" '
                f'fill="#{r:02x}{g:02x}{b:02x}"/>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


if __name__ == "__main__":
    sys.exit(main())
