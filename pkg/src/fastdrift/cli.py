"""Command-line front end: experiments in, plot-ready CSV plus JSON manifests out.

Subcommands
-----------
portrait  level curves of the orbit-space energy on the (g, G) cylinder
check     run a module invariant suite; nonzero exit on any failure
nf        normal-form iteration history on a packaged toy fixture
drift     window drift experiment
bounds    window bounds table
elliptic  period / area / zero-angle table over a kappa grid

Outputs are files only. Numeric CSV cells use shortest round-trip decimals,
so identical configuration and seed reproduce byte-identical CSV bodies;
the creation timestamp lives only in the JSON manifest. A config file holds
``key = value`` lines (``#`` comments allowed); command-line flags override
file values, and keys a subcommand does not know are rejected.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .charts import (
    aa_forward,
    aa_inverse,
    et_forward,
    et_inverse,
    rg_forward,
    rg_inverse,
    symplectic_defect,
)
from .dynamics import (
    ExperimentParams,
    WindowModel,
    X_field,
    X_split,
    bounds_report,
    drift_experiment,
)
from .elliptic import KAPPA_FLOOR, RS_of, SeparatrixError, T0_of, calA_fast, theta_star
from .euler import (
    E_of_action,
    F_of,
    U_direct,
    euler_E,
    level_data,
    r_s_prime,
    r_s,
)
from .fields import (
    DomainSpec,
    ScalarField,
    VectorField3,
    d_dpsi,
    make_field,
    remainder,
    truncate,
)
from .homological import DriverField, lie_bracket, solve_homological
from .normalform import StepParams, gnft_iterate, nft_iterate, write_history_csv

__all__ = [
    "CliError",
    "main",
    "portrait_census",
    "run_suite",
]

SCHEMA_VERSION = "1"


class CliError(RuntimeError):
    """Bad flags, bad config, or bad parameter values; exits with status 2."""


# -- serialization helpers -------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "True" if x else "False"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(c) for c in row) + "\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _write_manifest(out_dir: str, command: str, parameters: dict,
                    files: list[str], extra: dict | None = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "parameters": _json_safe(parameters),
        "files": list(files),
    }
    if extra:
        doc.update(_json_safe(extra))
    path = os.path.join(out_dir, f"{command}_manifest.json")
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc
    return path


def _ensure_out(cfg: dict) -> str:
    out = cfg["out"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    return out


# -- configuration ---------------------------------------------------------------

_COMMON_KEYS = {"out": str, "seed": int, "threads": int, "tol": float}

_SCHEMAS: dict[str, dict] = {
    "portrait": {**_COMMON_KEYS, "r_values": str, "n_levels": int, "samples": int},
    "check": {**_COMMON_KEYS, "suite": str},
    "nf": {**_COMMON_KEYS, "fixture": str, "p": int, "K": int, "ell": int},
    "drift": {**_COMMON_KEYS, "L": float, "xi": float, "orbits": int, "side": str},
    "bounds": {**_COMMON_KEYS, "L": float, "xi": float},
    "elliptic": {**_COMMON_KEYS, "kappa_grid": str},
}

_COMMON_DEFAULTS = {"out": "out", "seed": 0, "threads": 1, "tol": None}

_DEFAULTS: dict[str, dict] = {
    "portrait": {**_COMMON_DEFAULTS, "r_values": "0.5,1.5,3",
                 "n_levels": 9, "samples": 400},
    "check": {**_COMMON_DEFAULTS, "suite": "all"},
    # p, K, ell resolve per fixture inside cmd_nf
    "nf": {**_COMMON_DEFAULTS, "fixture": "toy_analytic",
           "p": None, "K": None, "ell": None},
    "drift": {**_COMMON_DEFAULTS, "L": 4.0, "xi": 0.25,
              "orbits": 32, "side": "outer"},
    "bounds": {**_COMMON_DEFAULTS, "L": 4.0, "xi": 0.25},
    "elliptic": {**_COMMON_DEFAULTS, "kappa_grid": "-0.9:0.9:0.1"},
}


def read_config(path: str) -> dict[str, str]:
    vals: dict[str, str] = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key = value")
        key, _, val = line.partition("=")
        vals[key.strip()] = val.strip()
    return vals


def merge_config(command: str, args: argparse.Namespace) -> dict:
    """Hard defaults, overlaid by the config file, overlaid by explicit flags."""
    schema = _SCHEMAS[command]
    cfg = dict(_DEFAULTS[command])
    if args.config is not None:
        raw = read_config(args.config)
        unknown = sorted(set(raw) - set(schema))
        if unknown:
            raise CliError(f"unknown config keys for {command}: {', '.join(unknown)}")
        for key, text in raw.items():
            try:
                cfg[key] = schema[key](text)
            except ValueError as exc:
                raise CliError(f"config key {key}: {exc}") from exc
    for key in schema:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["config"] = args.config
    return cfg


# -- portrait ---------------------------------------------------------------------


def _parse_r_values(text: str) -> list[float]:
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise CliError("empty r list: nothing to plot")
    for r in vals:
        if not r > 0.0 or r == 2.0:
            raise CliError(f"r must lie in (0, 2) or (2, inf), got {r!r}")
    return vals


def _level_points(E: float, r: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Every point of the level set {G**2 + r*sqrt(1-G**2)*cos g = E} away
    from the poles, by scanning G and inverting the cosine."""
    G = np.linspace(-1.0, 1.0, n + 2)[1:-1]
    cg = (E - G * G) / (r * np.sqrt(1.0 - G * G))
    keep = np.abs(cg) <= 1.0
    g = np.arccos(cg[keep])
    Gk = G[keep]
    return np.concatenate([g, -g]), np.concatenate([Gk, Gk])


def portrait_census(r: float, n_grid: int = 160) -> dict:
    """Count critical points of the orbit-space energy on the open cylinder
    and report which separatrix families exist, all by computation."""
    if not r > 0.0 or r == 2.0:
        raise CliError(f"census needs r in (0, 2) or (2, inf), got {r!r}")

    def grad(G, g):
        s = math.sqrt(1.0 - G * G)
        return (2.0 * G - r * G * math.cos(g) / s, -r * s * math.sin(g))

    def hess(G, g):
        s = math.sqrt(1.0 - G * G)
        return (2.0 - r * math.cos(g) / s ** 3,
                r * G * math.sin(g) / s,
                -r * s * math.cos(g))

    # closed-form gradient audited against the implemented energy
    pg, pG, h = 1.1, 0.31, 1e-6
    fd_G = (euler_E(r, pG + h, pg) - euler_E(r, pG - h, pg)) / (2 * h)
    fd_g = (euler_E(r, pG, pg + h) - euler_E(r, pG, pg - h)) / (2 * h)
    aG, ag = grad(pG, pg)
    if abs(fd_G - aG) + abs(fd_g - ag) > 1e-5:
        raise CliError("census gradient disagrees with the energy function")

    # asymmetric grids keep critical points off cell corners; the g range
    # overshoots [-pi, pi] so boundary points are caught by interior cells
    Gs = np.linspace(-0.9812, 0.9787, n_grid)
    gs = np.linspace(-3.4309, 3.4471, n_grid)
    GG, gg = np.meshgrid(Gs, gs, indexing="ij")
    ss = np.sqrt(1.0 - GG * GG)
    EG = np.sign(2.0 * GG - r * GG * np.cos(gg) / ss)
    Eg = np.sign(-r * ss * np.sin(gg))

    def _varies(sgn):
        c = [sgn[:-1, :-1], sgn[1:, :-1], sgn[:-1, 1:], sgn[1:, 1:]]
        return np.minimum.reduce(c) < np.maximum.reduce(c)

    cells = np.argwhere(_varies(EG) & _varies(Eg))
    found: list[tuple[float, float]] = []
    for i, j in cells:
        G = 0.5 * (Gs[i] + Gs[i + 1])
        g = 0.5 * (gs[j] + gs[j + 1])
        ok = False
        for _ in range(60):
            fG, fg = grad(G, g)
            hGG, hGg, hgg = hess(G, g)
            det = hGG * hgg - hGg * hGg
            if det == 0.0:
                break
            dG = (fG * hgg - fg * hGg) / det
            dg = (fg * hGG - fG * hGg) / det
            G, g = G - dG, g - dg
            if abs(G) > 0.995:
                break
            if abs(dG) + abs(dg) < 1e-13:
                ok = True
                break
        if not ok:
            continue
        fG, fg = grad(G, g)
        if abs(fG) + abs(fg) > 1e-9:
            continue
        g = math.remainder(g, 2.0 * math.pi)
        if g <= -math.pi:
            g += 2.0 * math.pi
        if any(abs(G - G0) + abs(math.remainder(g - g0, 2.0 * math.pi)) < 1e-6
               for G0, g0 in found):
            continue
        found.append((G, g))

    saddles, maxima, minima, levels = 0, 0, 0, []
    for G, g in found:
        hGG, hGg, hgg = hess(G, g)
        det = hGG * hgg - hGg * hGg
        if det < 0.0:
            saddles += 1
        elif hGG + hgg < 0.0:
            maxima += 1
        else:
            minima += 1
        levels.append(float(euler_E(r, G, g)))

    # the polar circles carry the circular-orbit separatrix at every r
    gprobe = np.linspace(-math.pi, math.pi, 25)
    pole_dev = max(float(np.max(np.abs(euler_E(r, s, gprobe) - 1.0)))
                   for s in (1.0, -1.0))
    families = (["S0"] if saddles else []) + (["S1"] if pole_dev < 1e-12 else [])
    return {
        "r": r,
        "saddles": saddles,
        "maxima": maxima,
        "minima": minima,
        "critical_points": [[float(G), float(g)] for G, g in sorted(found)],
        "critical_levels": sorted(levels),
        "families": families,
    }


def cmd_portrait(cfg: dict) -> int:
    rs = _parse_r_values(cfg["r_values"])
    n_levels, samples = cfg["n_levels"], cfg["samples"]
    if n_levels < 1 or samples < 8:
        raise CliError("need n_levels >= 1 and samples >= 8")
    out = _ensure_out(cfg)
    files, censuses = [], []
    for r in rs:
        emax = 1.0 + r * r / 4.0 if r < 2.0 else r
        rows: list[tuple] = []

        def add(family, E, g, G):
            rows.extend((family, r, E, float(a), float(b)) for a, b in zip(g, G))

        for E in np.linspace(-r, emax, n_levels + 2)[1:-1]:
            add("level", float(E), *_level_points(float(E), r, samples))
        if r < 2.0:
            add("S0", r, *_level_points(r, r, samples))
        add("S1", 1.0, *_level_points(1.0, r, samples))
        gc = np.linspace(-math.pi, math.pi, 97)
        add("S1", 1.0, gc, np.ones_like(gc))
        add("S1", 1.0, gc, -np.ones_like(gc))

        name = f"portrait_r{_fmt(r).replace('.', 'p').replace('-', 'm')}.csv"
        _write_csv(os.path.join(out, name), ["family", "r", "E", "g", "G"], rows)
        files.append(name)
        censuses.append(portrait_census(r))
    _write_manifest(out, "portrait", cfg, files, {"census": censuses})
    print(f"portrait: wrote {len(files)} file(s) to {out}")
    return 0


# -- packaged toy fixtures (nf subcommand and check suites) ------------------------


def _nf_toy_domain(K: int = 8, ny: int = 101) -> DomainSpec:
    # quasi-static tail window: the angle turns slowly against the drive
    return DomainSpec(I_interval=(0.0, 1.0), Y_interval=(3.0, 3.01),
                      widen_sigma=0.10, grid_I=9, grid_y=ny, K_max=K)


def _nf_toy_driver(d: DomainSpec) -> DriverField:
    return DriverField.from_callables(d, lambda I, y: 1.5 + 0.2 * np.tanh(y),
                                      lambda I, y: 0.1 * np.exp(-y))


def _nf_wave_pert(d: DomainSpec, eps: float) -> VectorField3:
    return VectorField3(
        make_field(d, lambda I, y, psi: eps * np.cos(psi)),
        make_field(d, lambda I, y, psi: eps * np.sin(psi)),
        make_field(d, lambda I, y, psi: eps * np.cos(psi)),
    )


def _nf_tail_pert(d: DomainSpec, a: float, rate: float) -> VectorField3:
    kmax = d.K_max

    def comp(I, y, psi):
        acc = 0.0
        for k in range(1, kmax + 1):
            acc = acc + np.exp(-rate * k) * np.cos(k * psi)
        return a * acc

    return VectorField3(make_field(d, comp), make_field(d, comp),
                        ScalarField.zeros(d))


def _nf_params(**kw) -> StepParams:
    base = dict(u=(10.0, 0.10, 0.26), w=(1.0, 0.0123, 0.024),
                s1=0.01, s2=0.01, p=8)
    base.update(kw)
    return StepParams(**base)


def cmd_nf(cfg: dict) -> int:
    fixture = cfg["fixture"]
    if fixture not in ("toy_analytic", "toy_smooth"):
        raise CliError(f"unknown fixture {fixture!r}")
    p, K, ell = cfg["p"], cfg["K"], cfg["ell"]
    if fixture == "toy_analytic":
        p = 8 if p is None else p
        if (K is None) != (ell is None):
            raise CliError("--K and --ell go together")
        d = _nf_toy_domain(K=8)
        pert = _nf_wave_pert(d, 4e-4)
    else:
        p = 4 if p is None else p
        K = 8 if K is None else K
        ell = 6 if ell is None else ell
        # domain carries modes past the cutoff so a genuine tail remains
        d = _nf_toy_domain(K=max(12, K + K // 2))
        pert = _nf_tail_pert(d, 1e-3, 0.7)
    if p < 0:
        raise CliError("p must be >= 0")
    cutoff_lane = K is not None
    try:
        params = _nf_params(p=p, K=K, ell=ell) if cutoff_lane else _nf_params(p=p)
    except Exception as exc:
        raise CliError(f"bad step parameters: {exc}") from exc
    drv = _nf_toy_driver(d)
    iterate = gnft_iterate if cutoff_lane else nft_iterate
    _, hist = iterate(drv, pert, params, allow_partial=True)

    out = _ensure_out(cfg)
    name = "nf_history.csv"
    write_history_csv(hist, os.path.join(out, name))
    norms = list(hist.norms)
    extra = {
        "fixture": fixture,
        "lane": "cutoff" if cutoff_lane else "plain",
        "resolved": {"p": p, "K": K, "ell": ell},
        "completed": hist.completed,
        "hypothesis_ok": hist.failure is None,
        "failed_step": hist.failed_step,
        "failure": None if hist.failure is None else str(hist.failure),
        "branch": hist.branch,
        "early_exit": hist.early_exit,
        "final_ok": hist.final_ok,
        "norm_initial": norms[0],
        "norm_final": norms[-1],
        "prediction": hist.prediction,
        "floor_measured": hist.floor_measured,
        "steps_recorded": len(norms),
    }
    _write_manifest(out, "nf", cfg, [name], extra)
    tag = "" if hist.failure is None else "  [hypothesis failure recorded]"
    print(f"nf: {fixture} {extra['lane']} lane, {len(norms)} rows, "
          f"norm {norms[0]:.3e} -> {norms[-1]:.3e}{tag}")
    return 0


# -- drift / bounds ----------------------------------------------------------------


def _experiment_params(cfg: dict) -> ExperimentParams:
    side = cfg.get("side", "outer")
    if side not in ("outer", "inner"):
        raise CliError(f"side must be inner or outer, got {side!r}")
    try:
        return ExperimentParams(L=cfg["L"], xi=cfg["xi"],
                                k=1 if side == "outer" else -1,
                                seed=cfg["seed"])
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def cmd_drift(cfg: dict) -> int:
    if cfg["orbits"] < 1:
        raise CliError("need at least one orbit")
    par = _experiment_params(cfg)
    tol = 1e-10 if cfg["tol"] is None else cfg["tol"]
    rep = drift_experiment(par, n_orbits=cfg["orbits"], tol=tol,
                           threads=cfg["threads"])
    out = _ensure_out(cfg)
    name = "drift.csv"
    rows = [(i, rep.max_dA[i], rep.bound_at_exit[i], rep.ratios[i],
             rep.exit_times[i]) for i in range(len(rep.ratios))]
    _write_csv(os.path.join(out, name),
               ["orbit", "max_dA", "bound_at_exit", "ratio", "exit_time"], rows)
    extra = {
        "L": rep.L,
        "side": "outer" if rep.k == 1 else "inner",
        "n_orbits": rep.n_orbits,
        "eps_measured": rep.eps_measured,
        "eps_schedule": rep.eps_schedule,
        "mean_ratio": rep.mean_ratio,
        "max_ratio": rep.max_ratio,
        "energy_drift_max": rep.energy_drift_max,
        "apriori_ok": rep.apriori_ok,
        "surrogate_error": rep.surrogate_error,
        "empty_reason": rep.empty_reason,
    }
    _write_manifest(out, "drift", cfg, [name], extra)
    if rep.empty_reason is not None:
        print(f"drift: no valid orbits ({rep.empty_reason})")
    else:
        print(f"drift: L={rep.L} {extra['side']}, {rep.n_orbits} orbits, "
              f"mean ratio {rep.mean_ratio:.4f}, max {rep.max_ratio:.4f}")
    return 0


def cmd_bounds(cfg: dict) -> int:
    par = _experiment_params(cfg)
    rep = bounds_report(par)
    out = _ensure_out(cfg)
    name = "bounds.csv"
    rows = [(row.quantity, row.measured, row.paper_rhs, row.ok)
            for row in rep.rows]
    _write_csv(os.path.join(out, name),
               ["quantity", "measured", "paper_bound_rhs", "ok"], rows)
    extra = {
        "implied_constants": {row.quantity: row.implied_C for row in rep.rows},
        "lm": {"lhs": rep.lm_lhs, "rhs": rep.lm_rhs, "ok": rep.lm_ok},
        "step5": rep.step5,
        "ok": rep.ok,
    }
    _write_manifest(out, "bounds", cfg, [name], extra)
    print(f"bounds: L={cfg['L']}, {len(rows)} rows, "
          f"{'all hold' if rep.ok else 'VIOLATIONS'}")
    return 0 if rep.ok else 1


# -- elliptic table ----------------------------------------------------------------


def _parse_kappa_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise CliError(f"kappa grid must be start:stop:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError as exc:
        raise CliError(f"bad kappa grid {text!r}: {exc}") from exc
    if step <= 0.0 or b < a:
        raise CliError("kappa grid needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / step + 1e-9))
    return [a + i * step for i in range(n + 1)]


def cmd_elliptic(cfg: dict) -> int:
    grid = _parse_kappa_grid(cfg["kappa_grid"])
    rows, notes = [], []
    for kap in grid:
        if abs(kap) < KAPPA_FLOOR:
            notes.append(f"kappa = {kap!r} inside the separatrix floor, skipped")
            continue
        try:
            rows.append((kap, T0_of(kap), calA_fast(kap), theta_star(kap)))
        except (ValueError, SeparatrixError) as exc:
            notes.append(f"kappa = {kap!r} skipped: {exc}")
    out = _ensure_out(cfg)
    name = "elliptic.csv"
    _write_csv(os.path.join(out, name),
               ["kappa", "T0", "calA", "theta_star"], rows)
    _write_manifest(out, "elliptic", cfg, [name],
                    {"notes": notes, "n_rows": len(rows)})
    print(f"elliptic: {len(rows)} rows"
          + (f", {len(notes)} skipped" if notes else ""))
    return 0


# -- invariant suites --------------------------------------------------------------

# each check is (name, measured, default_threshold); a --tol override replaces
# every threshold, so --tol 0 is the canonical failure injection


def _suite_norms(rng, cfg):
    d = DomainSpec(I_interval=(0.0, 1.0), Y_interval=(-1.0, 1.0),
                   widen_sigma=0.1, grid_I=9, grid_y=33, K_max=8)
    psi = np.linspace(-math.pi, math.pi, 48, endpoint=False)
    f = make_field(d, lambda I, y, p: (1 + 0.3 * I) * np.cos(p)
                   + 0.2 * y * np.sin(2 * p))
    fp = make_field(d, lambda I, y, p: -(1 + 0.3 * I) * np.sin(p)
                    + 0.4 * y * np.cos(2 * p))
    err = float(np.max(np.abs(d_dpsi(f).values_on_grid(psi)
                              - fp.values_on_grid(psi))))
    yield ("angle_derivative_exact", err, 1e-10)
    lo, hi = truncate(f, 1), remainder(f, 1)
    err = float(np.max(np.abs(f.coeffs - lo.coeffs - hi.coeffs)))
    yield ("cutoff_partition", err, 1e-12)
    cut = float(np.max(np.abs(truncate(hi, 1).coeffs)))
    yield ("cutoff_bands_disjoint", cut, 1e-15)


def _suite_homological(rng, cfg):
    d = DomainSpec(I_interval=(0.0, 1.0), Y_interval=(-1.0, 1.0),
                   widen_sigma=0.1, grid_I=17, grid_y=121, K_max=6)
    worst = 0.0
    for _ in range(5):
        drv, Z = _random_homological_instance(rng, d)
        _, res = solve_homological(drv, Z)
        worst = max(worst, res)
    yield ("homological_residual", worst, 1e-6)
    X = VectorField3(
        make_field(d, lambda I, y, p: (1 + 0.2 * I) * np.cos(p)),
        make_field(d, lambda I, y, p: 0.3 * y * np.sin(p)),
        make_field(d, lambda I, y, p: 0.1 + 0.2 * np.cos(2 * p)),
    )
    B = lie_bracket(X, X)
    err = max(float(np.max(np.abs(c.coeffs))) for c in B.components)
    yield ("bracket_self_vanishes", err, 1e-10)


def _random_homological_instance(rng, d):
    cv = rng.uniform(0.5, 2.0)
    av = rng.uniform(-0.3, 0.3, 2)
    om0 = rng.uniform(-0.5, 0.5)
    drv = DriverField.from_callables(
        d,
        lambda I, y: cv + av[0] * np.cos(y) * 0.3 + av[1] * I * 0.2,
        lambda I, y: om0 * np.exp(-0.5 * y) + 0.1 * I,
    )
    amps = rng.uniform(-1, 1, (3, 3, 2))

    def comp(i):
        def f(I, y, psi):
            acc = 0.0
            for k in range(1, 4):
                prof = 1 + 0.2 * np.sin(y + amps[i, k - 1, 0]) + 0.1 * I
                acc = acc + amps[i, k - 1, 1] * prof * np.cos(k * psi + amps[i, k - 1, 0])
            return acc / 3.0
        return f

    Z = VectorField3(*(make_field(d, comp(i)) for i in range(3)))
    return drv, Z


def _suite_nf(rng, cfg):
    d = _nf_toy_domain()
    drv = _nf_toy_driver(d)
    n0, n1 = [], []
    for eps in (1e-2, 1e-3, 1e-4):
        _, hist = nft_iterate(drv, _nf_wave_pert(d, eps), _nf_params(p=1))
        n0.append(hist.norms[0])
        n1.append(hist.norms[1])
    slope = float(np.polyfit(np.log(n0), np.log(n1), 1)[0])
    yield ("one_step_contraction_slope", abs(slope - 2.0), 0.1)

    _, hist = nft_iterate(drv, _nf_wave_pert(d, 4e-4), _nf_params(p=8))
    ns = hist.norms
    margin = max(ns[j] * 2.0 ** (j - 1) / ns[1] for j in range(1, len(ns)))
    yield ("geometric_decay_margin", margin, 1.1)

    d2 = _nf_toy_domain(K=12)
    _, h2 = gnft_iterate(_nf_toy_driver(d2), _nf_tail_pert(d2, 1e-3, 0.7),
                         _nf_params(p=4, K=8, ell=6))
    if h2.branch == "floor" and h2.prediction > 0:
        x = h2.norms[-1] / h2.prediction
        factor = max(x, 1.0 / x)
    else:
        factor = math.inf
    yield ("cutoff_floor_factor", factor, 2.0)


def _suite_elliptic(rng, cfg):
    worst = 0.0
    for kap in (0.5, -0.5, 0.1, -0.1):
        h = 1e-6
        fd = (T0_of(kap + h) - T0_of(kap - h)) / (2 * h)
        R, _ = RS_of(kap)
        worst = max(worst, abs((-2.0 * kap) * fd / R - 1.0))
    yield ("period_rate_identity", worst, 1e-4)
    dev = max(abs(T0_of(s * 1e-8) / abs(math.log(1e-8)) - 0.5) / 0.5
              for s in (1.0, -1.0))
    yield ("log_divergence_rate", dev, 0.05)
    viol = 0.0
    for kap in np.arange(-0.99, 0.996, 0.01):
        kap = float(round(kap, 10))
        if abs(kap) < 1e-12:
            continue
        a = calA_fast(kap)
        lo = kap if kap > 0 else 0.0
        viol = max(viol, lo - a, a - 1.0)
    yield ("area_sandwich", max(viol, 0.0), 1e-12)


def _suite_euler(rng, cfg):
    worst = 0.0
    done = 0
    while done < 10:
        r = float(rng.uniform(0.4, 1.9))
        G = float(rng.uniform(-0.95, 0.95))
        g = float(rng.uniform(-math.pi, math.pi))
        E = euler_E(r, G, g)
        if abs(E - r) < 0.05 or abs(E - 1.0) < 0.05 or E < -r + 0.05:
            continue
        U = U_direct(r, G, g)
        worst = max(worst, abs(U - F_of(E, r)) / max(1.0, abs(U)))
        done += 1
    yield ("dual_potential_routes", worst, 1e-7)
    worst = 0.0
    for A in (0.91, 0.95, 0.985):
        h = 1e-6
        fd = (r_s(A + h) - r_s(A - h)) / (2 * h)
        worst = max(worst, abs(fd - r_s_prime(A)) / max(1.0, abs(fd)))
    yield ("separatrix_radius_slope", worst, 1e-6)
    worst = 0.0
    for E, r, side in ((1.1, 0.8, "high"), (0.3, 0.6, "low"), (1.2, 1.6, "mid")):
        A = level_data(E, r).action
        worst = max(worst, abs(E_of_action(A, r, side) - E))
    yield ("action_energy_inversion", worst, 1e-8)


def _suite_charts(rng, cfg):
    worst = 0.0
    done = 0
    while done < 8:
        r = float(rng.uniform(0.5, 1.8))
        G0 = float(rng.uniform(0.1, 0.9))
        g0 = float(rng.uniform(-math.pi + 0.2, -0.2))
        E = euler_E(r, G0, g0)
        if abs(E - r) < 0.05 or abs(E - 1.0) < 0.05 or E < -r + 0.05:
            continue
        R0 = float(rng.uniform(-1, 1))
        _, E1, tau = et_inverse(R0, G0, r, g0)
        G1, g1, _ = et_forward(E1, r, tau)
        worst = max(worst, abs(G1 - G0) + abs(g1 - g0))
        done += 1
    yield ("energy_time_roundtrip", worst, 1e-8)
    worst = 0.0
    for E, r, side in ((1.1, 0.8, "high"), (0.3, 0.6, "low"), (1.2, 1.6, "mid")):
        tau_p = level_data(E, r, with_action=False).tau_p
        for _ in range(3):
            pt = (float(rng.uniform(-1, 1)), E, r,
                  float(rng.uniform(-0.9, 0.9)) * tau_p)
            back = aa_inverse(*aa_forward(*pt), side=side)
            worst = max(worst, max(abs(a - b) for a, b in zip(back, pt)))
    yield ("action_angle_roundtrip", worst, 1e-8)
    worst = 0.0
    for k in (1, -1):
        for _ in range(5):
            pt = (float(rng.uniform(-2, 2)), float(rng.uniform(0.3, 0.95)),
                  float(k * rng.uniform(0.5, 5.0)),
                  float(rng.uniform(-math.pi, math.pi)))
            back = rg_inverse(*rg_forward(*pt, k=k), k=k)
            worst = max(worst, max(abs(a - b) for a, b in zip(back, pt)))
    yield ("regularizing_roundtrip", worst, 1e-9)
    pt = (0.37, 1.2, 1.3, 0.2)
    yield ("action_angle_symplectic", symplectic_defect(aa_forward, pt), 1e-5)
    fn = lambda Y, A, y, p: rg_forward(Y, A, y, p, k=1)
    yield ("regularizing_symplectic",
           symplectic_defect(fn, (0.4, 0.8, 2.0, 1.1)), 1e-7)


def _suite_dynamics(rng, cfg):
    par = ExperimentParams(L=3.0, seed=0)
    model = WindowModel(par)
    a_lo, a_hi = par.A_window
    ky_lo, ky_hi = par.ky_window
    worst = 0.0
    for _ in range(120):
        A = float(rng.uniform(a_lo + 0.1 * (a_hi - a_lo), a_hi - 0.1 * (a_hi - a_lo)))
        ky = float(rng.uniform(ky_lo + 0.1 * (ky_hi - ky_lo),
                               ky_hi - 0.1 * (ky_hi - ky_lo)))
        psi = float(rng.uniform(-math.pi, math.pi))
        X = X_field(A, ky, psi, par.phys)
        N, P = X_split(A, ky, psi, par.phys)
        worst = max(worst, float(np.max(np.abs(X - (N + P)))))
    yield ("split_identity", worst, 1e-12)
    yield ("surrogate_fidelity", model.fidelity(n=6, seed=11), 1e-6)
    rep = drift_experiment(par, n_orbits=3, model=model,
                           threads=cfg.get("threads", 1))
    yield ("drift_energy_conservation", rep.energy_drift_max, 1e-7)
    yield ("drift_ratio_below_budget", rep.max_ratio, 1.0)


_SUITE_FNS = {
    "norms": _suite_norms,
    "homological": _suite_homological,
    "nf": _suite_nf,
    "elliptic": _suite_elliptic,
    "euler": _suite_euler,
    "charts": _suite_charts,
    "dynamics": _suite_dynamics,
}


def run_suite(suite: str, seed: int = 0, tol: float | None = None,
              threads: int = 1) -> list[dict]:
    """Run one invariant suite (or 'all'); returns per-check dicts."""
    if suite != "all" and suite not in _SUITE_FNS:
        known = ", ".join(list(_SUITE_FNS) + ["all"])
        raise CliError(f"unknown suite {suite!r} (known: {known})")
    names = list(_SUITE_FNS) if suite == "all" else [suite]
    rng = np.random.default_rng(seed)
    cfg = {"threads": threads}
    checks = []
    for nm in names:
        for cname, measured, default_thr in _SUITE_FNS[nm](rng, cfg):
            thr = default_thr if tol is None else tol
            measured = float(measured)
            checks.append({"suite": nm, "name": cname, "measured": measured,
                           "threshold": thr, "ok": bool(measured <= thr)})
    return checks


def cmd_check(cfg: dict) -> int:
    checks = run_suite(cfg["suite"], seed=cfg["seed"], tol=cfg["tol"],
                       threads=cfg["threads"])
    ok = all(c["ok"] for c in checks)
    out = _ensure_out(cfg)
    name = f"check_{cfg['suite']}.json"
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "check",
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "parameters": _json_safe(cfg),
        "checks": _json_safe(checks),
        "ok": ok,
    }
    path = os.path.join(out, name)
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc
    for c in checks:
        print(f"{'ok  ' if c['ok'] else 'FAIL'} {c['suite']}.{c['name']}: "
              f"{c['measured']:.3e} vs {c['threshold']:.3e}")
    print(f"check: {sum(c['ok'] for c in checks)}/{len(checks)} passed")
    return 0 if ok else 1


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fastdrift",
        description="Window-drift experiments and diagnostics; outputs are "
                    "CSV files plus a JSON manifest per run.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, help="RNG seed (default: 0)")
        p.add_argument("--threads", type=int,
                       help="worker cap for parallel sections (default: 1)")
        p.add_argument("--tol", type=float,
                       help="tolerance override where the command uses one")
        p.add_argument("--config",
                       help="key = value file; flags override file values")

    p = sub.add_parser("portrait", help="level curves on the (g, G) cylinder")
    p.add_argument("--r-values", dest="r_values",
                   help="comma-separated radii in (0,2) or (2,inf)")
    p.add_argument("--n-levels", dest="n_levels", type=int,
                   help="interior levels per radius (default: 9)")
    p.add_argument("--samples", type=int,
                   help="G samples per level branch (default: 400)")
    common(p)

    p = sub.add_parser("check", help="run module invariant suites")
    p.add_argument("--suite", choices=list(_SUITE_FNS) + ["all"],
                   help="which suite (default: all)")
    common(p)

    p = sub.add_parser("nf", help="normal-form iteration on a toy fixture")
    p.add_argument("--fixture", choices=["toy_analytic", "toy_smooth"],
                   help="analytic wave or slowly-decaying tail (default: toy_analytic)")
    p.add_argument("--p", type=int, help="iteration steps")
    p.add_argument("--K", type=int, help="cutoff modes (switches to the cutoff lane)")
    p.add_argument("--ell", type=int, help="smoothing exponent for the cutoff lane")
    common(p)

    p = sub.add_parser("drift", help="window drift experiment")
    p.add_argument("--L", type=float, help="window depth (default: 4)")
    p.add_argument("--xi", type=float, help="window margin (default: 0.25)")
    p.add_argument("--orbits", type=int, help="orbit count (default: 32)")
    p.add_argument("--side", choices=["inner", "outer"],
                   help="which side of the critical radius (default: outer)")
    common(p)

    p = sub.add_parser("bounds", help="window bounds table")
    p.add_argument("--L", type=float, help="window depth (default: 4)")
    p.add_argument("--xi", type=float, help="window margin (default: 0.25)")
    common(p)

    p = sub.add_parser("elliptic", help="period / area / zero-angle table")
    p.add_argument("--kappa-grid", dest="kappa_grid",
                   help="start:stop:step, endpoints included (default: -0.9:0.9:0.1)")
    common(p)

    return ap


_COMMANDS = {
    "portrait": cmd_portrait,
    "check": cmd_check,
    "nf": cmd_nf,
    "drift": cmd_drift,
    "bounds": cmd_bounds,
    "elliptic": cmd_elliptic,
}


def _glue_negative_values(argv: list[str]) -> list[str]:
    # "--kappa-grid -0.9:0.9:0.1" would otherwise parse the value as a flag
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--kappa-grid" and i + 1 < len(argv):
            out.append(argv[i] + "=" + argv[i + 1])
            i += 2
            continue
        out.append(argv[i])
        i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_glue_negative_values(argv))
    try:
        cfg = merge_config(args.command, args)
        return _COMMANDS[args.command](cfg)
    except CliError as exc:
        print(f"fastdrift {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
