"""``gkf`` command line: analytic tables and Monte Carlo comparisons as CSV + JSON.

Every run writes ``<out>`` (CSV) and ``<out>.json`` holding the resolved
configuration. ``gkf --config <out>.json`` reruns it exactly.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .densities import chi2_s2_m2, ec_densities, expected_ec
from .fields import PowerSpectrum, SphereSynthesizer, spectral_moment
from .geometry import Manifold
from .mesh import icosphere
from .topology import mc_expected_ec
from .tube import DomainSet, FunctionSpec, HeterogeneityMatrix, QuadConfig, gmf, mc_tube_volume, tube_expansion

SCHEMA_VERSION = 1

COLUMNS = {
    "densities": ["level", "j", "rho"],
    "gmf": ["level", "j", "gmf", "rho"],
    "tube-volume": ["level", "eps", "mc_volume", "se_volume", "expansion", "n_samples"],
    "simulate": ["sim", "vertex", "x", "y", "z", "component", "value"],
    "mc-ec": ["level", "mean_chi", "se_chi", "n_sims", "theory_chi"],
    "chi2-s2": ["radius", "level", "m0", "m2", "expected_chi"],
}

STOCHASTIC = {"tube-volume", "simulate", "mc-ec"}


class ConfigError(ValueError):
    pass


def _floats(text):
    if text is None:
        return None
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _orders(text):
    """'0..3' -> [0, 1, 2, 3]; '2' -> [0, 1, 2]; '0,2' -> [0, 2]."""
    text = str(text)
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    if "," in text:
        return [int(t) for t in text.split(",")]
    return list(range(int(text) + 1))


def load_spectrum(token):
    """A spectrum file path, or ``beam:WIDTH[:LMAX]`` for a built-in Gaussian beam."""
    if token.startswith("beam:"):
        parts = token.split(":")
        width = float(parts[1])
        lmax = int(parts[2]) if len(parts) > 2 else 20
        return PowerSpectrum.gaussian_beam(lmax, width)
    s = PowerSpectrum.from_csv(token)
    if not s.is_normalized(1e-10):
        raise ConfigError(f"{token}: spectrum variance is {s.variance:.12g}, not 1")
    return s


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    p = _Parser(prog="gkf", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=sorted(COLUMNS))
    p.add_argument("--config", help="rerun from a JSON sidecar")
    p.add_argument("--f", choices=["gaussian", "sum-of-squares"], default="gaussian")
    p.add_argument("--k", type=int, help="number of components (default: from --d or --spectra)")
    p.add_argument("--d", help="lambda_1,...,lambda_K")
    p.add_argument("--spectra", help="spectrum files (ell,c_ell) or beam:WIDTH[:LMAX], comma-separated")
    p.add_argument("--manifold", choices=["sphere2"], default="sphere2")
    p.add_argument("--levels", help="comma-separated levels u")
    p.add_argument("--radius", help="chi2-s2: boundary radii (level = radius^2)")
    p.add_argument("--j", default="0..2", help="orders, e.g. 0..3")
    p.add_argument("--eps", help="tube radii")
    p.add_argument("--sims", type=int, help="replications or MC samples")
    p.add_argument("--seed", type=int)
    p.add_argument("--mesh-level", type=int, default=6)
    p.add_argument("--lmax", type=int)
    p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV output path (sidecar: <out>.json)")
    return p


def resolve(args):
    """Validate arguments and return the full JSON-serializable config."""
    if args.command is None:
        raise ConfigError("a subcommand is required")
    cfg = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": args.command,
        "f": args.f,
        "levels": _floats(args.levels),
        "radius": _floats(args.radius),
        "j": _orders(args.j),
        "eps": _floats(args.eps),
        "sims": args.sims,
        "seed": args.seed,
        "mesh_level": args.mesh_level,
        "lmax": args.lmax,
        "tol": args.tol,
        "manifold": args.manifold,
        "workers": args.workers,
        "out": args.out,
    }
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    if args.out is None:
        raise ConfigError("--out is required")
    if args.command in STOCHASTIC and args.seed is None:
        raise ConfigError(f"{args.command} is stochastic and needs --seed")

    spectra = None
    if getattr(args, "spectra_data", None) is not None:
        spectra = [PowerSpectrum(c) for c in args.spectra_data]
    elif args.spectra:
        spectra = [load_spectrum(t.strip()) for t in args.spectra.split(",")]
    cfg["spectra"] = args.spectra
    cfg["spectra_data"] = None if spectra is None else [s.c_ell.tolist() for s in spectra]

    lambdas = _floats(args.d)
    if lambdas is None and spectra is not None:
        lambdas = [spectral_moment(s) for s in spectra]
    if args.command in ("simulate", "mc-ec") and spectra is None:
        raise ConfigError(f"{args.command} needs --spectra")
    k = args.k or (len(lambdas) if lambdas else (1 if args.f == "gaussian" else 2))
    if lambdas is None:
        lambdas = [1.0] * k
    if len(lambdas) != k:
        raise ConfigError(f"--k {k} disagrees with {len(lambdas)} lambdas")
    if any(not lam > 0 for lam in lambdas):
        raise ConfigError("lambdas must be positive")
    cfg["k"] = k
    cfg["d"] = lambdas

    needs_levels = {"densities", "gmf", "tube-volume", "mc-ec"}
    if args.command in needs_levels and not cfg["levels"]:
        raise ConfigError(f"{args.command} needs --levels")
    if args.command == "chi2-s2" and not (cfg["levels"] or cfg["radius"]):
        raise ConfigError("chi2-s2 needs --radius or --levels")
    if args.command == "chi2-s2" and k != 2:
        raise ConfigError("chi2-s2 needs exactly two components")
    if args.command == "tube-volume" and not cfg["eps"]:
        raise ConfigError("tube-volume needs --eps")
    if args.command == "mc-ec" and (args.sims or 0) < 100:
        raise ConfigError("mc-ec needs --sims >= 100")
    return cfg


def _function(cfg):
    return FunctionSpec.coordinate(cfg["k"]) if cfg["f"] == "gaussian" else FunctionSpec.sum_of_squares(cfg["k"])


def _quad(cfg):
    return QuadConfig(epsabs=cfg["tol"], epsrel=cfg["tol"])


def run_densities(cfg):
    f, d, quad = _function(cfg), HeterogeneityMatrix(cfg["d"]), _quad(cfg)
    n = max(cfg["j"])
    rows = []
    for u in cfg["levels"]:
        rho = ec_densities(f, d, u, n, quad)
        rows += [[u, j, rho[j]] for j in cfg["j"]]
    return rows


def run_gmf(cfg):
    f, d, quad = _function(cfg), HeterogeneityMatrix(cfg["d"]), _quad(cfg)
    rows = []
    for u in cfg["levels"]:
        g = gmf(DomainSet(f, u, quad), d, max(cfg["j"]), quad)
        rows += [[u, j, g[j], (2 * np.pi) ** (-j / 2) * g[j]] for j in cfg["j"]]
    return rows


def run_tube_volume(cfg):
    f, d, quad = _function(cfg), HeterogeneityMatrix(cfg["d"]), _quad(cfg)
    n = cfg["sims"] or 1_000_000
    rows = []
    for u in cfg["levels"]:
        k = DomainSet(f, u, quad)
        g = gmf(k, d, 2, quad)
        est = mc_tube_volume(k, d, cfg["eps"], n, cfg["seed"], workers=cfg["workers"])
        for e, p, se in zip(est.eps, est.estimate, est.std_error):
            rows.append([u, e, p, se, tube_expansion(g, float(e), 2), est.n])
    return rows


def run_simulate(cfg, spectra):
    grid = icosphere(cfg["mesh_level"])
    synth = SphereSynthesizer(grid, cfg["lmax"] or max(2, max(s.lmax for s in spectra)))
    rows = []
    v = grid.vertices
    for i in range(cfg["sims"] or 1):
        vals = synth.synthesize(spectra, cfg["seed"], i).values
        for c in range(vals.shape[1]):
            rows += [[i, n, v[n, 0], v[n, 1], v[n, 2], c, vals[n, c]] for n in range(grid.n_vertices)]
    return rows


def run_mc_ec(cfg, spectra):
    f, d, quad = _function(cfg), HeterogeneityMatrix(cfg["d"]), _quad(cfg)
    m = Manifold.sphere2(1.0)
    est = mc_expected_ec(m, spectra, f, cfg["levels"], cfg["sims"], cfg["seed"],
                         mesh_level=cfg["mesh_level"], lmax=cfg["lmax"], workers=cfg["workers"])
    return [[u, mu, se, est.n_sims, expected_ec(m, f, d, u, quad=quad)] for u, mu, se in est.rows()]


def run_chi2_s2(cfg):
    lam1, lam2 = cfg["d"]
    quad = _quad(cfg)
    radii = cfg["radius"] or [float(np.sqrt(u)) for u in cfg["levels"]]
    rows = []
    for r in radii:
        m0 = float(np.exp(-r * r / 2))
        m2 = chi2_s2_m2(r, lam1, lam2, quad)
        rows.append([r, r * r, m0, m2, 2 * m0 + 2 * m2])
    return rows


def execute(cfg):
    spectra = None if cfg["spectra_data"] is None else [PowerSpectrum(c) for c in cfg["spectra_data"]]
    cmd = cfg["command"]
    if cmd == "densities":
        return run_densities(cfg)
    if cmd == "gmf":
        return run_gmf(cfg)
    if cmd == "tube-volume":
        return run_tube_volume(cfg)
    if cmd == "simulate":
        return run_simulate(cfg, spectra)
    if cmd == "mc-ec":
        return run_mc_ec(cfg, spectra)
    return run_chi2_s2(cfg)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_outputs(cfg, rows):
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS[cfg["command"]])
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    sidecar = out.with_name(out.name + ".json")
    sidecar.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return out, sidecar


def _args_from_sidecar(path, parser):
    cfg = json.loads(Path(path).read_text())
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema_version {cfg.get('schema_version')}")
    args = parser.parse_args([cfg["command"]])
    args.f = cfg["f"]
    args.k = cfg["k"]
    args.d = ",".join(repr(x) for x in cfg["d"])
    args.spectra = cfg.get("spectra")
    args.spectra_data = cfg.get("spectra_data")
    args.levels = None if cfg["levels"] is None else ",".join(repr(x) for x in cfg["levels"])
    args.radius = None if cfg["radius"] is None else ",".join(repr(x) for x in cfg["radius"])
    args.j = ",".join(str(j) for j in cfg["j"])
    args.eps = None if cfg["eps"] is None else ",".join(repr(x) for x in cfg["eps"])
    for key in ("sims", "seed", "mesh_level", "lmax", "tol", "manifold", "workers", "out"):
        setattr(args, key, cfg[key])
    return args


def _module_of(exc):
    tb = exc.__traceback__
    name = None
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("hetgkf"):
            name = mod
        tb = tb.tb_next
    return name


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            override_out = args.out
            args = _args_from_sidecar(args.config, parser)
            if override_out:
                args.out = override_out
        cfg = resolve(args)
        rows = execute(cfg)
        out, sidecar = write_outputs(cfg, rows)
    except (ConfigError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"status": "error", "kind": "config", "error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failures from the library
        print(json.dumps({"status": "error", "kind": "numerical", "error": type(exc).__name__,
                          "message": str(exc), "module": _module_of(exc)}), file=sys.stderr)
        return 1
    print(json.dumps({"status": "ok", "csv": str(out), "sidecar": str(sidecar), "rows": len(rows)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
