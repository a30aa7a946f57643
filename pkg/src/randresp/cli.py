"""Command-line entry point.

One executable, eight subcommands::

    randresp <command> --config run.ini [--out-dir DIR] [--seed N] [--threads N]

Config files are plain ``key = value`` sections (configparser syntax).  Every
run writes a JSON report embedding the fully resolved configuration, and CSV
files for function data (17 significant digits, comma-separated, header row).
Reports carry no timestamps, so a rerun of the same config reproduces them
bitwise.

Exit codes: 0 success, 1 malformed configuration, 2 hypothesis violation,
3 numerical failure.
"""

import argparse
import configparser
import json
import logging
import os
import sys

import numpy as np

from .basis import (ChebyshevBasis, FourierBasis, h_norm, to_csv)
from .errors import (ConfigurationError, ModelError, NumericalError,
                     UnsupportedOperation)
from .maps import (LSVMap, check_expansion, check_gauss_second_iterate,
                   make_family)
from .operators import build_operator, stationary_density
from .response import finite_difference_check, response
from . import systems

log = logging.getLogger("randresp")

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_NUMERICAL = 0, 1, 2, 3


# ------------------------------------------------------------ configuration

_DEFAULTS = {
    "system": {"kind": "gauss", "lam": "0.05", "p": "0.5",
               "alpha0": "0.25", "alpha1": "0.45", "u": "0.3",
               "dist": "pm-smooth"},
    "solver": {"basis": "auto", "n": "40", "cutoff": "10000",
               "quad_order": "12", "n_max": "40", "gamma": "0.6",
               "eps": "0.0", "eps_list": "1e-2,5e-3,2.5e-3"},
    "mc": {"seeds": "10", "length": "1000000", "burn_in": "1000",
           "bins": "256", "eps0": "0.0"},
}


def load_config(path):
    cp = configparser.ConfigParser()
    for sec, kv in _DEFAULTS.items():
        cp[sec] = dict(kv)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigurationError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                cp.read_file(fh, source=path)
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config: {exc}")
    for sec in cp.sections():
        if sec not in _DEFAULTS:
            raise ConfigurationError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in _DEFAULTS[sec]:
                raise ConfigurationError(
                    f"unknown key {key!r} in section [{sec}]")
    return cp


def resolved_dict(cp):
    return {sec: dict(cp[sec]) for sec in cp.sections()}


def _floats(cp, sec, key):
    try:
        return [float(v) for v in cp[sec][key].split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"[{sec}] {key}: {exc}")


def build_system(cp):
    kind = cp["system"]["kind"]
    if kind == "circle-mixture":
        return systems.circle_mixture(float(cp["system"]["lam"]))
    if kind == "gauss-renyi":
        return systems.gauss_renyi(float(cp["system"]["p"]))
    if kind == "gauss-renyi-expansion":
        return systems.gauss_renyi_expansion()
    if kind in ("gauss", "renyi"):
        from .operators import RandomSystem, fixed_component
        return RandomSystem([fixed_component(make_family(kind))], name=kind)
    raise ConfigurationError(f"unknown system kind {kind!r}")


def build_basis(cp, system=None):
    name = cp["solver"]["basis"]
    n = int(cp["solver"]["n"])
    if name == "auto":
        name = "fourier" if (system is not None
                             and system.domain == "circle") else "chebyshev"
    if name == "fourier":
        return FourierBasis(max(n, 4) + (n % 2))
    if name == "chebyshev":
        return ChebyshevBasis(n)
    raise ConfigurationError(f"unknown basis {name!r}")


def build_induced(cp):
    from .distributions import (DiracTranslate, PMSmoothFamily, UniformToDirac)
    from .inducing import InducedSystem
    a0 = float(cp["system"]["alpha0"])
    a1 = float(cp["system"]["alpha1"])
    dist_kind = cp["system"]["dist"]
    if dist_kind == "pm-smooth":
        dist = PMSmoothFamily(a0, a1)
    elif dist_kind == "dirac":
        dist = DiracTranslate(float(cp["system"]["u"]))
    elif dist_kind == "uniform-to-dirac":
        dist = UniformToDirac(a0)
    else:
        raise ConfigurationError(f"unknown distribution {dist_kind!r}")
    return InducedSystem(dist, n_max=int(cp["solver"]["n_max"]),
                         quad_order=int(cp["solver"]["quad_order"]))


def write_report(out_dir, name, payload, cp):
    payload = dict(payload)
    payload["config"] = resolved_dict(cp)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)
    return path


# ----------------------------------------------------------------- commands

def cmd_check_hypotheses(cp, out_dir):
    kind = cp["system"]["kind"]
    report = {"kind": kind}
    ok = True
    if kind == "circle-mixture":
        lam = float(cp["system"]["lam"])
        for name, fam in (("perturbed", make_family("circle", lam=lam)),
                          ("doubling", make_family("circle", lam=0.0))):
            rep = check_expansion(fam)
            report[name] = {"beta": rep.beta, "uniformly_expanding": rep.ok}
            ok = ok and rep.ok
    elif kind in ("gauss-renyi", "gauss-renyi-expansion"):
        # individual maps are not uniformly expanding; the second iterate is
        bound = check_gauss_second_iterate()
        report["second_iterate_sup"] = bound
        report["individual_beta"] = check_expansion(make_family("gauss")).beta
        ok = bound <= 0.25 + 1e-12
    elif kind in ("gauss", "renyi"):
        rep = check_expansion(make_family(kind))
        report["beta"] = rep.beta
        ok = rep.ok
    elif kind == "lsv":
        rep = check_expansion(LSVMap(float(cp["system"]["u"])))
        report["beta"] = rep.beta
        report["note"] = "neutral fixed point; inducing required"
        ok = rep.ok
    else:
        raise ConfigurationError(f"unknown system kind {kind!r}")
    report["hypotheses_ok"] = ok
    write_report(out_dir, "check_hypotheses.json", report, cp)
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_density(cp, out_dir):
    system = build_system(cp)
    basis = build_basis(cp, system)
    eps = float(cp["solver"]["eps"])
    op = build_operator(system, eps, basis, int(cp["solver"]["cutoff"]),
                        int(cp["solver"]["quad_order"]))
    h = stationary_density(op)
    to_csv(os.path.join(out_dir, "density.csv"),
           [basis.nodes, h.values], ["x", "h"])
    write_report(out_dir, "density.json",
                 {"operator": op.report(), "mass": h.integrate(),
                  "density_meta": h.meta}, cp)
    return EXIT_OK


def cmd_response(cp, out_dir):
    system = build_system(cp)
    basis = build_basis(cp, system)
    rep = response(system, basis, eps=float(cp["solver"]["eps"]),
                   cutoff=int(cp["solver"]["cutoff"]),
                   quad_order=int(cp["solver"]["quad_order"]))
    to_csv(os.path.join(out_dir, "response.csv"),
           [basis.nodes, rep.h0.values, rep.q.values, rep.h_star.values,
            rep.h_star_normalized.values],
           ["x", "h0", "q", "h_star", "h_star_normalized"])
    write_report(out_dir, "response.json",
                 {"diagnostics": rep.diagnostics}, cp)
    return EXIT_OK


def cmd_fd_check(cp, out_dir):
    system = build_system(cp)
    basis = build_basis(cp, system)
    rows = finite_difference_check(system, _floats(cp, "solver", "eps_list"),
                                   basis, cutoff=int(cp["solver"]["cutoff"]),
                                   quad_order=int(cp["solver"]["quad_order"]))
    write_report(out_dir, "fd_check.json", {"rows": rows}, cp)
    return EXIT_OK


def cmd_induced_response(cp, out_dir):
    ind = build_induced(cp)
    eps = float(cp["solver"]["eps"])
    resp = ind.full_response(eps)
    gamma = float(cp["solver"]["gamma"])
    lo = ind.out_basis.floor
    to_csv(os.path.join(out_dir, "induced_delta.csv"),
           [ind.delta_basis.nodes, resp.h_hat0.values, resp.q_hat.values,
            resp.h_hat_star.values],
           ["x", "h_hat0", "q_hat", "h_hat_star"])
    to_csv(os.path.join(out_dir, "induced_out.csv"),
           [ind.out_basis.nodes, resp.q_out.values, resp.f_hstar_out.values],
           ["x", "q_correction", "f_h_hat_star"])
    diag = dict(resp.diagnostics)
    diag["h_norm_response"] = h_norm(resp.h_star, gamma, lo=lo)
    diag["gamma"] = gamma
    write_report(out_dir, "induced_response.json", {"diagnostics": diag}, cp)
    return EXIT_OK


def cmd_mc(cp, out_dir, seed):
    from .montecarlo import OrbitSpec, sample_orbit
    system = build_system(cp)
    spec = OrbitSpec(system, eps=float(cp["solver"]["eps"]),
                     seed=seed if seed is not None else 0,
                     burn_in=int(cp["mc"]["burn_in"]),
                     length=int(cp["mc"]["length"]),
                     observables={"x": lambda x: x,
                                  "cos2pix": lambda x: np.cos(2*np.pi*x)})
    stats = sample_orbit(spec, bins=int(cp["mc"]["bins"]))
    centers = 0.5 * (stats.bin_edges[:-1] + stats.bin_edges[1:])
    to_csv(os.path.join(out_dir, "mc_histogram.csv"),
           [centers, stats.histogram], ["x", "density"])
    write_report(out_dir, "mc.json",
                 {"observable_means": stats.observable_means,
                  "observable_se": stats.observable_se,
                  "meta": stats.meta}, cp)
    return EXIT_OK


def cmd_gauss_renyi_expansion(cp, out_dir):
    system = systems.gauss_renyi_expansion()
    basis = build_basis(cp, system)
    cutoff = int(cp["solver"]["cutoff"])
    rep = response(system, basis, cutoff=cutoff)
    grid = np.linspace(0.0, 1.0, 2000)
    hg = systems.gauss_density(grid)
    rows = []
    for eps in _floats(cp, "solver", "eps_list"):
        h_eps = stationary_density(build_operator(system, eps, basis, cutoff))
        rem = h_eps(grid) - hg - eps * rep.h_star_normalized(grid)
        rows.append({"eps": eps,
                     "remainder_sup": float(np.max(np.abs(rem))),
                     "remainder_over_eps2":
                         float(np.max(np.abs(rem)) / eps ** 2)})
    h0_err = float(np.max(np.abs(rep.h0(grid) - hg)))
    to_csv(os.path.join(out_dir, "gr_expansion.csv"),
           [basis.nodes, rep.h0.values, rep.h_star_normalized.values],
           ["x", "h_gauss", "h_star"])
    write_report(out_dir, "gr_expansion.json",
                 {"h0_vs_analytic_sup": h0_err, "rows": rows,
                  "diagnostics": rep.diagnostics}, cp)
    return EXIT_OK


def cmd_pm_half_check(cp, out_dir):
    from .distributions import DiracTranslate, UniformToDirac
    from .inducing import InducedSystem, deterministic_full_response
    a0 = float(cp["system"]["alpha0"])
    n_max = int(cp["solver"]["n_max"])
    gamma = float(cp["solver"]["gamma"])
    ind_u = InducedSystem(UniformToDirac(a0), n_max=n_max)
    ind_d = InducedSystem(DiracTranslate(a0), n_max=n_max)
    resp_u = ind_u.full_response(0.0)
    h_det = deterministic_full_response(ind_d, a0)
    lo = ind_u.out_basis.floor
    num = h_norm(resp_u.h_star, gamma, lo=lo)
    den = h_norm(h_det, gamma, lo=lo)
    report = {"alpha0": a0, "gamma": gamma, "n_max": n_max,
              "h_norm_uniform_response": num,
              "h_norm_deterministic_response": den,
              "ratio": num / den,
              "diagnostics": resp_u.diagnostics}
    write_report(out_dir, "pm_half_check.json", report, cp)
    return EXIT_OK


# --------------------------------------------------------------------- main

_COMMANDS = {
    "check-hypotheses": lambda cp, out, seed: cmd_check_hypotheses(cp, out),
    "density": lambda cp, out, seed: cmd_density(cp, out),
    "response": lambda cp, out, seed: cmd_response(cp, out),
    "fd-check": lambda cp, out, seed: cmd_fd_check(cp, out),
    "induced-response": lambda cp, out, seed: cmd_induced_response(cp, out),
    "mc": cmd_mc,
    "gauss-renyi-expansion": lambda cp, out, seed:
        cmd_gauss_renyi_expansion(cp, out),
    "pm-half-check": lambda cp, out, seed: cmd_pm_half_check(cp, out),
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="randresp",
        description="Stationary densities and linear response of iid random "
                    "interval/circle maps.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None,
                        help="INI config file (key = value sections)")
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS threads for reproducible timing")
    args = parser.parse_args(argv)

    level = os.environ.get("RESPONSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    try:
        cp = load_config(args.config)
        os.makedirs(args.out_dir, exist_ok=True)
        return _COMMANDS[args.command](cp, args.out_dir, args.seed)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (NumericalError, UnsupportedOperation) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
