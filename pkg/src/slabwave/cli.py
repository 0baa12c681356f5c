"""Command-line orchestration.

Subcommands: linear, solve, symbol-scan, pgamma-check, gamma-sweep,
selftest.  Exit codes: 0 success, 2 config error, 3 numerical failure.
Errors go to standard error with the machine-parsable prefix "E:<code>:".
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .fieldexpr import ParseError, EvalError
from .io_formats import write_csv, write_slb1
from .grid import make_grid, transform_forward
from .linear import LinearData, marcinkiewicz_check, solve_linear
from .frequency import mh_scan
from .nonlinear import (energy_balance, eulerian_transfer, gamma_sweep,
                        newton_solve)

_EXIT_CONFIG = 2
_EXIT_NUMERIC = 3


def _err(code, message):
    print(f"E:{code}:{message}", file=sys.stderr)


def _outpath(cfg, name):
    d = cfg["output_dir"]
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _sample_surface(grid, fn):
    x = grid.x1
    X1 = np.broadcast_to(x[:, None], (grid.Nx, grid.Nx))
    X2 = np.broadcast_to(x[None, :], (grid.Nx, grid.Nx))
    X3 = np.full_like(X1, grid.b)
    return np.asarray(fn(X1, X2, X3), dtype=float)


def _sample_bulk(grid, fn):
    x = grid.x1
    X1 = np.broadcast_to(x[:, None, None], (grid.Nx, grid.Nx, grid.Ny))
    X2 = np.broadcast_to(x[None, :, None], (grid.Nx, grid.Nx, grid.Ny))
    X3 = np.broadcast_to(grid.y[None, None, :], (grid.Nx, grid.Nx, grid.Ny))
    return np.asarray(fn(X1, X2, X3), dtype=float)


def cmd_linear(cfg):
    from .fieldexpr import as_callable
    grid = make_grid(**cfg.grid_args())
    params = cfg.params()
    f = transform_forward(grid, np.stack(
        [_sample_bulk(grid, as_callable(cfg[f"data.f{i}"])) for i in (1, 2, 3)]))
    k = transform_forward(grid, np.stack(
        [_sample_surface(grid, as_callable(cfg[f"data.k{i}"])) for i in (1, 2, 3)]))
    h = transform_forward(grid, _sample_surface(grid, as_callable(cfg["data.h"]))[None])
    sol = solve_linear(LinearData(f=f, k=k, h=h), params, grid)
    write_slb1(_outpath(cfg, "linear_solution.slb1"), [
        ("p", sol.p.coeffs), ("u", sol.u.coeffs), ("eta", sol.eta.coeffs),
        ("eta_phys", sol.eta.values_real()),
    ])
    print(f"wrote {_outpath(cfg, 'linear_solution.slb1')}")
    return 0


def cmd_solve(cfg):
    grid = make_grid(**cfg.grid_args())
    params = cfg.params()
    data = cfg.stress_force()
    gamma = cfg["params.gamma"]
    state, report = newton_solve(gamma, params, data, grid,
                                 tol=cfg["newton.tol"],
                                 max_iter=cfg["newton.max_iter"],
                                 damping=cfg["newton.damping"])
    diss, power, gap = energy_balance(state, gamma, params, data)
    report.energy_gap = gap
    eul = eulerian_transfer(state, gamma, params, data)

    eta = state.eta(gamma)
    write_slb1(_outpath(cfg, "solution.slb1"), [
        ("p", state.p.coeffs), ("u", state.u.coeffs),
        ("ups", state.ups.coeffs), ("eta", eta.coeffs),
        ("eta_phys", eta.values_real()),
    ])
    write_csv(_outpath(cfg, "newton.csv"),
              ["iteration", "residual", "contraction_ratio"],
              [(i + 1, rn, report.contraction_ratios[i - 1] if i >= 1 else np.nan)
               for i, rn in enumerate(report.residual_norms)])
    write_csv(_outpath(cfg, "energy.csv"),
              ["dissipation", "power", "relative_gap", "min_J",
               "eulerian_residual", "kinematic_residual", "iterations"],
              [(diss, power, gap, report.min_J, eul["max_residual"],
                eul["max_kinematic"], report.iterations)])
    print(f"iterations={report.iterations} residual={report.final_residual:.3e} "
          f"energy_gap={gap:.3e}")
    return 0


def cmd_symbol_scan(cfg):
    grid_b = cfg["grid.b"]
    params = cfg.params()
    radii = np.logspace(np.log10(cfg["scan.radii_min"]),
                        np.log10(cfg["scan.radii_max"]), cfg["scan.n_radii"])
    angles = np.linspace(0.0, 2 * np.pi, cfg["scan.n_angles"], endpoint=False) + 0.31
    report = mh_scan(params, cfg["scan.s"], radii, angles,
                     alpha_max=cfg["scan.alpha_max"], ny=cfg["scan.Ny"], b=grid_b)
    write_csv(_outpath(cfg, "symbol_scan.csv"),
              ["radius", "angle", "component", "alpha1", "alpha2", "weighted_value"],
              [(r, th, comp, a[0], a[1], v) for (r, th, comp, a, v) in report.rows])
    write_csv(_outpath(cfg, "symbol_scan_sups.csv"),
              ["component", "alpha1", "alpha2", "sup"],
              [(comp, a[0], a[1], v) for (comp, a), v in report.sup_table()])
    print(f"wrote {_outpath(cfg, 'symbol_scan.csv')}")
    return 0


def cmd_pgamma_check(cfg):
    gammas = cfg.gammas("pgamma.gammas")
    radii = np.logspace(-3, 3, 61)
    angles = np.linspace(0.0, 2 * np.pi, 64, endpoint=False) + 0.01
    sups = marcinkiewicz_check(gammas, radii, angles)
    bounds = {"p": 1.0, "xi1_d1p": 0.5, "xi2_d2p": 1.0, "xi1xi2_d1d2p": 3.0}
    rows = [(k, sups[k], bounds[k], 1 if sups[k] <= bounds[k] + 1e-9 else 0)
            for k in ("p", "xi1_d1p", "xi2_d2p", "xi1xi2_d1d2p")]
    write_csv(_outpath(cfg, "pgamma.csv"),
              ["quantity", "sup", "bound", "within_bound"], rows)
    bad = [r for r in rows if not r[3]]
    print(f"wrote {_outpath(cfg, 'pgamma.csv')}")
    if bad:
        raise FloatingPointError(f"multiplier bound violated: {bad}")
    return 0


def cmd_gamma_sweep(cfg):
    grid = make_grid(**cfg.grid_args())
    params = cfg.params()
    data = cfg.stress_force()
    gammas = cfg.gammas()
    rows, _ = gamma_sweep(gammas, params, data, grid, tol=cfg["newton.tol"],
                          max_iter=max(cfg["newton.max_iter"], 40))
    write_csv(_outpath(cfg, "gamma_sweep.csv"),
              ["gamma", "diff_norm", "gammaR1_norm", "iterations", "converged"],
              [(r["gamma"], r["diff_norm"], r["gammaR1"], r["iterations"],
                1 if r["converged"] else 0) for r in rows])
    print(f"wrote {_outpath(cfg, 'gamma_sweep.csv')}")
    if any(not r["converged"] for r in rows):
        raise FloatingPointError("one or more sweep solves failed")
    return 0


def cmd_selftest(cfg):
    from . import acceptance
    results = acceptance.run_all(out_dir=cfg["output_dir"])
    failed = [r for r in results if not r.passed]
    return 0 if not failed else _EXIT_NUMERIC


_COMMANDS = {
    "linear": cmd_linear,
    "solve": cmd_solve,
    "symbol-scan": cmd_symbol_scan,
    "pgamma-check": cmd_pgamma_check,
    "gamma-sweep": cmd_gamma_sweep,
    "selftest": cmd_selftest,
}


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="slabwave",
        description="Spectral solver for free-boundary Stokes waves in a slab")
    ap.add_argument("subcommand", choices=sorted(_COMMANDS))
    ap.add_argument("config", nargs="?", default=None,
                    help="key=value config file (defaults apply when omitted)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, ParseError) as exc:
        _err("config", str(exc))
        return _EXIT_CONFIG
    try:
        try:
            cfg.stress_force()
        except (ParseError, EvalError) as exc:
            _err("config", f"bad field expression: {exc}")
            return _EXIT_CONFIG
        return _COMMANDS[args.subcommand](cfg)
    except (ParseError, ConfigError) as exc:
        _err("config", str(exc))
        return _EXIT_CONFIG
    except (RuntimeError, FloatingPointError, ValueError,
            np.linalg.LinAlgError) as exc:
        _err("numeric", str(exc))
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
