"""Batch command-line interface.

One executable, five subcommands (simulate, identify, certify, montecarlo,
forecast).  Parameters live in a JSON config file; the flags --out, --seed
and --threads override their config keys.  Outputs are never overwritten
without --force, carry no timestamps, and embed the resolved config for
provenance, so a rerun of the same config is byte-identical.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical
degeneracy under --strict.  Failures print a machine-readable error JSON
on stdout.  Log verbosity comes from FODSID_LOG (error|warn|info|debug).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__, io
from .certify import BoundConstants, evaluate_bound, evaluate_bound_with_inputs, \
    monte_carlo_campaign
from .config import config_class, load_config, parse_config
from .core import augment
from .errors import ConfigError, DataError, DegenerateError, DomainError, FodsidError
from .forecast import load_series, window_size_sweep, windowed_fit_predict
from .ident import ols_fit, ols_fit_with_inputs
from .sim import gaussian_inputs, simulate_augmented, simulate_exact

log = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}

_SUBCOMMANDS = {
    "simulate": "generate a trajectory from a system description",
    "identify": "fit the companion matrix to a trajectory CSV",
    "certify": "evaluate the sample-complexity bound for a system",
    "montecarlo": "run a bound-versus-error Monte-Carlo campaign",
    "forecast": "windowed one-step forecasting of a multichannel CSV",
}

# flag name -> config key; applied only when the flag was actually given
_OVERRIDES = {"out": "out", "seed": "master_seed", "threads": "threads"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fodsid",
        description="Fractional-order system simulation, identification, "
                    "and sample-complexity certification.")
    parser.add_argument("--version", action="version", version=f"fodsid {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in _SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", metavar="PATH", help="JSON config file")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, metavar="N",
                        help="master seed (overrides config)")
        sp.add_argument("--threads", type=int, metavar="N",
                        help="worker thread cap (overrides config)")
        sp.add_argument("--force", action="store_true",
                        help="allow overwriting existing output files")
        sp.add_argument("--strict", action="store_true",
                        help="treat numerical degeneracy as fatal (exit 4)")
        sp.add_argument("--no-plot", action="store_true",
                        help="skip the figure next to the delimited output")
    return parser


def _resolve_config(args):
    """Load the config file (if any), apply flag overrides, parse fail-closed."""
    if args.config:
        # parse once to validate the file on its own, then re-apply overrides
        raw_cfg = load_config(args.subcommand, args.config)
        data = raw_cfg.to_dict()
    else:
        data = {}
    field_names = {f.name for f in dataclasses.fields(config_class(args.subcommand))}
    for flag, key in _OVERRIDES.items():
        value = getattr(args, flag)
        if value is None:
            continue
        if key not in field_names:
            raise ConfigError(f"--{flag} does not apply to '{args.subcommand}'")
        data[key] = value
    if args.no_plot:
        if "plot" not in field_names:
            raise ConfigError(f"--no-plot does not apply to '{args.subcommand}'")
        data["plot"] = False
    return parse_config(args.subcommand, data)


def _target(out_dir: str, name: str, force: bool) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    if os.path.exists(path) and not force:
        raise ConfigError(f"refusing to overwrite {path} (pass --force)")
    return path


def _provenance(cfg) -> dict:
    return {"tool": "fodsid", "version": __version__, "config": cfg.to_dict()}


def _constants(cfg) -> BoundConstants:
    return BoundConstants(C_const=cfg.C_const, c_const=cfg.c_const,
                          gramian_index=cfg.gramian_index,
                          sigma_scaling=cfg.sigma_scaling)


def cmd_simulate(cfg, force: bool, strict: bool) -> list[str]:
    system = io.load_system(cfg.system)
    x0 = None if cfg.x0 is None else np.asarray(cfg.x0, dtype=float)
    inputs = None
    sigma_u = None
    if system.B is not None:
        inputs = gaussian_inputs(cfg.master_seed, cfg.K, system.m,
                                 cfg.sigma_u, cfg.stream)
        sigma_u = cfg.sigma_u
    if cfg.generator == "exact":
        traj = simulate_exact(system, x0, cfg.K, cfg.master_seed, inputs,
                              stream=cfg.stream, a0_convention=cfg.a0_convention)
    else:
        aug = augment(system, cfg.p, cfg.a0_convention)
        traj = simulate_augmented(aug, x0, cfg.K, cfg.master_seed, inputs,
                                  sigma=system.sigma, stream=cfg.stream)
    csv_path = _target(cfg.out, f"{cfg.tag}.csv", force)
    meta_path = _target(cfg.out, f"{cfg.tag}.meta.json", force)
    io.write_trajectory_csv(traj, csv_path)
    io.write_trajectory_meta(traj, meta_path,
                             extra={"sigma_u": sigma_u,
                                    "provenance": _provenance(cfg)})
    written = [csv_path, meta_path]
    if cfg.plot:
        from . import plots
        png = _target(cfg.out, f"{cfg.tag}.png", force)
        plots.save_trajectory_figure(traj, png)
        written.append(png)
    return written


def cmd_identify(cfg, force: bool, strict: bool) -> list[str]:
    traj = io.read_trajectory_csv(cfg.trajectory)
    structured = cfg.mode == "structured"
    if traj.inputs is not None:
        if structured:
            raise ConfigError("structured mode does not support input-bearing "
                              "trajectories")
        if cfg.system is None:
            raise ConfigError("trajectory carries inputs; set 'system' so the "
                              "input matrix B is known")
        system = io.load_system(cfg.system)
        if system.B is None:
            raise ConfigError(f"system {cfg.system} has no input matrix B")
        Btilde = augment(system, cfg.p).Btilde
        est = ols_fit_with_inputs(traj, cfg.p, Btilde, drop_initial=cfg.drop_initial)
    else:
        est = ols_fit(traj, cfg.p, structured=structured,
                      drop_initial=cfg.drop_initial)
    if est.degenerate and strict:
        raise DegenerateError("rank-deficient regressors (minimum-norm solution); "
                              "failing because --strict is set")
    path = _target(cfg.out, f"{cfg.tag}.json", force)
    io.write_estimate_json(est, path, provenance=_provenance(cfg))
    if est.degenerate:
        log.warning("estimate flagged degenerate; see %s", path)
    return [path]


def cmd_certify(cfg, force: bool, strict: bool) -> list[str]:
    system = io.load_system(cfg.system)
    aug = augment(system, cfg.p, cfg.a0_convention)
    constants = _constants(cfg)
    if cfg.variant == "with_inputs":
        cert = evaluate_bound_with_inputs(aug, cfg.K, cfg.k, cfg.delta,
                                          system.sigma, cfg.sigma_u, constants)
    else:
        cert = evaluate_bound(aug, cfg.K, cfg.k, cfg.delta, system.sigma, constants)
    if not cert.valid and strict:
        raise DegenerateError("certificate invalid (singular small-ball Gramian)")
    path = _target(cfg.out, f"{cfg.tag}.json", force)
    io.write_certificate_json(cert, path, provenance=_provenance(cfg))
    return [path]


def cmd_montecarlo(cfg, force: bool, strict: bool) -> list[str]:
    system = io.load_system(cfg.system)
    result = monte_carlo_campaign(
        system, cfg.p, cfg.K_list, cfg.trials, cfg.delta, _constants(cfg),
        cfg.master_seed, threads=cfg.threads, generator=cfg.generator,
        sigma_u=cfg.sigma_u, structured=(cfg.mode == "structured"),
        x0=cfg.x0, a0_convention=cfg.a0_convention)
    csv_path = _target(cfg.out, f"{cfg.tag}.csv", force)
    meta_path = _target(cfg.out, f"{cfg.tag}.meta.json", force)
    io.write_campaign_csv(result, csv_path)
    io.write_json({"warnings": list(result.warnings),
                   "provenance": _provenance(cfg)}, meta_path)
    written = [csv_path, meta_path]
    if cfg.plot:
        from . import plots
        png = _target(cfg.out, f"{cfg.tag}.png", force)
        plots.save_campaign_figure(result, png)
        written.append(png)
    return written


def cmd_forecast(cfg, force: bool, strict: bool) -> list[str]:
    series, names = load_series(cfg.data, delimiter=cfg.delimiter,
                                channel_columns=cfg.channel_columns,
                                max_rows=cfg.max_rows)
    p = cfg.window_size - 2 if cfg.p is None else cfg.p
    fc = windowed_fit_predict(series, cfg.alpha, p, cfg.window_size,
                              sliding=cfg.sliding, zscore=cfg.zscore,
                              structured=(cfg.mode == "structured"),
                              drop_initial=cfg.drop_initial, threads=cfg.threads)
    if strict and any(est.degenerate for est in fc.per_window_estimates):
        raise DegenerateError("at least one window fit was rank-deficient; "
                              "failing because --strict is set")
    pred_path = _target(cfg.out, f"{cfg.tag}.csv", force)
    meta_path = _target(cfg.out, f"{cfg.tag}.meta.json", force)
    io.write_predictions_csv(fc, series, pred_path)
    io.write_json({"channels": names, "window_size": fc.window_size, "p": fc.p,
                   "alpha": fc.alpha.tolist(), "metrics": fc.metrics,
                   "provenance": _provenance(cfg)}, meta_path)
    written = [pred_path, meta_path]
    if cfg.plot:
        from . import plots
        png = _target(cfg.out, f"{cfg.tag}.png", force)
        plots.save_forecast_figure(series, fc, png)
        written.append(png)
    if cfg.window_sizes:
        rows = window_size_sweep(series, cfg.alpha, cfg.p, cfg.window_sizes,
                                 sliding=cfg.sliding, zscore=cfg.zscore,
                                 structured=(cfg.mode == "structured"),
                                 drop_initial=cfg.drop_initial, threads=cfg.threads)
        sweep_path = _target(cfg.out, f"{cfg.tag}_sweep.csv", force)
        io.write_sweep_csv(rows, sweep_path)
        written.append(sweep_path)
        if cfg.plot:
            from . import plots
            sweep_png = _target(cfg.out, f"{cfg.tag}_sweep.png", force)
            plots.save_sweep_figure(rows, sweep_png)
            written.append(sweep_png)
    return written


_DISPATCH = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "certify": cmd_certify,
    "montecarlo": cmd_montecarlo,
    "forecast": cmd_forecast,
}


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
    return code


def main(argv=None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("FODSID_LOG", "warn").lower(),
                            logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        written = _DISPATCH[args.subcommand](cfg, args.force, args.strict)
        for path in written:
            print(f"wrote {path}")
        return 0
    except (ConfigError, DomainError) as exc:
        return _fail(exc, 2)
    except DataError as exc:
        return _fail(exc, 3)
    except DegenerateError as exc:
        return _fail(exc, 4)
    except FodsidError as exc:  # anything package-specific that slipped through
        return _fail(exc, 2)


if __name__ == "__main__":
    sys.exit(main())
