"""Command line entry point: simulate, preset, verify, scan-hessian."""
import argparse
import json
import sys

from .config import PRESETS, ConfigError, load_config, load_preset
from .grid import CalibrationError, ProfileError
from .runner import EXIT_INVALID, EXIT_OK, jsonable, run_case
from .thermo import ParameterError, hessian_min_scan
from .verify import FAIL, verify_suite


def _parser():
    ap = argparse.ArgumentParser(prog="vdwmix", description="Van der Waals mixture transport simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: output_dir from the config)")
    s.add_argument("--quiet", action="store_true")

    s = sub.add_parser("preset", help="run one of the shipped cases")
    s.add_argument("--case", required=True, choices=sorted(PRESETS))
    s.add_argument("--out", required=True)
    s.add_argument("--quiet", action="store_true")

    s = sub.add_parser("verify", help="seeded identity and bound checks")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="take mixture parameters from this config (default Case I)")

    s = sub.add_parser("scan-hessian", help="smallest Hessian eigenvalue over a state grid")
    s.add_argument("--config", required=True)
    s.add_argument("--resolution", type=int, default=200)
    s.add_argument("--margin", type=float, default=1e-3)
    return ap


def _progress(quiet):
    if quiet:
        return None

    def report(t, tau, rho):
        print(f"t={t:.6g} tau={tau:.3g} rho={rho:.3g}", file=sys.stderr)
    return report


def _run(cfg, out, quiet):
    try:
        status, rep = run_case(cfg, out, _progress(quiet))
    except (CalibrationError, ProfileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    summary = {k: rep.get(k) for k in ("steps", "t_final", "energy_max_increase", "decay_fit_H_rel", "abort")}
    print(json.dumps(jsonable(summary), sort_keys=True))
    return status


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _run(load_config(args.config), args.out, args.quiet)
        if args.command == "preset":
            return _run(load_preset(args.case), args.out, args.quiet)
        if args.command == "verify":
            params = load_config(args.config).params if args.config else None
            if args.seed < 0:
                raise ConfigError(["seed must be nonnegative"])
            report = verify_suite(args.seed, params)
            print(json.dumps(jsonable(report), indent=2, sort_keys=True))
            return 1 if any(c["status"] == FAIL for c in report["checks"]) else EXIT_OK
        if args.command == "scan-hessian":
            cfg = load_config(args.config)
            value = hessian_min_scan(cfg.params, args.resolution, args.margin)
            print(json.dumps({"min_eigenvalue": value, "resolution": args.resolution,
                              "margin": args.margin, "positive": value > 0}, sort_keys=True))
            return EXIT_OK
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
