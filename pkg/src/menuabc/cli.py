"""Command-line entry point: ``menuabc {simulate,infer,reject,report}``."""
import argparse
import logging
import sys

from .config import STUDIES, ConfigError, config_from_dict, load_config
from .study import run_rejection, run_report, run_simulate, run_study


def _parse_theta(items, names):
    values = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}", "--theta")
        if key not in names:
            raise ConfigError(f"unknown parameter {key!r}; inferred axes are {names}", "--theta")
        values[key] = float(val)
    missing = [n for n in names if n not in values]
    if missing:
        raise ConfigError(f"missing values for {missing}", "--theta")
    return [values[n] for n in names]


def _resolve_config(args):
    if args.config and args.study:
        raise ConfigError("give either --config or --study, not both", "--study")
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = config_from_dict({"study": args.study or "study1"})
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.workers is not None:
        overrides["workers"] = args.workers
    return cfg.replace(**overrides) if overrides else cfg


def build_parser():
    p = argparse.ArgumentParser(prog="menuabc",
                                description="Likelihood-free inference for a menu-search model.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON run configuration")
        sp.add_argument("--study", choices=STUDIES[:-1], help="use a preset without a file")
        sp.add_argument("--seed", type=int, metavar="N", help="master seed")
        sp.add_argument("--workers", type=int, metavar="N", help="concurrent simulations")
        sp.add_argument("--out", metavar="DIR", help="output directory")

    sim = sub.add_parser("simulate", help="train, simulate and summarize at one parameter vector")
    common(sim)
    sim.add_argument("--theta", nargs="+", default=None, metavar="NAME=VALUE",
                     help="parameter values (default: the configured ground truth)")
    common(sub.add_parser("infer", help="BOLFI inference and comparison report"))
    common(sub.add_parser("reject", help="rejection ABC baseline"))
    rep = sub.add_parser("report", help="rebuild report.csv from an inference output directory")
    rep.add_argument("--out", metavar="DIR", required=True)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            rows = run_report(args.out)
            print(f"wrote report for {len(rows)} statistics to {args.out}")
            return 0
        cfg = _resolve_config(args)
        if args.command == "simulate":
            theta = _parse_theta(args.theta, cfg.names) if args.theta else None
            summary = run_simulate(cfg, theta)
            for cond, st in summary.conditions.items():
                print(f"{cond}: n={st.n_sessions} tct_mean={st.tct_mean:.1f} ms "
                      f"tct_std={st.tct_std:.1f} ms fixations={st.n_fixations_mean:.2f}")
        elif args.command == "infer":
            result = run_study(cfg)
            est = ", ".join(f"{n}={v:.4g}" for n, v in zip(cfg.names, result.map))
            print(f"MAP: {est}  ({len(result.samples)} simulations, output in {cfg.out})")
        else:
            res = run_rejection(cfg)
            est = ", ".join(f"{n}={v:.4g}" for n, v in zip(cfg.names, res.mean()))
            print(f"accepted mean: {est}  ({len(res.samples)} of {len(res.all_samples)})")
    except (ConfigError, OSError) as exc:
        print(f"menuabc: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface any failure as exit status
        logging.getLogger("menuabc").debug("run failed", exc_info=True)
        print(f"menuabc: run failed: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
