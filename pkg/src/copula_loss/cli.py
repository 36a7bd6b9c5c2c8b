"""Command-line front end.

Exit codes: 0 success, 2 bad arguments or config, 3 numerical failure,
4 bad input data.  Tables go to ``--out`` (default stdout) as CSV with
floats printed to 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from contextlib import contextmanager
from typing import Iterable

import numpy as np

from . import config as cfgmod
from .calibrate import (
    CalibrationProblem,
    DESettings,
    QuoteSet,
    calibrate,
    fit_recovery_mle,
    gaussian_mixture_problem,
)
from .engine import (
    TrancheSpec,
    cdo2_pmf,
    joint_nl_pmf,
    loss_pmf,
    tranche_pmf,
)
from .errors import ConfigError, CopulaLossError
from .factor import SpreadImplied
from .oracle import SimConfig, bench_dft_vs_recursion, simulate_loss_counts
from .pricing import price_tranches

log = logging.getLogger("copula_loss")

EXIT_OK, EXIT_CONFIG = 0, 2


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        text = format(float(x), ".17g")
        # keep floats recognisable as floats: 1 -> 1.0
        return text if any(c in text for c in ".ein") else text + ".0"
    return str(x)


@contextmanager
def _sink(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_csv(path: str | None, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    with _sink(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _write_json(path: str | None, obj) -> None:
    with _sink(path) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _load(args):
    if args.config is None:
        raise ConfigError(f"the {args.command} command needs --config")
    cfg = cfgmod.load_json(args.config)
    portfolio = cfgmod.portfolio_from_config(cfg)
    return cfg, portfolio


def _rule(args, cfg, portfolio):
    return cfgmod.rule_from_config(cfg, portfolio.d, args.quad_order)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_lossdist(args) -> int:
    cfg, port = _load(args)
    t = cfgmod.horizon_from_config(cfg, args.horizon)
    dist = loss_pmf(port, t, _rule(args, cfg, port), method=args.method)
    _write_csv(
        args.out,
        ("loss_units", "loss_amount", "probability"),
        ((k, k * dist.delta, p) for k, p in enumerate(dist.pmf)),
    )
    return EXIT_OK


def _tranche_arg(args, cfg, port) -> TrancheSpec:
    if args.attach is not None or args.detach is not None:
        if args.attach is None or args.detach is None:
            raise ConfigError("pass both --attach and --detach")
        spec = {"attach": args.attach, "detach": args.detach}
        units = args.units
    else:
        spec = cfg.get("tranche")
        if spec is None:
            raise ConfigError("missing key config.tranche (or pass --attach/--detach)")
        units = spec.get("units", "currency")
    notional = port.delta * port.max_units
    return cfgmod.tranche_from_config(spec, notional, units, "tranche")


def cmd_tranche(args) -> int:
    cfg, port = _load(args)
    t = cfgmod.horizon_from_config(cfg, args.horizon)
    tr = _tranche_arg(args, cfg, port)
    dist = tranche_pmf(loss_pmf(port, t, _rule(args, cfg, port)), tr)
    _write_csv(args.out, ("tranche_loss", "probability"), zip(dist.values, dist.probs))
    return EXIT_OK


def cmd_cdo2(args) -> int:
    cfg, port = _load(args)
    t = cfgmod.horizon_from_config(cfg, args.horizon)
    spec = cfg.get("cdo2")
    if not isinstance(spec, dict):
        raise ConfigError("missing key config.cdo2")
    shared = bool(spec.get("shared_factor", True)) and not args.independent
    portfolios, tranches = [], []
    entries = spec.get("tranches")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("config.cdo2.tranches must be a nonempty list")
    for i, ent in enumerate(entries):
        where = f"config.cdo2.tranches[{i}]"
        sub = port
        if "entities" in ent:
            sub = cfgmod.portfolio_from_config({**cfg, "entities": ent["entities"]}, where)
        copies = cfgmod._int(ent, "copies", where, 1)
        if copies < 1:
            raise ConfigError(f"{where}.copies must be positive")
        tr = cfgmod.tranche_from_config(ent, sub.delta * sub.max_units, ent.get("units", "currency"), where)
        portfolios += [sub] * copies
        tranches += [tr] * copies
    dist = cdo2_pmf(portfolios, tranches, t, _rule(args, cfg, port), shared_factor=shared)
    _write_csv(
        args.out,
        ("loss_units", "loss_amount", "probability"),
        ((k, k * dist.delta, p) for k, p in enumerate(dist.pmf)),
    )
    return EXIT_OK


def cmd_joint(args) -> int:
    cfg, port = _load(args)
    t = cfgmod.horizon_from_config(cfg, args.horizon)
    joint = joint_nl_pmf(port, t, _rule(args, cfg, port))
    pmf = joint.pmf
    rows = (
        (n, k, pmf[n, k])
        for n in range(pmf.shape[0])
        for k in range(pmf.shape[1])
        if args.all or pmf[n, k] != 0.0
    )
    _write_csv(args.out, ("defaults", "loss_units", "probability"), rows)
    return EXIT_OK


def cmd_price(args) -> int:
    cfg, port = _load(args)
    contracts, curve = cfgmod.contracts_from_config(cfg, port)
    prices = price_tranches(contracts, port, curve, _rule(args, cfg, port))
    rows = (
        (c.tranche.attach, c.tranche.detach, 1e4 * c.spread, p.premium, p.protection, p.upfront)
        for c, p in zip(contracts, prices)
    )
    _write_csv(args.out, ("attach", "detach", "spread_bp", "premium_leg", "protection_leg", "upfront"), rows)
    return EXIT_OK


def _calibration_problem(cfg: dict, quotes: QuoteSet) -> CalibrationProblem:
    spec = cfg.get("calibration", {})
    where = "config.calibration"
    template = spec.get("template", "gaussian_mixture")
    if template != "gaussian_mixture":
        raise ConfigError(f"{where}.template: unknown template {template!r}")
    marginal = cfgmod._wrap(where, SpreadImplied, quotes.index_spread, cfgmod._num(spec, "recovery", where, 0.0))
    return cfgmod._wrap(
        where,
        lambda: gaussian_mixture_problem(
            marginal,
            size=cfgmod._int(spec, "size", where, 125),
            loss=cfgmod.loss_from_config(spec.get("loss"), f"{where}.loss"),
            delta=cfgmod._num(spec, "delta", where, 1.0),
            fixed=spec.get("fixed"),
            rho_bounds=tuple(spec.get("rho_bounds", (-0.999, 0.999))),
            maturity=cfgmod._num(spec, "maturity_years", where, 5.0),
            payment_freq=cfgmod._int(spec, "payment_freq", where, 4),
            dt=cfgmod._num(spec, "dt", where, 1.0 / 48.0),
            weight_by_width=bool(spec.get("weight_by_width", False)),
            curve=cfgmod.curve_from_config(spec, where),
            settings=DESettings(**spec.get("de", {})),
        ),
    )


def cmd_calibrate(args) -> int:
    cfg = cfgmod.load_json(args.config) if args.config else {}
    if args.quotes is None:
        raise ConfigError("the calibrate command needs --quotes")
    spec = cfg.get("calibration", {})
    size = cfgmod._int(spec, "size", "config.calibration", 125)
    delta = cfgmod._num(spec, "delta", "config.calibration", 1.0)
    loss = cfgmod.loss_from_config(spec.get("loss"), "config.calibration.loss")
    quotes = cfgmod.read_quotes_csv(args.quotes, args.date, notional=size * loss.max_units * delta)
    problem = _calibration_problem(cfg, quotes)
    q = cfgmod.rule_from_config(cfg, 1, args.quad_order)
    result = calibrate(problem, quotes, q, seed=args.seed)
    log.info("calibration finished: stage=%s objective=%.3e", result.stage, result.objective)
    _write_json(args.out, result.to_json())
    return EXIT_OK


def cmd_fit_recovery(args) -> int:
    if args.data is None:
        raise ConfigError("the fit-recovery command needs --data")
    fit = fit_recovery_mle(cfgmod.read_recoveries(args.data), bins=args.bins)
    _write_json(args.out, {
        "alpha": fit.alpha,
        "beta": fit.beta,
        "mean": fit.mean,
        "sd": fit.sd,
        "shape_mean": fit.shape_mean,
        "loglik": fit.loglik,
        "counts": list(fit.counts),
    })
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 1:
        raise ConfigError("--sizes needs positive portfolio sizes")
    horizon = args.horizon if args.horizon is not None else 5.0
    q = cfgmod.rule_from_config({}, args.d, args.quad_order)
    rows = bench_dft_vs_recursion(sizes, args.d, horizon, args.repeats, q)
    _write_csv(args.out, ("method", "M", "d", "seconds"), rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg, port = _load(args)
    t = cfgmod.horizon_from_config(cfg, args.horizon)
    sim = cfgmod._wrap("simulate", SimConfig, args.paths, args.seed, t, args.batch_size)
    counts = simulate_loss_counts(port, sim)
    _write_csv(
        args.out,
        ("loss_units", "loss_amount", "count", "frequency"),
        ((k, k * port.delta, c, c / sim.paths) for k, c in enumerate(counts)),
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _nonneg_seed(text: str) -> int:
    val = int(text)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return val


def _positive_int(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="portfolio config (JSON)")
    common.add_argument("--out", help="output file; stdout when omitted")
    common.add_argument("--horizon", type=float, help="time horizon in years; overrides the config")
    common.add_argument("--quad-order", type=_positive_int, help="Gauss-Legendre points per factor")
    common.add_argument("--seed", type=_nonneg_seed, default=0, help="random seed (default 0)")
    common.add_argument(
        "--threads", type=_positive_int, default=1,
        help="accepted for compatibility; results do not depend on it",
    )

    parser = argparse.ArgumentParser(prog="copula-loss", description="Portfolio credit loss distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lossdist", parents=[common], help="portfolio loss PMF")
    p.add_argument("--method", choices=("fft", "dft"), default="fft")
    p.set_defaults(func=cmd_lossdist)

    p = sub.add_parser("tranche", parents=[common], help="tranche loss PMF")
    p.add_argument("--attach", type=float)
    p.add_argument("--detach", type=float)
    p.add_argument("--units", choices=("currency", "fraction"), default="currency")
    p.set_defaults(func=cmd_tranche)

    p = sub.add_parser("cdo2", parents=[common], help="loss PMF of a CDO of tranches")
    p.add_argument("--independent", action="store_true", help="give each portfolio its own factor")
    p.set_defaults(func=cmd_cdo2)

    p = sub.add_parser("joint", parents=[common], help="joint PMF of defaults and loss")
    p.add_argument("--all", action="store_true", help="also print zero-probability cells")
    p.set_defaults(func=cmd_joint)

    p = sub.add_parser("price", parents=[common], help="tranche legs and upfronts")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("calibrate", parents=[common], help="fit the Gaussian mixture to tranche quotes")
    p.add_argument("--quotes", help="quotes CSV")
    p.add_argument("--date", help="quote date to use when the file holds several")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fit-recovery", parents=[common], help="Beta-binomial fit to recoveries")
    p.add_argument("--data", help="one recovery fraction per line")
    p.add_argument("--bins", type=_positive_int, default=10)
    p.set_defaults(func=cmd_fit_recovery)

    p = sub.add_parser("bench", parents=[common], help="time the transform against the recursion")
    p.add_argument("--sizes", default="100,200,400,800")
    p.add_argument("--d", type=_positive_int, default=1)
    p.add_argument("--repeats", type=_positive_int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo loss histogram")
    p.add_argument("--paths", type=_positive_int, default=100_000)
    p.add_argument("--batch-size", type=_positive_int, default=1 << 20)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("COPULA_LOSS_LOG", "WARNING").upper()
    logging.basicConfig(
        level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    log.debug("running %s with %s", args.command, vars(args))
    try:
        return args.func(args)
    except CopulaLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BrokenPipeError:
        # downstream reader closed early, e.g. `| head`
        sys.stderr.close()
        return EXIT_OK
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
