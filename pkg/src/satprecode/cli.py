"""Command-line interface: ``satprecode <command> [options]``.

Errors are reported as one line ``error: <Type>: <message>`` on stderr with
exit status 1; usage problems exit with status 2.  Commands that draw
random numbers take ``--seed``; without it a seed is generated and printed
to stderr as ``seed=<value>`` so the run can be replayed.
"""

import argparse
import csv
import sys

import numpy as np

from . import io as csvio
from .config import RunConfig, Scenario, load_config
from .errors import SatPrecodeError
from .harness import SweepResult, SweepSpec, run_sweep, summarize, summary_csv
from .hybrid import hybrid_decompose
from .impairments import PHASE_DISTRIBUTIONS, PhaseNoiseModel, VolterraModel, estimate_outage, nonlinear_sinr, sample_perturbed_sinr
from .optimizer import AdmmConfig, QosTargets, maxmin_bisection, power_min_admm
from .precoding import PRECODERS, PrecodingMatrix, evaluate_sinr, get_precoder


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    seed = int(np.random.SeedSequence().generate_state(1, np.uint64)[0] >> np.uint64(1))
    print(f"seed={seed}", file=sys.stderr)
    return seed


def _config(args):
    return load_config(args.config) if getattr(args, "config", None) else RunConfig(Scenario())


def _channels(args):
    """Channels from ``--channels`` or drawn from ``--config`` and the seed."""
    if getattr(args, "channels", None):
        return csvio.read_channels(args.channels), None
    config = _config(args)
    if args.seed is None:
        args.seed = config.seed if config.seed is not None else _resolve_seed(args)
    _, channels = config.scenario.realize(args.seed)
    return channels, config


def _power(args, config):
    if args.power is not None:
        return args.power
    return (config.scenario if config else Scenario()).per_feed_power


def _add_channel_source(p):
    src = p.add_argument_group("channel source")
    src.add_argument("--channels", help="channel CSV written by 'generate'")
    src.add_argument("--config", help="scenario YAML; channels are drawn with --seed")
    p.add_argument("--seed", type=int, help="RNG seed")


def _csv_or_stdout(path, header, rows):
    if path:
        csvio.write_table(path, header, rows)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_generate(args):
    config = _config(args)
    if args.seed is None:
        args.seed = config.seed if config.seed is not None else _resolve_seed(args)
    geometry, channels = config.scenario.realize(args.seed)
    csvio.write_channels(args.out, channels)
    if args.geometry_out:
        rows = [(k, i, repr(float(x)), repr(float(y)))
                for k in range(geometry.n_beams) for i, (x, y) in enumerate(geometry.user_positions[k])]
        csvio.write_table(args.geometry_out, ["beam", "user", "x", "y"], rows)
    print(f"users={channels.n_users} beams={channels.n_beams} feeds={channels.n_feeds}")


def cmd_precode(args):
    channels, config = _channels(args)
    W = get_precoder(args.method)(channels, _power(args, config))
    csvio.write_matrix(args.out, W)
    report = evaluate_sinr(channels, W)
    print(f"sum_rate={report.sum_rate!r}")


def cmd_evaluate(args):
    channels, _ = _channels(args)
    W = csvio.read_matrix(args.precoder)
    report = evaluate_sinr(channels, W)
    if args.out:
        csvio.write_sinr(args.out, report)
    print(f"sum_rate={report.sum_rate!r}")


def _admm_config(args):
    return AdmmConfig(rho=args.rho, max_iter=args.max_iter, restarts=args.restarts)


def cmd_solve_qos(args):
    channels, config = _channels(args)
    seed = _resolve_seed(args)
    gamma = [float(v) for v in args.gamma.split(",")]
    targets = QosTargets(gamma, args.noise_variance)
    targets.for_beams(channels.n_beams)
    outcome = power_min_admm(channels, targets, _power(args, config), _admm_config(args), seed=seed)
    if outcome.W is not None and args.out:
        csvio.write_matrix(args.out, outcome.W)
    if args.log:
        csvio.write_table(args.log, ["iteration", "primal", "dual"],
                          [(i + 1, repr(float(p)), repr(float(d))) for i, (p, d) in enumerate(outcome.residuals)])
    print(f"status={outcome.status} objective={outcome.objective!r} iterations={outcome.iterations}")


def cmd_maxmin(args):
    channels, config = _channels(args)
    seed = _resolve_seed(args)
    result = maxmin_bisection(channels, _power(args, config), args.tol, _admm_config(args),
                              noise_variance=args.noise_variance, seed=seed)
    if args.out:
        csvio.write_matrix(args.out, result.W)
    print(f"t={result.t!r} t_infeasible={result.t_infeasible!r} probes={result.probes}")


def cmd_impair(args):
    channels, config = _channels(args)
    seed = _resolve_seed(args)
    P = _power(args, config)
    if args.precoder:
        W = PrecodingMatrix(csvio.read_matrix(args.precoder), P)
    else:
        W = get_precoder(args.method)(channels, P)
    phase = PhaseNoiseModel(args.phase_dist, args.phase_param)
    volterra = VolterraModel(complex(args.g1), complex(args.g3))
    children = np.random.SeedSequence(seed).spawn(2)
    phase_seed = int(children[0].generate_state(1)[0])
    symbol_seed = int(children[1].generate_state(1)[0])
    nominal = evaluate_sinr(channels, W).sinr
    samples = sample_perturbed_sinr(channels, W, phase, args.trials, phase_seed)
    q10, q50, q90 = np.quantile(samples, [0.1, 0.5, 0.9], axis=0)
    outage = estimate_outage(channels, W, phase, args.threshold, args.trials, phase_seed).probability
    effective = nonlinear_sinr(channels, W, volterra, args.symbols, symbol_seed).sinr
    rows = [(k, i, repr(float(nominal[k, i])), repr(float(q10[k, i])), repr(float(q50[k, i])),
             repr(float(q90[k, i])), repr(float(outage[k, i])), repr(float(effective[k, i])))
            for k in range(nominal.shape[0]) for i in range(nominal.shape[1])]
    _csv_or_stdout(args.out, ["beam", "user", "nominal_sinr", "sinr_q10", "sinr_q50", "sinr_q90",
                              "outage", "nonlinear_sinr"], rows)


def cmd_hybrid(args):
    W = csvio.read_matrix(args.precoder)
    factors = hybrid_decompose(W, args.n_rf, args.iters, P=args.power)
    if args.out_rf:
        csvio.write_matrix(args.out_rf, factors.F_RF)
    if args.out_bb:
        csvio.write_matrix(args.out_bb, factors.F_BB)
    if args.trace:
        csvio.write_table(args.trace, ["iteration", "relative_error"],
                          [(i, repr(float(e))) for i, e in enumerate(factors.errors)])
    print(f"reconstruction_error={factors.reconstruction_error!r} scale={factors.scale!r}")


def cmd_sweep(args):
    config = load_config(args.config)
    spec = SweepSpec.from_config(config)
    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    elif config.sweep is None:
        overrides["master_seed"] = _resolve_seed(args)
    if overrides:
        spec = SweepSpec(spec.scenario, spec.precoders, spec.users_per_beam,
                         overrides.get("runs", spec.runs), overrides.get("master_seed", spec.master_seed))
    result = run_sweep(spec, workers=args.workers, timing=not args.no_timing)
    result.write(args.out)
    failed = sum(not r.ok for r in result.rows)
    print(f"rows={len(result.rows)} failed={failed}")


def cmd_summarize(args):
    text = summary_csv(summarize(SweepResult.read(args.input)))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="satprecode", description="Multibeam satellite precoding toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("generate", help="draw a user layout and its channel matrices")
    p.add_argument("--config", help="scenario YAML (defaults to the desk scenario)")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--out", required=True, help="channel CSV")
    p.add_argument("--geometry-out", help="optional CSV of user positions")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("precode", help="compute a linear precoder")
    _add_channel_source(p)
    p.add_argument("--method", choices=sorted(PRECODERS), default="mmse")
    p.add_argument("--power", type=float, help="per-feed power limit in W")
    p.add_argument("--out", required=True, help="precoder matrix CSV")
    p.set_defaults(func=cmd_precode)

    p = sub.add_parser("evaluate", help="SINR and sum rate of a precoder")
    _add_channel_source(p)
    p.add_argument("--precoder", required=True, help="precoder matrix CSV")
    p.add_argument("--out", help="SINR CSV")
    p.set_defaults(func=cmd_evaluate)

    for name, func, text in (("solve-qos", cmd_solve_qos, "minimum power meeting SINR targets (ADMM)"),
                             ("maxmin", cmd_maxmin, "max-min fair SINR by bisection")):
        p = sub.add_parser(name, help=text)
        _add_channel_source(p)
        p.add_argument("--power", type=float, help="per-feed power limit in W")
        p.add_argument("--noise-variance", type=float, default=1.0)
        p.add_argument("--rho", type=float, default=AdmmConfig.rho)
        p.add_argument("--max-iter", type=int, default=AdmmConfig.max_iter)
        p.add_argument("--restarts", type=int, default=AdmmConfig.restarts)
        p.add_argument("--out", help="precoder matrix CSV")
        if name == "solve-qos":
            p.add_argument("--gamma", required=True, help="linear SINR target, one value or one per beam (comma separated)")
            p.add_argument("--log", help="CSV of ADMM residuals per iteration")
        else:
            p.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance (linear SINR)")
        p.set_defaults(func=func)

    p = sub.add_parser("impair", help="phase-noise outage and transponder non-linearity")
    _add_channel_source(p)
    p.add_argument("--precoder", help="precoder matrix CSV (otherwise computed with --method)")
    p.add_argument("--method", choices=sorted(PRECODERS), default="mmse")
    p.add_argument("--power", type=float, help="per-feed power limit in W")
    p.add_argument("--phase-dist", choices=PHASE_DISTRIBUTIONS, default="gaussian")
    p.add_argument("--phase-param", type=float, default=0.0)
    p.add_argument("--threshold", type=float, default=1.0, help="outage SINR threshold (linear)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--g1", default="1", help="linear transponder gain (complex, e.g. 1+0j)")
    p.add_argument("--g3", default="0", help="third-order coefficient (complex)")
    p.add_argument("--symbols", type=int, default=10000, help="QPSK symbol vectors for the non-linear SINR")
    p.add_argument("--out", help="CSV (stdout if omitted)")
    p.set_defaults(func=cmd_impair)

    p = sub.add_parser("hybrid", help="factor a precoder into analog and digital stages")
    p.add_argument("--precoder", required=True, help="precoder matrix CSV")
    p.add_argument("--n-rf", type=int, required=True)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--power", type=float, help="per-feed cap of the cascade (default: that of the input)")
    p.add_argument("--out-rf", help="F_RF matrix CSV")
    p.add_argument("--out-bb", help="F_BB matrix CSV")
    p.add_argument("--trace", help="CSV of the error after each iteration")
    p.set_defaults(func=cmd_hybrid)

    p = sub.add_parser("sweep", help="Monte Carlo rate and run-time sweep")
    p.add_argument("--config", required=True, help="YAML with a scenario and a sweep section")
    p.add_argument("--out", required=True, help="result CSV")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--runs", type=int, help="override sweep.runs")
    p.add_argument("--seed", type=int, help="override sweep.master_seed")
    p.add_argument("--no-timing", action="store_true", help="leave wall_time_ms empty (byte-stable output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="per-point means and standard errors of a sweep CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="summary CSV (stdout if omitted)")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        status = args.func(args)
    except (SatPrecodeError, ValueError, OSError) as exc:
        message = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    return 0 if status is None else status


if __name__ == "__main__":
    sys.exit(main())
