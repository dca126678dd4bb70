"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import FittedClassifier, Fixed, OptimalPlugIn, Unit, classify, discriminant, resolve_weights
from .errors import (
    ConvergenceError,
    DatasetFormatError,
    DegenerateError,
    DomainError,
    ModelError,
    ReplicationError,
    UsageError,
)
from .model import (
    LabeledDataset,
    PopulationModel,
    canonical_model,
    fit,
    format_float,
    read_dataset_csv,
    sample,
    write_dataset_csv,
)
from .montecarlo import ExperimentConfig, run, stream_seed
from .risk import (
    PowerDistribution,
    Regime,
    limiting_divergence,
    optimal_risk,
    priors_from_log_ratio,
    theorem1_error_limits,
    unit_risk,
    w0,
    w0_function,
    weighted_error_limits,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not (math.isfinite(value) and value >= 0):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {text}")
    return value


def _pos_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def parse_power(spec: str) -> PowerDistribution:
    """``point:<gamma2>`` or a path to a power-distribution JSON file."""
    if spec.startswith("point:"):
        try:
            return PowerDistribution.point_mass(float(spec[len("point:"):]))
        except ValueError as exc:
            raise UsageError(f"bad point mass specification {spec!r}") from exc
    try:
        data = json.loads(Path(spec).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON in {spec}: {exc.msg}", exc.lineno) from exc
    return PowerDistribution.from_json_dict(data)


def _power_from_args(args) -> PowerDistribution:
    if args.h is not None:
        return parse_power(args.h)
    return PowerDistribution.point_mass(args.gamma2)


def _read_weights(path) -> tuple:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from exc
    if isinstance(data, dict):
        data = data.get("weights")
    if not isinstance(data, list):
        raise DatasetFormatError(f"{path}: expected a JSON list of weights or {{\"weights\": [...]}}")
    return tuple(float(w) for w in data)


def parse_scheme(text: str, power: PowerDistribution | None, block_size: int):
    if text == "unit":
        return Unit()
    if text == "optimal":
        if power is None:
            raise UsageError("the optimal scheme needs a power distribution (--h)")
        return OptimalPlugIn(power, block_size)
    if text.startswith("fixed:"):
        return Fixed(_read_weights(text[len("fixed:"):]))
    raise UsageError(f"unknown scheme {text!r}; use unit, optimal or fixed:<path>")


def _emit(args, header, rows):
    """Write rows as CSV (17 significant digits) or a JSON list of objects."""
    if getattr(args, "format", "csv") == "json":
        text = json.dumps([dict(zip(header, row)) for row in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for row in rows:
            buf.write(",".join(format_float(v) if isinstance(v, float) else str(v) for v in row) + "\n")
        text = buf.getvalue()
    out = getattr(args, "out", None)
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args) -> int:
    model = canonical_model(args.kappa, args.block_size, args.gamma2, args.n, args.pi1)
    part1 = sample(model, 1, args.count_per_class, stream_seed(args.seed, 0, 1))
    part2 = sample(model, 2, args.count_per_class, stream_seed(args.seed, 0, 2))
    model.save(args.model_out)
    write_dataset_csv(LabeledDataset.concat([part1, part2]), args.data_out)
    return EXIT_OK


def cmd_classify(args) -> int:
    model = PopulationModel.load(args.model)
    part = model.partition
    train = read_dataset_csv(args.train, part)
    test = read_dataset_csv(args.test, part, allow_unlabeled=True)
    clf = fit(train.of_class(1), train.of_class(2), model.covariances, part, model.prior1)
    power = parse_power(args.h) if args.h is not None else None
    scheme = parse_scheme(args.scheme, power, part.block_size)
    weights = resolve_weights(scheme, clf)
    if args.classifier_out:
        clf.save(args.classifier_out)

    buf = io.StringIO()
    buf.write("row,label,predicted,discriminant\n")
    if len(test):
        d = np.atleast_1d(discriminant(clf, test.features, weights))
        pred = np.where(d > clf.log_prior_ratio, 1, 2)
        for i, (label, p, v) in enumerate(zip(test.labels.tolist(), pred.tolist(), d.tolist()), start=1):
            buf.write(f"{i},{label if label else ''},{p},{format_float(v)}\n")
        if test.is_labeled:
            pi1 = clf.prior1
            summary = []
            rates = []
            for cls in (1, 2):
                mask = test.labels == cls
                count = int(mask.sum())
                wrong = int((pred[mask] != cls).sum())
                rate = wrong / count if count else float("nan")
                rates.append(rate)
                summary.append(f"# class{cls}: n={count} errors={wrong} error_rate={format_float(rate)}")
            if all(math.isfinite(r) for r in rates):
                summary.append(f"# bayes_risk={format_float(pi1 * rates[0] + (1 - pi1) * rates[1])}")
            buf.write("\n".join(summary) + "\n")
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        Path(args.out).write_text(buf.getvalue())
    return EXIT_OK


def cmd_risk(args) -> int:
    power = _power_from_args(args)
    pi1 = args.pi1
    pi0 = math.log((1 - pi1) / pi1)
    regime = Regime(args.m, args.rho, pi0)
    J = args.J if args.J is not None else limiting_divergence(power, args.rho)
    if J == 0.0 and args.rho == 0.0:
        # D is identically zero: the rule always answers class 2 unless pi0 < 0
        e1, e2 = (0.5, 0.5) if pi0 == 0.0 else ((1.0, 0.0) if pi0 > 0 else (0.0, 1.0))
    else:
        e1, e2 = theorem1_error_limits(J, regime)
    risk1 = pi1 * e1 + (1 - pi1) * e2
    if pi0 == 0.0:
        r0 = optimal_risk(regime, power)
        o1 = o2 = r0
    elif args.rho == 0.0:
        o1 = o2 = r0 = 0.5
    else:
        o1, o2 = weighted_error_limits(w0_function(args.m, power), regime, power)
        r0 = pi1 * o1 + (1 - pi1) * o2
    header = ["m", "rho", "J", "e1_unit", "e2_unit", "risk_unit", "e1_optimal", "e2_optimal", "risk_optimal"]
    _emit(args, header, [[args.m, float(args.rho), float(J), e1, e2, risk1, o1, o2, r0]])
    return EXIT_OK


def cmd_weightfn(args) -> int:
    if not (0 < args.u_min < args.u_max):
        raise UsageError("need 0 < --u-min < --u-max")
    if args.u_steps < 2:
        raise UsageError("--u-steps must be >= 2")
    power = _power_from_args(args)
    if args.grid == "log":
        grid = np.geomspace(args.u_min, args.u_max, args.u_steps)
    else:
        grid = np.linspace(args.u_min, args.u_max, args.u_steps)
    values = np.atleast_1d(w0(grid, args.m, power))
    _emit(args, ["u", "w0"], [[float(u), float(v)] for u, v in zip(grid, values)])
    return EXIT_OK


def cmd_riskcurve(args) -> int:
    if not (0 <= args.gamma2_min <= args.gamma2_max):
        raise UsageError("need 0 <= --gamma2-min <= --gamma2-max")
    if args.steps < 1 or (args.steps == 1 and args.gamma2_min != args.gamma2_max):
        raise UsageError("--steps must be >= 2 for a non-degenerate range")
    rho = args.kappa / args.n
    regime = Regime(args.m, rho)
    rows = []
    for g2 in np.linspace(args.gamma2_min, args.gamma2_max, args.steps):
        power = PowerDistribution.point_mass(float(g2))
        rows.append([float(g2), rho, optimal_risk(regime, power), unit_risk(regime, power)])
    _emit(args, ["gamma2", "rho", "risk_optimal", "risk_unit"], rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    power = parse_power(args.h) if args.h is not None else PowerDistribution.point_mass(args.gamma2)
    schemes = tuple(parse_scheme(s.strip(), power, args.block_size) for s in args.schemes.split(",") if s.strip())
    config = ExperimentConfig(
        kappa=args.kappa,
        block_size=args.block_size,
        train_size=args.n,
        gamma2=args.gamma2,
        prior1=args.pi1,
        schemes=schemes,
        replications=args.reps,
        test_per_class=args.test_per_class,
        base_seed=args.seed,
    )
    report = run(config, parallel=args.parallel)
    if args.out:
        report.save(args.out)
    sys.stdout.write(report.to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockdiscrim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a canonical model JSON and a sampled dataset CSV")
    p.add_argument("--kappa", type=_pos_int, required=True)
    p.add_argument("--block-size", type=_pos_int, required=True)
    p.add_argument("--gamma2", type=_nonneg_float, required=True)
    p.add_argument("--n", type=_pos_int, required=True, help="training size used to calibrate gamma2")
    p.add_argument("--pi1", type=_probability, default=0.5)
    p.add_argument("--count-per-class", type=_pos_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", required=True)
    p.add_argument("--data-out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("classify", help="fit on a training CSV and label a test CSV")
    p.add_argument("--model", required=True, help="model JSON (partition, covariances, priors)")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--scheme", default="unit", help="unit | optimal | fixed:<weights.json>")
    p.add_argument("--h", help="power distribution: point:<gamma2> or JSON path")
    p.add_argument("--classifier-out", help="also write the fitted classifier JSON here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    def add_power(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--gamma2", type=_nonneg_float)
        group.add_argument("--h", help="point:<gamma2> or JSON path")

    def add_format(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out")

    p = sub.add_parser("risk", help="limiting error rates, unweighted vs optimally weighted")
    p.add_argument("--m", type=_pos_int, required=True)
    p.add_argument("--rho", type=_nonneg_float, required=True)
    add_power(p)
    p.add_argument("--pi1", type=_probability, default=0.5)
    p.add_argument("--J", type=_nonneg_float, help="override the limiting divergence (e.g. at rho = 0)")
    add_format(p)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("weightfn", help="optimal weight function on a grid of sample powers")
    p.add_argument("--m", type=_pos_int, required=True)
    add_power(p)
    p.add_argument("--u-min", type=float, required=True)
    p.add_argument("--u-max", type=float, required=True)
    p.add_argument("--u-steps", type=int, required=True)
    p.add_argument("--grid", choices=("linear", "log"), default="linear")
    add_format(p)
    p.set_defaults(func=cmd_weightfn)

    p = sub.add_parser("riskcurve", help="optimal and unit risk over a range of gamma2")
    p.add_argument("--m", type=_pos_int, required=True)
    p.add_argument("--kappa", type=_pos_int, required=True)
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--gamma2-min", type=_nonneg_float, required=True)
    p.add_argument("--gamma2-max", type=_nonneg_float, required=True)
    p.add_argument("--steps", type=int, required=True)
    add_format(p)
    p.set_defaults(func=cmd_riskcurve)

    p = sub.add_parser("simulate", help="Monte Carlo experiment against the limiting predictions")
    p.add_argument("--kappa", type=_pos_int, required=True)
    p.add_argument("--block-size", type=_pos_int, required=True)
    p.add_argument("--gamma2", type=_nonneg_float, required=True)
    p.add_argument("--n", type=_pos_int, required=True)
    p.add_argument("--pi1", type=_probability, default=0.5)
    p.add_argument("--reps", type=_pos_int, required=True)
    p.add_argument("--test-per-class", type=_pos_int, required=True)
    p.add_argument("--schemes", default="unit", help="comma list of unit, optimal, fixed:<path>")
    p.add_argument("--h", help="power distribution for the optimal scheme (default: point mass at --gamma2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="path prefix; writes <out>.json and <out>.csv")
    p.add_argument("--parallel", action=argparse.BooleanOptionalAction, default=False)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, DegenerateError, ReplicationError) as exc:
        print(f"blockdiscrim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DomainError, ModelError) as exc:
        print(f"blockdiscrim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"blockdiscrim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
