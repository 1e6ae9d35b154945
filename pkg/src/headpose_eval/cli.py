"""Command-line interface.

Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when a Karcher
mean fails to converge. Option values that start with a minus sign must be
attached with ``=``, e.g. ``--yaw-filter=-99:99``.
"""
import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import NoReturn, Optional

import numpy as np
import pandas as pd

from . import __version__
from .alignment import DEFAULT_MAX_ITER, DEFAULT_TOL, align, align_groups
from .errors import ConvergenceError, PoseEvalError
from .harness import (
    YAW_INTERVALS,
    alignment_entry,
    evaluate,
    file_digest,
    find_discontinuities,
    load_samples,
    quat_sweep,
    render_report,
    representation_sweep,
    save_samples,
    synth_generate,
    write_report,
)
from .metrics import g_geodesic_many
from .models import (
    BinSpec,
    EulerAnglesPYR,
    EvalOptions,
    ReportFormat,
    Representation,
    SampleRecord,
)
from .opal import (
    DEFAULT_BETA,
    DEFAULT_EPSILON,
    DEFAULT_PEAK,
    DEFAULT_SIGMA,
    fit_params,
    format_params,
    influence_peak,
    load_params,
    opal_curve,
    params_from_peak,
    save_params,
)

logger = logging.getLogger(__name__)

REPRESENTATIONS = [r.value for r in Representation]


def _angle_range(text: str) -> tuple[float, float]:
    try:
        low, high = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX in degrees, got {text!r}") from e
    if low > high:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return low, high


def _euler_triple(text: str) -> EulerAnglesPYR:
    try:
        pitch, yaw, roll = (float(part) for part in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected PITCH,YAW,ROLL in degrees, got {text!r}") from e
    return EulerAnglesPYR(pitch=pitch, yaw=yaw, roll=roll)


def _bin_spec(text: str) -> BinSpec:
    try:
        return BinSpec.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _add_pair_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gt", type=Path, required=True, help="ground-truth pose file")
    parser.add_argument("--pred", type=Path, required=True, help="prediction pose file")
    parser.add_argument("--rep", choices=REPRESENTATIONS, default="euler_deg",
                        help="pose columns of the ground-truth file")
    parser.add_argument("--pred-rep", choices=REPRESENTATIONS, default=None,
                        help="pose columns of the prediction file (default: --rep)")


def _add_alignment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--group-align", action="store_true",
                        help="estimate one alignment per group instead of one per file pair")
    parser.add_argument("--transpose-alignment", action="store_true",
                        help="apply the transposed alignment estimate")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="Karcher step tolerance in radians")
    parser.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER,
                        help="Karcher iteration limit")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports malformed arguments with exit code 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def argument_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="headpose-eval",
                     description="Head pose evaluation on SO(3).")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    convert = commands.add_parser("convert", help="re-serialize poses in another representation")
    convert.add_argument("--input", type=Path, required=True)
    convert.add_argument("--output", type=Path, required=True)
    convert.add_argument("--rep", choices=REPRESENTATIONS, required=True)
    convert.add_argument("--out-rep", choices=REPRESENTATIONS, required=True)
    convert.set_defaults(handler=run_convert)

    ev = commands.add_parser("evaluate", help="compute metrics of predictions against ground truth")
    _add_pair_arguments(ev)
    ev.add_argument("--align", action="store_true", help="also report metrics after alignment")
    _add_alignment_arguments(ev)
    ev.add_argument("--bins", type=_bin_spec, default=None,
                    help="absolute-yaw bins as name:low:high,... (default frontal/profile/back)")
    ev.add_argument("--yaw-filter", type=_angle_range, default=None, metavar="MIN:MAX",
                    help="keep samples with ground-truth yaw in [MIN, MAX]")
    ev.add_argument("--tri-angle-filter", action="store_true",
                    help="apply --yaw-filter bounds to pitch and roll as well")
    ev.add_argument("--opal", type=Path, default=None, metavar="PARAMS_FILE",
                    help="also report the mean Opal loss")
    ev.add_argument("--out", type=Path, default=None, help="report file (default: stdout)")
    ev.add_argument("--format", choices=[f.value for f in ReportFormat], default="json")
    ev.set_defaults(handler=run_evaluate)

    al = commands.add_parser(
        "align", help="estimate the misalignment and write aligned predictions"
    )
    _add_pair_arguments(al)
    _add_alignment_arguments(al)
    al.add_argument("--out", type=Path, required=True, help="aligned prediction file")
    al.add_argument("--out-rep", choices=REPRESENTATIONS, default=None)
    al.set_defaults(handler=run_align)

    synth = commands.add_parser("synth", help="generate a synthetic evaluation set")
    synth.add_argument("--n", type=int, required=True)
    yaw = synth.add_mutually_exclusive_group()
    yaw.add_argument("--yaw-range", type=_angle_range, default=None, metavar="MIN:MAX")
    yaw.add_argument("--yaw-interval", type=int, choices=range(1, len(YAW_INTERVALS) + 1),
                     default=None, help="one of the six yaw intervals ±30 ... ±180")
    synth.add_argument("--pitch-range", type=_angle_range, default=(-45.0, 45.0), metavar="MIN:MAX")
    synth.add_argument("--roll-range", type=_angle_range, default=(-45.0, 45.0), metavar="MIN:MAX")
    synth.add_argument("--noise", type=float, default=0.0, help="RMS prediction noise in degrees")
    synth.add_argument("--misalignment", type=_euler_triple, default=None, metavar="P,Y,R")
    synth.add_argument("--groups", type=int, default=None, help="number of sequence groups")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--gt-out", type=Path, required=True)
    synth.add_argument("--pred-out", type=Path, required=True)
    synth.add_argument("--rep", choices=REPRESENTATIONS, default="euler_deg")
    synth.set_defaults(handler=run_synth)

    opal = commands.add_parser("opal", help="derive or fit Opal loss parameters")
    modes = opal.add_subparsers(dest="mode", required=True)
    derive = modes.add_parser("derive", help="constants from thresholds and influence peak")
    derive.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    derive.add_argument("--beta", type=float, default=DEFAULT_BETA)
    derive.add_argument("--peak", type=float, default=DEFAULT_PEAK,
                        help="influence peak location in degrees")
    derive.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    fit = modes.add_parser("fit", help="shape the influence to observed geodesic errors")
    fit.add_argument("--errors", type=Path, default=None,
                     help="CSV with a 'ge' column of geodesic errors in degrees")
    fit.add_argument("--gt", type=Path, default=None)
    fit.add_argument("--pred", type=Path, default=None)
    fit.add_argument("--rep", choices=REPRESENTATIONS, default="euler_deg")
    fit.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    fit.add_argument("--beta", type=float, default=DEFAULT_BETA)
    for sub in (derive, fit):
        sub.add_argument("--out", type=Path, default=None, help="parameter file (default: stdout)")
        sub.add_argument("--curve", type=Path, default=None,
                         help="also write the loss and influence table as CSV")
    opal.set_defaults(handler=run_opal)

    sweep = commands.add_parser("quat-sweep", help="representation components along a yaw sweep")
    sweep.add_argument("--step", type=float, default=1.0, help="yaw step in degrees")
    sweep.add_argument("--rep", choices=REPRESENTATIONS, default="quaternion_wxyz")
    sweep.add_argument("--out", type=Path, default=None, help="CSV file (default: stdout)")
    sweep.set_defaults(handler=run_sweep)
    return parser


def _load_pairs(args: argparse.Namespace) -> list[SampleRecord]:
    return load_samples(
        args.gt,
        representation=Representation(args.rep),
        pred_path=args.pred,
        pred_representation=Representation(args.pred_rep) if args.pred_rep else None,
    )


def run_convert(args: argparse.Namespace) -> int:
    samples = load_samples(args.input, representation=Representation(args.rep))
    save_samples(samples, args.output, representation=Representation(args.out_rep))
    return 0


def run_evaluate(args: argparse.Namespace) -> int:
    opal_params = load_params(args.opal) if args.opal is not None else None
    options = EvalOptions(
        align=args.align,
        group_align=args.group_align,
        transpose_alignment=args.transpose_alignment,
        bins=args.bins or BinSpec.default(),
        opal_params=opal_params,
        tol=args.tol,
        max_iter=args.max_iter,
        yaw_filter=args.yaw_filter,
        tri_angle_filter=args.tri_angle_filter,
    )
    digests = {"gt": file_digest(args.gt), "pred": file_digest(args.pred)}
    if args.opal is not None:
        digests["opal"] = file_digest(args.opal)

    report = evaluate(_load_pairs(args), options, digests)
    if args.out is None:
        sys.stdout.write(render_report(report, ReportFormat(args.format)))
    else:
        write_report(report, args.out, ReportFormat(args.format))

    if (options.align or options.group_align) and report.aligned is None:
        return 2
    return 0


def run_align(args: argparse.Namespace) -> int:
    samples = _load_pairs(args)
    missing = [s.id for s in samples if s.prediction is None]
    if missing:
        raise ValueError(f"{len(missing)} samples have no prediction, e.g. {missing[0]!r}")
    predictions = [s.prediction for s in samples]
    ground_truth = [s.ground_truth for s in samples]
    if args.group_align:
        aligned, results = align_groups(predictions, ground_truth, [s.group for s in samples],
                                        args.tol, args.max_iter, args.transpose_alignment)
        counts = Counter(s.group for s in samples)
    else:
        aligned, result = align(predictions, ground_truth, args.tol, args.max_iter,
                                args.transpose_alignment)
        results, counts = {None: result}, {None: len(samples)}

    aligned_samples = [s.model_copy(update={"prediction": a}) for s, a in zip(samples, aligned)]
    save_samples(aligned_samples, args.out,
                 representation=Representation(args.out_rep or args.pred_rep or args.rep),
                 which="prediction")
    entries = [alignment_entry(key, counts[key], res).model_dump(mode="json")
               for key, res in results.items()]
    sys.stdout.write(json.dumps(entries, indent=2) + "\n")
    return 0


def run_synth(args: argparse.Namespace) -> int:
    if args.yaw_interval is not None:
        yaw_range = YAW_INTERVALS[args.yaw_interval - 1]
    else:
        yaw_range = args.yaw_range or (-90.0, 90.0)
    synth_generate(
        args.n, yaw_range, args.pitch_range, args.roll_range, args.noise, args.misalignment,
        args.seed, args.gt_out, args.pred_out,
        representation=Representation(args.rep), n_groups=args.groups,
    )
    return 0


def _fit_samples(args: argparse.Namespace) -> np.ndarray:
    if args.errors is not None:
        table = pd.read_csv(args.errors)
        if "ge" not in table.columns:
            raise ValueError(f"{args.errors}: expected a 'ge' column")
        return table["ge"].to_numpy(dtype=float)
    if args.gt is None or args.pred is None:
        raise ValueError("opal fit needs --errors or both --gt and --pred")
    samples = load_samples(args.gt, representation=Representation(args.rep), pred_path=args.pred)
    paired = [s for s in samples if s.prediction is not None]
    return g_geodesic_many(np.stack([s.prediction.m for s in paired]),
                           np.stack([s.ground_truth.m for s in paired]))


def run_opal(args: argparse.Namespace) -> int:
    if args.mode == "derive":
        params = params_from_peak(args.epsilon, args.beta, args.peak, args.sigma)
    else:
        params = fit_params(_fit_samples(args), args.epsilon, args.beta)
    peak, height = influence_peak(params)
    logger.info(f"Opal influence peaks at {peak:.4g} deg with height {height:.4g}")

    if args.out is None:
        sys.stdout.write(format_params(params))
    else:
        save_params(params, args.out)
    if args.curve is not None:
        opal_curve(params).to_csv(args.curve, index=False, float_format="%.9g")
    return 0


def run_sweep(args: argparse.Namespace) -> int:
    representation = Representation(args.rep)
    if representation == Representation.QUATERNION_WXYZ:
        table = quat_sweep(args.step)
    else:
        table = representation_sweep(args.step, representation)
    threshold = 90.0 if representation == Representation.EULER_DEG else 1.0
    jumps = find_discontinuities(table, threshold)
    logger.info(f"{representation.value} sweep: {len(jumps)} discontinuities at yaw {jumps}")
    text = table.to_csv(index=False, float_format="%.9g", lineterminator="\n")
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    """Parse arguments and run a subcommand.

    Returns:
        Process exit code
    """
    args = argument_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConvergenceError as e:
        logger.error(f"{e} after {e.iterations} iterations")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (PoseEvalError, ValueError, OSError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 1
