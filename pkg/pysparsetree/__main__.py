#!/usr/bin/env python3

import argparse
import inspect
import json
import logging
import os
import sys

from .config import BoundSwitches, SearchLimits, settings
from .document import ModelDocument
from .errors import DataError, ParameterError
from .ingest import ColumnKind
from .objectives import ObjectiveSpec, SHORT_NAMES
from .trainer import bucketize_demo, roc_table, score, train
from . import __version__

logger = logging.getLogger(__name__)

EXIT_PARAMETERS = 2
EXIT_DATA = 3


def parse_kind(text):
    column, sep, kind = text.partition("=")
    if not sep or not column:
        raise argparse.ArgumentTypeError(f"expected column=kind, got {text!r}")
    try:
        return column.strip(), ColumnKind(kind.strip().lower())
    except ValueError:
        choices = ", ".join(k.value for k in ColumnKind)
        raise argparse.ArgumentTypeError(f"kind must be one of {choices}") from None


def add_output_arguments(parser):
    parser.add_argument(
        "-f",
        "--output-format",
        help="Output format.",
        choices=[
            "text",
            "json",
            "html",
        ],
        default="text",
    )
    parser.add_argument(
        "--json",
        dest="output_format",
        action="store_const",
        const="json",
        help="Same as --output-format json.",
    )


def build_parser():
    arg_parser = argparse.ArgumentParser(
        prog="python-sparse-tree",
        description="Train provably optimal sparse decision trees.",
    )
    arg_parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    arg_parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level for messages written to standard error.",
    )
    commands = arg_parser.add_subparsers(dest="command", required=True)

    train_parser = commands.add_parser("train", help="Train an optimal tree on a CSV file.")
    train_parser.add_argument("--data", required=True, help="Training CSV with a header line.")
    train_parser.add_argument("--label", help="Label column (default: last column).")
    train_parser.add_argument(
        "--objective",
        choices=sorted(SHORT_NAMES),
        default="acc",
        help="Objective to minimize.",
    )
    train_parser.add_argument(
        "--lambda",
        dest="regularization",
        type=float,
        required=True,
        help="Penalty per leaf.",
    )
    train_parser.add_argument("--weight", type=float, default=1.0, help="Weight on false negatives / labeling weight.")
    train_parser.add_argument("--theta", type=float, help="False positive rate cutoff for partial AUC.")
    train_parser.add_argument(
        "--bucketize",
        default=False,
        action="store_true",
        help="Drop thresholds between neighbouring samples of the same label.",
    )
    train_parser.add_argument("--time-limit", type=float, default=settings.time_limit, help="Seconds.")
    train_parser.add_argument("--threads", type=int, default=settings.threads, help="Search workers.")
    train_parser.add_argument("--seed", type=int, help="Seed for queue tie-breaking.")
    train_parser.add_argument("--trace", help="Write a JSON-lines search trace to this file.")
    train_parser.add_argument(
        "--kind",
        action="append",
        type=parse_kind,
        default=[],
        help="Override a column kind, e.g. age=continuous (repeatable).",
    )
    train_parser.add_argument(
        "--categorical-cap",
        type=int,
        default=settings.categorical_cap,
        help="Numeric columns with at most this many values are categorical.",
    )
    train_parser.add_argument(
        "--no-similar-support",
        dest="similar_support",
        default=settings.similar_support,
        action="store_false",
        help="Disable the similar support bound.",
    )
    train_parser.add_argument(
        "--no-subset-bound",
        dest="subset_bound",
        default=settings.subset_bound,
        action="store_false",
        help="Disable the subset bound.",
    )
    train_parser.add_argument("--out", required=True, help="Model document to write.")
    add_output_arguments(train_parser)

    score_parser = commands.add_parser("score", help="Score a model document on labeled data.")
    score_parser.add_argument("model", help="Model document written by train.")
    score_parser.add_argument("data", help="Labeled CSV to score.")
    score_parser.add_argument("--label", help="Label column (default: last column).")
    score_parser.add_argument("--roc", help="Write the ROC convex hull vertices to this CSV file.")
    add_output_arguments(score_parser)

    demo_parser = commands.add_parser(
        "bucketize-demo",
        help="Compare optimal accuracy with and without bucketization.",
    )
    demo_parser.add_argument("data", nargs="?", help="2-D continuous CSV (default: shipped demo data).")
    demo_parser.add_argument("--label", help="Label column (default: last column).")
    demo_parser.add_argument("--lambda", dest="regularization", type=float, default=0.15, help="Penalty per leaf.")
    add_output_arguments(demo_parser)

    return arg_parser


def render(output, output_format, template_name):
    if output_format == "html":
        from jinja2 import Environment
        from jinja2 import FileSystemLoader

        module_path = os.path.dirname(inspect.getfile(train))
        env = Environment(
            loader=FileSystemLoader(os.path.join(module_path, "templates"))
        )
        template = env.get_template("report.html")
        return template.render(result=output, title=template_name)
    if output_format == "json":
        return json.dumps(output, indent=4, separators=(",", ": "))

    width = max(len(key) for key in output)
    lines = []
    for key, value in output.items():
        if isinstance(value, dict):
            value = json.dumps(value, separators=(",", ":"))
        elif isinstance(value, float):
            value = f"{value:.6f}"
        lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines)


def run_train(args):
    objective = ObjectiveSpec(SHORT_NAMES[args.objective], args.regularization, args.weight, args.theta)
    if args.threads < 1:
        raise ParameterError(f"--threads must be at least 1, got {args.threads}")
    limits = SearchLimits(time_limit=args.time_limit, workers=args.threads, seed=args.seed)
    switches = BoundSwitches(similar_support=args.similar_support, subset_bound=args.subset_bound)
    output = train(
        args.data,
        objective,
        label=args.label,
        bucketize=args.bucketize,
        limits=limits,
        switches=switches,
        kinds=dict(args.kind),
        categorical_cap=args.categorical_cap,
    )
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(output["model"].to_json())
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            for record in output["result"].trace:
                f.write(json.dumps(record) + "\n")
    report = dict(output["report"])
    report["model"] = args.out
    return report


def run_score(args):
    with open(args.model, encoding="utf-8") as f:
        document = ModelDocument.from_json(f.read())
    metrics = score(document, args.data, args.label)
    if args.roc:
        roc_table(document, args.data, args.label).to_csv(args.roc, index=False)
        metrics["roc"] = args.roc
    return metrics


def run_demo(args):
    if not args.regularization > 0:
        raise ParameterError("--lambda must be positive for the demonstration")
    output = bucketize_demo(args.data, args.regularization, args.label)
    flat = {
        "regularization": output["regularization"],
        "rows": output["rows"],
        "accuracy_all_thresholds": output["all_thresholds"]["accuracy"],
        "accuracy_bucketized": output["bucketized"]["accuracy"],
        "difference": output["difference"],
        "leaves_all_thresholds": output["all_thresholds"]["leaves"],
        "leaves_bucketized": output["bucketized"]["leaves"],
        "total_time": output["total_time"],
    }
    return flat


COMMANDS = {
    "train": run_train,
    "score": run_score,
    "bucketize-demo": run_demo,
}


def main(argv=None):
    arg_parser = build_parser()
    args = arg_parser.parse_args(argv)

    logging.basicConfig(
        level=args.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        output = COMMANDS[args.command](args)
    except ParameterError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAMETERS
    except (DataError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA

    print(render(output, args.output_format, args.command))
    return 0


if __name__ == "__main__":
    sys.exit(main())
