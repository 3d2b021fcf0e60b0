"""
Main command-line interface for pxlab.
"""

import sys
from argparse import ArgumentParser, Namespace
from typing import List, Optional

from dotenv import load_dotenv

from ..__version__ import __version__
from ..errors import InvariantViolation, PxLabError
from ..utils.console import configure_logging, console, log_error
from .experiments import run
from .reports import dumps
from .settings import Settings

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


def print_json(data: dict) -> None:
    """
    Print data as JSON.

    Args:
        data: Data to print
    """
    formatted = dumps(data)
    if sys.stdout.isatty():
        console.print_json(formatted)
    else:
        sys.stdout.write(formatted + "\n")


def add_shared_arguments(parser: ArgumentParser) -> None:
    """
    Add the flags every experiment accepts.

    Args:
        parser: ArgumentParser object
    """
    parser.add_argument("--config", help="Flat key = value settings file")
    parser.add_argument("--seed", type=int, help="Seed of the random generator")
    parser.add_argument("--nodes", type=int, help="Grid nodes per axis (>= 17)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--format", choices=("csv", "json", "both"), help="Table output format")
    parser.add_argument("--show-config", action="store_true", help="Print the resolved settings and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")


def add_problem_arguments(parser: ArgumentParser) -> None:
    """
    Add the domain, exponent and boundary flags.

    Args:
        parser: ArgumentParser object
    """
    parser.add_argument("--domain", help="'a,b' for an interval or 'a1,b1 x a2,b2' for a box")
    parser.add_argument("-p", "--exponent", help="Exponent: a number, an expression in x (and y) or a CSV of node samples")
    parser.add_argument("--boundary", choices=("dirichlet", "free"), help="Boundary condition")


def add_solver_arguments(parser: ArgumentParser) -> None:
    parser.add_argument("--max-iter", dest="max_iter", type=int, help="Descent iteration limit")
    parser.add_argument("--tol", type=float, help="Residual tolerance")
    parser.add_argument("--restarts", type=int, help="Seeded starts per solve")


def add_norm_arguments(parser: ArgumentParser) -> None:
    add_problem_arguments(parser)
    parser.add_argument("-f", "--function", help="Function u as an expression in x (and y)")


def add_eig_arguments(parser: ArgumentParser) -> None:
    add_problem_arguments(parser)
    add_solver_arguments(parser)


def add_spectrum_arguments(parser: ArgumentParser) -> None:
    add_problem_arguments(parser)
    add_solver_arguments(parser)
    parser.add_argument("--j-max", dest="j_max", type=int, help="Number of modes")


def add_count_arguments(parser: ArgumentParser) -> None:
    add_spectrum_arguments(parser)
    parser.add_argument("--source", choices=("auto", "exact", "nodal"), help="Where the counted spectrum comes from")
    parser.add_argument("--lambda-min", dest="lambda_min", type=float, help="Smallest counting level")
    parser.add_argument("--lambda-max", dest="lambda_max", type=float, help="Largest counting level")
    parser.add_argument("--lambda-count", dest="lambda_count", type=int, help="Number of log-spaced levels")
    parser.add_argument("--lambda-anchor", dest="lambda_anchor", type=float, help="Calibration level (defaults to lambda-min)")


def add_verify_arguments(parser: ArgumentParser) -> None:
    add_problem_arguments(parser)
    parser.add_argument("--samples", type=int, help="Random functions per inequality")


def add_lambda_star_arguments(parser: ArgumentParser) -> None:
    add_problem_arguments(parser)
    parser.add_argument("--t-min-exp", dest="t_min_exp", type=int, help="Smallest amplitude exponent, t = 10^k")
    parser.add_argument("--t-max-exp", dest="t_max_exp", type=int, help="Largest amplitude exponent")


def build_argument_parser() -> ArgumentParser:
    """
    Build the argument parser for the command-line interface.

    Returns:
        ArgumentParser object
    """
    parser = ArgumentParser(prog="pxlab", description="Numerical lab for the normalized p(x)-Laplacian eigenproblem")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    subparsers = parser.add_subparsers(dest="command", help="Experiment to run")
    commands = {
        "norm": ("Luxemburg norm of a function and the norm sandwich", add_norm_arguments),
        "eig": ("First eigenpair by projected descent", add_eig_arguments),
        "spectrum": ("Nodal upper estimates of the first j modes (1D)", add_spectrum_arguments),
        "count": ("Counting function against the theorem curves", add_count_arguments),
        "verify": ("Randomized inequality suite", add_verify_arguments),
        "lambda-star": ("Modular quotient along shrinking plateau bumps", add_lambda_star_arguments),
    }
    for name, (help_text, add_arguments) in commands.items():
        sub = subparsers.add_parser(name, help=help_text)
        add_shared_arguments(sub)
        add_arguments(sub)

    subparsers.add_parser("app", help="Launch interactive form interface")
    return parser


def run_command(args: Namespace) -> int:
    """
    Resolve settings for a parsed command line and run the experiment.

    Returns:
        Exit code: 0 on success, 1 on usage errors, 2 on a violated inequality
    """
    try:
        settings = Settings(cli_args=args)
        if getattr(args, "show_config", False):
            console.print(settings.to_table())
            return EXIT_OK
        settings.validate()
        report = run(settings, args.command)
    except InvariantViolation as e:
        log_error(str(e))
        return EXIT_VIOLATION
    except PxLabError as e:
        log_error(str(e))
        return EXIT_USAGE

    print_json(report.document() if settings.format == "json" else report.summary)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for the command-line interface."""
    parser = build_argument_parser()
    argv = sys.argv[1:] if argv is None else argv

    # If no arguments provided, show help
    if not argv:
        parser.print_help()
        return EXIT_OK

    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    if args.command == "app":
        # Import app module here to avoid circular imports
        from ..commands.app import main as app_main
        app_main()
        return EXIT_OK

    load_dotenv()
    configure_logging(getattr(args, "verbose", 0))
    try:
        return run_command(args)
    except KeyboardInterrupt:
        log_error("interrupted")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
