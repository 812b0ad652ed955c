"""Command-line runner for convergence studies.

Writes the convergence table as CSV (header
``inv_h,node,linf,lobatto,gauss_flux,l2,h1`` and a trailing ``rate`` row)
and, on request, pointwise error and basis sample dumps for the coarsest
mesh.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from pydantic import ValidationError

from .analysis import COLUMNS, ConvergenceStudy, convergence_study, pointwise_errors
from .coefficients import ManufacturedSolution
from .config import settings
from .errors import ConfigError, IFEError
from .genpoly import dump_basis_samples
from .run_config import RunConfig, parse_int_list, parse_real, parse_real_list

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

POINTWISE_DENSITY = 20


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ife-superconv",
        description="Convergence study of the IFE method on a cosine manufactured solution.",
    )
    parser.add_argument("--degree", type=int, required=True, help="Polynomial degree p")
    parser.add_argument(
        "--beta", type=parse_real_list, required=True, help="Coefficient pieces, e.g. 1,5"
    )
    parser.add_argument(
        "--alpha",
        type=parse_real_list,
        default=[],
        help="Interface abscissae, e.g. pi/6 or pi/6,pi/6+0.06",
    )
    parser.add_argument("--gamma", type=parse_real, default=0.0, help="Convection coefficient")
    parser.add_argument("--c", type=parse_real, default=0.0, help="Reaction coefficient")
    parser.add_argument(
        "--meshes", type=parse_int_list, required=True, help="Element counts, e.g. 8,16,32"
    )
    parser.add_argument("--out", type=Path, default=None, help="Convergence CSV (default stdout)")
    parser.add_argument("--dump-pointwise", type=Path, default=None, help="Pointwise error CSV")
    parser.add_argument("--dump-basis", type=Path, default=None, help="Interface basis CSV")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        type=str.upper,
        default=None,
    )
    return parser


def _cell(value: Optional[float], fmt: str) -> str:
    return "" if value is None else format(value, fmt)


def write_convergence_csv(study: ConvergenceStudy, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["inv_h", *COLUMNS])
    for report in study.reports:
        writer.writerow([f"{1.0 / report.h:g}", *(_cell(v, ".6e") for v in report.as_row())])
    writer.writerow(["rate", *(_cell(study.rates[name], ".4f") for name in COLUMNS)])


def write_pointwise_csv(
    study: ConvergenceStudy, path: Path, exact: ManufacturedSolution
) -> Path:
    """Pointwise errors on the coarsest mesh."""
    rows = pointwise_errors(
        study.solutions[0], exact, study.points[0], density=POINTWISE_DENSITY
    )
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["x", "u_err", "flux_err", "is_special_point"])
        for x, du, df, special in rows:
            writer.writerow([f"{x:.16e}", f"{du:.6e}", f"{df:.6e}", int(special)])
    logger.info(f"Pointwise errors written to {path}")
    return path


def write_basis_csv(study: ConvergenceStudy, path: Path) -> Path:
    """Basis samples for the first interface element of the coarsest mesh."""
    solution = study.solutions[0]
    interface_elements = list(solution.mesh.interface_elements)
    if interface_elements:
        element = interface_elements[0]
    else:
        element = 1
        logger.warning("No interface element on the coarsest mesh; dumping the standard basis")
    return dump_basis_samples(solution.bases[element].basis, path)


def run(config: RunConfig) -> int:
    """Execute one sweep and write its outputs."""
    logger.info(f"Run config: {config.model_dump_json()}")
    problem = config.problem()
    study = convergence_study(problem, config.degree, config.meshes)

    if config.out is None:
        write_convergence_csv(study, sys.stdout)
    else:
        with open(config.out, "w", newline="") as f:
            write_convergence_csv(study, f)
        logger.info(f"Convergence table written to {config.out}")

    if config.dump_pointwise is not None:
        write_pointwise_csv(study, config.dump_pointwise, problem.exact)
    if config.dump_basis is not None:
        write_basis_csv(study, config.dump_basis)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, (args.log_level or settings.log_level).upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        config = RunConfig(**vars(args))
    except (ValidationError, ConfigError) as e:
        print(f"ife-superconv: invalid configuration: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return run(config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error(f"Output directory not found: {e.filename}")
        return EXIT_USAGE
    except PermissionError as e:
        logger.error(f"Permission denied: {e.filename}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Cannot write output: {e}")
        return EXIT_USAGE
    except IFEError as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
