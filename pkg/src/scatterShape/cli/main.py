import argparse
import logging
import sys

from . import commands
from .config import load_config
from ..errors import (
    CheckpointError, ConfigError, DivergenceError, DomainError, FrozenModelError, MissingArtifactError,
    ShapeMismatchError, ShardError, SingularSystemError, SolverError,
)

log = logging.getLogger("scatterShape")

EXIT_CODES = (
    (ConfigError, 2),
    (ShapeMismatchError, 2),
    (MissingArtifactError, 3),
    (ShardError, 3),
    (CheckpointError, 3),
    (SolverError, 4),
    (DivergenceError, 4),
    (SingularSystemError, 4),
    (DomainError, 4),
    (FrozenModelError, 4),
)


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Pipeline TOML file (defaults built in)")
    common.add_argument("--seed", type=int, help="Base seed; every stage seed derives from it")
    common.add_argument("--out", help="Artifact directory")
    common.add_argument("--jobs", type=int, help="Worker threads for simulation and ablation")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    common.add_argument("--quiet", "-q", action="store_true", help="Warnings only, no progress bars")
    return common


def build_parser():
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="scatter-shape",
        description="Shape recognition from phaseless multifrequency far fields",
    )
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    gen = subparsers.add_parser("gen", parents=[common], help="Generate the shape dataset and split manifest")
    gen.set_defaults(func=lambda cfg, a, progress: commands.cmd_gen(cfg, progress))

    simulate = subparsers.add_parser("simulate", parents=[common], help="Simulate far fields for every shape")
    simulate.add_argument("--oracle", action="store_true", help="Also write the disk vs. Mie agreement report")
    simulate.set_defaults(func=lambda cfg, a, progress: commands.cmd_simulate(cfg, a.oracle, progress))

    train = subparsers.add_parser("train", parents=[common], help="Train one network stage")
    train.add_argument("stage", choices=["aae", "fnn", "inn"])
    train.set_defaults(func=lambda cfg, a, progress: commands.cmd_train(cfg, a.stage, progress))

    evaluate = subparsers.add_parser("eval", parents=[common], help="Evaluate all stages on the test split")
    evaluate.set_defaults(func=lambda cfg, a, progress: commands.cmd_eval(cfg, progress))

    ablate = subparsers.add_parser("ablate-freq", parents=[common], help="Frequency-count ablation")
    ablate.set_defaults(func=lambda cfg, a, progress: commands.cmd_ablate_frequencies(cfg, progress))

    halfplane = subparsers.add_parser("halfplane", parents=[common], help="Restricted angular range study")
    halfplane.set_defaults(func=lambda cfg, a, progress: commands.cmd_halfplane(cfg, progress))

    mie = subparsers.add_parser("mie", parents=[common], help="Elastic-cylinder far fields and SCS sweep")
    mie.add_argument("--material", choices=["steel", "aluminum"])
    mie.add_argument("--radius", type=float, default=0.5, help="Cylinder radius in m")
    mie.set_defaults(func=lambda cfg, a, progress: commands.cmd_mie(cfg, a.material, a.radius, progress))

    inv = subparsers.add_parser("invert", parents=[common], help="Recover a shape from a far-field CSV")
    inv.add_argument("farfield", help="CSV of far-field amplitudes")
    inv.add_argument("--mode", choices=["mean", "sample"], default="mean")
    inv.add_argument("--samples", type=int, default=1, help="Sampled inversions for the diversity report")
    inv.set_defaults(func=lambda cfg, a, progress: commands.cmd_invert(
        cfg, a.farfield, a.mode, a.samples, a.seed, progress,
    ))
    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1

    configure_logging(args.verbose, args.quiet)
    progress = not args.quiet and sys.stderr.isatty()
    try:
        cfg = load_config(args.config).apply_overrides(args.seed, args.out, args.jobs)
        return args.func(cfg, args, progress)
    except tuple(cls for cls, _ in EXIT_CODES) as err:
        code = next(code for cls, code in EXIT_CODES if isinstance(err, cls))
        log.error("%s: %s", type(err).__name__, err)
        return code


if __name__ == "__main__":
    sys.exit(main())
