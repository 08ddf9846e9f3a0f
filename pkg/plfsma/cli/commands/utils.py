import argparse
import logging
from pathlib import Path

import pandas as pd

from plfsma.core import settings
from plfsma.core.errors import UsageError
from plfsma.data.ingest import Dataset, read_dataset
from plfsma.schemas.manifest import RunManifest, file_digest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def add_seed(parser: argparse.ArgumentParser, default: int = 0) -> None:
    parser.add_argument("--seed", type=int, default=default, help="master random seed")


def add_threads(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker processes (default: PLFSMA_THREADS or the number of cores)",
    )


def add_dataset(parser: argparse.ArgumentParser, response: bool = True) -> None:
    parser.add_argument("--scalars", type=Path, required=True, help="scalar predictor CSV")
    if response:
        parser.add_argument("--response", type=Path, required=True, help="response CSV")
    parser.add_argument("--curves", type=Path, required=True, help="curve CSV (t:<value> header)")


def add_transforms(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--standardize",
        default=None,
        help="comma-separated scalar columns to standardise, or 'all'",
    )
    parser.add_argument(
        "--y-transform",
        choices=["none", "center", "standardize", "log-center"],
        default=None,
        help="response transform",
    )
    parser.add_argument("--log-y", action="store_true", help="shorthand for --y-transform log-center")


def standardize_columns(args: argparse.Namespace):
    if not args.standardize:
        return None
    if args.standardize == "all":
        return "all"
    return [name.strip() for name in args.standardize.split(",") if name.strip()]


def y_transform(args: argparse.Namespace) -> str:
    if args.log_y and args.y_transform not in (None, "log-center"):
        raise UsageError(f"--log-y conflicts with --y-transform {args.y_transform}")
    if args.log_y:
        return "log-center"
    return args.y_transform or "none"


def threads(args: argparse.Namespace) -> int:
    value = args.threads if args.threads is not None else settings.THREADS
    if value < 1:
        raise UsageError(f"--threads must be at least 1, got {value}")
    return value


def int_list(text: str) -> list[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def load_dataset(args: argparse.Namespace) -> Dataset:
    return read_dataset(args.scalars, args.response, args.curves)


def input_paths(args: argparse.Namespace, names=("scalars", "response", "curves")) -> dict[str, Path]:
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def write_table(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=settings.FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s", path)
    return path


def manifest_path(out: Path) -> Path:
    out = Path(out)
    if out.is_dir() or not out.suffix:
        return out / MANIFEST_NAME
    return out.with_name(out.stem + ".manifest.json")


def resolved_config(args: argparse.Namespace) -> dict:
    config = {}
    for key, value in vars(args).items():
        if key in ("handler", "log_level"):
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    return config


def write_manifest(args: argparse.Namespace, out: Path, inputs: dict[str, Path] | None = None) -> Path:
    """Record the command, its resolved flags and input digests next to ``out``."""
    manifest = RunManifest(
        command=args.command,
        config=resolved_config(args),
        seed=getattr(args, "seed", None),
        input_digests={name: file_digest(path) for name, path in (inputs or {}).items()},
    )
    path = manifest.write(manifest_path(out))
    logger.info("wrote %s", path)
    return path
