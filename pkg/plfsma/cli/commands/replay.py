import argparse
import logging
from pathlib import Path

from plfsma.core.errors import DataFormatError, UsageError
from plfsma.schemas.manifest import RunManifest, file_digest

logger = logging.getLogger(__name__)

NAME = "replay"


def register(subparsers) -> None:
    parser = subparsers.add_parser(NAME, help="re-run a command from its manifest")
    parser.add_argument("manifest", type=Path)
    parser.add_argument(
        "--out", type=Path, default=None, help="write to this path instead of the recorded one"
    )
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    """
    Re-run the recorded command with its recorded flags.

    Inputs are checked against the recorded SHA-256 digests first.
    """
    from plfsma.cli.parser import handlers

    manifest = RunManifest.read(args.manifest)
    table = handlers()
    if manifest.command not in table or manifest.command == NAME:
        raise UsageError(f"manifest records unknown command {manifest.command!r}")
    for name, digest in manifest.input_digests.items():
        path = manifest.config.get(name)
        if name == "model":
            path = _model_file(Path(manifest.config["model"]))
        try:
            current = file_digest(path) if path is not None else None
        except OSError:
            current = None
        if current != digest:
            raise DataFormatError(f"input {name} ({path}) changed since the recorded run")
    config = dict(manifest.config)
    if args.out is not None:
        config["out"] = str(args.out)
    namespace = argparse.Namespace(**_restore_paths(config))
    namespace.handler = table[manifest.command]
    logger.info("replaying %s from %s", manifest.command, args.manifest)
    return namespace.handler(namespace)


def _model_file(path: Path) -> Path:
    return path / "model.json" if path.is_dir() else path


def _restore_paths(config: dict) -> dict:
    paths = ("scalars", "response", "curves", "candidates", "model", "out")
    return {
        key: Path(value) if key in paths and value is not None else value
        for key, value in config.items()
    }
