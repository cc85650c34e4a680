# cli.py
# `ryd` entry point: one subcommand per handler.
import logging
import sys
from typing import Optional

import click

from .config import PRESETS, load_config, load_preset, settings
from .errors import ConfigError, RydbergError
from .handlers import DEFAULT_PRESETS, EXIT_ERROR, run_command

logger = logging.getLogger(__name__)


def _configure_logging():
    level = getattr(logging, settings.log_level, logging.INFO)
    logging.basicConfig(level=level, format="[%(levelname)s] %(message)s")


def _resolve_config(command: str, config_path: Optional[str], preset: Optional[str]):
    if config_path and preset:
        raise ConfigError("give either --config or --preset, not both")
    if config_path:
        return load_config(config_path)
    return load_preset(preset or DEFAULT_PRESETS[command])


def _run(command: str, config_path, preset, out, threads):
    try:
        cfg = _resolve_config(command, config_path, preset)
        result = run_command(command, cfg, out_dir=out, threads=threads, progress=sys.stderr.isatty())
    except RydbergError as exc:
        logger.error("%s failed: %s", command, exc)
        sys.exit(EXIT_ERROR)
    click.echo(result.summary)
    sys.exit(result.exit_code)


def _command(name: str, help_text: str):
    @click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON run configuration.")
    @click.option("--preset", type=click.Choice(PRESETS), help=f"Shipped configuration (default {DEFAULT_PRESETS[name]}).")
    @click.option("--out", type=click.Path(file_okay=False), help="Output directory (RYD_OUTPUT_DIR by default).")
    @click.option("--threads", type=click.IntRange(min=1), help="Worker threads (RYD_SEED_THREADS by default).")
    def command(config_path, preset, out, threads):
        _run(name, config_path, preset, out, threads)

    return cli.command(name=name, help=help_text)(command)


@click.group()
def cli():
    """Rydberg molecule dressing: pair potentials, dressed chains and spin squeezing."""
    _configure_logging()


_command("potential", "Pair eigencurves and the molecular potential (potential.csv).")
_command("dressed", "Dressed interaction, dephasing and coherence along R (dressed.csv, dressed_full.csv).")
_command("dynamics", "Master-equation dynamics of the chain or of a two-atom pair (dynamics.csv).")
_command("squeeze", "Squeezing against dressing time for every evolution level (squeeze.csv).")
_command("scan", "Optimal squeezing over scheme, Rc/a, N and gamma (scan.csv).")
_command("validate", "Run the acceptance checks (validate.csv); exits 2 on failure.")


def main():
    cli()


if __name__ == "__main__":
    main()
