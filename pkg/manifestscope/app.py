"""Command-line entry point for manifestscope."""

import logging
import os
import sys
from collections.abc import Sequence

import click
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

from manifestscope import __version__
from manifestscope.commands import commands
from manifestscope.errors import ManifestScopeError

EXIT_OK = 0
EXIT_USAGE = 1

VERBOSITY_LEVELS = {1: logging.INFO, 2: logging.DEBUG}


def load_env_files() -> None:
  """Load .env, then .env.local on top of it."""
  load_dotenv('.env')
  load_dotenv('.env.local', override=True)


def configure_logging(verbosity: int = 0) -> None:
  """Route log records to stderr through rich.

  Args:
    verbosity: count of -v flags; 0 uses MANIFESTSCOPE_LOG_LEVEL (default WARNING).
  """
  if verbosity:
    level = VERBOSITY_LEVELS.get(min(verbosity, 2), logging.DEBUG)
  else:
    level = os.getenv('MANIFESTSCOPE_LOG_LEVEL', 'WARNING').upper()
  logging.basicConfig(
    level=level,
    format='%(message)s',
    datefmt='[%X]',
    handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
    force=True,
  )


@click.group()
@click.version_option(__version__, prog_name='manifestscope')
@click.option('-v', '--verbose', count=True, help='-v for progress, -vv for debug output')
def cli(verbose: int) -> None:
  """Static privacy-exposure analysis of Android APKs."""
  configure_logging(verbose)


for command in commands:
  cli.add_command(command)


def main(argv: Sequence[str] | None = None) -> int:
  """Run the CLI and return its exit status.

  0 when every APK was analyzed, 2 when any APK failed, 1 on usage errors
  and unreadable inputs such as a bad policy, database or labeling file.
  """
  load_env_files()
  args = list(sys.argv[1:] if argv is None else argv)
  try:
    result = cli.main(args=args, prog_name='manifestscope', standalone_mode=False)
  except click.ClickException as e:
    e.show()
    return EXIT_USAGE
  except click.Abort:
    click.echo('Aborted!', err=True)
    return EXIT_USAGE
  except (ManifestScopeError, OSError) as e:
    logging.getLogger(__name__).debug('Command failed', exc_info=True)
    click.echo(f'Error: {e}', err=True)
    return EXIT_USAGE
  return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
  sys.exit(main())
