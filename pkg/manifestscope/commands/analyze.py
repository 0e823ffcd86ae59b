"""`analyze`: run the pipeline over APK files and directories."""

import logging
from pathlib import Path

import click

from manifestscope.models.config_models import OutputFormat, RunConfig
from manifestscope.models.report_models import AppError
from manifestscope.services.analysis_service import AnalysisService, expand_inputs
from manifestscope.services.fingerprint_service import resolve_signature_db
from manifestscope.services.report_service import render_apps
from manifestscope.services.risk_service import resolve_policy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_APP_FAILURE = 2


@click.command()
@click.option(
  '--db',
  'db_path',
  type=click.Path(exists=True, dir_okay=False, path_type=Path),
  help='Signature database (default: $MANIFESTSCOPE_DB or the bundled one)',
)
@click.option(
  '--policy',
  'policy_path',
  type=click.Path(exists=True, dir_okay=False, path_type=Path),
  help='Risk policy file with threshold overrides',
)
@click.option(
  '--out',
  'out_dir',
  type=click.Path(file_okay=False, path_type=Path),
  help='Write one JSON report per app into this directory',
)
@click.option(
  '--format',
  'output_format',
  type=click.Choice([f.value for f in OutputFormat]),
  default=OutputFormat.JSON.value,
  show_default=True,
  help='Format of the report stream on stdout',
)
@click.option('--anonymize', is_flag=True, help='Replace app ids with App1..AppN in input order')
@click.option(
  '--jobs',
  type=click.IntRange(min=1),
  default=1,
  envvar='MANIFESTSCOPE_JOBS',
  show_default=True,
  help='APKs analyzed concurrently',
)
@click.argument('inputs', nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
def analyze(
  db_path: Path | None,
  policy_path: Path | None,
  out_dir: Path | None,
  output_format: str,
  anonymize: bool,
  jobs: int,
  inputs: tuple[Path, ...],
) -> int:
  """Analyze APK files (directories contribute their *.apk files)."""
  config = RunConfig(
    inputs=inputs,
    signature_db_path=db_path,
    policy_path=policy_path,
    output_format=OutputFormat(output_format),
    out_dir=out_dir,
    anonymize=anonymize,
    parallelism=jobs,
  )
  service = AnalysisService(
    signature_db=resolve_signature_db(config.signature_db_path),
    policy=resolve_policy(config.policy_path),
  )
  paths = expand_inputs(config.inputs)
  if not paths:
    raise click.UsageError('No APK files found in the given inputs')

  results = service.analyze_many(paths, config.parallelism, config.anonymize)
  if config.out_dir is not None:
    service.write_results(results, config.out_dir, config.anonymize)
  else:
    click.echo(render_apps(results, config.output_format).decode(), nl=False)

  failures = sum(isinstance(r, AppError) for r in results)
  if failures:
    logger.warning('%d of %d APK(s) could not be analyzed', failures, len(results))
    return EXIT_APP_FAILURE
  return EXIT_OK
