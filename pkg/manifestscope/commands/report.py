"""`report`: aggregate per-app reports into a cohort comparison."""

import logging
from pathlib import Path

import click

from manifestscope import __version__
from manifestscope.models.config_models import OutputFormat
from manifestscope.models.report_models import UNLABELED, AppReport, CohortLabeling
from manifestscope.services.report_service import (
  aggregate,
  load_app_results,
  load_labeling,
  render,
)

logger = logging.getLogger(__name__)


def _restrict_labeling(labeling: CohortLabeling, app_ids: set[str]) -> CohortLabeling:
  unknown = sorted(set(labeling.assignments) - app_ids)
  for app_id in unknown:
    logger.warning("Labeling names unknown app id '%s'; ignoring it", app_id)
  return CohortLabeling(
    assignments={k: v for k, v in labeling.assignments.items() if k in app_ids}
  )


def _joined_versions(versions: set[str], fallback: str) -> str:
  return ','.join(sorted(versions)) if versions else fallback


@click.command()
@click.option(
  '--labels',
  'labeling_path',
  type=click.Path(dir_okay=False, path_type=Path),
  help='CSV with app_id,cohort columns',
)
@click.option(
  '--format',
  'output_format',
  type=click.Choice([f.value for f in OutputFormat]),
  default=OutputFormat.MARKDOWN.value,
  show_default=True,
)
@click.option(
  '--out',
  'out_path',
  type=click.Path(dir_okay=False, path_type=Path),
  help='Write the report to this file instead of stdout',
)
@click.argument('report_dir', type=click.Path(exists=True, file_okay=False, path_type=Path))
def report(
  labeling_path: Path | None, output_format: str, out_path: Path | None, report_dir: Path
) -> int:
  """Aggregate the per-app reports written by `analyze --out`."""
  results = load_app_results(report_dir)
  reports = [r for r in results if isinstance(r, AppReport)]
  skipped = len(results) - len(reports)
  if skipped:
    logger.warning('Skipping %d error record(s) in %s', skipped, report_dir)
  if not results:
    logger.warning('No per-app reports found in %s', report_dir)

  if labeling_path is None:
    logger.warning("No labeling file given; all apps go to the '%s' cohort", UNLABELED)
    labeling = CohortLabeling()
  else:
    labeling = _restrict_labeling(load_labeling(labeling_path), {r.app_id for r in reports})
  unlabeled = sum(1 for r in reports if r.app_id not in labeling.assignments)
  if labeling_path is not None and unlabeled:
    logger.warning("%d app(s) have no label and go to the '%s' cohort", unlabeled, UNLABELED)

  cohort_report = aggregate(
    [r.assessment() for r in reports],
    [r.facts for r in reports],
    [r.sdk_hits for r in reports],
    labeling,
    analyzer_version=_joined_versions({r.analyzer_version for r in reports}, __version__),
    signature_db_version=_joined_versions({r.signature_db_version for r in reports}, ''),
  )
  rendered = render(cohort_report, output_format)
  if out_path is not None:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(rendered)
    logger.info('Wrote cohort report to %s', out_path)
  else:
    click.echo(rendered.decode(), nl=False)
  return 0
