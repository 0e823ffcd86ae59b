"""Cohort aggregation and report rendering."""

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from manifestscope.errors import (
  DuplicateAppId,
  MalformedLabeling,
  MalformedReport,
  MisalignedInputs,
  MissingLabeling,
)
from manifestscope.models.config_models import OutputFormat
from manifestscope.models.fingerprint_models import SdkCategory, SdkHit
from manifestscope.models.manifest_models import (
  BackupPolicy,
  CleartextSetting,
  ComponentKind,
  ManifestFacts,
  NscCleartext,
  PermissionClass,
)
from manifestscope.models.report_models import (
  AppError,
  AppReport,
  CohortLabeling,
  CohortReport,
  CohortStats,
  RiskCounts,
  app_result_adapter,
)
from manifestscope.models.risk_models import RiskAssessment

logger = logging.getLogger(__name__)

RISK_COLUMNS = ('high', 'medium', 'low')
TABLE_HEADER = ('Risk Assessment', 'High risk', 'Medium risk', 'Low risk', 'Total')

INDICATOR_KEYS = (
  'allow_backup_explicit',
  'allow_backup_implicit',
  'backup_agent',
  'restore_any_version',
  'full_backup_content',
  'data_extraction_rules',
  'cleartext_explicit',
  'nsc_reference',
  'nsc_permits_cleartext',
  'nsc_unresolved',
  'exported_unprotected',
  'exported_activity',
  'exported_service',
  'exported_receiver',
  'exported_provider',
  'deep_link',
  'install_referrer',
  'sensitive_permission',
  'tracking_permission',
  'tracking_sdk',
)


def indicators_of(facts: ManifestFacts, hits: Sequence[SdkHit]) -> dict[str, bool]:
  """Which prevalence indicators one app shows."""
  return {
    'allow_backup_explicit': facts.allow_backup is BackupPolicy.TRUE,
    'allow_backup_implicit': facts.allow_backup is BackupPolicy.UNSET,
    'backup_agent': facts.backup_agent_declared,
    'restore_any_version': facts.restore_any_version,
    'full_backup_content': facts.full_backup_content_declared,
    'data_extraction_rules': facts.data_extraction_rules_declared,
    'cleartext_explicit': facts.cleartext_traffic is CleartextSetting.EXPLICIT_TRUE,
    'nsc_reference': facts.nsc_reference,
    'nsc_permits_cleartext': facts.nsc_permits_cleartext is NscCleartext.TRUE,
    'nsc_unresolved': facts.nsc_permits_cleartext is NscCleartext.UNRESOLVED,
    'exported_unprotected': facts.exported_unprotected_count > 0,
    'exported_activity': facts.exported_count(ComponentKind.ACTIVITY) > 0,
    'exported_service': facts.exported_count(ComponentKind.SERVICE) > 0,
    'exported_receiver': facts.exported_count(ComponentKind.RECEIVER) > 0,
    'exported_provider': facts.exported_count(ComponentKind.PROVIDER) > 0,
    'deep_link': any(c.deep_link for c in facts.components),
    'install_referrer': any(c.install_referrer for c in facts.components),
    'sensitive_permission': bool(facts.permission_names(PermissionClass.SENSITIVE)),
    'tracking_permission': bool(facts.permission_names(PermissionClass.TRACKING_RELEVANT)),
    'tracking_sdk': bool(hits),
  }


class _Tally:
  """Running counts for one cohort."""

  def __init__(self):
    self.app_count = 0
    self.levels: Counter[str] = Counter()
    self.permissions: Counter[str] = Counter()
    self.indicators: Counter[str] = Counter()
    self.categories: Counter[str] = Counter()

  def add(self, assessment: RiskAssessment, facts: ManifestFacts, hits: Sequence[SdkHit]) -> None:
    self.app_count += 1
    self.levels[assessment.level.value] += 1
    self.permissions.update(set(facts.permission_names()))
    self.indicators.update(k for k, present in indicators_of(facts, hits).items() if present)
    self.categories.update({hit.category.value for hit in hits})

  def stats(self) -> CohortStats:
    return CohortStats(
      app_count=self.app_count,
      counts=RiskCounts(**{level: self.levels[level] for level in RISK_COLUMNS}),
      permission_prevalence={k: self.permissions[k] for k in sorted(self.permissions)},
      indicator_prevalence={k: self.indicators[k] for k in sorted(INDICATOR_KEYS)},
      sdk_category_prevalence={c.value: self.categories[c.value] for c in SdkCategory},
    )


def aggregate(
  assessments: Sequence[RiskAssessment],
  facts: Sequence[ManifestFacts],
  hits: Sequence[Sequence[SdkHit]],
  labeling: CohortLabeling | None = None,
  analyzer_version: str = '',
  signature_db_version: str = '',
) -> CohortReport:
  """Aggregate per-app results into per-cohort and total statistics.

  Args:
    assessments: one per app; app ids must be unique.
    facts: manifest facts, index-aligned with assessments.
    hits: SDK hits per app, index-aligned with assessments.
    labeling: app_id -> cohort; apps without a label go to `unlabeled`.

  Raises:
    MisalignedInputs: the three lists differ in length.
    DuplicateAppId: an app id appears twice.
  """
  if not len(assessments) == len(facts) == len(hits):
    raise MisalignedInputs(
      f'{len(assessments)} assessments, {len(facts)} fact sets, {len(hits)} hit lists'
    )
  labeling = labeling or CohortLabeling()
  seen: set[str] = set()
  tallies: dict[str, _Tally] = {}
  totals = _Tally()
  for assessment, app_facts, app_hits in zip(assessments, facts, hits, strict=True):
    if assessment.app_id in seen:
      raise DuplicateAppId(f"App id '{assessment.app_id}' appears more than once")
    seen.add(assessment.app_id)
    cohort = labeling.cohort_of(assessment.app_id)
    tallies.setdefault(cohort, _Tally()).add(assessment, app_facts, app_hits)
    totals.add(assessment, app_facts, app_hits)

  return CohortReport(
    cohorts={label: tallies[label].stats() for label in sorted(tallies)},
    totals=totals.stats(),
    analyzer_version=analyzer_version,
    signature_db_version=signature_db_version,
  )


def cohort_title(label: str) -> str:
  """`children-oriented` -> `Children-oriented`."""
  return label[:1].upper() + label[1:]


def risk_table(report: CohortReport) -> pd.DataFrame:
  """One row per cohort plus a Total row."""
  rows = [
    {'cohort': label, **stats.counts.model_dump(), 'total': stats.counts.total}
    for label, stats in report.cohorts.items()
  ]
  totals = report.totals.counts
  rows.append({'cohort': 'Total', **totals.model_dump(), 'total': totals.total})
  return pd.DataFrame(rows, columns=['cohort', *RISK_COLUMNS, 'total'])


def prevalence_table(report: CohortReport, field: str) -> pd.DataFrame:
  """Keys as rows, one column per cohort plus Total."""
  columns = {label: getattr(stats, field) for label, stats in report.cohorts.items()}
  columns['Total'] = getattr(report.totals, field)
  keys = sorted({key for values in columns.values() for key in values})
  frame = pd.DataFrame(
    {label: [values.get(key, 0) for key in keys] for label, values in columns.items()},
    index=pd.Index(keys, name=field.removesuffix('_prevalence')),
  )
  return frame.astype(int)


def _markdown(frame: pd.DataFrame, header: Sequence[str], first_column: Sequence[str]) -> str:
  lines = [
    '| ' + ' | '.join(header) + ' |',
    '|' + '|'.join(['---'] + ['---:'] * (len(header) - 1)) + '|',
  ]
  for label, row in zip(first_column, frame.itertuples(index=False), strict=True):
    lines.append('| ' + ' | '.join([label, *(str(v) for v in row)]) + ' |')
  return '\n'.join(lines) + '\n'


def _render_markdown(report: CohortReport) -> str:
  table = risk_table(report)
  out = [
    '## Distribution of privacy-risk categories\n\n',
    _markdown(
      table.drop(columns='cohort'),
      TABLE_HEADER,
      [cohort_title(label) for label in table['cohort']],
    ),
  ]
  for field, title in (
    ('indicator_prevalence', 'Indicator prevalence'),
    ('sdk_category_prevalence', 'SDK category prevalence'),
    ('permission_prevalence', 'Permission prevalence'),
  ):
    frame = prevalence_table(report, field)
    header = [title, *(cohort_title(c) for c in frame.columns)]
    out.append(f'\n## {title}\n\n')
    out.append(_markdown(frame, header, list(frame.index)))
  out.append(
    f'\nAnalyzer {report.analyzer_version}, signature database {report.signature_db_version}\n'
  )
  return ''.join(out)


def render(report: CohortReport, fmt: OutputFormat | str = OutputFormat.JSON) -> bytes:
  """Serialize a cohort report.

  json is the canonical form and parses back with CohortReport.model_validate_json;
  csv is the risk table; markdown is the risk table followed by the
  prevalence tables.
  """
  fmt = OutputFormat(fmt)
  if fmt is OutputFormat.JSON:
    return (report.model_dump_json(indent=2) + '\n').encode()
  if fmt is OutputFormat.CSV:
    return risk_table(report).to_csv(index=False, lineterminator='\n').encode()
  return _render_markdown(report).encode()


def parse_report(data: bytes | str) -> CohortReport:
  """Inverse of the json rendering."""
  return CohortReport.model_validate_json(data)


def render_apps(results: Iterable[AppReport | AppError], fmt: OutputFormat | str) -> bytes:
  """Serialize the per-app stream of an `analyze` run.

  json writes one compact record per line; csv and markdown write a summary
  row per app.
  """
  fmt = OutputFormat(fmt)
  results = list(results)
  if fmt is OutputFormat.JSON:
    return ''.join(app_result_adapter.dump_json(r).decode() + '\n' for r in results).encode()

  rows = []
  for result in results:
    if isinstance(result, AppReport):
      rows.append(
        {
          'app_id': result.app_id,
          'status': result.status,
          'package': result.package,
          'level': result.risk.level.value,
          'rules': ' '.join(rule.rule_id for rule in result.risk.fired_rules),
          'sdk_vendors': ' '.join(sorted({hit.vendor for hit in result.sdk_hits})),
          'source': result.source,
        }
      )
    else:
      rows.append(
        {
          'app_id': result.app_id,
          'status': result.status,
          'package': '',
          'level': '',
          'rules': result.error_type,
          'sdk_vendors': '',
          'source': result.source,
        }
      )
  columns = ['app_id', 'status', 'package', 'level', 'rules', 'sdk_vendors', 'source']
  frame = pd.DataFrame(rows, columns=columns)
  if fmt is OutputFormat.CSV:
    return frame.to_csv(index=False, lineterminator='\n').encode()
  return _markdown(frame.drop(columns='app_id'), columns, list(frame['app_id'])).encode()


def load_labeling(path: str | Path) -> CohortLabeling:
  """Read an `app_id,cohort` CSV.

  Raises:
    MissingLabeling: the file does not exist.
    MalformedLabeling: a column is missing, an id repeats, or a field is blank.
  """
  path = Path(path)
  if not path.is_file():
    raise MissingLabeling(f'Labeling file {path} does not exist')
  try:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
  except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
    raise MalformedLabeling(f'{path}: {e}') from e
  frame.columns = [str(c).strip() for c in frame.columns]
  missing = {'app_id', 'cohort'} - set(frame.columns)
  if missing:
    raise MalformedLabeling(f'{path}: missing column(s) {", ".join(sorted(missing))}')
  frame = frame.assign(app_id=frame['app_id'].str.strip(), cohort=frame['cohort'].str.strip())
  if (frame['app_id'] == '').any() or (frame['cohort'] == '').any():
    raise MalformedLabeling(f'{path}: blank app_id or cohort')
  duplicated = frame.loc[frame['app_id'].duplicated(), 'app_id']
  if not duplicated.empty:
    raise MalformedLabeling(f"{path}: app id '{duplicated.iloc[0]}' is labeled more than once")
  return CohortLabeling(assignments=dict(zip(frame['app_id'], frame['cohort'], strict=True)))


def load_app_results(report_dir: str | Path) -> list[AppReport | AppError]:
  """Read every per-app JSON file in a directory, sorted by file name.

  Raises:
    MalformedReport: a file is not a valid per-app record.
  """
  results = []
  for path in sorted(Path(report_dir).glob('*.json')):
    try:
      results.append(app_result_adapter.validate_json(path.read_bytes()))
    except ValidationError as e:
      raise MalformedReport(f'{path.name}: {e}') from e
  return results


def write_mapping(path: Path, rows: Iterable[tuple[str, str, str]]) -> None:
  """Write the anonymized id -> package/source mapping as CSV."""
  frame = pd.DataFrame(list(rows), columns=['app_id', 'package', 'source'])
  frame.to_csv(path, index=False, lineterminator='\n', encoding='utf-8')
