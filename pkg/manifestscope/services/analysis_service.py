"""Per-APK analysis pipeline and batch runner."""

import logging
import os
import re
from collections import Counter
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from manifestscope import __version__
from manifestscope.errors import ArchiveError, DexError, ManifestScopeError
from manifestscope.models.fingerprint_models import SignatureDatabase
from manifestscope.models.report_models import AppError, AppReport, RiskSummary
from manifestscope.models.risk_models import RiskPolicy
from manifestscope.services.archive_service import list_dex_entries, open_archive, read_entry
from manifestscope.services.axml_service import decode_axml
from manifestscope.services.dex_service import collect_class_origins, scan_dex
from manifestscope.services.fingerprint_service import (
  default_signature_db,
  fingerprint_coverage,
  match,
)
from manifestscope.services.manifest_service import extract_facts
from manifestscope.services.report_service import write_mapping
from manifestscope.services.risk_service import (
  assess,
  build_vector,
  caveats_for,
  recommendations,
)

logger = logging.getLogger(__name__)

MANIFEST_ENTRY = 'AndroidManifest.xml'
UNSAFE_FILENAME = re.compile(r'[^\w.-]')


def expand_inputs(inputs: Iterable[str | Path]) -> list[Path]:
  """APK paths in input order; a directory contributes its *.apk files sorted by name."""
  paths: list[Path] = []
  for item in inputs:
    path = Path(item)
    if path.is_dir():
      found = sorted(p for p in path.glob('*.apk') if p.is_file())
      if not found:
        logger.warning('No .apk files in %s', path)
      paths.extend(found)
    else:
      paths.append(path)
  return paths


def report_filename(index: int, app_id: str) -> str:
  """`0003-com.example.game.json`; the index keeps input order on disk."""
  return f'{index:04d}-{UNSAFE_FILENAME.sub("_", app_id)}.json'


class AnalysisService:
  """Runs the full pipeline over one or many APKs."""

  def __init__(
    self,
    signature_db: SignatureDatabase | None = None,
    policy: RiskPolicy | None = None,
  ):
    """Initialize the analysis service."""
    self.signature_db = signature_db or default_signature_db()
    self.policy = policy or RiskPolicy()
    self.max_entry_bytes = int(os.getenv('MANIFESTSCOPE_MAX_ENTRY_MB', '256')) * 1024 * 1024

  def analyze_apk(self, path: str | Path, app_id: str | None = None) -> AppReport:
    """Analyze one APK.

    Args:
      path: APK on disk.
      app_id: identifier for the report; defaults to the package id.

    Raises:
      ManifestScopeError: the container or the manifest could not be read.
    """
    path = Path(path)
    archive = open_archive(path)
    doc = decode_axml(read_entry(archive, MANIFEST_ENTRY, self.max_entry_bytes))
    facts = extract_facts(doc, archive)

    warnings = list(facts.warnings)
    tables = []
    for name in list_dex_entries(archive):
      try:
        table = scan_dex(read_entry(archive, name, self.max_entry_bytes), name)
      except (ArchiveError, DexError) as e:
        logger.warning('%s: skipping %s: %s', path, name, e)
        warnings.append(f'{name} skipped: {e}')
        continue
      warnings.extend(table.warnings)
      tables.append(table)

    origins = collect_class_origins(tables)
    signatures = self.signature_db.signatures
    hits = match(facts, origins, signatures)
    coverage = fingerprint_coverage(origins, signatures)
    vector = build_vector(facts, hits)
    app_id = app_id or facts.package_id or path.stem
    assessment = assess(vector, self.policy, app_id, caveats_for(facts, coverage))
    logger.info('%s: %s (%s)', app_id, assessment.level.value, ', '.join(assessment.rule_ids))

    return AppReport(
      app_id=app_id,
      package=facts.package_id,
      source=str(path),
      facts=facts,
      sdk_hits=tuple(hits),
      fingerprint_coverage=coverage,
      indicator_vector=vector,
      risk=RiskSummary(
        level=assessment.level,
        fired_rules=assessment.fired_rules,
        caveats=assessment.caveats,
      ),
      recommendations=recommendations(assessment),
      warnings=tuple(warnings),
      analyzer_version=__version__,
      signature_db_version=self.signature_db.version,
    )

  def analyze(self, path: Path, app_id: str | None = None) -> AppReport | AppError:
    """Analyze one APK, turning any failure into an error record."""
    try:
      return self.analyze_apk(path, app_id)
    except (ManifestScopeError, OSError) as e:
      logger.warning('%s: %s', path, e)
      error_type, message = type(e).__name__, str(e)
    except Exception as e:
      logger.exception('Unexpected failure analyzing %s', path)
      error_type, message = 'InternalError', f'{type(e).__name__}: {e}'
    return AppError(
      app_id=app_id or path.stem, source=str(path), error_type=error_type, message=message
    )

  def analyze_many(
    self, paths: Sequence[Path], jobs: int = 1, anonymize: bool = False
  ) -> list[AppReport | AppError]:
    """Analyze APKs with up to `jobs` workers; results keep input order."""
    ids: list[str | None] = [None] * len(paths)
    if anonymize:
      ids = [f'App{i}' for i in range(1, len(paths) + 1)]
    if jobs > 1 and len(paths) > 1:
      with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(self.analyze, paths, ids))
    else:
      results = [self.analyze(path, app_id) for path, app_id in zip(paths, ids, strict=True)]
    return self._disambiguate(results)

  @staticmethod
  def _disambiguate(results: list[AppReport | AppError]) -> list[AppReport | AppError]:
    """Suffix repeated app ids with `#2`, `#3`, ... in input order."""
    totals = Counter(r.app_id for r in results)
    seen: Counter[str] = Counter()
    unique = []
    for result in results:
      seen[result.app_id] += 1
      if totals[result.app_id] > 1 and seen[result.app_id] > 1:
        new_id = f'{result.app_id}#{seen[result.app_id]}'
        logger.warning('App id %s repeats; recording %s', result.app_id, new_id)
        result = result.model_copy(update={'app_id': new_id})
      unique.append(result)
    return unique

  def write_results(
    self, results: Sequence[AppReport | AppError], out_dir: Path, anonymize: bool = False
  ) -> list[Path]:
    """One JSON file per app, plus mapping.csv when ids are anonymized."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for index, result in enumerate(results, 1):
      target = out_dir / report_filename(index, result.app_id)
      target.write_text(result.model_dump_json(indent=2) + '\n', encoding='utf-8')
      written.append(target)
    if anonymize:
      write_mapping(
        out_dir / 'mapping.csv',
        (
          (r.app_id, r.package if isinstance(r, AppReport) else '', r.source)
          for r in results
        ),
      )
    logger.info('Wrote %d report(s) to %s', len(written), out_dir)
    return written
