import pytest

from manifestscope.models.fingerprint_models import EvidenceSource, FingerprintCoverage
from manifestscope.models.report_models import AppError, AppReport
from manifestscope.models.risk_models import Caveat
from manifestscope.services.analysis_service import (
  AnalysisService,
  expand_inputs,
  report_filename,
)
from scripts.fixtures.apk_builder import ApkSpec, build_apk, write_zip
from scripts.fixtures.axml_writer import compile_xml
from scripts.fixtures.corpus import (
  cohort_corpus,
  deep_link_upload_service,
  manifest,
  minimal_no_backup,
  three_manifest_sdks,
)

CORPUS = cohort_corpus()


@pytest.fixture(scope='module')
def service():
  return AnalysisService()


@pytest.mark.parametrize('app', CORPUS, ids=[app.slug for app in CORPUS])
def test_corpus_app_outcome(service, corpus_dir, app):
  result = service.analyze(corpus_dir / app.filename)
  assert isinstance(result, AppReport), result
  assert result.app_id == app.package
  assert result.risk.level.value == app.expected_level
  assert [rule.rule_id for rule in result.risk.fired_rules] == list(app.expected_rules)


def test_manifest_declared_sdks(service, tmp_path):
  report = service.analyze_apk(build_apk(tmp_path / 'sdks.apk', three_manifest_sdks()))
  assert len(report.sdk_hits) == 3
  assert {hit.category.value for hit in report.sdk_hits} == {
    'analytics',
    'advertising',
    'attribution',
  }
  assert report.fingerprint_coverage is FingerprintCoverage.MANIFEST_ONLY
  assert Caveat.MANIFEST_ONLY_FINGERPRINTS in report.risk.caveats


def test_sdk_found_in_secondary_dex(service, tmp_path):
  report = service.analyze_apk(build_apk(tmp_path / 'deep.apk', deep_link_upload_service()))
  (hit,) = report.sdk_hits
  assert hit.vendor == 'Adjust'
  assert hit.evidence.source is EvidenceSource.DEX_STRING
  assert hit.evidence.dex_name == 'classes2.dex'
  assert report.fingerprint_coverage is FingerprintCoverage.DEX
  assert report.risk.level.value == 'high'
  assert report.recommendations
  assert report.signature_db_version == service.signature_db.version


def test_bad_dex_is_a_warning(service, tmp_path):
  spec = ApkSpec(manifest('com.example.app'), files={'classes.dex': b'not a dex file'})
  report = service.analyze_apk(build_apk(tmp_path / 'bad-dex.apk', spec))
  assert any(w.startswith('classes.dex skipped') for w in report.warnings)


def test_missing_manifest_is_an_error_record(service, tmp_path):
  apk = write_zip(tmp_path / 'no-manifest.apk', {'classes.dex': b'dex'})
  result = service.analyze(apk)
  assert isinstance(result, AppError)
  assert result.error_type == 'EntryNotFound'
  assert result.app_id == 'no-manifest'
  assert result.source == str(apk)


def test_entry_ceiling_from_environment(tmp_path, monkeypatch):
  monkeypatch.setenv('MANIFESTSCOPE_MAX_ENTRY_MB', '0')
  result = AnalysisService().analyze(build_apk(tmp_path / 'app.apk', minimal_no_backup()))
  assert isinstance(result, AppError)
  assert result.error_type == 'EntryTooLarge'


def test_unexpected_failure_is_an_internal_error(tmp_path, monkeypatch):
  service = AnalysisService()

  def explode(path, app_id=None):
    raise RuntimeError('boom')

  monkeypatch.setattr(service, 'analyze_apk', explode)
  result = service.analyze(tmp_path / 'any.apk', 'App1')
  assert isinstance(result, AppError)
  assert (result.app_id, result.error_type) == ('App1', 'InternalError')
  assert 'boom' in result.message


def test_anonymized_ids_follow_input_order(service, tmp_path):
  paths = [
    build_apk(tmp_path / 'b.apk', three_manifest_sdks()),
    build_apk(tmp_path / 'a.apk', minimal_no_backup()),
  ]
  results = service.analyze_many(paths, jobs=2, anonymize=True)
  assert [r.app_id for r in results] == ['App1', 'App2']
  assert [r.package for r in results] == ['com.fixture.general.g01', 'com.fixture.general.g09']

  out = tmp_path / 'reports'
  written = service.write_results(results, out, anonymize=True)
  assert [p.name for p in written] == ['0001-App1.json', '0002-App2.json']
  assert (out / 'mapping.csv').read_text().splitlines() == [
    'app_id,package,source',
    f'App1,com.fixture.general.g01,{paths[0]}',
    f'App2,com.fixture.general.g09,{paths[1]}',
  ]


def test_repeated_packages_are_disambiguated(service, tmp_path):
  first = build_apk(tmp_path / 'one.apk', minimal_no_backup())
  second = build_apk(tmp_path / 'two.apk', minimal_no_backup())
  results = service.analyze_many([first, second, first])
  assert [r.app_id for r in results] == [
    'com.fixture.general.g09',
    'com.fixture.general.g09#2',
    'com.fixture.general.g09#3',
  ]


def test_expand_inputs(tmp_path):
  folder = tmp_path / 'apks'
  folder.mkdir()
  for name in ('b.apk', 'a.apk', 'notes.txt'):
    (folder / name).write_bytes(b'')
  single = tmp_path / 'single.apk'
  single.write_bytes(b'')
  assert expand_inputs([single, folder]) == [single, folder / 'a.apk', folder / 'b.apk']
  assert expand_inputs([tmp_path / 'apks' / 'notes.txt']) == [folder / 'notes.txt']


def test_report_filename():
  assert report_filename(3, 'com.example.game') == '0003-com.example.game.json'
  assert report_filename(12, 'com.example.game#2') == '0012-com.example.game_2.json'


def test_manifest_without_package_falls_back_to_file_name(service, tmp_path):
  root = manifest('')
  del root.attrs['package']
  apk = write_zip(tmp_path / 'nameless.apk', {'AndroidManifest.xml': compile_xml(root)})
  report = service.analyze_apk(apk)
  assert report.app_id == 'nameless'
  assert any('no package id' in w for w in report.warnings)
