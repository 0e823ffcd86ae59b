import json

import pytest
from lxml import etree

from manifestscope import __version__
from manifestscope.app import main
from manifestscope.models.manifest_models import ManifestFacts
from manifestscope.services.report_service import parse_report
from scripts.fixtures.apk_builder import ApkSpec, build_apk
from scripts.fixtures.axml_writer import XmlNode
from scripts.fixtures.corpus import minimal_no_backup, three_manifest_sdks


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
  monkeypatch.chdir(tmp_path)


@pytest.fixture(scope='module')
def reports_dir(corpus_dir, tmp_path_factory):
  out = tmp_path_factory.mktemp('reports')
  assert main(['analyze', '--out', str(out), str(corpus_dir)]) == 0
  return out


def _tree(root):
  return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob('*')) if p.is_file()}


def test_version(capsys):
  assert main(['--version']) == 0
  assert __version__ in capsys.readouterr().out


def test_cohort_table_from_corpus(corpus_dir, reports_dir, capsys):
  assert len(list(reports_dir.glob('*.json'))) == 21
  assert main(['report', '--labels', str(corpus_dir / 'labels.csv'), str(reports_dir)]) == 0
  out = capsys.readouterr().out
  assert '| Children-oriented | 5 | 7 | 0 | 12 |' in out
  assert '| General-audience | 4 | 4 | 1 | 9 |' in out
  assert '| Total | 9 | 11 | 1 | 21 |' in out
  assert 'signature database 2026.10.1' in out


def test_report_to_json_file(corpus_dir, reports_dir, tmp_path):
  target = tmp_path / 'out' / 'cohorts.json'
  args = ['report', '--labels', str(corpus_dir / 'labels.csv'), '--format', 'json']
  assert main([*args, '--out', str(target), str(reports_dir)]) == 0
  report = parse_report(target.read_bytes())
  assert report.totals.counts.total == 21
  assert set(report.cohorts) == {'children-oriented', 'general-audience'}


def test_report_without_labels(reports_dir, capsys):
  assert main(['report', str(reports_dir)]) == 0
  captured = capsys.readouterr()
  assert '| Unlabeled | 9 | 11 | 1 | 21 |' in captured.out
  assert 'No labeling file given' in captured.err


def test_unknown_label_ids_are_ignored(corpus_dir, reports_dir, tmp_path, capsys):
  labels = tmp_path / 'labels.csv'
  labels.write_text((corpus_dir / 'labels.csv').read_text() + 'com.unknown,general-audience\n')
  assert main(['report', '--labels', str(labels), '--format', 'csv', str(reports_dir)]) == 0
  captured = capsys.readouterr()
  assert captured.out.splitlines()[-1] == 'Total,9,11,1,21'
  assert 'com.unknown' in captured.err


def test_missing_labeling_file(reports_dir, tmp_path, capsys):
  assert main(['report', '--labels', str(tmp_path / 'absent.csv'), str(reports_dir)]) == 1
  assert 'Error:' in capsys.readouterr().err


def test_parallel_runs_write_identical_reports(corpus_dir, tmp_path):
  for jobs in ('1', '8'):
    out = tmp_path / f'jobs-{jobs}'
    assert main(['analyze', '--anonymize', '--jobs', jobs, '--out', str(out), str(corpus_dir)]) == 0
  serial, parallel = _tree(tmp_path / 'jobs-1'), _tree(tmp_path / 'jobs-8')
  assert len(serial) == 22
  assert serial == parallel


def test_failed_apk_sets_exit_status(tmp_path, capsys):
  apks = tmp_path / 'apks'
  build_apk(apks / 'a-good.apk', three_manifest_sdks())
  (apks / 'b-broken.apk').write_bytes(b'PK\x03\x04 truncated')
  assert main(['analyze', str(apks)]) == 2
  lines = capsys.readouterr().out.splitlines()
  records = [json.loads(line) for line in lines]
  assert [r['status'] for r in records] == ['ok', 'error']
  assert records[0]['risk']['level'] == 'high'
  assert records[1]['app_id'] == 'b-broken'


def test_summary_formats(tmp_path, capsys):
  apk = build_apk(tmp_path / 'app.apk', minimal_no_backup())
  assert main(['analyze', '--format', 'csv', str(apk)]) == 0
  lines = capsys.readouterr().out.splitlines()
  assert lines[0] == 'app_id,status,package,level,rules,sdk_vendors,source'
  assert lines[1].startswith('com.fixture.general.g09,ok,com.fixture.general.g09,low,L1,')

  assert main(['analyze', '--format', 'markdown', str(apk)]) == 0
  assert '| com.fixture.general.g09 | ok |' in capsys.readouterr().out


@pytest.mark.parametrize(
  'args',
  [
    ['analyze'],
    ['analyze', 'does-not-exist.apk'],
    ['analyze', '--jobs', '0', '.'],
    ['no-such-command'],
  ],
)
def test_usage_errors(args, capsys):
  assert main(args) == 1
  assert 'Error' in capsys.readouterr().err


def test_directory_without_apks(tmp_path, capsys):
  (tmp_path / 'empty').mkdir()
  assert main(['analyze', str(tmp_path / 'empty')]) == 1
  assert 'No APK files found' in capsys.readouterr().err


def test_malformed_policy_file(tmp_path, capsys):
  apk = build_apk(tmp_path / 'app.apk', minimal_no_backup())
  policy = tmp_path / 'policy.txt'
  policy.write_text('bogus_threshold=1\n')
  assert main(['analyze', '--policy', str(policy), str(apk)]) == 1
  assert 'Error:' in capsys.readouterr().err


def test_policy_file_changes_labels(tmp_path, capsys):
  apk = build_apk(tmp_path / 'app.apk', three_manifest_sdks())
  policy = tmp_path / 'policy.txt'
  policy.write_text('extensive_vendor_min=3\n')
  assert main(['analyze', '--policy', str(policy), str(apk)]) == 0
  (record,) = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
  assert record['risk']['level'] == 'medium'


def test_fingerprints_list(capsys):
  assert main(['fingerprints', 'list']) == 0
  out = capsys.readouterr().out
  assert 'Signature database 2026.10.1' in out
  assert 'AppsFlyer' in out


def test_inspect_prints_manifest(tmp_path, capsys):
  apk = build_apk(tmp_path / 'app.apk', minimal_no_backup())
  assert main(['inspect', str(apk)]) == 0
  root = etree.fromstring(capsys.readouterr().out.encode())
  assert root.tag == 'manifest'
  assert root.get('package') == 'com.fixture.general.g09'


def test_inspect_facts(tmp_path, capsys):
  apk = build_apk(tmp_path / 'app.apk', three_manifest_sdks())
  assert main(['inspect', '--facts', str(apk)]) == 0
  facts = ManifestFacts.model_validate_json(capsys.readouterr().out)
  assert facts.package_id == 'com.fixture.general.g01'
  assert len(facts.metadata_keys) == 2


def test_inspect_invalid_element_name(tmp_path, capsys):
  spec = ApkSpec(manifest=XmlNode('manifest', {'package': 'a.b'}).add(XmlNode('bad tag')))
  apk = build_apk(tmp_path / 'app.apk', spec)
  assert main(['inspect', str(apk)]) == 1
  assert "Error: Element name 'bad tag'" in capsys.readouterr().err


@pytest.mark.parametrize('value', ['abc', '0'])
def test_jobs_from_environment_is_validated(value, tmp_path, monkeypatch, capsys):
  apk = build_apk(tmp_path / 'app.apk', minimal_no_backup())
  monkeypatch.setenv('MANIFESTSCOPE_JOBS', value)
  assert main(['analyze', str(apk)]) == 1
  assert 'Invalid value for' in capsys.readouterr().err


def test_jobs_from_environment(tmp_path, monkeypatch, capsys):
  apk = build_apk(tmp_path / 'app.apk', minimal_no_backup())
  monkeypatch.setenv('MANIFESTSCOPE_JOBS', '3')
  assert main(['analyze', str(apk)]) == 0
  assert json.loads(capsys.readouterr().out)['status'] == 'ok'
