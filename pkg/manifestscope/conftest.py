"""Shared pytest fixtures: synthetic APKs built at test time."""

import pytest

from manifestscope.services.archive_service import open_archive, read_entry
from manifestscope.services.axml_service import decode_axml
from manifestscope.services.manifest_service import extract_facts
from scripts.fixtures.apk_builder import build_apk
from scripts.fixtures.corpus import write_corpus


@pytest.fixture(scope='session')
def corpus_dir(tmp_path_factory):
  """The 21-app corpus plus labels.csv, written once per session."""
  out = tmp_path_factory.mktemp('corpus')
  write_corpus(out)
  return out


@pytest.fixture
def facts_of(tmp_path):
  """Build an ApkSpec and return the extracted ManifestFacts."""

  def build(spec, name='fixture.apk'):
    archive = open_archive(build_apk(tmp_path / name, spec))
    return extract_facts(decode_axml(read_entry(archive, 'AndroidManifest.xml')), archive)

  return build


@pytest.fixture(autouse=True)
def _quiet_env(monkeypatch):
  for name in (
    'MANIFESTSCOPE_DB',
    'MANIFESTSCOPE_POLICY',
    'MANIFESTSCOPE_JOBS',
    'MANIFESTSCOPE_LOG_LEVEL',
    'MANIFESTSCOPE_MAX_ENTRY_MB',
  ):
    monkeypatch.delenv(name, raising=False)
