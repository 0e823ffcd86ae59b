import itertools

import pytest

from manifestscope.errors import MalformedPolicy
from manifestscope.models.fingerprint_models import FingerprintCoverage
from manifestscope.models.risk_models import Caveat, IndicatorVector, RiskLevel, RiskPolicy
from manifestscope.services.fingerprint_service import default_signature_db, match
from manifestscope.services.risk_service import (
  NO_INDICATORS,
  RULES,
  assess,
  build_vector,
  caveats_for,
  load_policy,
  recommendations,
  resolve_policy,
  strong_indicators,
)
from scripts.fixtures.corpus import (
  backup_agent_unresolved_nsc,
  cohort_corpus,
  deep_link_upload_service,
  explicit_cleartext_with_nsc,
  minimal_no_backup,
  three_manifest_sdks,
)

BOOLEAN_FIELDS = ('cleartext_strong', 'backup_enabled', 'backup_explicit', 'tracking_present')
COUNT_FIELDS = (
  'ad_attrib_vendor_count',
  'sensitive_permission_count',
  'exported_unprotected_count',
)
COUNTS = (0, 1, 2, 3)


def _all_vectors():
  for flags in itertools.product((False, True), repeat=len(BOOLEAN_FIELDS)):
    for counts in itertools.product(COUNTS, repeat=len(COUNT_FIELDS)):
      yield IndicatorVector(**dict(zip(BOOLEAN_FIELDS, flags)), **dict(zip(COUNT_FIELDS, counts)))


def _increments(vector):
  for field in BOOLEAN_FIELDS:
    if not getattr(vector, field):
      yield vector.model_copy(update={field: True})
  for field in COUNT_FIELDS:
    if getattr(vector, field) < COUNTS[-1]:
      yield vector.model_copy(update={field: getattr(vector, field) + 1})


def _analyzed(facts_of, spec):
  facts = facts_of(spec)
  hits = match(facts, set(), default_signature_db().signatures)
  return facts, hits, build_vector(facts, hits)


def test_every_vector_gets_exactly_one_label():
  vectors = list(_all_vectors())
  assert len(vectors) == 1024
  for vector in vectors:
    result = assess(vector)
    assert result.level in RiskLevel
    assert result.fired_rules
    holding = [rule for rule in RULES if rule.holds(vector, RiskPolicy())]
    if result.level is RiskLevel.LOW:
      assert not holding
      assert result.rule_ids == [NO_INDICATORS]
    else:
      deciding = [rule.rule_id for rule in holding if rule.level is result.level]
      assert result.rule_ids == deciding
      assert all(rule.level.rank <= result.level.rank for rule in holding)
    assert assess(vector) == result


def test_label_never_drops_when_an_indicator_is_added():
  for vector in _all_vectors():
    rank = assess(vector).level.rank
    for bigger in _increments(vector):
      assert assess(bigger).level.rank >= rank, (vector, bigger)


@pytest.mark.parametrize(
  ('fields', 'level', 'rules'),
  [
    ({}, RiskLevel.LOW, ['L1']),
    ({'cleartext_strong': True, 'tracking_present': True}, RiskLevel.HIGH, ['R1']),
    ({'ad_attrib_vendor_count': 2, 'tracking_present': True}, RiskLevel.HIGH, ['R2']),
    (
      {
        'tracking_present': True,
        'backup_enabled': True,
        'backup_explicit': True,
        'exported_unprotected_count': 2,
      },
      RiskLevel.HIGH,
      ['R3'],
    ),
    (
      {'cleartext_strong': True, 'tracking_present': True, 'ad_attrib_vendor_count': 3},
      RiskLevel.HIGH,
      ['R1', 'R2'],
    ),
    ({'backup_enabled': True}, RiskLevel.MEDIUM, ['M2']),
    ({'backup_explicit': True}, RiskLevel.LOW, ['L1']),
    ({'cleartext_strong': True, 'sensitive_permission_count': 1}, RiskLevel.MEDIUM, ['M3', 'M4']),
    ({'exported_unprotected_count': 1}, RiskLevel.MEDIUM, ['M5']),
    (
      {'tracking_present': True, 'backup_enabled': True, 'exported_unprotected_count': 2},
      RiskLevel.MEDIUM,
      ['M1', 'M2', 'M5'],
    ),
  ],
)
def test_rule_table(fields, level, rules):
  result = assess(IndicatorVector(**fields), app_id='App1')
  assert result.level is level
  assert result.rule_ids == rules
  assert result.app_id == 'App1'
  assert all(rule.justification for rule in result.fired_rules)


def test_implicit_backup_is_not_a_strong_indicator():
  vector = IndicatorVector(backup_enabled=True, backup_explicit=False)
  assert strong_indicators(vector, RiskPolicy()) == []


def test_policy_changes_thresholds():
  vector = IndicatorVector(ad_attrib_vendor_count=1, tracking_present=True)
  assert assess(vector).level is RiskLevel.MEDIUM
  assert assess(vector, load_policy('extensive_vendor_min = 1')).rule_ids == ['R2']


def test_load_policy():
  policy = load_policy('# thresholds\nstrong_cooccur_min=2\n\nexported_strong_min = 3 # note\n')
  assert policy == RiskPolicy(strong_cooccur_min=2, exported_strong_min=3)


def test_load_policy_dotenv_syntax():
  policy = load_policy('export extensive_vendor_min="4"\nstrong_cooccur_min="5" # five\n')
  assert policy == RiskPolicy(extensive_vendor_min=4, strong_cooccur_min=5)


@pytest.mark.parametrize(
  'text',
  [
    'unknown_key=2',
    'extensive_vendor_min',
    'extensive_vendor_min=',
    'extensive_vendor_min=0',
    'strong_cooccur_min=two',
  ],
)
def test_malformed_policy(text):
  with pytest.raises(MalformedPolicy):
    load_policy(text)


def test_policy_from_environment(tmp_path, monkeypatch):
  path = tmp_path / 'policy.txt'
  path.write_text('extensive_vendor_min=4\n')
  assert resolve_policy() == RiskPolicy()
  monkeypatch.setenv('MANIFESTSCOPE_POLICY', str(path))
  assert resolve_policy().extensive_vendor_min == 4


def test_vector_from_manifest_declared_sdks(facts_of):
  _, hits, vector = _analyzed(facts_of, three_manifest_sdks())
  assert len(hits) == 3
  assert vector == IndicatorVector(
    backup_enabled=False,
    backup_explicit=True,
    tracking_present=True,
    ad_attrib_vendor_count=2,
    exported_unprotected_count=1,
  )
  assert assess(vector).rule_ids == ['R2']


def test_vector_from_explicit_cleartext(facts_of):
  _, _, vector = _analyzed(facts_of, explicit_cleartext_with_nsc())
  assert vector.cleartext_strong
  assert assess(vector).rule_ids == ['R1']


def test_unresolved_config_is_a_caveat_not_an_indicator(facts_of):
  facts, _, vector = _analyzed(facts_of, backup_agent_unresolved_nsc())
  assert not vector.cleartext_strong
  assert vector.backup_enabled and not vector.backup_explicit
  caveats = caveats_for(facts, FingerprintCoverage.MANIFEST_ONLY)
  assert caveats == (
    Caveat.NSC_UNRESOLVED,
    Caveat.BACKUP_IMPLICIT,
    Caveat.MANIFEST_ONLY_FINGERPRINTS,
  )
  result = assess(vector, caveats=caveats)
  assert result.level is RiskLevel.MEDIUM
  assert result.rule_ids == ['M1', 'M2']
  assert result.caveats == caveats


def test_tracking_permission_counts_as_tracking(facts_of):
  (app,) = [a for a in cohort_corpus() if a.slug == 'general-08-ad-id']
  _, hits, vector = _analyzed(facts_of, app.spec)
  assert hits == []
  assert vector.tracking_present
  assert vector.ad_attrib_vendor_count == 0


def test_recommendations_follow_the_vector(facts_of):
  _, _, vector = _analyzed(facts_of, deep_link_upload_service())
  advice = recommendations(assess(vector))
  assert any('backups' in line for line in advice)
  assert any('exported components' in line for line in advice)
  assert recommendations(assess(IndicatorVector())) == ()
  _, _, low = _analyzed(facts_of, minimal_no_backup())
  assert assess(low).level is RiskLevel.LOW
