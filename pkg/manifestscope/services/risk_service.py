"""Qualitative privacy-risk rubric.

An app is HIGH when strong indicators co-occur, MEDIUM when any single
indicator is present, LOW otherwise. Rules within a tier are evaluated in
order and only the deciding tier's rules are reported.
"""

import io
import logging
import os
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from pathlib import Path

from dotenv import dotenv_values
from pydantic import ValidationError

from manifestscope.errors import MalformedPolicy
from manifestscope.models.fingerprint_models import (
  FingerprintCoverage,
  SdkCategory,
  SdkHit,
)
from manifestscope.models.manifest_models import (
  BackupPolicy,
  CleartextSetting,
  ManifestFacts,
  NscCleartext,
  PermissionClass,
)
from manifestscope.models.risk_models import (
  Caveat,
  FiredRule,
  IndicatorVector,
  RiskAssessment,
  RiskLevel,
  RiskPolicy,
)

logger = logging.getLogger(__name__)

AD_ATTRIBUTION = (SdkCategory.ADVERTISING, SdkCategory.ATTRIBUTION)
NO_INDICATORS = 'L1'


@dataclass(frozen=True)
class Rule:
  """One rubric rule: an id, the tier it decides, a test and a reason."""

  rule_id: str
  level: RiskLevel
  holds: Callable[[IndicatorVector, RiskPolicy], bool]
  explain: Callable[[IndicatorVector, RiskPolicy], str]


def strong_indicators(vector: IndicatorVector, policy: RiskPolicy) -> list[str]:
  """Names of the strong indicators present in the vector."""
  present = []
  if vector.cleartext_strong:
    present.append('cleartext traffic permitted')
  if vector.tracking_present:
    present.append('tracking present')
  if vector.backup_explicit and vector.backup_enabled:
    present.append('backup explicitly enabled')
  if vector.exported_unprotected_count >= policy.exported_strong_min:
    present.append(f'{vector.exported_unprotected_count} unprotected exported components')
  return present


RULES: tuple[Rule, ...] = (
  Rule(
    'R1',
    RiskLevel.HIGH,
    lambda v, p: v.cleartext_strong and v.tracking_present,
    lambda v, p: 'Cleartext traffic is permitted alongside embedded tracking or analytics',
  ),
  Rule(
    'R2',
    RiskLevel.HIGH,
    lambda v, p: v.ad_attrib_vendor_count >= p.extensive_vendor_min,
    lambda v, p: (
      f'{v.ad_attrib_vendor_count} distinct advertising/attribution vendors '
      f'(threshold {p.extensive_vendor_min})'
    ),
  ),
  Rule(
    'R3',
    RiskLevel.HIGH,
    lambda v, p: len(strong_indicators(v, p)) >= p.strong_cooccur_min,
    lambda v, p: (
      f'{len(strong_indicators(v, p))} strong indicators co-occur: '
      + ', '.join(strong_indicators(v, p))
    ),
  ),
  Rule(
    'M1',
    RiskLevel.MEDIUM,
    lambda v, p: v.tracking_present,
    lambda v, p: 'Tracking SDK or tracking-relevant permission present',
  ),
  Rule(
    'M2',
    RiskLevel.MEDIUM,
    lambda v, p: v.backup_enabled,
    lambda v, p: (
      'Backup is enabled explicitly' if v.backup_explicit else 'Backup is enabled by default'
    ),
  ),
  Rule(
    'M3',
    RiskLevel.MEDIUM,
    lambda v, p: v.cleartext_strong,
    lambda v, p: 'Cleartext traffic is permitted',
  ),
  Rule(
    'M4',
    RiskLevel.MEDIUM,
    lambda v, p: v.sensitive_permission_count >= 1,
    lambda v, p: f'{v.sensitive_permission_count} sensitive permission(s) requested',
  ),
  Rule(
    'M5',
    RiskLevel.MEDIUM,
    lambda v, p: v.exported_unprotected_count >= 1,
    lambda v, p: f'{v.exported_unprotected_count} exported component(s) without a permission',
  ),
)


def build_vector(facts: ManifestFacts, hits: Iterable[SdkHit]) -> IndicatorVector:
  """Reduce manifest facts and SDK hits to the rubric's inputs.

  Only an explicit usesCleartextTraffic="true" or a network security config
  that permits cleartext is strong; an unresolved config is not.
  """
  hits = list(hits)
  tracking_permission = bool(facts.permission_names(PermissionClass.TRACKING_RELEVANT))
  return IndicatorVector(
    cleartext_strong=(
      facts.cleartext_traffic is CleartextSetting.EXPLICIT_TRUE
      or facts.nsc_permits_cleartext is NscCleartext.TRUE
    ),
    backup_enabled=facts.allow_backup is not BackupPolicy.FALSE,
    backup_explicit=facts.allow_backup is not BackupPolicy.UNSET,
    tracking_present=bool(hits) or tracking_permission,
    ad_attrib_vendor_count=len({h.vendor for h in hits if h.category in AD_ATTRIBUTION}),
    sensitive_permission_count=len(facts.permission_names(PermissionClass.SENSITIVE)),
    exported_unprotected_count=facts.exported_unprotected_count,
  )


def caveats_for(
  facts: ManifestFacts, coverage: FingerprintCoverage | None = None
) -> tuple[Caveat, ...]:
  """Qualifiers that describe what the assessment could not see."""
  caveats = []
  if facts.nsc_permits_cleartext is NscCleartext.UNRESOLVED:
    caveats.append(Caveat.NSC_UNRESOLVED)
  if facts.allow_backup is BackupPolicy.UNSET:
    caveats.append(Caveat.BACKUP_IMPLICIT)
  if coverage is FingerprintCoverage.MANIFEST_ONLY:
    caveats.append(Caveat.MANIFEST_ONLY_FINGERPRINTS)
  return tuple(caveats)


def assess(
  vector: IndicatorVector,
  policy: RiskPolicy | None = None,
  app_id: str = '',
  caveats: Iterable[Caveat] = (),
) -> RiskAssessment:
  """Label one vector.

  The first tier with a holding rule decides the level; every holding rule of
  that tier is listed. A vector with no indicators is LOW via L1.
  """
  policy = policy or RiskPolicy()
  for level in (RiskLevel.HIGH, RiskLevel.MEDIUM):
    fired = tuple(
      FiredRule(rule_id=rule.rule_id, justification=rule.explain(vector, policy))
      for rule in RULES
      if rule.level is level and rule.holds(vector, policy)
    )
    if fired:
      break
  else:
    level = RiskLevel.LOW
    fired = (FiredRule(rule_id=NO_INDICATORS, justification='No privacy indicators present'),)
  return RiskAssessment(
    app_id=app_id, vector=vector, level=level, fired_rules=fired, caveats=tuple(caveats)
  )


def load_policy(text: str) -> RiskPolicy:
  """Parse `key=value` threshold overrides in dotenv syntax.

  Raises:
    MalformedPolicy: unknown key, a key without a value, or a non-positive value.
  """
  values = dotenv_values(stream=io.StringIO(text), interpolate=False)
  for key, value in values.items():
    if key not in RiskPolicy.model_fields:
      raise MalformedPolicy(f"Unknown policy key '{key}'")
    if value is None:
      raise MalformedPolicy(f"Policy key '{key}' has no value")
  try:
    return RiskPolicy.model_validate(values)
  except ValidationError as e:
    raise MalformedPolicy(f'Invalid policy value: {e.errors()[0]["msg"]}') from e


def resolve_policy(path: str | Path | None = None) -> RiskPolicy:
  """Load the policy from an explicit path, MANIFESTSCOPE_POLICY, or the defaults."""
  path = path or os.getenv('MANIFESTSCOPE_POLICY')
  if not path:
    return RiskPolicy()
  logger.info('Loading risk policy from %s', path)
  return load_policy(Path(path).read_text())


def recommendations(assessment: RiskAssessment) -> tuple[str, ...]:
  """Developer guidance for each indicator family present in the assessment."""
  vector = assessment.vector
  advice = []
  if vector.backup_enabled:
    advice.append('Disable backups by default and exclude sensitive data with backup rules.')
  if vector.cleartext_strong:
    advice.append('Enforce TLS by default and restrict cleartext to scoped domains.')
  if vector.exported_unprotected_count:
    advice.append('Restrict exported components and guard the rest with permissions.')
  if vector.ad_attrib_vendor_count:
    advice.append('Reduce the number of SDKs and audit third-party data flows.')
  if vector.tracking_present:
    advice.append('Disclose tracking clearly and minimize SDK dependencies.')
  if vector.sensitive_permission_count:
    advice.append('Request sensitive permissions only where a feature needs them.')
  return tuple(advice)
