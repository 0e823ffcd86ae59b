"""Risk rubric models."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt


class RiskLevel(str, Enum):
  """Qualitative privacy-risk label."""

  LOW = 'low'
  MEDIUM = 'medium'
  HIGH = 'high'

  @property
  def rank(self) -> int:
    """Ordering key: low < medium < high."""
    return ('low', 'medium', 'high').index(self.value)


class Caveat(str, Enum):
  """Qualifiers attached to an assessment that did not change its level."""

  NSC_UNRESOLVED = 'nsc-unresolved'
  BACKUP_IMPLICIT = 'backup-implicit'
  MANIFEST_ONLY_FINGERPRINTS = 'fingerprint-coverage-manifest-only'


class IndicatorVector(BaseModel):
  """The per-app signals the rubric reads."""

  model_config = ConfigDict(frozen=True)

  cleartext_strong: bool = False
  backup_enabled: bool = False
  backup_explicit: bool = False
  tracking_present: bool = False
  ad_attrib_vendor_count: NonNegativeInt = 0
  sensitive_permission_count: NonNegativeInt = 0
  exported_unprotected_count: NonNegativeInt = 0


class FiredRule(BaseModel):
  """A rubric rule that held, with the reason it held."""

  model_config = ConfigDict(frozen=True)

  rule_id: str
  justification: str


class RiskAssessment(BaseModel):
  """Label and audit trail for one app."""

  model_config = ConfigDict(frozen=True)

  app_id: str = ''
  vector: IndicatorVector
  level: RiskLevel
  fired_rules: tuple[FiredRule, ...] = ()
  caveats: tuple[Caveat, ...] = ()

  @property
  def rule_ids(self) -> list[str]:
    """Identifiers of the fired rules, in order."""
    return [rule.rule_id for rule in self.fired_rules]


class RiskPolicy(BaseModel):
  """Rubric thresholds that can be overridden from a policy file."""

  model_config = ConfigDict(frozen=True)

  extensive_vendor_min: PositiveInt = Field(2, description='Ad/attribution vendors for R2')
  strong_cooccur_min: PositiveInt = Field(3, description='Strong indicators for R3')
  exported_strong_min: PositiveInt = Field(
    2, description='Exported components that count as strong'
  )
