"""Per-app and cohort report models."""

from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, TypeAdapter

from manifestscope.models.fingerprint_models import FingerprintCoverage, SdkHit
from manifestscope.models.manifest_models import ManifestFacts
from manifestscope.models.risk_models import (
  Caveat,
  FiredRule,
  IndicatorVector,
  RiskAssessment,
  RiskLevel,
)

UNLABELED = 'unlabeled'


class CohortLabeling(BaseModel):
  """app_id -> cohort label."""

  model_config = ConfigDict(frozen=True)

  assignments: dict[str, str] = Field(default_factory=dict)

  def cohort_of(self, app_id: str) -> str:
    """The app's cohort, or the implicit unlabeled cohort."""
    return self.assignments.get(app_id, UNLABELED)


class RiskCounts(BaseModel):
  """Apps per risk level."""

  high: NonNegativeInt = 0
  medium: NonNegativeInt = 0
  low: NonNegativeInt = 0

  @property
  def total(self) -> int:
    """Apps counted."""
    return self.high + self.medium + self.low


class CohortStats(BaseModel):
  """Aggregates over one cohort (or over all apps)."""

  app_count: NonNegativeInt = 0
  counts: RiskCounts = Field(default_factory=RiskCounts)
  permission_prevalence: dict[str, int] = Field(default_factory=dict)
  indicator_prevalence: dict[str, int] = Field(default_factory=dict)
  sdk_category_prevalence: dict[str, int] = Field(default_factory=dict)


class CohortReport(BaseModel):
  """Comparative summary across labeled cohorts."""

  cohorts: dict[str, CohortStats] = Field(default_factory=dict)
  totals: CohortStats = Field(default_factory=CohortStats)
  analyzer_version: str
  signature_db_version: str


class RiskSummary(BaseModel):
  """The `risk` block of a per-app report."""

  model_config = ConfigDict(frozen=True)

  level: RiskLevel
  fired_rules: tuple[FiredRule, ...] = ()
  caveats: tuple[Caveat, ...] = ()


class AppReport(BaseModel):
  """Everything known about one analyzed APK."""

  model_config = ConfigDict(frozen=True)

  status: Literal['ok'] = 'ok'
  app_id: str
  package: str
  source: str = Field(..., description='Input path as given on the command line')
  facts: ManifestFacts
  sdk_hits: tuple[SdkHit, ...] = ()
  fingerprint_coverage: FingerprintCoverage = FingerprintCoverage.MANIFEST_ONLY
  indicator_vector: IndicatorVector
  risk: RiskSummary
  recommendations: tuple[str, ...] = ()
  warnings: tuple[str, ...] = ()
  analyzer_version: str
  signature_db_version: str

  def assessment(self) -> RiskAssessment:
    """Rebuild the RiskAssessment this report was written from."""
    return RiskAssessment(
      app_id=self.app_id,
      vector=self.indicator_vector,
      level=self.risk.level,
      fired_rules=self.risk.fired_rules,
      caveats=self.risk.caveats,
    )


class AppError(BaseModel):
  """An APK that could not be analyzed."""

  model_config = ConfigDict(frozen=True)

  status: Literal['error'] = 'error'
  app_id: str
  source: str
  error_type: str
  message: str


AppResult = Annotated[AppReport | AppError, Field(discriminator='status')]
app_result_adapter: TypeAdapter[AppReport | AppError] = TypeAdapter(AppResult)
