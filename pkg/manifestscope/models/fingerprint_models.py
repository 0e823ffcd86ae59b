"""SDK signature and hit models."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class SdkCategory(str, Enum):
  """What a third-party SDK does with app data."""

  ANALYTICS = 'analytics'
  ADVERTISING = 'advertising'
  ATTRIBUTION = 'attribution'


class MatchKind(str, Enum):
  """How a signature pattern is compared to evidence."""

  PACKAGE_PREFIX = 'package-prefix'
  METADATA_KEY = 'metadata-key'
  COMPONENT_CLASS = 'component-class'
  PERMISSION_NAME = 'permission-name'


class EvidenceSource(str, Enum):
  """Where a matched string was found."""

  MANIFEST_METADATA = 'manifest-metadata'
  MANIFEST_COMPONENT = 'manifest-component'
  MANIFEST_PERMISSION = 'manifest-permission'
  DEX_STRING = 'dex-string'


class FingerprintCoverage(str, Enum):
  """Whether DEX class names contributed to fingerprinting."""

  DEX = 'dex'
  MANIFEST_ONLY = 'manifest-only'


class SdkSignature(BaseModel):
  """One line of the signature database."""

  model_config = ConfigDict(frozen=True)

  vendor: str = Field(..., min_length=1)
  category: SdkCategory
  match_kind: MatchKind
  pattern: str = Field(..., min_length=1)


class Evidence(BaseModel):
  """The string a signature matched and where it came from."""

  model_config = ConfigDict(frozen=True)

  source: EvidenceSource
  matched: str
  dex_name: str | None = None


class SdkHit(BaseModel):
  """A signature that matched one app."""

  model_config = ConfigDict(frozen=True)

  signature: SdkSignature
  evidence: Evidence

  @property
  def vendor(self) -> str:
    """Vendor of the matched signature."""
    return self.signature.vendor

  @property
  def category(self) -> SdkCategory:
    """Category of the matched signature."""
    return self.signature.category


class SignatureDatabase(BaseModel):
  """A loaded, validated signature file."""

  model_config = ConfigDict(frozen=True)

  version: str = 'unversioned'
  signatures: tuple[SdkSignature, ...] = ()
