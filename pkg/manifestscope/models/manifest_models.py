"""Manifest fact models."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class PermissionClass(str, Enum):
  """Permission classification buckets."""

  NORMAL = 'normal'
  SENSITIVE = 'sensitive'
  TRACKING_RELEVANT = 'tracking-relevant'
  UNKNOWN = 'unknown'


class ComponentKind(str, Enum):
  """Manifest component element kinds."""

  ACTIVITY = 'activity'
  SERVICE = 'service'
  RECEIVER = 'receiver'
  PROVIDER = 'provider'


class ExportedSource(str, Enum):
  """Where a component's effective exported state came from."""

  EXPLICIT = 'explicit'
  IMPLIED_BY_INTENT_FILTER = 'implied-by-intent-filter'
  DEFAULT = 'default'


class BackupPolicy(str, Enum):
  """android:allowBackup as declared."""

  TRUE = 'true'
  FALSE = 'false'
  UNSET = 'default-unset'


class CleartextSetting(str, Enum):
  """android:usesCleartextTraffic as declared."""

  EXPLICIT_TRUE = 'explicit-true'
  EXPLICIT_FALSE = 'explicit-false'
  DEFAULT = 'default'


class NscCleartext(str, Enum):
  """Cleartext verdict read from the network security config."""

  TRUE = 'true'
  FALSE = 'false'
  UNRESOLVED = 'unresolved'
  NONE = 'none'


class PermissionRecord(BaseModel):
  """A requested permission and its class."""

  model_config = ConfigDict(frozen=True)

  name: str
  classification: PermissionClass


class ComponentRecord(BaseModel):
  """Exposure facts for one activity, service, receiver or provider."""

  model_config = ConfigDict(frozen=True)

  kind: ComponentKind
  name: str
  exported_effective: bool
  exported_source: ExportedSource
  has_intent_filter: bool = False
  protected_by_permission: bool = False
  deep_link: bool = False
  install_referrer: bool = False
  launcher: bool = False
  intent_actions: tuple[str, ...] = ()
  deep_link_schemes: tuple[str, ...] = ()
  deep_link_hosts: tuple[str, ...] = ()


class ManifestFacts(BaseModel):
  """Every privacy indicator extracted from one manifest."""

  model_config = ConfigDict(frozen=True)

  package_id: str
  version_name: str | None = None
  version_code: int | None = None
  min_sdk: int | None = None
  target_sdk: int | None = None
  debuggable: bool = False
  permissions: tuple[PermissionRecord, ...] = ()
  allow_backup: BackupPolicy = BackupPolicy.UNSET
  backup_agent_declared: bool = False
  restore_any_version: bool = False
  full_backup_content_declared: bool = False
  data_extraction_rules_declared: bool = False
  cleartext_traffic: CleartextSetting = CleartextSetting.DEFAULT
  nsc_reference: bool = False
  nsc_on_manifest: bool = Field(False, description='Config referenced on <manifest> itself')
  nsc_resource: str | None = Field(None, description='Reference as written, e.g. @0x7f150001')
  nsc_source_path: str | None = Field(None, description='Archive path the config was read from')
  nsc_permits_cleartext: NscCleartext = NscCleartext.NONE
  nsc_cleartext_scopes: tuple[str, ...] = Field(
    (), description='Config elements permitting cleartext: base-config and/or domain-config'
  )
  components: tuple[ComponentRecord, ...] = ()
  metadata_keys: tuple[tuple[str, str], ...] = ()
  warnings: tuple[str, ...] = ()

  @property
  def cleartext_permitted_by_default(self) -> bool:
    """Platform default when usesCleartextTraffic is absent."""
    return self.target_sdk is None or self.target_sdk < 28

  @property
  def exported_components(self) -> list[ComponentRecord]:
    """Components that other apps can start or bind."""
    return [c for c in self.components if c.exported_effective]

  @property
  def exported_non_launcher_count(self) -> int:
    """Exported components other than the launcher entry point."""
    return sum(1 for c in self.components if c.exported_effective and not c.launcher)

  @property
  def exported_unprotected_count(self) -> int:
    """Exported, non-launcher components without a guarding permission."""
    return sum(
      1
      for c in self.components
      if c.exported_effective and not c.launcher and not c.protected_by_permission
    )

  def exported_count(self, kind: ComponentKind) -> int:
    """Exported non-launcher components of one kind."""
    return sum(
      1 for c in self.components if c.kind is kind and c.exported_effective and not c.launcher
    )

  def permission_names(self, classification: PermissionClass | None = None) -> list[str]:
    """Requested permission names, optionally filtered by class."""
    return [
      p.name
      for p in self.permissions
      if classification is None or p.classification is classification
    ]
