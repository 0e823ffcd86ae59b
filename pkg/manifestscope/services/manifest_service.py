"""Manifest fact extraction.

Turns a decoded AndroidManifest.xml into ManifestFacts: permissions, backup
and network configuration, and component exposure. A referenced network
security config is looked up in the archive by conventional path.
"""

import logging
import re
from functools import lru_cache
from importlib import resources

from lxml import etree

from manifestscope.errors import (
  MalformedPermissionTable,
  ManifestScopeError,
  NotAManifest,
  NotBinaryXml,
)
from manifestscope.models.archive_models import ApkArchive
from manifestscope.models.axml_models import AxmlDocument, AxmlElement, TypedValue, ValueKind
from manifestscope.models.manifest_models import (
  BackupPolicy,
  CleartextSetting,
  ComponentKind,
  ComponentRecord,
  ExportedSource,
  ManifestFacts,
  NscCleartext,
  PermissionClass,
  PermissionRecord,
)
from manifestscope.services.archive_service import read_entry
from manifestscope.services.axml_service import decode_axml, get_android_attr, get_attr

logger = logging.getLogger(__name__)

ACTION_MAIN = 'android.intent.action.MAIN'
ACTION_VIEW = 'android.intent.action.VIEW'
ACTION_INSTALL_REFERRER = 'com.android.vending.INSTALL_REFERRER'
CATEGORY_LAUNCHER = (
  'android.intent.category.LAUNCHER',
  'android.intent.category.LEANBACK_LAUNCHER',
)
CATEGORY_BROWSABLE = 'android.intent.category.BROWSABLE'

COMPONENT_TAGS = {
  'activity': ComponentKind.ACTIVITY,
  'activity-alias': ComponentKind.ACTIVITY,
  'service': ComponentKind.SERVICE,
  'receiver': ComponentKind.RECEIVER,
  'provider': ComponentKind.PROVIDER,
}
PERMISSION_TAGS = ('uses-permission', 'uses-permission-sdk-23')

# Exported must be explicit for filtered components from this target SDK on.
EXPLICIT_EXPORT_SDK = 31
# Cleartext defaults to blocked from this target SDK on.
CLEARTEXT_BLOCKED_SDK = 28

NSC_ROOT = 'network-security-config'
NSC_SCOPES = ('base-config', 'domain-config')
NSC_CONVENTIONAL_PATHS = (
  'res/xml/network_security_config.xml',
  'res/xml/network_security.xml',
  'res/xml/network_config.xml',
  'res/xml/network_security_configuration.xml',
  'res/xml/nsc.xml',
)
NSC_SIBLING = re.compile(r'^res/xml(?:-[^/]+)?/[^/]*network[^/]*\.xml$')
XML_REFERENCE = re.compile(r'^@xml/([\w.]+)$')

PermissionTable = dict[str, PermissionClass]


def load_permission_table(text: str) -> PermissionTable:
  """Parse the `<permission-name> <class>` classification file.

  Raises:
    MalformedPermissionTable: wrong field count, unknown class, or a name
      listed twice.
  """
  table: PermissionTable = {}
  for line_no, line in enumerate(text.splitlines(), 1):
    line = line.split('#', 1)[0].strip()
    if not line:
      continue
    fields = line.split()
    if len(fields) != 2:
      raise MalformedPermissionTable(f'Line {line_no}: expected "<permission> <class>"')
    name, label = fields
    try:
      classification = PermissionClass(label)
    except ValueError as e:
      raise MalformedPermissionTable(f"Line {line_no}: unknown class '{label}'") from e
    if name in table:
      raise MalformedPermissionTable(f"Line {line_no}: '{name}' is already classified")
    table[name] = classification
  return table


@lru_cache(maxsize=1)
def default_permission_table() -> PermissionTable:
  """The bundled classification table."""
  text = resources.files('manifestscope.data').joinpath('permission_classes.txt').read_text()
  return load_permission_table(text)


def classify_permission(name: str, table: PermissionTable | None = None) -> PermissionClass:
  """Look a permission up in the classification table; unlisted is unknown."""
  if table is None:
    table = default_permission_table()
  return table.get(name, PermissionClass.UNKNOWN)


def resolve_exported(
  explicit: bool | None, has_intent_filter: bool, target_sdk: int | None
) -> tuple[bool, ExportedSource]:
  """Effective exported state under the platform default rule.

  An explicit attribute wins. Without one, a filtered component is exported
  below target SDK 31; from 31 on such a manifest is rejected by the
  platform, so it is recorded as not exported (callers add a lint warning).
  """
  if explicit is not None:
    return explicit, ExportedSource.EXPLICIT
  if has_intent_filter and (target_sdk is None or target_sdk < EXPLICIT_EXPORT_SDK):
    return True, ExportedSource.IMPLIED_BY_INTENT_FILTER
  return False, ExportedSource.DEFAULT


def resolve_class_name(package_id: str, name: str) -> str:
  """Expand `.Foo` and bare `Foo` against the package id."""
  if name.startswith('.'):
    return f'{package_id}{name}'
  if '.' not in name and package_id:
    return f'{package_id}.{name}'
  return name


def _android_str(elem: AxmlElement, name: str) -> str | None:
  value = get_android_attr(elem, name)
  return value.as_str() if value is not None else None


def _android_bool(elem: AxmlElement | None, name: str) -> bool | None:
  if elem is None:
    return None
  value = get_android_attr(elem, name)
  return value.as_bool() if value is not None else None


def _android_int(elem: AxmlElement | None, name: str) -> int | None:
  if elem is None:
    return None
  value = get_android_attr(elem, name)
  return value.as_int() if value is not None else None


def _first_child(elem: AxmlElement, name: str) -> AxmlElement | None:
  matches = elem.children_named(name)
  return matches[0] if matches else None


def _permissions(root: AxmlElement, table: PermissionTable | None) -> tuple[PermissionRecord, ...]:
  records: dict[str, PermissionRecord] = {}
  for child in root.children:
    if child.name not in PERMISSION_TAGS:
      continue
    name = _android_str(child, 'name')
    if name and name not in records:
      records[name] = PermissionRecord(name=name, classification=classify_permission(name, table))
  return tuple(records.values())


def _backup_policy(application: AxmlElement | None) -> BackupPolicy:
  value = _android_bool(application, 'allowBackup')
  if value is None:
    return BackupPolicy.UNSET
  return BackupPolicy.TRUE if value else BackupPolicy.FALSE


def _cleartext_setting(application: AxmlElement | None) -> CleartextSetting:
  value = _android_bool(application, 'usesCleartextTraffic')
  if value is None:
    return CleartextSetting.DEFAULT
  return CleartextSetting.EXPLICIT_TRUE if value else CleartextSetting.EXPLICIT_FALSE


def _is_protected(
  elem: AxmlElement, kind: ComponentKind, application_permission: str | None
) -> bool:
  if _android_str(elem, 'permission'):
    return True
  # A provider is guarded only when both directions are.
  if (
    kind is ComponentKind.PROVIDER
    and _android_str(elem, 'readPermission')
    and _android_str(elem, 'writePermission')
  ):
    return True
  return bool(application_permission)


def _component(
  elem: AxmlElement,
  kind: ComponentKind,
  facts_context: tuple[str, int | None, str | None],
  warnings: list[str],
) -> ComponentRecord:
  package_id, target_sdk, application_permission = facts_context
  name = resolve_class_name(package_id, _android_str(elem, 'name') or '')

  actions: list[str] = []
  schemes: list[str] = []
  hosts: list[str] = []
  filters = elem.children_named('intent-filter')
  deep_link = launcher = install_referrer = False
  for intent_filter in filters:
    filter_actions = [
      _android_str(a, 'name') or '' for a in intent_filter.children_named('action')
    ]
    categories = {_android_str(c, 'name') for c in intent_filter.children_named('category')}
    filter_schemes = []
    for data in intent_filter.children_named('data'):
      scheme = _android_str(data, 'scheme')
      if scheme:
        filter_schemes.append(scheme)
      host = _android_str(data, 'host')
      if host and host not in hosts:
        hosts.append(host)
    actions.extend(a for a in filter_actions if a and a not in actions)
    schemes.extend(s for s in filter_schemes if s not in schemes)
    if ACTION_VIEW in filter_actions and CATEGORY_BROWSABLE in categories and filter_schemes:
      deep_link = True
    if ACTION_MAIN in filter_actions and categories.intersection(CATEGORY_LAUNCHER):
      launcher = True
    if ACTION_INSTALL_REFERRER in filter_actions:
      install_referrer = True

  explicit = None
  exported_value = get_android_attr(elem, 'exported')
  if exported_value is not None:
    explicit = exported_value.as_bool()
    if explicit is None:
      # Unresolvable reference: count it as exported.
      warnings.append(
        f'{name}: android:exported={exported_value.display()} is not a literal; '
        'treated as exported'
      )
      explicit = True
  exported, source = resolve_exported(explicit, bool(filters), target_sdk)
  if (
    filters
    and exported_value is None
    and target_sdk is not None
    and target_sdk >= EXPLICIT_EXPORT_SDK
  ):
    warnings.append(
      f'{name}: has an intent filter but no android:exported while targeting SDK {target_sdk}'
    )

  return ComponentRecord(
    kind=kind,
    name=name,
    exported_effective=exported,
    exported_source=source,
    has_intent_filter=bool(filters),
    protected_by_permission=_is_protected(elem, kind, application_permission),
    deep_link=deep_link,
    install_referrer=install_referrer,
    launcher=launcher,
    intent_actions=tuple(actions),
    deep_link_schemes=tuple(schemes) if deep_link else (),
    deep_link_hosts=tuple(hosts) if deep_link else (),
  )


def _metadata(application: AxmlElement | None) -> tuple[tuple[str, str], ...]:
  if application is None:
    return ()
  pairs = []
  for elem in application.iter():
    if elem.name != 'meta-data':
      continue
    name = _android_str(elem, 'name')
    if not name:
      continue
    value = get_android_attr(elem, 'value') or get_android_attr(elem, 'resource')
    pairs.append((name, value.as_str() if value is not None else ''))
  return tuple(pairs)


def _nsc_candidates(archive: ApkArchive, reference: TypedValue) -> list[str]:
  names: list[str] = []
  if reference.kind is ValueKind.STRING and reference.string:
    m = XML_REFERENCE.match(reference.string)
    if m:
      names.append(f'res/xml/{m.group(1)}.xml')
    elif reference.string.startswith('res/'):
      names.append(reference.string)
  names.extend(NSC_CONVENTIONAL_PATHS)
  names.extend(sorted(n for n in archive.names() if NSC_SIBLING.match(n)))
  ordered = list(dict.fromkeys(names))
  return [n for n in ordered if n in archive]


def _plain_nsc_flags(data: bytes) -> list[tuple[str, bool | None]] | None:
  try:
    root = etree.fromstring(data)
  except etree.XMLSyntaxError:
    return None
  if etree.QName(root).localname != NSC_ROOT:
    return None
  flags = []
  for elem in root.iter(etree.Element):
    scope = etree.QName(elem).localname
    if scope in NSC_SCOPES:
      raw = (elem.get('cleartextTrafficPermitted') or '').strip().lower()
      flags.append((scope, {'true': True, 'false': False}.get(raw)))
  return flags


def _nsc_flags(data: bytes) -> list[tuple[str, bool | None]] | None:
  """(scope element, cleartextTrafficPermitted) pairs, or None if not a config.

  Compiled configs go through the AXML decoder; a plain-text XML file (some
  build tools leave one in place) is parsed with lxml.
  """
  try:
    doc = decode_axml(data)
  except NotBinaryXml:
    return _plain_nsc_flags(data)
  if doc.root.name != NSC_ROOT:
    return None
  flags = []
  for elem in doc.root.iter():
    if elem.name in NSC_SCOPES:
      value = get_attr(elem, None, 'cleartextTrafficPermitted')
      flags.append((elem.name, value.as_bool() if value is not None else None))
  return flags


def resolve_network_security_config(
  archive: ApkArchive, reference: TypedValue, warnings: list[str]
) -> tuple[NscCleartext, str | None, tuple[str, ...]]:
  """Look up the referenced config and read its cleartext flags.

  Returns:
    (verdict, archive path read, scopes permitting cleartext). The verdict is
    UNRESOLVED when no candidate could be located and decoded.
  """
  for name in _nsc_candidates(archive, reference):
    try:
      flags = _nsc_flags(read_entry(archive, name))
    except ManifestScopeError as e:
      warnings.append(f'{name}: could not decode network security config ({e})')
      continue
    if flags is None:
      continue
    scopes = tuple(dict.fromkeys(scope for scope, permitted in flags if permitted))
    verdict = NscCleartext.TRUE if scopes else NscCleartext.FALSE
    return verdict, name, scopes
  warnings.append(
    f'Network security config {reference.display()} could not be located in the archive'
  )
  return NscCleartext.UNRESOLVED, None, ()


def extract_facts(
  doc: AxmlDocument,
  archive: ApkArchive | None = None,
  table: PermissionTable | None = None,
) -> ManifestFacts:
  """Build the full indicator set from a decoded manifest.

  Args:
    doc: decoded AndroidManifest.xml.
    archive: the APK, used to read a referenced network security config.
      Without it a referenced config stays unresolved.
    table: permission classification table; the bundled one by default.

  Raises:
    NotAManifest: the root element is not `manifest`.
  """
  root = doc.root
  if root.name != 'manifest':
    raise NotAManifest(f"Root element is <{root.name}>, expected <manifest>")

  warnings: list[str] = list(doc.warnings)
  package_value = get_attr(root, None, 'package')
  package_id = package_value.as_str() if package_value is not None else ''
  if not package_id:
    warnings.append('Manifest declares no package id')

  uses_sdk = _first_child(root, 'uses-sdk')
  target_sdk = _android_int(uses_sdk, 'targetSdkVersion')
  application = _first_child(root, 'application')

  nsc_value = None
  if application is not None:
    nsc_value = get_android_attr(application, 'networkSecurityConfig')
  manifest_nsc = get_android_attr(root, 'networkSecurityConfig')
  nsc_value = nsc_value or manifest_nsc
  nsc_verdict, nsc_path, nsc_scopes = NscCleartext.NONE, None, ()
  if nsc_value is not None:
    if archive is None:
      nsc_verdict = NscCleartext.UNRESOLVED
    else:
      nsc_verdict, nsc_path, nsc_scopes = resolve_network_security_config(
        archive, nsc_value, warnings
      )

  components: list[ComponentRecord] = []
  if application is not None:
    context = (package_id, target_sdk, _android_str(application, 'permission'))
    for child in application.children:
      kind = COMPONENT_TAGS.get(child.name)
      if kind is not None:
        components.append(_component(child, kind, context, warnings))

  full_backup = (
    get_android_attr(application, 'fullBackupContent') if application is not None else None
  )
  cleartext = _cleartext_setting(application)
  if cleartext is CleartextSetting.DEFAULT:
    logger.debug(
      '%s: usesCleartextTraffic absent, platform default %s',
      package_id,
      'permits' if target_sdk is None or target_sdk < CLEARTEXT_BLOCKED_SDK else 'blocks',
    )

  return ManifestFacts(
    package_id=package_id,
    version_name=_android_str(root, 'versionName'),
    version_code=_android_int(root, 'versionCode'),
    min_sdk=_android_int(uses_sdk, 'minSdkVersion'),
    target_sdk=target_sdk,
    debuggable=bool(_android_bool(application, 'debuggable')),
    permissions=_permissions(root, table),
    allow_backup=_backup_policy(application),
    backup_agent_declared=application is not None
    and bool(_android_str(application, 'backupAgent')),
    restore_any_version=bool(_android_bool(application, 'restoreAnyVersion')),
    full_backup_content_declared=full_backup is not None and full_backup.as_bool() is not False,
    data_extraction_rules_declared=bool(
      application is not None
      and get_android_attr(application, 'dataExtractionRules') is not None
    ),
    cleartext_traffic=cleartext,
    nsc_reference=nsc_value is not None,
    nsc_on_manifest=manifest_nsc is not None,
    nsc_resource=nsc_value.display() if nsc_value is not None else None,
    nsc_source_path=nsc_path,
    nsc_permits_cleartext=nsc_verdict,
    nsc_cleartext_scopes=nsc_scopes,
    components=tuple(components),
    metadata_keys=_metadata(application),
    warnings=tuple(warnings),
  )
