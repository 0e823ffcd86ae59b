import pytest

from manifestscope.errors import MalformedPermissionTable, NotAManifest
from manifestscope.models.manifest_models import (
  BackupPolicy,
  CleartextSetting,
  ComponentKind,
  ExportedSource,
  NscCleartext,
  PermissionClass,
)
from manifestscope.services.axml_service import decode_axml
from manifestscope.services.manifest_service import (
  classify_permission,
  extract_facts,
  load_permission_table,
  resolve_class_name,
  resolve_exported,
)
from scripts.fixtures.apk_builder import ApkSpec
from scripts.fixtures.axml_writer import Ref, XmlNode, compile_xml
from scripts.fixtures.corpus import (
  AD_ID,
  INSTALL_REFERRER,
  INTERNET,
  NSC_PATH,
  NSC_REF,
  RECORD_AUDIO,
  appsflyer_receiver,
  backup_agent_unresolved_nsc,
  cohort_corpus,
  compiled_nsc,
  deep_link_upload_service,
  explicit_cleartext_with_nsc,
  intent_filter,
  manifest,
  minimal_no_backup,
  node,
)


def _facts(root, archive=None):
  return extract_facts(decode_axml(compile_xml(root)), archive)


def _component(facts, suffix):
  (found,) = [c for c in facts.components if c.name.endswith(suffix)]
  return found


def test_backup_disabled_app(facts_of):
  facts = facts_of(minimal_no_backup())
  assert facts.package_id == 'com.fixture.general.g09'
  assert facts.allow_backup is BackupPolicy.FALSE
  assert facts.cleartext_traffic is CleartextSetting.DEFAULT
  assert facts.nsc_permits_cleartext is NscCleartext.NONE
  assert facts.target_sdk == 34 and facts.min_sdk == 21
  assert facts.version_name == '1.0' and facts.version_code == 1
  (launcher,) = facts.components
  assert launcher.launcher and launcher.exported_effective
  assert facts.exported_non_launcher_count == 0
  assert facts.permission_names() == [
    'android.permission.INTERNET',
    'android.permission.ACCESS_NETWORK_STATE',
  ]


def test_backup_agent_with_unresolved_config(facts_of):
  facts = facts_of(backup_agent_unresolved_nsc())
  assert facts.allow_backup is BackupPolicy.UNSET
  assert facts.backup_agent_declared
  assert facts.restore_any_version
  assert facts.nsc_reference
  assert facts.nsc_permits_cleartext is NscCleartext.UNRESOLVED
  assert facts.nsc_source_path is None
  assert facts.nsc_resource == '@0x7f150001'
  assert any('could not be located' in w for w in facts.warnings)
  assert ('com.google.firebase.analytics.APPLICATION_ID', 'fixture-value') in facts.metadata_keys


def test_explicit_cleartext_with_config_on_manifest(facts_of):
  facts = facts_of(explicit_cleartext_with_nsc())
  assert facts.cleartext_traffic is CleartextSetting.EXPLICIT_TRUE
  assert facts.nsc_on_manifest
  assert facts.nsc_permits_cleartext is NscCleartext.TRUE
  assert facts.nsc_source_path == NSC_PATH
  assert facts.nsc_cleartext_scopes == ('domain-config',)


def test_deep_link_and_unprotected_service(facts_of):
  facts = facts_of(deep_link_upload_service())
  deep_link = _component(facts, '.DeepLinkActivity')
  assert deep_link.name == 'com.fixture.general.g03.DeepLinkActivity'
  assert deep_link.kind is ComponentKind.ACTIVITY
  assert deep_link.deep_link and deep_link.exported_effective
  assert deep_link.deep_link_schemes == ('fixturegame',)
  assert deep_link.deep_link_hosts == ('open',)
  assert not deep_link.launcher

  upload = _component(facts, '.UploadService')
  assert upload.kind is ComponentKind.SERVICE
  assert upload.exported_effective and not upload.protected_by_permission
  assert upload.exported_source is ExportedSource.EXPLICIT
  assert facts.exported_unprotected_count == 2
  assert facts.exported_count(ComponentKind.SERVICE) == 1
  assert facts.allow_backup is BackupPolicy.TRUE


def test_config_without_archive_is_unresolved():
  facts = _facts(explicit_cleartext_with_nsc().manifest)
  assert facts.nsc_permits_cleartext is NscCleartext.UNRESOLVED


def test_config_read_from_plain_text_sibling(facts_of):
  (app,) = [a for a in cohort_corpus() if a.slug == 'general-04-nsc-ad-stack']
  facts = facts_of(app.spec)
  assert facts.nsc_permits_cleartext is NscCleartext.TRUE
  assert facts.nsc_source_path == 'res/xml/app_network_rules.xml'
  assert facts.nsc_cleartext_scopes == ('base-config',)


def test_config_that_blocks_cleartext(facts_of):
  spec = ApkSpec(
    manifest('com.example.safe', application={'networkSecurityConfig': NSC_REF}),
    files={NSC_PATH: compiled_nsc(base_cleartext=False)},
  )
  facts = facts_of(spec)
  assert facts.nsc_permits_cleartext is NscCleartext.FALSE
  assert facts.nsc_cleartext_scopes == ()


def test_undecodable_config_is_a_warning(facts_of):
  spec = ApkSpec(
    manifest('com.example.broken', application={'networkSecurityConfig': NSC_REF}),
    files={NSC_PATH: compiled_nsc(base_cleartext=True)[:-12]},
  )
  facts = facts_of(spec)
  assert facts.nsc_permits_cleartext is NscCleartext.UNRESOLVED
  assert any(NSC_PATH in w for w in facts.warnings)


def test_root_must_be_manifest():
  with pytest.raises(NotAManifest):
    _facts(XmlNode('network-security-config'))


@pytest.mark.parametrize(
  ('explicit', 'has_filter', 'target', 'expected'),
  [
    (True, False, 34, (True, ExportedSource.EXPLICIT)),
    (False, True, 30, (False, ExportedSource.EXPLICIT)),
    (None, True, 30, (True, ExportedSource.IMPLIED_BY_INTENT_FILTER)),
    (None, True, None, (True, ExportedSource.IMPLIED_BY_INTENT_FILTER)),
    (None, True, 31, (False, ExportedSource.DEFAULT)),
    (None, False, 30, (False, ExportedSource.DEFAULT)),
  ],
)
def test_resolve_exported(explicit, has_filter, target, expected):
  assert resolve_exported(explicit, has_filter, target) == expected


@pytest.mark.parametrize('target', [30, 33])
def test_filtered_receiver_without_exported(target):
  receiver = node('receiver', intent_filter([INSTALL_REFERRER]), android_name='.Referrer')
  facts = _facts(manifest('com.example.app', components=[receiver], target_sdk=target))
  record = _component(facts, '.Referrer')
  assert record.install_referrer
  assert record.exported_effective is (target < 31)
  lint = [w for w in facts.warnings if 'no android:exported' in w]
  assert len(lint) == (0 if target < 31 else 1)


def test_permission_protection():
  components = [
    node(
      'provider',
      android_name='.Both',
      android_exported=True,
      android_readPermission='com.example.READ',
      android_writePermission='com.example.WRITE',
    ),
    node(
      'provider',
      android_name='.ReadOnly',
      android_exported=True,
      android_readPermission='com.example.READ',
    ),
    node('service', android_name='.Guarded', android_exported=True, android_permission='x.Y'),
  ]
  facts = _facts(manifest('com.example.app', components=components))
  assert _component(facts, '.Both').protected_by_permission
  assert not _component(facts, '.ReadOnly').protected_by_permission
  assert _component(facts, '.Guarded').protected_by_permission
  assert facts.exported_unprotected_count == 1


def test_application_permission_protects_components():
  facts = _facts(
    manifest(
      'com.example.app',
      application={'permission': 'com.example.SIGNED'},
      components=[node('service', android_name='.Sync', android_exported=True)],
    )
  )
  assert _component(facts, '.Sync').protected_by_permission
  assert facts.exported_unprotected_count == 0


def test_activity_alias_and_launcher():
  alias = node(
    'activity-alias',
    intent_filter(
      ['android.intent.action.MAIN'], ['android.intent.category.LEANBACK_LAUNCHER']
    ),
    android_name='.TvLauncher',
    android_exported=True,
  )
  facts = _facts(manifest('com.example.app', components=[alias, appsflyer_receiver()]))
  tv = _component(facts, '.TvLauncher')
  assert tv.kind is ComponentKind.ACTIVITY and tv.launcher
  receiver = _component(facts, 'SingleInstallBroadcastReceiver')
  assert receiver.name == 'com.appsflyer.SingleInstallBroadcastReceiver'
  assert receiver.kind is ComponentKind.RECEIVER
  assert facts.exported_non_launcher_count == 1


def test_permissions_are_classified_and_deduplicated():
  root = manifest('com.example.app', permissions=[INTERNET, RECORD_AUDIO, AD_ID, INTERNET])
  root.children.insert(1, node('uses-permission-sdk-23', android_name='com.example.CUSTOM'))
  facts = _facts(root)
  assert [(p.name, p.classification) for p in facts.permissions] == [
    ('com.example.CUSTOM', PermissionClass.UNKNOWN),
    (INTERNET, PermissionClass.NORMAL),
    (RECORD_AUDIO, PermissionClass.SENSITIVE),
    (AD_ID, PermissionClass.TRACKING_RELEVANT),
  ]


def test_backup_related_declarations():
  (app,) = [a for a in cohort_corpus() if a.slug == 'general-05-backup-rules']
  facts = _facts(app.spec.manifest)
  assert facts.full_backup_content_declared
  assert facts.data_extraction_rules_declared
  assert not facts.debuggable


def test_classify_permission_with_custom_table():
  table = load_permission_table('# comment\nfoo.BAR sensitive\n\nfoo.BAZ normal  # trailing\n')
  assert classify_permission('foo.BAR', table) is PermissionClass.SENSITIVE
  assert classify_permission('foo.BAZ', table) is PermissionClass.NORMAL
  assert classify_permission(INTERNET, table) is PermissionClass.UNKNOWN
  assert classify_permission(INTERNET) is PermissionClass.NORMAL


@pytest.mark.parametrize(
  'text',
  ['foo.BAR', 'foo.BAR sensitive extra', 'foo.BAR dangerous', 'a normal\na sensitive'],
)
def test_malformed_permission_table(text):
  with pytest.raises(MalformedPermissionTable):
    load_permission_table(text)


@pytest.mark.parametrize(
  ('name', 'expected'),
  [
    ('.Main', 'com.example.app.Main'),
    ('Main', 'com.example.app.Main'),
    ('com.other.Main', 'com.other.Main'),
  ],
)
def test_resolve_class_name(name, expected):
  assert resolve_class_name('com.example.app', name) == expected


@pytest.mark.parametrize('with_filter', [False, True])
def test_exported_reference_counts_as_explicit(with_filter):
  children = [intent_filter(['com.example.SYNC'])] if with_filter else []
  service = node('service', *children, android_name='.Sync', android_exported=Ref(0x7F050001))
  facts = _facts(manifest('com.example.app', components=[service]))
  record = _component(facts, '.Sync')
  assert record.exported_source is ExportedSource.EXPLICIT
  assert record.exported_effective
  assert facts.exported_unprotected_count == 1
  assert any('.Sync: android:exported=@0x7f050001' in w for w in facts.warnings)
  assert not any('no android:exported' in w for w in facts.warnings)
