"""Synthetic fixture APKs.

Two groups live here: named apps that mirror well-known manifest patterns
(used by regression tests), and a 21-app two-cohort corpus whose expected
risk distribution is 12 children-oriented apps {5 high, 7 medium, 0 low} and
9 general-audience apps {4 high, 4 medium, 1 low}.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from scripts.fixtures.apk_builder import ApkSpec, build_apk
from scripts.fixtures.axml_writer import Ref, XmlNode, compile_xml

CHILDREN = 'children-oriented'
GENERAL = 'general-audience'

ACTION_MAIN = 'android.intent.action.MAIN'
ACTION_VIEW = 'android.intent.action.VIEW'
CATEGORY_LAUNCHER = 'android.intent.category.LAUNCHER'
CATEGORY_DEFAULT = 'android.intent.category.DEFAULT'
CATEGORY_BROWSABLE = 'android.intent.category.BROWSABLE'
INSTALL_REFERRER = 'com.android.vending.INSTALL_REFERRER'

INTERNET = 'android.permission.INTERNET'
NETWORK_STATE = 'android.permission.ACCESS_NETWORK_STATE'
RECORD_AUDIO = 'android.permission.RECORD_AUDIO'
READ_MEDIA_IMAGES = 'android.permission.READ_MEDIA_IMAGES'
AD_ID = 'com.google.android.gms.permission.AD_ID'

FIREBASE_APP_ID = 'com.google.firebase.analytics.APPLICATION_ID'
ADMOB_APP_ID = 'com.google.android.gms.ads.APPLICATION_ID'
APPSFLYER_RECEIVER = 'com.appsflyer.SingleInstallBroadcastReceiver'

NSC_REF = Ref(0x7F150001)
BACKUP_RULES_REF = Ref(0x7F150002)
EXTRACTION_RULES_REF = Ref(0x7F150003)
NSC_PATH = 'res/xml/network_security_config.xml'

FIREBASE_CLASSES = [
  'Lcom/google/firebase/analytics/FirebaseAnalytics;',
  'Lcom/google/android/gms/measurement/AppMeasurement;',
]
UNITY_ADS_CLASSES = ['Lcom/unity3d/ads/UnityAds;', 'Lcom/unity3d/ads/IUnityAdsListener;']
IRONSOURCE_CLASSES = ['Lcom/ironsource/mediationsdk/IronSource;']
APPSFLYER_CLASSES = ['Lcom/appsflyer/AppsFlyerLib;', 'Lcom/appsflyer/internal/AFa1xSDK;']
ADJUST_CLASSES = ['Lcom/adjust/sdk/Adjust;', 'Lcom/adjust/sdk/AdjustConfig;']
COMMON_STRINGS = ['Ljava/lang/Object;', 'Landroid/app/Activity;', 'V', 'onCreate', '<init>']


def node(tag: str, *children: XmlNode, **attrs: object) -> XmlNode:
  """Element shorthand: `android_name=...` becomes `android:name`."""
  named = {}
  for key, value in attrs.items():
    if key.startswith('android_'):
      key = 'android:' + key.removeprefix('android_')
    named[key] = value
  return XmlNode(tag, named, list(children))


def intent_filter(
  actions: Sequence[str], categories: Sequence[str] = (), data: Sequence[dict] = ()
) -> XmlNode:
  """An <intent-filter> with actions, categories and <data> attribute dicts."""
  return node(
    'intent-filter',
    *[node('action', android_name=a) for a in actions],
    *[node('category', android_name=c) for c in categories],
    *[node('data', **{f'android_{k}': v for k, v in d.items()}) for d in data],
  )


def launcher(name: str = '.MainActivity') -> XmlNode:
  return node(
    'activity',
    intent_filter([ACTION_MAIN], [CATEGORY_LAUNCHER]),
    android_name=name,
    android_exported=True,
  )


def meta(name: str, value: object = 'fixture-value') -> XmlNode:
  return node('meta-data', android_name=name, android_value=value)


def appsflyer_receiver() -> XmlNode:
  return node(
    'receiver',
    intent_filter([INSTALL_REFERRER]),
    android_name=APPSFLYER_RECEIVER,
    android_exported=True,
  )


def manifest(
  package: str,
  *,
  permissions: Sequence[str] = (INTERNET, NETWORK_STATE),
  application: dict | None = None,
  components: Sequence[XmlNode] = (),
  metadata: Sequence[XmlNode] = (),
  manifest_attrs: dict | None = None,
  target_sdk: int = 34,
) -> XmlNode:
  """A manifest with a launcher activity; `application` holds android:* attributes."""
  app_attrs = {f'android:{k}': v for k, v in (application or {}).items()}
  app_attrs.setdefault('android:label', 'Fixture')
  root_attrs = {
    'android:versionCode': 1,
    'android:versionName': '1.0',
    'package': package,
    **{f'android:{k}': v for k, v in (manifest_attrs or {}).items()},
  }
  return XmlNode(
    'manifest',
    root_attrs,
    [
      node('uses-sdk', android_minSdkVersion=21, android_targetSdkVersion=target_sdk),
      *[node('uses-permission', android_name=p) for p in permissions],
      XmlNode('application', app_attrs, [launcher(), *components, *metadata]),
    ],
  )


def nsc_xml(base_cleartext: bool | None = None, domain_cleartext: bool | None = None) -> XmlNode:
  """A <network-security-config> with optional base and domain scopes."""
  root = XmlNode('network-security-config')
  if base_cleartext is not None:
    root.add(XmlNode('base-config', {'cleartextTrafficPermitted': base_cleartext}))
  if domain_cleartext is not None:
    root.add(
      XmlNode(
        'domain-config',
        {'cleartextTrafficPermitted': domain_cleartext},
        [XmlNode('domain', {'includeSubdomains': True})],
      )
    )
  return root


def compiled_nsc(**kwargs: bool | None) -> bytes:
  return compile_xml(nsc_xml(**kwargs))


def dex_with(package: str, *groups: list[str]) -> list[str]:
  own = f'L{package.replace(".", "/")}/MainActivity;'
  strings = [own, *COMMON_STRINGS]
  for group in groups:
    strings.extend(group)
  return strings


@dataclass
class FixtureApp:
  """One corpus APK and the outcome the analyzer should reach."""

  slug: str
  cohort: str
  expected_level: str
  spec: ApkSpec
  expected_rules: tuple[str, ...] = field(default=())

  @property
  def package(self) -> str:
    return self.spec.manifest.attrs['package']

  @property
  def filename(self) -> str:
    return f'{self.slug}.apk'


# Named manifest patterns


def minimal_no_backup() -> ApkSpec:
  """Backups disabled, only normal permissions, launcher only."""
  return ApkSpec(
    manifest('com.fixture.general.g09', application={'allowBackup': False}),
  )


def backup_agent_unresolved_nsc() -> ApkSpec:
  """Custom backup agent with permissive restore; config referenced but not shipped."""
  return ApkSpec(
    manifest(
      'com.fixture.kids.c06',
      application={
        'backupAgent': '.GameBackupAgent',
        'restoreAnyVersion': True,
        'networkSecurityConfig': NSC_REF,
      },
      metadata=[meta(FIREBASE_APP_ID)],
    ),
  )


def explicit_cleartext_with_nsc() -> ApkSpec:
  """Config declared on <manifest> and <application>, cleartext enabled explicitly."""
  return ApkSpec(
    manifest(
      'com.fixture.general.g02',
      application={
        'allowBackup': False,
        'usesCleartextTraffic': True,
        'networkSecurityConfig': NSC_REF,
      },
      manifest_attrs={'networkSecurityConfig': NSC_REF},
      metadata=[meta(FIREBASE_APP_ID)],
    ),
    files={NSC_PATH: compiled_nsc(base_cleartext=False, domain_cleartext=True)},
  )


def deep_link_upload_service() -> ApkSpec:
  """Exported deep-link activity, exported unprotected upload service, backups on."""
  package = 'com.fixture.general.g03'
  deep_link = node(
    'activity',
    intent_filter(
      [ACTION_VIEW],
      [CATEGORY_DEFAULT, CATEGORY_BROWSABLE],
      [{'scheme': 'fixturegame', 'host': 'open'}],
    ),
    android_name='.DeepLinkActivity',
    android_exported=True,
  )
  upload = node('service', android_name='.UploadService', android_exported=True)
  return ApkSpec(
    manifest(package, application={'allowBackup': True}, components=[deep_link, upload]),
    dex=[dex_with(package), ADJUST_CLASSES],
  )


def three_manifest_sdks() -> ApkSpec:
  """Analytics, advertising and attribution declared in the manifest."""
  return ApkSpec(
    manifest(
      'com.fixture.general.g01',
      application={'allowBackup': False},
      components=[appsflyer_receiver()],
      metadata=[meta(FIREBASE_APP_ID), meta(ADMOB_APP_ID, 'ca-app-pub-0000000000000000~0')],
    ),
  )


# Two-cohort corpus


def _children() -> list[FixtureApp]:
  kids = 'com.fixture.kids'
  no_backup = {'allowBackup': False}
  return [
    FixtureApp(
      'children-01-cleartext-firebase',
      CHILDREN,
      'high',
      ApkSpec(
        manifest(
          f'{kids}.c01',
          application={**no_backup, 'usesCleartextTraffic': True},
          metadata=[meta(FIREBASE_APP_ID)],
        )
      ),
      ('R1',),
    ),
    FixtureApp(
      'children-02-admob-appsflyer',
      CHILDREN,
      'high',
      ApkSpec(
        manifest(
          f'{kids}.c02',
          application=no_backup,
          components=[appsflyer_receiver()],
          metadata=[meta(ADMOB_APP_ID, 'ca-app-pub-0000000000000000~1')],
        )
      ),
      ('R2',),
    ),
    FixtureApp(
      'children-03-backup-exported-firebase',
      CHILDREN,
      'high',
      ApkSpec(
        manifest(
          f'{kids}.c03',
          application={'allowBackup': True},
          components=[
            node('activity', android_name='.ShareActivity', android_exported=True),
            node('service', android_name='.SyncService', android_exported=True),
          ],
        ),
        dex=[dex_with(f'{kids}.c03', FIREBASE_CLASSES)],
      ),
      ('R3',),
    ),
    FixtureApp(
      'children-04-nsc-cleartext-unity',
      CHILDREN,
      'high',
      ApkSpec(
        manifest(f'{kids}.c04', application={**no_backup, 'networkSecurityConfig': NSC_REF}),
        dex=[dex_with(f'{kids}.c04', UNITY_ADS_CLASSES)],
        files={NSC_PATH: compiled_nsc(base_cleartext=True)},
      ),
      ('R1',),
    ),
    FixtureApp(
      'children-05-cleartext-appsflyer',
      CHILDREN,
      'high',
      ApkSpec(
        manifest(f'{kids}.c05', application={**no_backup, 'usesCleartextTraffic': True}),
        dex=[dex_with(f'{kids}.c05', APPSFLYER_CLASSES)],
      ),
      ('R1',),
    ),
    FixtureApp(
      'children-06-backup-agent', CHILDREN, 'medium', backup_agent_unresolved_nsc(), ('M1', 'M2')
    ),
    FixtureApp(
      'children-07-firebase',
      CHILDREN,
      'medium',
      ApkSpec(manifest(f'{kids}.c07', application=no_backup, metadata=[meta(FIREBASE_APP_ID)])),
      ('M1',),
    ),
    FixtureApp(
      'children-08-implicit-backup',
      CHILDREN,
      'medium',
      ApkSpec(manifest(f'{kids}.c08')),
      ('M2',),
    ),
    FixtureApp(
      'children-09-explicit-backup',
      CHILDREN,
      'medium',
      ApkSpec(manifest(f'{kids}.c09', application={'allowBackup': True})),
      ('M2',),
    ),
    FixtureApp(
      'children-10-exported-service',
      CHILDREN,
      'medium',
      ApkSpec(
        manifest(
          f'{kids}.c10',
          application=no_backup,
          components=[node('service', android_name='.MusicService', android_exported=True)],
        )
      ),
      ('M5',),
    ),
    FixtureApp(
      'children-11-record-audio',
      CHILDREN,
      'medium',
      ApkSpec(
        manifest(
          f'{kids}.c11', application=no_backup, permissions=[INTERNET, NETWORK_STATE, RECORD_AUDIO]
        )
      ),
      ('M4',),
    ),
    FixtureApp(
      'children-12-cleartext',
      CHILDREN,
      'medium',
      ApkSpec(manifest(f'{kids}.c12', application={**no_backup, 'usesCleartextTraffic': True})),
      ('M3',),
    ),
  ]


def _general() -> list[FixtureApp]:
  general = 'com.fixture.general'
  no_backup = {'allowBackup': False}
  plain_nsc = (
    b'<?xml version="1.0" encoding="utf-8"?>\n'
    b'<network-security-config>\n'
    b'  <base-config cleartextTrafficPermitted="true" />\n'
    b'</network-security-config>\n'
  )
  return [
    FixtureApp('general-01-three-sdks', GENERAL, 'high', three_manifest_sdks(), ('R2',)),
    FixtureApp('general-02-cleartext-nsc', GENERAL, 'high', explicit_cleartext_with_nsc(), ('R1',)),
    FixtureApp('general-03-deep-link-upload', GENERAL, 'high', deep_link_upload_service(), ('R3',)),
    FixtureApp(
      'general-04-nsc-ad-stack',
      GENERAL,
      'high',
      ApkSpec(
        manifest(f'{general}.g04', application={**no_backup, 'networkSecurityConfig': NSC_REF}),
        dex=[dex_with(f'{general}.g04', UNITY_ADS_CLASSES, IRONSOURCE_CLASSES)],
        files={'res/xml/app_network_rules.xml': plain_nsc},
      ),
      ('R1', 'R2'),
    ),
    FixtureApp(
      'general-05-backup-rules',
      GENERAL,
      'medium',
      ApkSpec(
        manifest(
          f'{general}.g05',
          application={
            'allowBackup': True,
            'fullBackupContent': BACKUP_RULES_REF,
            'dataExtractionRules': EXTRACTION_RULES_REF,
          },
        )
      ),
      ('M2',),
    ),
    FixtureApp(
      'general-06-firebase-media',
      GENERAL,
      'medium',
      ApkSpec(
        manifest(
          f'{general}.g06',
          application=no_backup,
          permissions=[INTERNET, NETWORK_STATE, READ_MEDIA_IMAGES],
          metadata=[meta(FIREBASE_APP_ID)],
        )
      ),
      ('M1', 'M4'),
    ),
    FixtureApp(
      'general-07-implicit-backup',
      GENERAL,
      'medium',
      ApkSpec(manifest(f'{general}.g07')),
      ('M2',),
    ),
    FixtureApp(
      'general-08-ad-id',
      GENERAL,
      'medium',
      ApkSpec(
        manifest(
          f'{general}.g08', application=no_backup, permissions=[INTERNET, NETWORK_STATE, AD_ID]
        )
      ),
      ('M1',),
    ),
    FixtureApp('general-09-minimal', GENERAL, 'low', minimal_no_backup(), ('L1',)),
  ]


def cohort_corpus() -> list[FixtureApp]:
  """The 21 fixture apps, children first, in file-name order."""
  return [*_children(), *_general()]


def write_corpus(out_dir: Path) -> list[Path]:
  """Write every corpus APK plus labels.csv; returns the APK paths."""
  out_dir.mkdir(parents=True, exist_ok=True)
  apps = cohort_corpus()
  paths = [build_apk(out_dir / app.filename, app.spec) for app in apps]
  labels = ['app_id,cohort', *(f'{app.package},{app.cohort}' for app in apps)]
  (out_dir / 'labels.csv').write_text('\n'.join(labels) + '\n', encoding='utf-8')
  return paths
