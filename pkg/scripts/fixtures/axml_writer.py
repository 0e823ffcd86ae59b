"""Compile a small XML tree into Android binary XML.

Enough of the format to produce realistic manifests and res/xml files for
tests: one UTF-16 string pool, a resource map for framework attributes,
namespace and element chunks with typed attribute values.
"""

import struct
from dataclasses import dataclass, field

ANDROID_NS = 'http://schemas.android.com/apk/res/android'

# Framework attribute ids (android.R.attr).
ANDROID_ATTRIBUTE_IDS = {
  'label': 0x01010001,
  'icon': 0x01010002,
  'name': 0x01010003,
  'permission': 0x01010006,
  'readPermission': 0x01010007,
  'writePermission': 0x01010008,
  'debuggable': 0x0101000F,
  'exported': 0x01010010,
  'value': 0x01010024,
  'resource': 0x01010025,
  'scheme': 0x01010027,
  'host': 0x01010028,
  'minSdkVersion': 0x0101020C,
  'versionCode': 0x0101021B,
  'versionName': 0x0101021C,
  'targetSdkVersion': 0x01010270,
  'backupAgent': 0x0101027F,
  'allowBackup': 0x01010280,
  'restoreAnyVersion': 0x010102BA,
  'fullBackupContent': 0x01010473,
  'usesCleartextTraffic': 0x010104EC,
  'networkSecurityConfig': 0x01010527,
  'dataExtractionRules': 0x0101063E,
}

TYPE_REFERENCE = 0x01
TYPE_STRING = 0x03
TYPE_FLOAT = 0x04
TYPE_INT_DEC = 0x10
TYPE_INT_BOOLEAN = 0x12
NO_ENTRY = 0xFFFFFFFF


@dataclass(frozen=True)
class Ref:
  """A resource reference such as @xml/network_security_config."""

  resource_id: int


@dataclass
class XmlNode:
  """An element to compile. Attribute keys are `android:foo` or bare names."""

  tag: str
  attrs: dict[str, object] = field(default_factory=dict)
  children: list['XmlNode'] = field(default_factory=list)

  def add(self, *children: 'XmlNode') -> 'XmlNode':
    self.children.extend(children)
    return self

  def walk(self):
    yield self
    for child in self.children:
      yield from child.walk()


def _split(key: str) -> tuple[str | None, str]:
  if key.startswith('android:'):
    return ANDROID_NS, key.removeprefix('android:')
  return None, key


class _StringPool:
  def __init__(self, mapped: list[str]):
    self.strings: list[str] = list(mapped)
    self.index = {s: i for i, s in enumerate(self.strings)}

  def add(self, value: str) -> int:
    if value not in self.index:
      self.index[value] = len(self.strings)
      self.strings.append(value)
    return self.index[value]

  def encode(self) -> bytes:
    offsets = []
    data = b''
    for s in self.strings:
      offsets.append(len(data))
      units = s.encode('utf-16-le')
      data += struct.pack('<H', len(units) // 2) + units + b'\x00\x00'
    data += b'\x00' * (-len(data) % 4)
    header_size = 28
    strings_start = header_size + 4 * len(offsets)
    body = struct.pack(f'<{len(offsets)}L', *offsets) + data
    return struct.pack(
      '<HHL5L', 0x0001, header_size, header_size + len(body), len(offsets), 0, 0, strings_start, 0
    ) + body


def _typed(value: object, pool: _StringPool) -> tuple[int, int, int]:
  """(raw string index, data type, data) for a Python value."""
  if isinstance(value, bool):
    return NO_ENTRY, TYPE_INT_BOOLEAN, 0xFFFFFFFF if value else 0
  if isinstance(value, int):
    return NO_ENTRY, TYPE_INT_DEC, value & 0xFFFFFFFF
  if isinstance(value, float):
    return NO_ENTRY, TYPE_FLOAT, struct.unpack('<I', struct.pack('<f', value))[0]
  if isinstance(value, Ref):
    return NO_ENTRY, TYPE_REFERENCE, value.resource_id
  index = pool.add(str(value))
  return index, TYPE_STRING, index


def compile_xml(root: XmlNode) -> bytes:
  """Compile the tree; the android namespace is declared on the root."""
  mapped = []
  for node in root.walk():
    for key in node.attrs:
      namespace, name = _split(key)
      if namespace == ANDROID_NS and name in ANDROID_ATTRIBUTE_IDS and name not in mapped:
        mapped.append(name)
  pool = _StringPool(mapped)
  resource_map = [ANDROID_ATTRIBUTE_IDS[name] for name in mapped]

  uses_android = any(_split(k)[0] for node in root.walk() for k in node.attrs)
  prefix = pool.add('android') if uses_android else None
  uri = pool.add(ANDROID_NS) if uses_android else None

  chunks: list[bytes] = []
  line = 1

  def node_chunk(chunk_type: int, body: bytes) -> bytes:
    nonlocal line
    line += 1
    return struct.pack('<HHLLL', chunk_type, 16, 16 + len(body), line, NO_ENTRY) + body

  def emit(node: XmlNode) -> None:
    name_index = pool.add(node.tag)
    attributes = []
    for key, value in node.attrs.items():
      namespace, name = _split(key)
      ns_index = uri if namespace else NO_ENTRY
      attr_name = pool.add(name)
      raw, data_type, data = _typed(value, pool)
      attributes.append(struct.pack('<LLLHBBL', ns_index, attr_name, raw, 8, 0, data_type, data))
    ext = struct.pack('<LLHHHHHH', NO_ENTRY, name_index, 20, 20, len(attributes), 0, 0, 0)
    chunks.append(node_chunk(0x0102, ext + b''.join(attributes)))
    for child in node.children:
      emit(child)
    chunks.append(node_chunk(0x0103, struct.pack('<LL', NO_ENTRY, name_index)))

  if uses_android:
    chunks.append(node_chunk(0x0100, struct.pack('<LL', prefix, uri)))
  emit(root)
  if uses_android:
    chunks.append(node_chunk(0x0101, struct.pack('<LL', prefix, uri)))

  resource_chunk = b''
  if resource_map:
    resource_chunk = struct.pack(
      f'<HHL{len(resource_map)}L', 0x0180, 8, 8 + 4 * len(resource_map), *resource_map
    )
  body = pool.encode() + resource_chunk + b''.join(chunks)
  return struct.pack('<HHL', 0x0003, 8, 8 + len(body)) + body
