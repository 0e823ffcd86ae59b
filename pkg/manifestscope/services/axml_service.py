"""Android binary XML decoder.

Walks the chunk stream of a compiled XML file (AndroidManifest.xml or
res/xml/*) and rebuilds the element tree. Every read is bounded by the
enclosing chunk's declared size.
"""

import logging
import struct
from collections.abc import Sequence

from lxml import etree

from manifestscope.errors import (
  DanglingStringIndex,
  InvalidXmlName,
  MalformedChunk,
  NotBinaryXml,
)
from manifestscope.models.axml_models import (
  ANDROID_NS,
  AxmlAttribute,
  AxmlDocument,
  AxmlElement,
  TypedValue,
  ValueKind,
)

logger = logging.getLogger(__name__)

# Chunk types
RES_XML_TYPE = 0x0003
RES_STRING_POOL_TYPE = 0x0001
RES_XML_RESOURCE_MAP_TYPE = 0x0180
RES_XML_START_NAMESPACE_TYPE = 0x0100
RES_XML_END_NAMESPACE_TYPE = 0x0101
RES_XML_START_ELEMENT_TYPE = 0x0102
RES_XML_END_ELEMENT_TYPE = 0x0103
RES_XML_CDATA_TYPE = 0x0104

CHUNK_HEADER = struct.Struct('<HHL')
NODE_HEADER_SIZE = 16
STRING_POOL_HEADER = struct.Struct('<5L')
ATTR_EXT = struct.Struct('<LLHHHHHH')
ATTRIBUTE = struct.Struct('<LLLHBBL')

UTF8_FLAG = 1 << 8
NO_ENTRY = 0xFFFFFFFF
REPLACEMENT = '�'

# Res_value data types
TYPE_REFERENCE = 0x01
TYPE_STRING = 0x03
TYPE_FLOAT = 0x04
TYPE_INT_DEC = 0x10
TYPE_INT_HEX = 0x11
TYPE_INT_BOOLEAN = 0x12
TYPE_LAST_INT = 0x1F

# Framework attribute ids for the attributes the analyzer reads; used to name
# attributes whose string-pool entry has been blanked.
ANDROID_ATTRIBUTE_IDS = {
  0x01010001: 'label',
  0x01010002: 'icon',
  0x01010003: 'name',
  0x01010006: 'permission',
  0x01010007: 'readPermission',
  0x01010008: 'writePermission',
  0x0101000F: 'debuggable',
  0x01010010: 'exported',
  0x01010024: 'value',
  0x01010025: 'resource',
  0x01010027: 'scheme',
  0x01010028: 'host',
  0x0101020C: 'minSdkVersion',
  0x0101021B: 'versionCode',
  0x0101021C: 'versionName',
  0x01010270: 'targetSdkVersion',
  0x0101027F: 'backupAgent',
  0x01010280: 'allowBackup',
  0x010102BA: 'restoreAnyVersion',
  0x01010473: 'fullBackupContent',
  0x010104EC: 'usesCleartextTraffic',
  0x01010527: 'networkSecurityConfig',
  0x0101063E: 'dataExtractionRules',
}


class _Decoder:
  """Single-use decoder state for one document."""

  def __init__(self, data: bytes):
    self.data = data
    self.strings: list[str] = []
    self.resource_map: list[int] = []
    self.namespaces: list[tuple[str, str]] = []
    self.warnings: list[str] = []
    self.stack: list[tuple[str | None, str, list[AxmlAttribute], list[AxmlElement]]] = []
    self.root: AxmlElement | None = None
    self.seen_pool = False

  def warn(self, message: str) -> None:
    self.warnings.append(message)
    logger.warning(message)

  def string(self, index: int) -> str:
    if index >= len(self.strings):
      raise DanglingStringIndex(index, len(self.strings))
    return self.strings[index]

  def optional_string(self, index: int) -> str | None:
    if index == NO_ENTRY:
      return None
    return self.string(index)

  def run(self) -> AxmlDocument:
    data = self.data
    if len(data) < 2 or struct.unpack_from('<H', data, 0)[0] != RES_XML_TYPE:
      raise NotBinaryXml('Data does not start with a binary XML document chunk')
    if len(data) < CHUNK_HEADER.size:
      raise MalformedChunk('Document header is truncated', 0)
    _, header_size, size = CHUNK_HEADER.unpack_from(data, 0)
    if header_size < CHUNK_HEADER.size or size < header_size or size > len(data):
      raise MalformedChunk(f'Document chunk declares size {size} for {len(data)} bytes', 0)

    pos = header_size
    while pos < size:
      if pos + CHUNK_HEADER.size > size:
        raise MalformedChunk('Chunk header runs past the document end', pos)
      chunk_type, chunk_header_size, chunk_size = CHUNK_HEADER.unpack_from(data, pos)
      if (
        chunk_header_size < CHUNK_HEADER.size
        or chunk_size < chunk_header_size
        or pos + chunk_size > size
      ):
        raise MalformedChunk(
          f'Chunk 0x{chunk_type:04x} declares header {chunk_header_size}, size {chunk_size}', pos
        )
      self.dispatch(chunk_type, pos, chunk_header_size, pos + chunk_size)
      pos += chunk_size

    if self.stack:
      raise MalformedChunk(f'Document ends with {len(self.stack)} unclosed element(s)', pos)
    if self.root is None:
      raise MalformedChunk('Document has no root element', pos)
    return AxmlDocument(
      root=self.root,
      string_pool=tuple(self.strings),
      resource_map=tuple(self.resource_map),
      namespaces=tuple(self.namespaces),
      warnings=tuple(self.warnings),
    )

  def dispatch(self, chunk_type: int, start: int, header_size: int, end: int) -> None:
    if chunk_type == RES_STRING_POOL_TYPE:
      if self.seen_pool:
        self.warn(f'Ignoring second string pool at 0x{start:x}')
        return
      self.seen_pool = True
      self.read_string_pool(start, header_size, end)
    elif chunk_type == RES_XML_RESOURCE_MAP_TYPE:
      count = (end - start - header_size) // 4
      self.resource_map = list(struct.unpack_from(f'<{count}L', self.data, start + header_size))
    elif RES_XML_START_NAMESPACE_TYPE <= chunk_type <= RES_XML_CDATA_TYPE:
      if header_size < NODE_HEADER_SIZE:
        raise MalformedChunk(f'XML node header of {header_size} bytes', start)
      body = start + header_size
      if chunk_type == RES_XML_START_NAMESPACE_TYPE:
        self.read_namespace(body, end)
      elif chunk_type == RES_XML_START_ELEMENT_TYPE:
        self.read_start_element(body, end)
      elif chunk_type == RES_XML_END_ELEMENT_TYPE:
        self.read_end_element(body, end)
      # End-namespace and CDATA carry nothing the tree needs.
    else:
      self.warn(f'Skipping unknown chunk type 0x{chunk_type:04x} at 0x{start:x}')

  def read_string_pool(self, start: int, header_size: int, end: int) -> None:
    if header_size < CHUNK_HEADER.size + STRING_POOL_HEADER.size:
      raise MalformedChunk('String pool header is too small', start)
    count, _style_count, flags, strings_start, _styles_start = STRING_POOL_HEADER.unpack_from(
      self.data, start + CHUNK_HEADER.size
    )
    offsets_at = start + header_size
    if offsets_at + count * 4 > end:
      raise MalformedChunk(f'String pool offsets for {count} strings overflow the chunk', start)
    offsets = struct.unpack_from(f'<{count}L', self.data, offsets_at)
    base = start + strings_start
    utf8 = bool(flags & UTF8_FLAG)
    for index, offset in enumerate(offsets):
      text = self.decode_pool_string(base + offset, end, utf8)
      if text is None:
        self.warn(f'String pool entry {index} is malformed')
        text = REPLACEMENT
      self.strings.append(text)

  def decode_pool_string(self, pos: int, end: int, utf8: bool) -> str | None:
    data = self.data
    if pos < 0 or pos >= end:
      return None
    if utf8:
      # Character count then byte count, each 1 or 2 bytes.
      _, pos = _read_length8(data, pos, end)
      if pos is None:
        return None
      byte_len, pos = _read_length8(data, pos, end)
      if pos is None or pos + byte_len > end:
        return None
      return data[pos : pos + byte_len].decode('utf-8', 'replace')
    if pos + 2 > end:
      return None
    (length,) = struct.unpack_from('<H', data, pos)
    pos += 2
    if length & 0x8000:
      if pos + 2 > end:
        return None
      (low,) = struct.unpack_from('<H', data, pos)
      length = ((length & 0x7FFF) << 16) | low
      pos += 2
    if pos + length * 2 > end:
      return None
    return data[pos : pos + length * 2].decode('utf-16-le', 'replace')

  def read_namespace(self, body: int, end: int) -> None:
    if body + 8 > end:
      raise MalformedChunk('Namespace chunk is truncated', body)
    prefix_index, uri_index = struct.unpack_from('<LL', self.data, body)
    prefix = self.optional_string(prefix_index) or ''
    uri = self.optional_string(uri_index) or ''
    self.namespaces.append((prefix, uri))

  def read_start_element(self, body: int, end: int) -> None:
    if body + ATTR_EXT.size > end:
      raise MalformedChunk('Start element chunk is truncated', body)
    ns_index, name_index, attr_start, attr_size, attr_count, *_ = ATTR_EXT.unpack_from(
      self.data, body
    )
    if attr_count and attr_size < ATTRIBUTE.size:
      raise MalformedChunk(f'Attribute record size {attr_size} is too small', body)
    first = body + attr_start
    if first + attr_count * attr_size > end:
      raise MalformedChunk(f'{attr_count} attributes overflow the element chunk', body)
    if self.root is not None and not self.stack:
      raise MalformedChunk('Document has more than one root element', body)

    attributes: list[AxmlAttribute] = []
    keys: set[tuple[str | None, str]] = set()
    for i in range(attr_count):
      attribute = self.read_attribute(first + i * attr_size)
      key = (attribute.namespace, attribute.name)
      if key in keys:
        self.warn(f'Dropping duplicate attribute {attribute.name}')
        continue
      keys.add(key)
      attributes.append(attribute)

    namespace = self.optional_string(ns_index)
    self.stack.append((namespace, self.string(name_index), attributes, []))

  def read_attribute(self, pos: int) -> AxmlAttribute:
    ns_index, name_index, raw_index, _size, _res0, data_type, data = ATTRIBUTE.unpack_from(
      self.data, pos
    )
    resource_id = self.resource_map[name_index] if name_index < len(self.resource_map) else None
    name = self.string(name_index)
    if not name and resource_id in ANDROID_ATTRIBUTE_IDS:
      name = ANDROID_ATTRIBUTE_IDS[resource_id]
    return AxmlAttribute(
      namespace=self.optional_string(ns_index),
      name=name,
      value=self.typed_value(data_type, data, raw_index),
      resource_id=resource_id,
    )

  def typed_value(self, data_type: int, data: int, raw_index: int) -> TypedValue:
    if data_type == TYPE_STRING:
      index = data if data < len(self.strings) or raw_index == NO_ENTRY else raw_index
      return TypedValue(
        kind=ValueKind.STRING, raw_type=data_type, data=data, string=self.string(index)
      )
    if data_type == TYPE_INT_BOOLEAN:
      if data in (0, 0xFFFFFFFF):
        return TypedValue(kind=ValueKind.BOOLEAN, raw_type=data_type, data=data)
      self.warn(f'Boolean attribute with raw value 0x{data:08x} kept as raw')
      return TypedValue(kind=ValueKind.RAW, raw_type=data_type, data=data)
    kind = {
      TYPE_REFERENCE: ValueKind.REFERENCE,
      TYPE_FLOAT: ValueKind.FLOAT,
      TYPE_INT_DEC: ValueKind.INT_DEC,
      TYPE_INT_HEX: ValueKind.INT_HEX,
    }.get(data_type)
    if kind is None:
      kind = ValueKind.INT_OTHER if TYPE_INT_DEC <= data_type <= TYPE_LAST_INT else ValueKind.RAW
    return TypedValue(kind=kind, raw_type=data_type, data=data)

  def read_end_element(self, body: int, end: int) -> None:
    if body + 8 > end:
      raise MalformedChunk('End element chunk is truncated', body)
    ns_index, name_index = struct.unpack_from('<LL', self.data, body)
    if not self.stack:
      raise MalformedChunk('End element without a matching start', body)
    namespace, name, attributes, children = self.stack.pop()
    if self.string(name_index) != name or self.optional_string(ns_index) != namespace:
      raise MalformedChunk(f'End element does not close <{name}>', body)
    element = AxmlElement(
      namespace=namespace, name=name, attributes=tuple(attributes), children=tuple(children)
    )
    if self.stack:
      self.stack[-1][3].append(element)
    else:
      self.root = element


def _read_length8(data: bytes, pos: int, end: int) -> tuple[int, int | None]:
  if pos >= end:
    return 0, None
  first = data[pos]
  if first & 0x80:
    if pos + 1 >= end:
      return 0, None
    return ((first & 0x7F) << 8) | data[pos + 1], pos + 2
  return first, pos + 1


def decode_axml(data: bytes) -> AxmlDocument:
  """Decode a compiled binary XML file.

  Raises:
    NotBinaryXml: the document chunk type is missing.
    MalformedChunk: a size or offset disagrees with its container.
    DanglingStringIndex: a string index is past the pool.
  """
  return _Decoder(bytes(data)).run()


def find_elements(doc: AxmlDocument, path: Sequence[str]) -> list[AxmlElement]:
  """All elements on a root-anchored name path, in document order."""
  if not path or doc.root.name != path[0]:
    return []
  level = [doc.root]
  for name in path[1:]:
    level = [child for element in level for child in element.children if child.name == name]
  return level


def get_attr(elem: AxmlElement, namespace: str | None, name: str) -> TypedValue | None:
  """The value of one attribute, or None when absent."""
  for attribute in elem.attributes:
    if attribute.name == name and attribute.namespace == namespace:
      return attribute.value
  return None


def get_android_attr(elem: AxmlElement, name: str) -> TypedValue | None:
  """Shorthand for attributes in the android namespace."""
  return get_attr(elem, ANDROID_NS, name)


def to_etree(doc: AxmlDocument) -> etree._Element:
  """Convert a decoded document into an lxml tree for XPath and printing.

  Raises:
    InvalidXmlName: an element name is not a valid XML tag.
  """
  nsmap = {prefix or None: uri for prefix, uri in doc.namespaces if uri}

  def build(element: AxmlElement, parent: etree._Element | None) -> etree._Element:
    tag = f'{{{element.namespace}}}{element.name}' if element.namespace else element.name
    try:
      if parent is None:
        node = etree.Element(tag, nsmap=nsmap)
      else:
        node = etree.SubElement(parent, tag)
    except ValueError as e:
      raise InvalidXmlName(f'Element name {element.name!r} is not valid XML: {e}') from e
    for attribute in element.attributes:
      key = attribute.name
      if attribute.namespace:
        key = f'{{{attribute.namespace}}}{attribute.name}'
      try:
        node.set(key, attribute.value.display())
      except ValueError:
        logger.debug('Attribute %r cannot be represented in XML', key)
    for child in element.children:
      build(child, node)
    return node

  return build(doc.root, None)
