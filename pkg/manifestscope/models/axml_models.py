"""Decoded binary XML models."""

import struct
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

ANDROID_NS = 'http://schemas.android.com/apk/res/android'


class ValueKind(str, Enum):
  """Typed attribute value families."""

  STRING = 'string'
  BOOLEAN = 'boolean'
  INT_DEC = 'int-dec'
  INT_HEX = 'int-hex'
  REFERENCE = 'reference'
  FLOAT = 'float'
  INT_OTHER = 'int-other'
  RAW = 'raw'


class TypedValue(BaseModel):
  """A Res_value as stored in the attribute record.

  `data` is the raw 32-bit word; `string` is set for string values only.
  Unknown types keep their `raw_type`/`data` pair untouched.
  """

  model_config = ConfigDict(frozen=True)

  kind: ValueKind
  raw_type: int = Field(..., ge=0, le=0xFF)
  data: int = Field(..., ge=0, le=0xFFFFFFFF)
  string: str | None = None

  @classmethod
  def of_string(cls, value: str) -> 'TypedValue':
    """Build a string value (type 0x03)."""
    return cls(kind=ValueKind.STRING, raw_type=0x03, data=0, string=value)

  @property
  def signed(self) -> int:
    """The data word as a signed 32-bit integer."""
    return self.data - (1 << 32) if self.data & 0x80000000 else self.data

  @property
  def value(self) -> str | bool | int | float | tuple[int, int]:
    """Python value for the kind."""
    if self.kind is ValueKind.STRING:
      return self.string or ''
    if self.kind is ValueKind.BOOLEAN:
      return self.data != 0
    if self.kind is ValueKind.INT_DEC:
      return self.signed
    if self.kind is ValueKind.FLOAT:
      return struct.unpack('<f', struct.pack('<I', self.data))[0]
    if self.kind is ValueKind.RAW:
      return (self.raw_type, self.data)
    return self.data

  def as_bool(self) -> bool | None:
    """Boolean reading, accepting literal 'true'/'false' strings."""
    if self.kind is ValueKind.BOOLEAN:
      return self.data != 0
    if self.kind is ValueKind.STRING and self.string is not None:
      lowered = self.string.strip().lower()
      if lowered in ('true', 'false'):
        return lowered == 'true'
    return None

  def as_int(self) -> int | None:
    """Integer reading, accepting numeric strings."""
    if self.kind is ValueKind.INT_DEC:
      return self.signed
    if self.kind in (ValueKind.INT_HEX, ValueKind.INT_OTHER):
      return self.data
    if self.kind is ValueKind.STRING and self.string is not None:
      try:
        return int(self.string.strip(), 0)
      except ValueError:
        return None
    return None

  def as_str(self) -> str:
    """String reading; non-strings use their display form."""
    if self.kind is ValueKind.STRING:
      return self.string or ''
    return self.display()

  def display(self) -> str:
    """Render the value as a decoded manifest would show it."""
    if self.kind is ValueKind.STRING:
      return self.string or ''
    if self.kind is ValueKind.BOOLEAN:
      return 'true' if self.data else 'false'
    if self.kind is ValueKind.INT_DEC:
      return str(self.signed)
    if self.kind is ValueKind.INT_HEX:
      return f'0x{self.data:08x}'
    if self.kind is ValueKind.REFERENCE:
      return f'@0x{self.data:08x}' if self.data else '@null'
    if self.kind is ValueKind.FLOAT:
      return repr(self.value)
    if self.kind is ValueKind.INT_OTHER:
      if 0x1C <= self.raw_type <= 0x1F:
        return f'#{self.data:08x}'
      return str(self.data)
    return f'(type 0x{self.raw_type:02x})0x{self.data:08x}'


class AxmlAttribute(BaseModel):
  """One attribute of a start-element chunk."""

  model_config = ConfigDict(frozen=True)

  namespace: str | None = None
  name: str
  value: TypedValue
  resource_id: int | None = Field(None, description='Attribute id from the resource map')


class AxmlElement(BaseModel):
  """An element with its attributes and children in document order."""

  model_config = ConfigDict(frozen=True)

  namespace: str | None = None
  name: str
  attributes: tuple[AxmlAttribute, ...] = ()
  children: tuple['AxmlElement', ...] = ()

  def children_named(self, name: str) -> list['AxmlElement']:
    """Direct children with the given local name."""
    return [child for child in self.children if child.name == name]

  def iter(self):
    """Depth-first, pre-order walk starting at this element."""
    yield self
    for child in self.children:
      yield from child.iter()


class AxmlDocument(BaseModel):
  """A decoded binary XML file."""

  model_config = ConfigDict(frozen=True)

  root: AxmlElement
  string_pool: tuple[str, ...] = ()
  resource_map: tuple[int, ...] = ()
  namespaces: tuple[tuple[str, str], ...] = Field(
    (), description='(prefix, uri) pairs in declaration order'
  )
  warnings: tuple[str, ...] = ()
