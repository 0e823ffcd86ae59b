"""DEX string table extraction.

Only the header, string_ids and string_data items are read. Class
descriptors found there are what SDK fingerprinting matches against.
"""

import bisect
import logging
import re
import struct
from collections.abc import Iterable, Mapping, Sequence

from manifestscope.errors import BadStringOffset, NotADex, TruncatedDex
from manifestscope.models.dex_models import DexStringTable

logger = logging.getLogger(__name__)

HEADER_SIZE = 0x70
STRING_IDS_SIZE_OFFSET = 0x38
STRING_IDS_OFF_OFFSET = 0x3C
KNOWN_VERSIONS = range(35, 42)
MAGIC = re.compile(rb'^dex\n(\d{3})\x00')
REPLACEMENT = '�'
NUL = re.compile(rb'\x00')

DESCRIPTOR = re.compile(r'L((?:[^\s;\[./]+/)*[^\s;\[./]+);')


def _read_uleb128(data: bytes, pos: int) -> tuple[int, int]:
  """Decode an unsigned LEB128 value of at most five bytes."""
  result = 0
  for shift in range(0, 35, 7):
    if pos >= len(data):
      raise TruncatedDex(f'ULEB128 value runs past the end of the file at 0x{pos:x}')
    byte = data[pos]
    pos += 1
    result |= (byte & 0x7F) << shift
    if not byte & 0x80:
      return result, pos
  # A fifth byte with the continuation bit set is invalid; keep what we have.
  return result & 0xFFFFFFFF, pos


def decode_mutf8(payload: bytes) -> tuple[str, int, bool]:
  """Decode modified UTF-8.

  Returns:
    (text, utf16_units, clean) where clean is False when a byte sequence or a
    lone surrogate had to be replaced.
  """
  units: list[int] = []
  clean = True
  i = 0
  n = len(payload)
  while i < n:
    b = payload[i]
    if b < 0x80:
      units.append(b)
      i += 1
    elif b & 0xE0 == 0xC0 and i + 1 < n and payload[i + 1] & 0xC0 == 0x80:
      units.append(((b & 0x1F) << 6) | (payload[i + 1] & 0x3F))
      i += 2
    elif (
      b & 0xF0 == 0xE0
      and i + 2 < n
      and payload[i + 1] & 0xC0 == 0x80
      and payload[i + 2] & 0xC0 == 0x80
    ):
      units.append(((b & 0x0F) << 12) | ((payload[i + 1] & 0x3F) << 6) | (payload[i + 2] & 0x3F))
      i += 3
    else:
      units.append(0xFFFD)
      clean = False
      i += 1

  chars: list[str] = []
  j = 0
  while j < len(units):
    unit = units[j]
    if 0xD800 <= unit <= 0xDBFF and j + 1 < len(units) and 0xDC00 <= units[j + 1] <= 0xDFFF:
      chars.append(chr(0x10000 + ((unit - 0xD800) << 10) + (units[j + 1] - 0xDC00)))
      j += 2
      continue
    if 0xD800 <= unit <= 0xDFFF:
      chars.append(REPLACEMENT)
      clean = False
    else:
      chars.append(chr(unit))
    j += 1
  return ''.join(chars), len(units), clean


class _StringData:
  """string_data items, decoded once per offset.

  A terminator search stops at the declared length (at most three bytes per
  UTF-16 unit) and at the next string's offset, so total work stays linear in
  the file size however the ids overlap.
  """

  def __init__(self, data: bytes, offsets: Sequence[int], dex_name: str):
    self.data = data
    self.dex_name = dex_name
    starts = sorted(set(offsets))
    self.next_start = dict(zip(starts, [*starts[1:], len(data)], strict=True))
    self.decoded: dict[int, tuple[str, int, int, bool, bool]] = {}
    self._nuls: list[int] | None = None

  def _has_terminator_after(self, pos: int) -> bool:
    if self._nuls is None:
      self._nuls = [m.start() for m in NUL.finditer(self.data)]
    return bisect.bisect_left(self._nuls, pos) < len(self._nuls)

  def decode(self, index: int, offset: int) -> tuple[str, int, int, bool, bool]:
    """(text, utf16_units, declared_size, clean, overrun) for one string_data_off."""
    if offset in self.decoded:
      return self.decoded[offset]
    utf16_size, start = _read_uleb128(self.data, offset)
    limit = min(start + 3 * utf16_size + 1, max(self.next_start[offset], start))
    end = self.data.find(b'\x00', start, limit)
    overrun = end == -1
    if overrun:
      if not self._has_terminator_after(start):
        raise TruncatedDex(f'{self.dex_name}: string {index} has no terminator')
      end = limit
    payload = self.data[start:end]
    if payload.isascii():
      text, units, clean = payload.decode('ascii'), len(payload), True
    else:
      text, units, clean = decode_mutf8(payload)
    self.decoded[offset] = (text, units, utf16_size, clean, overrun)
    return self.decoded[offset]


def scan_dex(data: bytes, dex_name: str = 'classes.dex') -> DexStringTable:
  """Resolve every string_ids entry of a DEX file.

  Raises:
    NotADex: the magic is wrong.
    TruncatedDex: the header, id table or a string runs past the end.
    BadStringOffset: a string_data_off points outside the file.
  """
  data = bytes(data)
  magic = MAGIC.match(data[:8])
  if magic is None:
    raise NotADex(f'{dex_name} does not start with the DEX magic')
  version = magic.group(1).decode('ascii')
  warnings: list[str] = []
  if int(version) not in KNOWN_VERSIONS:
    message = f'{dex_name}: unknown DEX version {version}, parsing string table anyway'
    warnings.append(message)
    logger.warning(message)
  if len(data) < HEADER_SIZE:
    raise TruncatedDex(f'{dex_name}: header needs {HEADER_SIZE} bytes, file has {len(data)}')

  (count,) = struct.unpack_from('<L', data, STRING_IDS_SIZE_OFFSET)
  (ids_off,) = struct.unpack_from('<L', data, STRING_IDS_OFF_OFFSET)
  if count and ids_off + count * 4 > len(data):
    raise TruncatedDex(f'{dex_name}: string_ids table of {count} entries overflows the file')

  offsets = struct.unpack_from(f'<{count}L', data, ids_off) if count else ()
  reader = _StringData(data, offsets, dex_name)
  strings: list[str] = []
  for index, offset in enumerate(offsets):
    if offset >= len(data):
      raise BadStringOffset(index, offset)
    text, units, utf16_size, clean, overrun = reader.decode(index, offset)
    if overrun:
      warnings.append(
        f'{dex_name}: string {index} has no terminator within its declared length; truncated'
      )
    if not clean:
      warnings.append(f'{dex_name}: string {index} is not valid modified UTF-8')
    if units != utf16_size:
      warnings.append(
        f'{dex_name}: string {index} decodes to {units} UTF-16 units, header says {utf16_size}'
      )
    strings.append(text)

  return DexStringTable(
    dex_name=dex_name, version=version, strings=tuple(strings), warnings=tuple(warnings)
  )


def descriptor_to_class(value: str) -> str | None:
  """`Lcom/foo/Bar;` -> `com.foo.Bar`; None for anything else."""
  m = DESCRIPTOR.fullmatch(value)
  if m is None:
    return None
  return m.group(1).replace('/', '.')


def collect_class_prefixes(table: DexStringTable) -> set[str]:
  """Dotted class names for every class descriptor in the table."""
  found = set()
  for value in table.strings:
    if value.startswith('L') and value.endswith(';'):
      name = descriptor_to_class(value)
      if name:
        found.add(name)
  return found


def collect_class_origins(tables: Iterable[DexStringTable]) -> Mapping[str, str]:
  """Union of class names over several tables, keyed to the first file seen in."""
  origins: dict[str, str] = {}
  for table in tables:
    for name in sorted(collect_class_prefixes(table)):
      origins.setdefault(name, table.dex_name)
  return origins
