"""Minimal DEX files: a header, a string table and a map_list."""

import hashlib
import struct
import zlib
from collections.abc import Iterable

HEADER_SIZE = 0x70
ENDIAN_CONSTANT = 0x12345678
TYPE_HEADER_ITEM = 0x0000
TYPE_STRING_ID_ITEM = 0x0001
TYPE_MAP_LIST = 0x1000
TYPE_STRING_DATA_ITEM = 0x2002


def encode_uleb128(value: int) -> bytes:
  out = bytearray()
  while True:
    byte = value & 0x7F
    value >>= 7
    if value:
      out.append(byte | 0x80)
    else:
      out.append(byte)
      return bytes(out)


def utf16_units(text: str) -> list[int]:
  raw = text.encode('utf-16-le', 'surrogatepass')
  return list(struct.unpack(f'<{len(raw) // 2}H', raw))


def encode_mutf8(text: str) -> bytes:
  """Modified UTF-8: NUL as C0 80, supplementary characters as surrogate pairs."""
  out = bytearray()
  for unit in utf16_units(text):
    if 0 < unit < 0x80:
      out.append(unit)
    elif unit < 0x800:
      out += bytes([0xC0 | (unit >> 6), 0x80 | (unit & 0x3F)])
    else:
      out += bytes([0xE0 | (unit >> 12), 0x80 | ((unit >> 6) & 0x3F), 0x80 | (unit & 0x3F)])
  return bytes(out)


def dex_order(strings: Iterable[str]) -> list[str]:
  """Unique strings in string_ids order (by UTF-16 code units)."""
  return sorted(set(strings), key=utf16_units)


def _map_list(count: int, ids_off: int, data_off: int, map_off: int) -> bytes:
  items = [(TYPE_HEADER_ITEM, 1, 0)]
  if count:
    items += [(TYPE_STRING_ID_ITEM, count, ids_off), (TYPE_STRING_DATA_ITEM, count, data_off)]
  items.append((TYPE_MAP_LIST, 1, map_off))
  out = struct.pack('<L', len(items))
  for kind, size, offset in items:
    out += struct.pack('<HHLL', kind, 0, size, offset)
  return out


def build_dex(strings: Iterable[str], version: str = '035') -> bytes:
  """Assemble a DEX file whose string_ids list `strings` in dex_order.

  Besides the header and string table only a map_list is written, enough for
  other DEX readers to load the file.
  """
  ordered = dex_order(strings)
  ids_off = HEADER_SIZE
  data_off = ids_off + 4 * len(ordered)
  offsets = []
  data = bytearray()
  for text in ordered:
    offsets.append(data_off + len(data))
    data += encode_uleb128(len(utf16_units(text))) + encode_mutf8(text) + b'\x00'
  data += b'\x00' * (-len(data) % 4)
  map_off = data_off + len(data)
  data += _map_list(len(ordered), ids_off, data_off, map_off)

  header = bytearray(HEADER_SIZE)
  header[0:8] = b'dex\n' + version.encode('ascii') + b'\x00'
  file_size = data_off + len(data)
  struct.pack_into('<LLL', header, 0x20, file_size, HEADER_SIZE, ENDIAN_CONSTANT)
  struct.pack_into('<L', header, 0x34, map_off)
  struct.pack_into('<LL', header, 0x38, len(ordered), ids_off if ordered else 0)
  struct.pack_into('<LL', header, 0x68, len(data), data_off)
  body = bytes(header) + struct.pack(f'<{len(offsets)}L', *offsets) + bytes(data)

  signed = bytearray(body)
  signed[12:32] = hashlib.sha1(body[32:]).digest()
  struct.pack_into('<L', signed, 8, zlib.adler32(bytes(signed[12:])))
  return bytes(signed)
