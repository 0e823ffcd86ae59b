"""APK container reader.

Parses the ZIP end-of-central-directory record and the central directory
directly. Opening reads only the file tail and the directory; entry bodies are
read by offset and inflated with zlib on demand.
"""

import logging
import os
import re
import struct
import zlib
from pathlib import Path

from manifestscope.errors import (
  CorruptEntry,
  DuplicateEntry,
  EntryNotFound,
  EntryTooLarge,
  NotAZip,
  TruncatedArchive,
  UnsafeEntryName,
  UnsupportedArchiveFeature,
  UnsupportedCompressionMethod,
)
from manifestscope.models.archive_models import ApkArchive, ArchiveEntry, CompressionMethod

logger = logging.getLogger(__name__)

# End of central directory record
STRUCT_END_ARCHIVE = '<4s4H2LH'
STRING_END_ARCHIVE = b'PK\x05\x06'
SIZE_END_ARCHIVE = struct.calcsize(STRUCT_END_ARCHIVE)
STRING_END_ARCHIVE64_LOCATOR = b'PK\x06\x07'
SIZE_END_ARCHIVE64_LOCATOR = 20
MAX_COMMENT = 0xFFFF
TAIL_SIZE = SIZE_END_ARCHIVE64_LOCATOR + SIZE_END_ARCHIVE + MAX_COMMENT

# Central directory file header
STRUCT_CENTRAL_DIR = '<4s6H3L5H2L'
STRING_CENTRAL_DIR = b'PK\x01\x02'
SIZE_CENTRAL_DIR = struct.calcsize(STRUCT_CENTRAL_DIR)

# Local file header
STRUCT_FILE_HEADER = '<4s5H3L2H'
STRING_FILE_HEADER = b'PK\x03\x04'
SIZE_FILE_HEADER = struct.calcsize(STRUCT_FILE_HEADER)

FLAG_ENCRYPTED = 0x1
FLAG_UTF8 = 0x800

METHODS = {0: CompressionMethod.STORED, 8: CompressionMethod.DEFLATE}

DEX_ENTRY = re.compile(r'^classes(\d*)\.dex$')


def _find_end_record(data: bytes) -> int:
  """Offset of the EOCD record whose comment length fits the file."""
  search_start = max(0, len(data) - SIZE_END_ARCHIVE - MAX_COMMENT)
  offset = data.rfind(STRING_END_ARCHIVE, search_start)
  while offset != -1:
    if offset + SIZE_END_ARCHIVE <= len(data):
      (comment_len,) = struct.unpack_from('<H', data, offset + SIZE_END_ARCHIVE - 2)
      if offset + SIZE_END_ARCHIVE + comment_len <= len(data):
        return offset
    offset = data.rfind(STRING_END_ARCHIVE, search_start, offset)
  raise NotAZip('End of central directory signature not found')


def _normalize_name(raw: str) -> str:
  """Normalize separators and reject names that escape the archive root."""
  name = raw.replace('\\', '/').lstrip('/')
  if any(part == '..' for part in name.split('/')):
    raise UnsafeEntryName(f"Entry name '{raw}' contains a '..' segment")
  return name


def _read_central_directory(data: bytes, cd_offset: int, count: int):
  """Yield ArchiveEntry records from the central directory bytes read at `cd_offset`."""
  pos = 0
  end = len(data)
  for _ in range(count):
    if pos + SIZE_CENTRAL_DIR > end:
      raise TruncatedArchive('Central directory ends before its declared entry count')
    (
      signature,
      _version_made,
      _version_needed,
      flags,
      method,
      _mtime,
      _mdate,
      crc,
      csize,
      usize,
      name_len,
      extra_len,
      comment_len,
      _disk_start,
      _internal_attr,
      _external_attr,
      local_offset,
    ) = struct.unpack_from(STRUCT_CENTRAL_DIR, data, pos)
    if signature != STRING_CENTRAL_DIR:
      raise TruncatedArchive(
        f'Bad central directory signature at offset 0x{cd_offset + pos:x}'
      )
    name_start = pos + SIZE_CENTRAL_DIR
    if name_start + name_len + extra_len + comment_len > end:
      raise TruncatedArchive('Central directory record runs past the directory end')
    raw_name = data[name_start : name_start + name_len]
    encoding = 'utf-8' if flags & FLAG_UTF8 else 'cp437'
    name = _normalize_name(raw_name.decode(encoding, 'replace'))
    if flags & FLAG_ENCRYPTED:
      raise UnsupportedArchiveFeature(f"Entry '{name}' is encrypted")
    if 0xFFFFFFFF in (csize, usize, local_offset):
      raise UnsupportedArchiveFeature(f"Entry '{name}' requires ZIP64")
    if method not in METHODS:
      raise UnsupportedCompressionMethod(name, method)
    yield ArchiveEntry(
      name=name,
      compressed_size=csize,
      uncompressed_size=usize,
      method=METHODS[method],
      crc32=crc,
      flags=flags,
      local_header_offset=local_offset,
    )
    pos = name_start + name_len + extra_len + comment_len


def open_archive(path: str | Path) -> ApkArchive:
  """Parse the central directory of an APK.

  Args:
    path: APK (ZIP) file on disk.

  Returns:
    ApkArchive with the entry catalog; no bodies are inflated.

  Raises:
    NotAZip: no EOCD record.
    TruncatedArchive: the directory lies outside the file.
    UnsupportedCompressionMethod: a method other than stored/deflate.
    UnsupportedArchiveFeature: ZIP64, spanning or encryption.
  """
  path = Path(path)
  with open(path, 'rb') as f:
    tail_start = max(0, f.seek(0, os.SEEK_END) - TAIL_SIZE)
    f.seek(tail_start)
    tail = f.read()
    end_record = _find_end_record(tail)
    (
      _signature,
      disk_number,
      cd_disk,
      disk_entries,
      total_entries,
      cd_size,
      cd_offset,
      _comment_len,
    ) = struct.unpack_from(STRUCT_END_ARCHIVE, tail, end_record)

    locator = end_record - SIZE_END_ARCHIVE64_LOCATOR
    if locator >= 0 and tail[locator : locator + 4] == STRING_END_ARCHIVE64_LOCATOR:
      raise UnsupportedArchiveFeature('ZIP64 archives are not supported')
    if 0xFFFF in (disk_entries, total_entries) or 0xFFFFFFFF in (cd_size, cd_offset):
      raise UnsupportedArchiveFeature('ZIP64 archives are not supported')
    if disk_number != 0 or cd_disk != 0 or disk_entries != total_entries:
      raise UnsupportedArchiveFeature('Multi-disk archives are not supported')
    if cd_offset + cd_size > tail_start + end_record:
      raise TruncatedArchive(
        f'Central directory (offset 0x{cd_offset:x}, size {cd_size}) overlaps the EOCD record'
      )
    f.seek(cd_offset)
    directory = f.read(cd_size)

  entries: list[ArchiveEntry] = []
  seen: set[str] = set()
  for entry in _read_central_directory(directory, cd_offset, total_entries):
    if entry.name in seen:
      raise DuplicateEntry(f"Entry '{entry.name}' appears more than once")
    seen.add(entry.name)
    if entry.local_header_offset + SIZE_FILE_HEADER > cd_offset:
      raise TruncatedArchive(f"Local header of '{entry.name}' lies outside the data area")
    entries.append(entry)

  logger.debug('Opened %s with %d entries', path, len(entries))
  return ApkArchive(source_path=path, entries=tuple(entries))


def _inflate(name: str, payload: bytes, expected: int) -> bytes:
  """Raw-deflate decompress without producing more than `expected` bytes."""
  inflater = zlib.decompressobj(-zlib.MAX_WBITS)
  try:
    body = inflater.decompress(payload, expected + 1)
    if len(body) <= expected:
      body += inflater.flush()
  except zlib.error as e:
    raise CorruptEntry(name, f'deflate stream error: {e}') from e
  if len(body) > expected:
    raise CorruptEntry(name, f'inflates past declared size {expected}')
  if not inflater.eof:
    raise CorruptEntry(name, 'deflate stream is incomplete')
  return body


def read_entry(archive: ApkArchive, name: str, max_bytes: int | None = None) -> bytes:
  """Return the decompressed body of one entry.

  Args:
    archive: catalog from open_archive.
    name: normalized entry name.
    max_bytes: optional ceiling on the declared uncompressed size.

  Raises:
    EntryNotFound: the name is not in the catalog.
    CorruptEntry: bad local header, short body, inflate failure or CRC mismatch.
    EntryTooLarge: the declared size exceeds max_bytes.
  """
  entry = archive.get(name)
  if entry is None:
    raise EntryNotFound(name)
  if max_bytes is not None and entry.uncompressed_size > max_bytes:
    raise EntryTooLarge(
      f"Entry '{name}' declares {entry.uncompressed_size} bytes, limit is {max_bytes}"
    )

  with open(archive.source_path, 'rb') as f:
    f.seek(entry.local_header_offset)
    header = f.read(SIZE_FILE_HEADER)
    if len(header) != SIZE_FILE_HEADER:
      raise CorruptEntry(name, 'local header is truncated')
    fields = struct.unpack(STRUCT_FILE_HEADER, header)
    if fields[0] != STRING_FILE_HEADER:
      raise CorruptEntry(name, 'bad local header signature')
    name_len, extra_len = fields[9], fields[10]
    f.seek(entry.local_header_offset + SIZE_FILE_HEADER + name_len + extra_len)
    payload = f.read(entry.compressed_size)

  if len(payload) != entry.compressed_size:
    raise CorruptEntry(name, 'body is shorter than its compressed size')

  if entry.method is CompressionMethod.STORED:
    if entry.compressed_size != entry.uncompressed_size:
      raise CorruptEntry(name, 'stored entry sizes disagree')
    body = payload
  else:
    body = _inflate(name, payload, entry.uncompressed_size)

  if len(body) != entry.uncompressed_size:
    raise CorruptEntry(name, f'inflated to {len(body)} bytes, expected {entry.uncompressed_size}')
  if zlib.crc32(body) != entry.crc32:
    raise CorruptEntry(name, 'CRC-32 mismatch')
  return body


def list_dex_entries(archive: ApkArchive) -> list[str]:
  """Root-level classes*.dex entries in multidex order."""
  found = []
  for name in archive.names():
    m = DEX_ENTRY.match(name)
    if m:
      found.append((int(m.group(1) or 1), name))
  return [name for _, name in sorted(found)]
