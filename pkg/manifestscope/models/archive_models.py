"""APK container models."""

from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field


class CompressionMethod(str, Enum):
  """ZIP compression methods the reader accepts."""

  STORED = 'stored'
  DEFLATE = 'deflate'


class ArchiveEntry(BaseModel):
  """One central-directory record."""

  model_config = ConfigDict(frozen=True)

  name: str = Field(..., description='Archive-relative path after normalization')
  compressed_size: int = Field(..., ge=0)
  uncompressed_size: int = Field(..., ge=0)
  method: CompressionMethod
  crc32: int = Field(..., ge=0, description='CRC-32 of the uncompressed body')
  flags: int = Field(0, ge=0, description='General purpose bit flags')
  local_header_offset: int = Field(..., ge=0)

  @property
  def is_dir(self) -> bool:
    """Whether the entry is a directory placeholder."""
    return self.name.endswith('/')


class ApkArchive(BaseModel):
  """Entry catalog of an opened APK. Bodies are read on demand."""

  model_config = ConfigDict(frozen=True)

  source_path: Path
  entries: tuple[ArchiveEntry, ...] = ()

  def names(self) -> list[str]:
    """Entry names in central-directory order."""
    return [entry.name for entry in self.entries]

  def get(self, name: str) -> ArchiveEntry | None:
    """Look up an entry by normalized name."""
    for entry in self.entries:
      if entry.name == name:
        return entry
    return None

  def __contains__(self, name: object) -> bool:
    return isinstance(name, str) and self.get(name) is not None
