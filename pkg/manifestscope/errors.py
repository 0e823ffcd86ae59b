"""Exception hierarchy for the analyzer.

Every error an operation can raise is a leaf class here, grouped by the module
that raises it. Callers that only need "this APK could not be analyzed" catch
ManifestScopeError.
"""


class ManifestScopeError(Exception):
  """Root of all analyzer errors."""


# Container


class ArchiveError(ManifestScopeError):
  """Base for APK/ZIP container failures."""


class NotAZip(ArchiveError):
  """No end-of-central-directory record was found."""


class TruncatedArchive(ArchiveError):
  """The central directory points outside the file or ends early."""


class UnsupportedCompressionMethod(ArchiveError):
  """An entry uses a method other than stored or deflate."""

  def __init__(self, name: str, method: int):
    super().__init__(f"Entry '{name}' uses unsupported compression method {method}")
    self.name = name
    self.method = method


class UnsupportedArchiveFeature(ArchiveError):
  """ZIP64, multi-disk or encrypted archives."""


class UnsafeEntryName(ArchiveError):
  """An entry name escapes the archive root with a `..` segment."""


class DuplicateEntry(ArchiveError):
  """Two entries share a name after normalization."""


class EntryNotFound(ArchiveError):
  """The requested entry is not in the catalog."""

  def __init__(self, name: str):
    super().__init__(f"Entry '{name}' not found in archive")
    self.name = name


class CorruptEntry(ArchiveError):
  """Decompression failed, the body is short, or the CRC does not match."""

  def __init__(self, name: str, reason: str):
    super().__init__(f"Entry '{name}' is corrupt: {reason}")
    self.name = name
    self.reason = reason


class EntryTooLarge(ArchiveError):
  """An entry's declared size exceeds the configured inflate ceiling."""


# Binary XML


class AxmlError(ManifestScopeError):
  """Base for binary XML decoding failures."""


class NotBinaryXml(AxmlError):
  """The data does not start with the XML document chunk header."""


class MalformedChunk(AxmlError):
  """A chunk size or offset is inconsistent with its container."""

  def __init__(self, message: str, offset: int | None = None):
    if offset is not None:
      message = f'{message} (at offset 0x{offset:x})'
    super().__init__(message)
    self.offset = offset


class InvalidXmlName(AxmlError):
  """An element name that cannot be represented in XML."""


class DanglingStringIndex(AxmlError):
  """A string reference points past the end of the string pool."""

  def __init__(self, index: int, pool_size: int):
    super().__init__(f'String index {index} outside pool of {pool_size} strings')
    self.index = index
    self.pool_size = pool_size


# DEX


class DexError(ManifestScopeError):
  """Base for DEX string-table failures."""


class NotADex(DexError):
  """The magic is not `dex\\n0NN\\0`."""


class TruncatedDex(DexError):
  """The header or a section ends before its declared size."""


class BadStringOffset(DexError):
  """A string_data_off points outside the file."""

  def __init__(self, index: int, offset: int):
    super().__init__(f'String {index} has data offset 0x{offset:x} outside the file')
    self.index = index
    self.offset = offset


# Manifest


class ManifestError(ManifestScopeError):
  """Base for manifest extraction failures."""


class NotAManifest(ManifestError):
  """The decoded document's root element is not `manifest`."""


class MalformedPermissionTable(ManifestError):
  """The permission classification file has a bad line."""


# Fingerprints


class SignatureError(ManifestScopeError):
  """Base for signature database failures."""


class MalformedSignatureFile(SignatureError):
  """A signature line does not follow the tab-separated format."""

  def __init__(self, line: int, reason: str):
    super().__init__(f'Signature file line {line}: {reason}')
    self.line = line
    self.reason = reason


class DuplicateSignature(SignatureError):
  """The same signature appears twice."""

  def __init__(self, line: int, first_line: int):
    super().__init__(f'Signature file line {line} duplicates line {first_line}')
    self.line = line
    self.first_line = first_line


# Risk


class PolicyError(ManifestScopeError):
  """Base for risk policy failures."""


class MalformedPolicy(PolicyError):
  """The policy file has an unknown key or a non-positive value."""


# Report


class ReportError(ManifestScopeError):
  """Base for aggregation and report I/O failures."""


class DuplicateAppId(ReportError):
  """Two assessments share an app id."""


class MisalignedInputs(ReportError):
  """Assessments, facts and hits lists differ in length."""


class MissingLabeling(ReportError):
  """Cohort mode was requested but the labeling file is missing."""


class MalformedLabeling(ReportError):
  """The labeling CSV lacks the app_id/cohort columns or repeats an id."""


class MalformedReport(ReportError):
  """A per-app report file does not parse."""
