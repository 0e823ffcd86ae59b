"""Third-party SDK fingerprinting.

Signatures come from a tab-separated database; matching looks at manifest
meta-data keys, component classes, requested permissions and class names
recovered from DEX string tables.
"""

import logging
import os
import re
from bisect import bisect_left
from collections.abc import Iterable, Mapping
from functools import lru_cache
from importlib import resources
from pathlib import Path

from manifestscope.errors import DuplicateSignature, MalformedSignatureFile
from manifestscope.models.fingerprint_models import (
  Evidence,
  EvidenceSource,
  FingerprintCoverage,
  MatchKind,
  SdkCategory,
  SdkHit,
  SdkSignature,
  SignatureDatabase,
)
from manifestscope.models.manifest_models import ManifestFacts

logger = logging.getLogger(__name__)

VERSION_HEADER = re.compile(r'^#\s*version:\s*(\S+)\s*$')
DEX_ORIGIN_UNKNOWN = 'classes.dex'

ClassOrigins = Mapping[str, str]


def _parse(data: bytes) -> SignatureDatabase:
  try:
    text = data.decode('utf-8')
  except UnicodeDecodeError as e:
    raise MalformedSignatureFile(_line_of(data, e.start), 'not valid UTF-8') from e

  version = 'unversioned'
  signatures: list[SdkSignature] = []
  first_seen: dict[SdkSignature, int] = {}
  for line_no, raw in enumerate(text.splitlines(), 1):
    line = raw.strip()
    if not line:
      continue
    if line.startswith('#'):
      m = VERSION_HEADER.match(line)
      if m and not signatures:
        version = m.group(1)
      continue
    fields = [field.strip() for field in raw.rstrip('\r\n').split('\t')]
    if len(fields) != 4:
      raise MalformedSignatureFile(line_no, f'expected 4 tab-separated fields, got {len(fields)}')
    vendor, category, match_kind, pattern = fields
    if not vendor or not pattern:
      raise MalformedSignatureFile(line_no, 'vendor and pattern must be non-empty')
    try:
      signature = SdkSignature(
        vendor=vendor,
        category=SdkCategory(category),
        match_kind=MatchKind(match_kind),
        pattern=pattern,
      )
    except ValueError as e:
      raise MalformedSignatureFile(line_no, f'unknown category or match kind ({e})') from e
    if signature in first_seen:
      raise DuplicateSignature(line_no, first_seen[signature])
    first_seen[signature] = line_no
    signatures.append(signature)
  return SignatureDatabase(version=version, signatures=tuple(signatures))


def _line_of(data: bytes, offset: int) -> int:
  """1-based line number of a byte offset."""
  return data.count(b'\n', 0, offset) + 1


def load_signatures(db: bytes) -> list[SdkSignature]:
  """Parse and validate a signature file.

  Raises:
    MalformedSignatureFile: a line does not have 4 valid fields.
    DuplicateSignature: the same signature appears twice.
  """
  return list(_parse(db).signatures)


def load_signature_db(db: bytes) -> SignatureDatabase:
  """Like load_signatures, keeping the `# version:` header."""
  return _parse(db)


@lru_cache(maxsize=1)
def default_signature_db() -> SignatureDatabase:
  """The database bundled with the package."""
  data = resources.files('manifestscope.data').joinpath('signatures.tsv').read_bytes()
  return _parse(data)


def resolve_signature_db(path: str | Path | None = None) -> SignatureDatabase:
  """Load the database from an explicit path, MANIFESTSCOPE_DB, or the bundled file."""
  path = path or os.getenv('MANIFESTSCOPE_DB')
  if not path:
    return default_signature_db()
  logger.info('Loading signature database from %s', path)
  return _parse(Path(path).read_bytes())


def prefix_matches(pattern: str, name: str) -> bool:
  """Dotted prefix with a package boundary: `a.b` matches `a.b` and `a.b.C`."""
  return name == pattern or name.startswith(pattern + '.')


def signature_matches(signature: SdkSignature, evidence: str) -> bool:
  """Re-check a single signature against a single evidence string."""
  if signature.match_kind is MatchKind.PACKAGE_PREFIX:
    return prefix_matches(signature.pattern, evidence)
  return evidence == signature.pattern


class _ClassIndex:
  """Sorted class names for prefix lookups."""

  def __init__(self, origins: ClassOrigins):
    self.origins = origins
    self.names = sorted(origins)

  def first_under(self, pattern: str) -> str | None:
    """Smallest class name equal to or below the package pattern."""
    i = bisect_left(self.names, pattern)
    if i < len(self.names) and self.names[i] == pattern:
      return pattern
    i = bisect_left(self.names, pattern + '.')
    if i < len(self.names) and self.names[i].startswith(pattern + '.'):
      return self.names[i]
    return None


def _as_origins(prefixes: Iterable[str] | ClassOrigins) -> ClassOrigins:
  if isinstance(prefixes, Mapping):
    return prefixes
  return {name: DEX_ORIGIN_UNKNOWN for name in prefixes}


def _candidates(
  facts: ManifestFacts, index: _ClassIndex, sigs: Iterable[SdkSignature]
) -> Iterable[SdkHit]:
  """Every (signature, evidence) pair in evidence-source order."""
  sigs = list(sigs)
  by_kind = {kind: [s for s in sigs if s.match_kind is kind] for kind in MatchKind}

  metadata_names = [name for name, _ in facts.metadata_keys]
  for sig in by_kind[MatchKind.METADATA_KEY]:
    if sig.pattern in metadata_names:
      yield SdkHit(
        signature=sig,
        evidence=Evidence(source=EvidenceSource.MANIFEST_METADATA, matched=sig.pattern),
      )

  component_names = [c.name for c in facts.components]
  for sig in by_kind[MatchKind.COMPONENT_CLASS]:
    if sig.pattern in component_names:
      yield SdkHit(
        signature=sig,
        evidence=Evidence(source=EvidenceSource.MANIFEST_COMPONENT, matched=sig.pattern),
      )
  for sig in by_kind[MatchKind.PACKAGE_PREFIX]:
    for name in component_names:
      if prefix_matches(sig.pattern, name):
        yield SdkHit(
          signature=sig,
          evidence=Evidence(source=EvidenceSource.MANIFEST_COMPONENT, matched=name),
        )
        break

  permission_names = facts.permission_names()
  for sig in by_kind[MatchKind.PERMISSION_NAME]:
    if sig.pattern in permission_names:
      yield SdkHit(
        signature=sig,
        evidence=Evidence(source=EvidenceSource.MANIFEST_PERMISSION, matched=sig.pattern),
      )

  for sig in by_kind[MatchKind.PACKAGE_PREFIX]:
    name = index.first_under(sig.pattern)
    if name is not None:
      yield SdkHit(
        signature=sig,
        evidence=Evidence(
          source=EvidenceSource.DEX_STRING, matched=name, dex_name=index.origins[name]
        ),
      )


def match(
  facts: ManifestFacts,
  prefixes: Iterable[str] | ClassOrigins,
  sigs: Iterable[SdkSignature],
) -> list[SdkHit]:
  """Match signatures against one app.

  Args:
    facts: extracted manifest facts.
    prefixes: dotted class names recovered from DEX, either a plain set or a
      mapping of class name to the DEX file it came from.
    sigs: the signature list.

  Returns:
    One hit per (vendor, category), keeping the first evidence found in the
    order metadata, components, permissions, DEX.
  """
  index = _ClassIndex(_as_origins(prefixes))
  hits: dict[tuple[str, SdkCategory], SdkHit] = {}
  for hit in _candidates(facts, index, sigs):
    hits.setdefault((hit.vendor, hit.category), hit)
  return list(hits.values())


def known_roots(sigs: Iterable[SdkSignature]) -> set[str]:
  """First two package segments of every package-prefix signature."""
  return {
    '.'.join(sig.pattern.split('.')[:2])
    for sig in sigs
    if sig.match_kind is MatchKind.PACKAGE_PREFIX
  }


def fingerprint_coverage(
  prefixes: Iterable[str] | ClassOrigins, sigs: Iterable[SdkSignature]
) -> FingerprintCoverage:
  """DEX when any recovered class sits under a known vendor root.

  Apps whose class names were stripped by an obfuscator only get manifest
  evidence, which the report flags.
  """
  index = _ClassIndex(_as_origins(prefixes))
  for root in sorted(known_roots(sigs)):
    if index.first_under(root) is not None:
      return FingerprintCoverage.DEX
  return FingerprintCoverage.MANIFEST_ONLY
