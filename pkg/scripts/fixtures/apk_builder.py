"""Package compiled fixtures into APK (ZIP) files.

The standard library zipfile module is the scripted archiver here; the
analyzer's own reader is what the tests exercise.
"""

import zipfile
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from scripts.fixtures.axml_writer import XmlNode, compile_xml
from scripts.fixtures.dex_writer import build_dex

STORED_SUFFIXES = ('.arsc', '.png')


@dataclass
class ApkSpec:
  """Everything needed to write one fixture APK."""

  manifest: XmlNode
  dex: list[list[str]] = field(default_factory=list)
  files: dict[str, bytes] = field(default_factory=dict)

  def entries(self) -> dict[str, bytes]:
    out = {'AndroidManifest.xml': compile_xml(self.manifest)}
    for i, strings in enumerate(self.dex, 1):
      out['classes.dex' if i == 1 else f'classes{i}.dex'] = build_dex(strings)
    out.update(self.files)
    return out


def write_zip(path: Path, entries: Mapping[str, bytes] | Iterable[tuple[str, bytes]]) -> Path:
  """Write entries into a ZIP, deflating everything but resources.arsc and images."""
  items = entries.items() if isinstance(entries, Mapping) else entries
  path.parent.mkdir(parents=True, exist_ok=True)
  with zipfile.ZipFile(path, 'w') as zf:
    for name, data in items:
      method = zipfile.ZIP_STORED if name.endswith(STORED_SUFFIXES) else zipfile.ZIP_DEFLATED
      info = zipfile.ZipInfo(name, date_time=(2024, 1, 1, 0, 0, 0))
      info.compress_type = method
      zf.writestr(info, data)
  return path


def build_apk(path: Path, spec: ApkSpec) -> Path:
  """Write the fixture APK for `spec` to `path`."""
  return write_zip(path, spec.entries())
