"""`inspect`: show the decoded manifest of one APK."""

import os
from pathlib import Path

import click
from lxml import etree

from manifestscope.services.analysis_service import MANIFEST_ENTRY
from manifestscope.services.archive_service import open_archive, read_entry
from manifestscope.services.axml_service import decode_axml, to_etree
from manifestscope.services.manifest_service import extract_facts


@click.command()
@click.option('--facts', 'show_facts', is_flag=True, help='Print extracted facts as JSON instead')
@click.argument('apk', type=click.Path(exists=True, dir_okay=False, path_type=Path))
def inspect(show_facts: bool, apk: Path) -> int:
  """Pretty-print AndroidManifest.xml from APK."""
  archive = open_archive(apk)
  max_bytes = int(os.getenv('MANIFESTSCOPE_MAX_ENTRY_MB', '256')) * 1024 * 1024
  doc = decode_axml(read_entry(archive, MANIFEST_ENTRY, max_bytes))
  if show_facts:
    click.echo(extract_facts(doc, archive).model_dump_json(indent=2))
  else:
    xml = etree.tostring(to_etree(doc), pretty_print=True, encoding='unicode')
    click.echo(xml, nl=False)
  for warning in doc.warnings:
    click.echo(f'warning: {warning}', err=True)
  return 0
