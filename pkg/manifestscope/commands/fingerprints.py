"""`fingerprints`: inspect the SDK signature database."""

from pathlib import Path

import click
from rich.console import Console
from rich.table import Table

from manifestscope.services.fingerprint_service import resolve_signature_db


@click.group()
def fingerprints() -> None:
  """Signature database commands."""


@fingerprints.command('list')
@click.option(
  '--db',
  'db_path',
  type=click.Path(exists=True, dir_okay=False, path_type=Path),
  help='Signature database (default: $MANIFESTSCOPE_DB or the bundled one)',
)
def list_signatures(db_path: Path | None) -> int:
  """Print every signature with its category and match kind."""
  db = resolve_signature_db(db_path)
  table = Table(title=f'Signature database {db.version} ({len(db.signatures)} signatures)')
  table.add_column('Vendor', no_wrap=True)
  table.add_column('Category')
  table.add_column('Match kind')
  table.add_column('Pattern', overflow='fold')
  for sig in db.signatures:
    table.add_row(sig.vendor, sig.category.value, sig.match_kind.value, sig.pattern)
  Console(width=160).print(table)
  return 0
