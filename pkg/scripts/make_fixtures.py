"""Write the synthetic fixture corpus to disk."""

from pathlib import Path

import click

from scripts.fixtures.corpus import CHILDREN, cohort_corpus, write_corpus


@click.command()
@click.option(
  '--output',
  default='fixtures/corpus',
  help='Directory for the fixture APKs and labels.csv',
  type=click.Path(file_okay=False, path_type=Path),
)
def main(output: Path):
  """Build the two-cohort fixture corpus."""
  paths = write_corpus(output)
  children = sum(app.cohort == CHILDREN for app in cohort_corpus())
  print(f'[make_fixtures] {len(paths)} APKs ({children} children-oriented) written to {output}')


if __name__ == '__main__':
  main()
