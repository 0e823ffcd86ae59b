"""Run configuration for the command line."""

from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, PositiveInt


class OutputFormat(str, Enum):
  """Serialization formats for reports."""

  JSON = 'json'
  CSV = 'csv'
  MARKDOWN = 'markdown'


class RunConfig(BaseModel):
  """Validated options for one `analyze` or `report` run."""

  model_config = ConfigDict(frozen=True)

  inputs: tuple[Path, ...] = Field(..., min_length=1, description='APK files or directories')
  labeling_path: Path | None = None
  signature_db_path: Path | None = None
  policy_path: Path | None = None
  output_format: OutputFormat = OutputFormat.JSON
  out_dir: Path | None = None
  anonymize: bool = False
  parallelism: PositiveInt = 1
