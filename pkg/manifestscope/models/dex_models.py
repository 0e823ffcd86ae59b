"""DEX string table model."""

from pydantic import BaseModel, ConfigDict, Field


class DexStringTable(BaseModel):
  """The string_ids section of one DEX file, resolved to text."""

  model_config = ConfigDict(frozen=True)

  dex_name: str = Field('classes.dex', description='Archive entry the table came from')
  version: str = Field(..., description='Format version from the magic, e.g. 035')
  strings: tuple[str, ...] = ()
  warnings: tuple[str, ...] = ()
