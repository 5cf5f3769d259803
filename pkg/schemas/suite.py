"""
Pydantic schema for suite manifests.

A manifest is a TOML file with any number of ``[[check]]`` tables:

    [[check]]
    config = "pierrehumbert_spectrum.toml"
    assert = "abs(results.spectrum.subleading_modulus - 0.7651976866) <= 1e-8"

Config paths are resolved against the manifest's directory.
"""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class SuiteCheck(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    config: str
    assertion: str = Field(alias="assert")
    name: Optional[str] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)


class SuiteManifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    check: List[SuiteCheck] = Field(default_factory=list)
