from typing import List

from pydantic import BaseModel, ConfigDict, model_validator


class ComplexEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    re: float
    im: float


class MPSFile(BaseModel):
    """On-disk MPS pair; A and B flattened row-major over (q, chi, chi q) and (q, chi q, chi)."""

    model_config = ConfigDict(extra="forbid")

    q: int
    chi: int
    A: List[ComplexEntry]
    B: List[ComplexEntry]

    @model_validator(mode="after")
    def check_sizes(self):
        expected = self.q * self.chi * self.chi * self.q
        if self.q < 2 or self.chi < 1:
            raise ValueError(f"need q >= 2 and chi >= 1, got q={self.q}, chi={self.chi}")
        for name in ("A", "B"):
            size = len(getattr(self, name))
            if size != expected:
                raise ValueError(f"{name} has {size} entries, expected {expected}")
        return self
