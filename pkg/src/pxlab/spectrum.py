"""
Ordered eigenvalue lists with provenance.
"""

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from .errors import DomainError

SPECTRUM_KINDS = ("exact", "descent", "nodal-upper")


@dataclass(frozen=True)
class SpectralValue:
    index: int
    value: float
    kind: str

    def as_dict(self) -> dict:
        return {"j": self.index, "value": self.value, "kind": self.kind}


@dataclass(frozen=True)
class Spectrum:
    """
    Eigenvalue list indexed from j = 1, tagged with its boundary condition.
    """

    entries: Tuple[SpectralValue, ...]
    boundary: str

    def __post_init__(self):
        for entry in self.entries:
            if entry.kind not in SPECTRUM_KINDS:
                raise DomainError(f"unknown spectrum kind {entry.kind!r}")

    @classmethod
    def from_values(cls, values: Iterable[float], boundary: str, kind: str, start: int = 1) -> "Spectrum":
        return cls(
            tuple(SpectralValue(start + i, float(v), kind) for i, v in enumerate(values)),
            boundary,
        )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries], dtype=float)

    @property
    def indices(self) -> np.ndarray:
        return np.array([e.index for e in self.entries], dtype=int)

    def value(self, j: int) -> float:
        for entry in self.entries:
            if entry.index == j:
                return entry.value
        raise KeyError(j)

    def is_nondecreasing(self, rtol: float = 1e-12) -> bool:
        v = self.values
        return bool(np.all(v[1:] >= v[:-1] - rtol * np.maximum(1.0, np.abs(v[:-1]))))

    def as_dict(self) -> dict:
        return {"boundary": self.boundary, "values": [e.as_dict() for e in self.entries]}
