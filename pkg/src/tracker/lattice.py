"""Element sequences: focusing/defocusing quadrupole pairs."""

from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from src.gauge.potential_table import PotentialTable

FOCUSING = 1.0
DEFOCUSING = -1.0


@dataclass(frozen=True)
class Element:
    """One magnet: a potential table with a global coefficient sign."""

    table: PotentialTable
    polarity: float = FOCUSING
    label: str = "Q"

    def __post_init__(self):
        if self.polarity not in (FOCUSING, DEFOCUSING):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")

    @property
    def span(self) -> float:
        return self.table.span

    @property
    def z_start(self) -> float:
        return float(self.table.z[0])


@dataclass(frozen=True)
class Lattice:
    """Elements traversed in order; each starts at element-local Z = table.z[0]."""

    elements: List[Element]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("lattice needs at least one element")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __getitem__(self, index: int) -> Element:
        return self.elements[index]

    @property
    def total_span(self) -> float:
        return float(sum(e.span for e in self.elements))

    @property
    def offsets(self) -> np.ndarray:
        """Global Z at the entry of each element."""
        spans = np.array([e.span for e in self.elements])
        return np.concatenate([[0.0], np.cumsum(spans)[:-1]])

    @property
    def n_pairs(self) -> Optional[int]:
        """Number of F/D pairs when the lattice alternates polarity, else None."""
        if len(self) % 2:
            return None
        signs = [e.polarity for e in self.elements]
        if all(signs[k] == -signs[k + 1] for k in range(len(signs) - 1)):
            return len(self) // 2
        return None


def build_fodo(pt: PotentialTable, n_pairs: int, first: float = FOCUSING) -> Lattice:
    """2 * n_pairs copies of ``pt`` with alternating polarity, starting with ``first``."""
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    labels = {FOCUSING: "F", DEFOCUSING: "D"}
    elements = []
    for k in range(2 * n_pairs):
        polarity = first if k % 2 == 0 else -first
        elements.append(Element(pt, polarity, labels[polarity]))
    return Lattice(elements)


def single_element(pt: PotentialTable, polarity: float = FOCUSING) -> Lattice:
    return Lattice([Element(pt, polarity, "F" if polarity > 0 else "D")])
