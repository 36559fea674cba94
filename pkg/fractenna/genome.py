"""Binary pixel genome of the patch.

Gene (i, j) covers pixel row i, column j of the patch; row 0 is the row at the
feed edge. 1 keeps copper, 0 removes it.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from .exceptions import ConfigError
from .schemas import Symmetry


FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True, eq=False)
class Chromosome:
    n: int
    genes: np.ndarray

    def __post_init__(self):
        genes = np.asarray(self.genes)
        if self.n < 1:
            raise ValueError("grid order n must be positive")
        if genes.size != self.n * self.n:
            raise ValueError(f"expected {self.n * self.n} genes, got {genes.size}")
        if not np.isin(genes, (0, 1)).all():
            raise ValueError("genes must be 0 or 1")
        genes = genes.reshape(self.n, self.n).astype(np.uint8)
        genes.setflags(write=False)
        object.__setattr__(self, "genes", genes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Chromosome):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.genes, other.genes)

    def __hash__(self) -> int:
        return hash((self.n, self.genes.tobytes()))

    def __repr__(self) -> str:
        return f"Chromosome(n={self.n}, hex={self.to_hex()})"

    @classmethod
    def ones(cls, n: int) -> "Chromosome":
        return cls(n, np.ones((n, n), dtype=np.uint8))

    @classmethod
    def zeros(cls, n: int) -> "Chromosome":
        return cls(n, np.zeros((n, n), dtype=np.uint8))

    @classmethod
    def from_bits(cls, n: int, bits: Iterable[int]) -> "Chromosome":
        return cls(n, np.fromiter(bits, dtype=np.uint8, count=n * n))

    @classmethod
    def from_hex(cls, n: int, text: str) -> "Chromosome":
        packed = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        bits = np.unpackbits(packed)[: n * n]
        return cls(n, bits)

    @property
    def flat(self) -> np.ndarray:
        return self.genes.reshape(-1)

    @property
    def popcount(self) -> int:
        return int(self.genes.sum())

    def packed(self) -> bytes:
        return np.packbits(self.flat).tobytes()

    def to_hex(self) -> str:
        return self.packed().hex()

    def fnv1a64(self) -> int:
        return fnv1a64(self.packed())

    @property
    def hash_hex(self) -> str:
        return f"{self.fnv1a64():016x}"


# --- symmetry -------------------------------------------------------------

def _free_shape(n: int, symmetry: Symmetry):
    half = (n + 1) // 2
    if symmetry == Symmetry.MIRROR_X:
        return n, half
    if symmetry == Symmetry.QUAD:
        return half, half
    return n, n


def _source_index(n: int, symmetry: Symmetry):
    idx = np.arange(n)
    folded = np.minimum(idx, n - 1 - idx)
    rows = folded if symmetry == Symmetry.QUAD else idx
    cols = folded if symmetry in (Symmetry.MIRROR_X, Symmetry.QUAD) else idx
    return rows, cols


def free_gene_count(n: int, symmetry: Symmetry) -> int:
    r, c = _free_shape(n, symmetry)
    return r * c


def expand(free_bits: np.ndarray, n: int, symmetry: Symmetry) -> Chromosome:
    """Builds the full genome from the free (independent) genes by reflection."""
    r, c = _free_shape(n, symmetry)
    free = np.asarray(free_bits, dtype=np.uint8).reshape(r, c)
    rows, cols = _source_index(n, symmetry)
    return Chromosome(n, free[np.ix_(rows, cols)])


def reduce(chromosome: Chromosome, symmetry: Symmetry) -> np.ndarray:
    """Row-major free genes of a (symmetric) chromosome."""
    r, c = _free_shape(chromosome.n, symmetry)
    return chromosome.genes[:r, :c].reshape(-1).copy()


def symmetrize_or(chromosome: Chromosome, symmetry: Symmetry) -> Chromosome:
    """Union of the genome with its mirror images."""
    g = chromosome.genes.copy()
    if symmetry in (Symmetry.MIRROR_X, Symmetry.QUAD):
        g = g | g[:, ::-1]
    if symmetry == Symmetry.QUAD:
        g = g | g[::-1, :]
    return Chromosome(chromosome.n, g)


def is_symmetric(chromosome: Chromosome, symmetry: Symmetry) -> bool:
    return expand(reduce(chromosome, symmetry), chromosome.n, symmetry) == chromosome


# --- genome files ---------------------------------------------------------

def dump_genome(chromosome: Chromosome) -> str:
    lines = [f"# genome n={chromosome.n}; row 0 = feed edge"]
    lines += ["".join(str(int(b)) for b in row) for row in chromosome.genes]
    return "\n".join(lines) + "\n"


def parse_genome(text: str) -> Chromosome:
    rows = [ln.strip().replace(" ", "") for ln in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError("genome file must hold a square grid of 0/1 characters")
    n = len(rows)
    bits = [int(ch) for r in rows for ch in r if ch in "01"]
    if len(bits) != n * n:
        raise ValueError("genome file must hold only 0/1 characters")
    return Chromosome.from_bits(n, bits)


def load_genome(path: Union[str, Path]) -> Chromosome:
    try:
        return parse_genome(Path(path).read_text(encoding="utf-8"))
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
