"""2x2 block matrices of NcPoly entries with blocks (NxN, NxM; MxN, MxM)."""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from src.ncalg.polynomial import Base, NcPoly, nc_derive, nc_sum
from src.utils.errors import ShapeMismatch

logger = logging.getLogger(__name__)

DIMS = ("N", "M")


def block_shape(i: int, j: int) -> Tuple[str, str]:
    return (DIMS[i], DIMS[j])


@dataclass(frozen=True)
class BlockMatrix:
    """
    Symbolic (N+M)x(N+M) matrix split into four NcPoly blocks.

    Entry (0, 0) is NxN, (0, 1) NxM, (1, 0) MxN and (1, 1) MxM.
    """

    blocks: Tuple[Tuple[NcPoly, NcPoly], Tuple[NcPoly, NcPoly]]

    def __post_init__(self):
        for i in range(2):
            for j in range(2):
                if self.blocks[i][j].shape != block_shape(i, j):
                    raise ShapeMismatch(
                        f"Block ({i},{j}) has shape {self.blocks[i][j].shape}, expected {block_shape(i, j)}"
                    )

    @classmethod
    def from_blocks(cls, top_left: NcPoly, top_right: NcPoly, bottom_left: NcPoly, bottom_right: NcPoly) -> "BlockMatrix":
        return cls(((top_left, top_right), (bottom_left, bottom_right)))

    @classmethod
    def zero(cls) -> "BlockMatrix":
        return cls(tuple(tuple(NcPoly.zero(block_shape(i, j)) for j in range(2)) for i in range(2)))

    @classmethod
    def diagonal(cls, top, bottom) -> "BlockMatrix":
        """diag(top * I_N, bottom * I_M) for exact scalars."""
        return cls.from_blocks(
            NcPoly.identity("N", top),
            NcPoly.zero(("N", "M")),
            NcPoly.zero(("M", "N")),
            NcPoly.identity("M", bottom),
        )

    @classmethod
    def identity(cls) -> "BlockMatrix":
        return cls.diagonal(1, 1)

    @classmethod
    def sigma(cls) -> "BlockMatrix":
        """Sigma = diag(I_N, -I_M)."""
        return cls.diagonal(1, -1)

    @classmethod
    def weights(cls, w1, w2) -> "BlockMatrix":
        """Weight matrix diag(w1 I_N, w2 I_M)."""
        return cls.diagonal(w1, w2)

    @classmethod
    def potential(cls) -> "BlockMatrix":
        """Q = [[0, u.hat], [u, 0]]."""
        return cls.from_blocks(
            NcPoly.zero(("N", "N")),
            NcPoly.symbol(Base.UHAT),
            NcPoly.symbol(Base.U),
            NcPoly.zero(("M", "M")),
        )

    def __getitem__(self, index) -> NcPoly:
        i, j = index
        return self.blocks[i][j]

    @property
    def is_zero(self) -> bool:
        return all(self.blocks[i][j].is_zero for i in range(2) for j in range(2))

    @property
    def is_block_diagonal(self) -> bool:
        return self.blocks[0][1].is_zero and self.blocks[1][0].is_zero

    def map(self, func) -> "BlockMatrix":
        return BlockMatrix(tuple(tuple(func(self.blocks[i][j]) for j in range(2)) for i in range(2)))

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix(
            tuple(tuple(self.blocks[i][j] + other.blocks[i][j] for j in range(2)) for i in range(2))
        )

    def __neg__(self) -> "BlockMatrix":
        return self.map(lambda p: -p)

    def __sub__(self, other: "BlockMatrix") -> "BlockMatrix":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BlockMatrix):
            return self.matmul(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, factor) -> "BlockMatrix":
        return self.map(lambda p: p.scale(factor))

    def matmul(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix(
            tuple(
                tuple(
                    nc_sum(
                        [self.blocks[i][k] * other.blocks[k][j] for k in range(2)],
                        shape=block_shape(i, j),
                    )
                    for j in range(2)
                )
                for i in range(2)
            )
        )

    def derive(self, rules: Optional[Mapping[Base, NcPoly]] = None) -> "BlockMatrix":
        return self.map(lambda p: nc_derive(p, rules))

    def has_auxiliary(self) -> bool:
        return any(self.blocks[i][j].has_auxiliary() for i in range(2) for j in range(2))

    def max_deriv_order(self) -> int:
        return max(self.blocks[i][j].max_deriv_order() for i in range(2) for j in range(2))

    def to_text(self, indent: str = "") -> str:
        labels = (("[1,1]", "[1,2]"), ("[2,1]", "[2,2]"))
        return "\n".join(
            f"{indent}{labels[i][j]} {self.blocks[i][j].to_text()}" for i in range(2) for j in range(2)
        )

    def to_json(self) -> list:
        return [[self.blocks[i][j].to_json() for j in range(2)] for i in range(2)]


def commutator(a: BlockMatrix, b: BlockMatrix) -> BlockMatrix:
    """[a, b] = ab - ba."""
    return a.matmul(b) - b.matmul(a)
