"""Kernels sampled on a square grid, quadrature weights and kernel CSV files."""

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import simpson

from src.utils.errors import ConfigError, GridMismatch
from src.utils.grid import GridField, uniform_step

logger = logging.getLogger(__name__)

SUPPORTS = ("upper", "lower", "full")
KERNEL_CSV_COLUMNS = ["block", "i", "j", "r", "c", "re", "im"]


def support_mask(size: int, support: str) -> np.ndarray:
    """Boolean (G, G) mask of the entries a kernel of ``support`` may occupy."""
    if support not in SUPPORTS:
        raise ValueError(f"Unknown support '{support}'; expected one of {SUPPORTS}")
    if support == "upper":
        return np.triu(np.ones((size, size), dtype=bool))
    if support == "lower":
        return np.tril(np.ones((size, size), dtype=bool))
    return np.ones((size, size), dtype=bool)


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """
    Matrix kernel K(x_i, x_j) on a uniform grid; values has shape (G, G, rows, cols).

    Entries outside the support are zeroed on construction.
    """

    x: np.ndarray
    values: np.ndarray
    support: str = "full"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        values = np.array(self.values, dtype=complex)
        uniform_step(x, "x")
        if values.ndim != 4 or values.shape[:2] != (len(x), len(x)):
            raise GridMismatch(f"Kernel samples {values.shape} do not match a {len(x)}-point square grid")
        values[~support_mask(len(x), self.support)] = 0
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    @property
    def dx(self) -> float:
        return uniform_step(self.x, "x")

    @property
    def size(self) -> int:
        return len(self.x)

    @property
    def block_shape(self) -> Tuple[int, int]:
        return self.values.shape[2], self.values.shape[3]

    def diagonal(self) -> np.ndarray:
        """K(x_i, x_i) with shape (G, rows, cols)."""
        idx = np.arange(self.size)
        return self.values[idx, idx]

    def outside_support(self) -> float:
        """Largest magnitude outside the support (0.0 by construction)."""
        outside = ~support_mask(self.size, self.support)
        return float(np.max(np.abs(self.values[outside]))) if outside.any() else 0.0


@dataclass(frozen=True, eq=False)
class GlmSolution:
    """
    Solved kernels A (NxN), B (NxM), C (MxN), D (MxM), all upper-supported.

    u.hat = h B(x, x) and u = -h C(x, x) with h = w1 - w2.
    """

    a: Kernel2D
    b: Kernel2D
    c: Kernel2D
    d: Kernel2D
    w1: complex
    w2: complex

    @property
    def x(self) -> np.ndarray:
        return self.b.x

    @property
    def h(self) -> complex:
        return self.w1 - self.w2

    @property
    def b_diag(self) -> np.ndarray:
        return self.b.diagonal()

    @property
    def c_diag(self) -> np.ndarray:
        return self.c.diagonal()

    @property
    def u(self) -> np.ndarray:
        return -self.h * self.c_diag

    @property
    def uhat(self) -> np.ndarray:
        return self.h * self.b_diag

    def blocks(self) -> Dict[str, Kernel2D]:
        return {"A": self.a, "B": self.b, "C": self.c, "D": self.d}

    def field(self, t: float = 0.0, flow: Optional[int] = None) -> GridField:
        """Reconstructed potential as a single-time GridField."""
        return GridField(x=self.x, t=[t], u=self.u[None], uhat=self.uhat[None], flow=flow, label="glm")


def trapezoid_weights(n: int, dx: float) -> np.ndarray:
    """Composite trapezoid weights on n uniform points (n = 1 gives a zero-length rule)."""
    if n < 1:
        raise ValueError(f"Need at least one point, got {n}")
    weights = np.full(n, dx)
    if n == 1:
        return np.zeros(1)
    weights[0] = weights[-1] = dx / 2
    return weights


@lru_cache(maxsize=None)
def _simpson_unit_weights(n: int) -> Tuple[float, ...]:
    if n == 1:
        return (0.0,)
    if n == 2:
        return (0.5, 0.5)
    # weights of scipy's composite rule, read off from the unit vectors
    return tuple(float(w) for w in simpson(np.eye(n), dx=1.0, axis=1))


def simpson_weights(n: int, dx: float) -> np.ndarray:
    """Composite Simpson weights on n uniform points (trapezoid for n = 2, zero for n = 1)."""
    if n < 1:
        raise ValueError(f"Need at least one point, got {n}")
    return np.asarray(_simpson_unit_weights(n)) * dx


def sample_kernel(kernel, x: np.ndarray, t: Optional[float] = None) -> Tuple[Kernel2D, Kernel2D]:
    """Sample a LinearKernel pair (f, f.hat) on the square grid x_i, x_j."""
    f, f_hat = kernel.sample_square(x, t)
    return Kernel2D(x=x, values=f), Kernel2D(x=x, values=f_hat)


def kernel_frame(kernels: Dict[str, Kernel2D], threshold: float = 0.0) -> pd.DataFrame:
    """Long-format table with columns block, i, j, r, c, x, z, re, im."""
    frames = []
    for name, kernel in kernels.items():
        g, _, rows, cols = kernel.values.shape
        i, j, r, c = np.meshgrid(np.arange(g), np.arange(g), np.arange(rows), np.arange(cols), indexing="ij")
        values = kernel.values.ravel()
        keep = np.abs(values) > threshold if threshold > 0 else np.ones(values.shape, dtype=bool)
        frames.append(pd.DataFrame({
            "block": name,
            "i": i.ravel()[keep],
            "j": j.ravel()[keep],
            "r": r.ravel()[keep],
            "c": c.ravel()[keep],
            "x": kernel.x[i.ravel()[keep]],
            "z": kernel.x[j.ravel()[keep]],
            "re": values.real[keep],
            "im": values.imag[keep],
        }))
    return pd.concat(frames, ignore_index=True)


def write_kernel_csv(path: str, kernels: Dict[str, Kernel2D]) -> str:
    """Write kernels to CSV in long format; returns the path."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    kernel_frame(kernels).to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote kernel table: {path}")
    return path


def read_kernel_csv(path: str, x: np.ndarray, shapes: Optional[Dict[str, Tuple[int, int]]] = None) -> Dict[str, Kernel2D]:
    """
    Read kernels written by write_kernel_csv (or hand-made with columns block, i, j, re, im
    and optional r, c for matrix blocks).

    Args:
        path: CSV file
        x: Grid the indices i, j refer to
        shapes: Optional block shapes; inferred from the largest r, c otherwise

    Raises:
        FileNotFoundError: If the file is missing
        ConfigError: If columns are missing or indices fall outside the grid
    """
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"Kernel file not found: {path}\n"
            f"Expected CSV columns: {KERNEL_CSV_COLUMNS}"
        )
    frame = pd.read_csv(path)
    required = ["block", "i", "j", "re", "im"]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ConfigError("kernel.path", f"Missing required columns in {path}: {missing}")
    if "r" not in frame.columns:
        frame["r"] = 0
    if "c" not in frame.columns:
        frame["c"] = 0

    x = np.asarray(x, dtype=float)
    g = len(x)
    if frame.empty:
        raise ConfigError("kernel.path", f"No kernel rows in {path}")
    if (frame[["i", "j"]] < 0).any().any() or (frame[["i", "j"]] >= g).any().any():
        raise ConfigError("kernel.path", f"Indices in {path} fall outside the {g}-point grid")

    kernels = {}
    for name, rows in frame.groupby("block"):
        if shapes and name in shapes:
            shape = shapes[name]
        else:
            shape = (int(rows["r"].max()) + 1, int(rows["c"].max()) + 1)
        values = np.zeros((g, g) + tuple(shape), dtype=complex)
        values[rows["i"].to_numpy(), rows["j"].to_numpy(), rows["r"].to_numpy(), rows["c"].to_numpy()] = (
            rows["re"].to_numpy() + 1j * rows["im"].to_numpy()
        )
        kernels[str(name)] = Kernel2D(x=x, values=values)
    logger.info(f"Read kernel blocks {sorted(kernels)} from {path}")
    return kernels
