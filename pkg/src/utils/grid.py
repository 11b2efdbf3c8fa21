"""Sampled block fields on uniform space-time grids."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.utils.errors import GridMismatch

logger = logging.getLogger(__name__)


def uniform_step(points: np.ndarray, name: str) -> float:
    """
    Return the step of a uniform 1D grid.

    Args:
        points: Grid coordinates
        name: Axis name used in error messages

    Returns:
        Grid spacing (0.0 for a single point)

    Raises:
        GridMismatch: If the grid is not strictly increasing and uniform
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 1:
        raise GridMismatch(f"{name} grid must be one-dimensional, got shape {points.shape}")
    if len(points) < 2:
        return 0.0
    steps = np.diff(points)
    step = float(steps.mean())
    if step <= 0 or not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
        raise GridMismatch(f"{name} grid is not uniform and increasing")
    return step


@dataclass(frozen=True, eq=False)
class GridField:
    """
    Complex block field (u, u.hat) sampled on a uniform space-time grid.

    u has shape (T, X, M, N) and uhat has shape (T, X, N, M). ``flow`` labels the
    hierarchy time the samples were taken along (None for a single snapshot or
    an unlabelled trajectory).
    """

    x: np.ndarray
    t: np.ndarray
    u: np.ndarray
    uhat: np.ndarray
    flow: Optional[int] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.atleast_1d(np.asarray(self.t, dtype=float))
        u = np.asarray(self.u, dtype=complex)
        uhat = np.asarray(self.uhat, dtype=complex)
        if u.ndim != 4 or uhat.ndim != 4:
            raise GridMismatch(f"u and uhat must be 4D (T, X, rows, cols), got {u.shape} and {uhat.shape}")
        if u.shape[:2] != (len(t), len(x)) or uhat.shape[:2] != (len(t), len(x)):
            raise GridMismatch(
                f"Samples {u.shape[:2]} / {uhat.shape[:2]} do not match grid (T={len(t)}, X={len(x)})"
            )
        if u.shape[2:] != uhat.shape[2:][::-1]:
            raise GridMismatch(f"u is {u.shape[2:]} but uhat is {uhat.shape[2:]}; expected transposed shapes")
        uniform_step(x, "x")
        uniform_step(t, "t")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "uhat", uhat)

    @property
    def dx(self) -> float:
        return uniform_step(self.x, "x")

    @property
    def dt(self) -> float:
        return uniform_step(self.t, "t")

    @property
    def m(self) -> int:
        return self.u.shape[2]

    @property
    def n(self) -> int:
        return self.u.shape[3]

    @property
    def dims(self) -> dict:
        """Numeric binding of the symbolic dimensions N and M."""
        return {"N": self.n, "M": self.m}

    def snapshot(self, t_index: int) -> "GridField":
        """Single-time field at ``t_index``."""
        return GridField(
            x=self.x,
            t=self.t[t_index:t_index + 1],
            u=self.u[t_index:t_index + 1],
            uhat=self.uhat[t_index:t_index + 1],
            flow=self.flow,
            label=self.label,
        )

    def rescaled(self, time_scale: float, uhat_scale: complex, flow: Optional[int] = None) -> "GridField":
        """
        Change normalisation: new time T = t / time_scale, new uhat = uhat / uhat_scale.

        A negative ``time_scale`` reverses the order of the time levels so the
        new time axis is increasing.

        Args:
            time_scale: Factor tau in t = tau * T
            uhat_scale: Factor p in uhat = p * uhat_new
            flow: Flow label of the result (defaults to the current one)
        """
        if time_scale == 0 or uhat_scale == 0:
            raise ValueError("Rescaling factors must be non-zero")
        if np.iscomplexobj(time_scale) and np.imag(time_scale) != 0:
            raise ValueError(f"Time rescaling must be real, got {time_scale}")
        time_scale = float(np.real(time_scale))
        order = slice(None, None, -1) if time_scale < 0 else slice(None)
        return GridField(
            x=self.x,
            t=(self.t / time_scale)[order],
            u=self.u[order],
            uhat=(self.uhat / uhat_scale)[order],
            flow=self.flow if flow is None else flow,
            label=self.label,
        )

    def with_fields(self, u: np.ndarray, uhat: np.ndarray, label: str = "") -> "GridField":
        """Same grid and flow label, new samples."""
        return GridField(x=self.x, t=self.t, u=u, uhat=uhat, flow=self.flow, label=label or self.label)

    def check_same_grid(self, other: "GridField") -> None:
        """Raise GridMismatch unless ``other`` is sampled on the same grid."""
        if self.x.shape != other.x.shape or not np.allclose(self.x, other.x):
            raise GridMismatch("Fields use different x grids")
        if self.t.shape != other.t.shape or not np.allclose(self.t, other.t):
            raise GridMismatch("Fields use different t grids")

    @classmethod
    def zeros(cls, x: np.ndarray, t: np.ndarray, m: int, n: int, flow: Optional[int] = None) -> "GridField":
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return cls(
            x=x,
            t=t,
            u=np.zeros((len(t), len(x), m, n), dtype=complex),
            uhat=np.zeros((len(t), len(x), n, m), dtype=complex),
            flow=flow,
        )
