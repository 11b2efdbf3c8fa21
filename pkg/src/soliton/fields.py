"""
Exact soliton fields from the discrete dressing construction.

For modes a, b, g the kernel entries are
    f[b,g,a] = exp((Lh_g + L_a) t) exp(-(mu_b + muh_g + kh_g + k_a) x) / ((mu_b + muh_g)(kh_g + k_a))
and P[b,a] = sum_g f[b,g,a] bh_g b_a, M = I - P. The row of coefficients L solves
L M = -B with B_a = b_a exp(L_a t - k_a x); then B(x, z) = sum_b L_b exp(-mu_b z).
The hatted system swaps the roles of (b, kappa, Lambda) and (b.hat, mu.hat, Lambda.hat).
Solves run on balanced coefficients, so |x| of a few tens stays within double range.
Fields: u.hat = h B(x, x), u = -h C(x, x).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.soliton.config import SolitonConfig
from src.utils.errors import PoleAt, SingularM
from src.utils.grid import GridField

logger = logging.getLogger(__name__)

SINGULAR_DET = 1e-12
POLE_TOLERANCE = 1e-12
PROVENANCES = ("closed-form-TL", "matrix-solve-L")


@dataclass(frozen=True, eq=False)
class MSystem:
    """Block systems at a batch of points; leading axes follow the x array."""

    m: np.ndarray
    m_hat: np.ndarray
    rhs: np.ndarray
    rhs_hat: np.ndarray

    @property
    def p(self) -> np.ndarray:
        return np.eye(self.m.shape[-1]) - self.m

    @property
    def p_hat(self) -> np.ndarray:
        return np.eye(self.m_hat.shape[-1]) - self.m_hat


def _kernel_entries(cfg: SolitonConfig, x: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """f[..., b, g, a] and fh[..., b, g, a] at every x."""
    p = cfg.params
    x = np.asarray(x, dtype=float)[..., None, None, None]
    first = p.mu[:, None, None] + p.mu_hat[None, :, None]
    second = p.kappa_hat[None, :, None] + p.kappa[None, None, :]
    growth = (p.lam_hat[None, :, None] + p.lam[None, None, :]) * t
    f = np.exp(growth - (first + second) * x) / (first * second)

    first_hat = p.kappa_hat[:, None, None] + p.kappa[None, :, None]
    second_hat = p.mu[None, :, None] + p.mu_hat[None, None, :]
    growth_hat = (p.lam[None, :, None] + p.lam_hat[None, None, :]) * t
    f_hat = np.exp(growth_hat - (first_hat + second_hat) * x) / (first_hat * second_hat)
    return f, f_hat


def build_m_matrices(cfg: SolitonConfig, x, t: float = 0.0) -> MSystem:
    """
    Assemble M, M.hat and the right-hand sides B, B.hat.

    Args:
        cfg: Soliton data
        x: Points (any shape)
        t: Time of flow ``cfg.flow``

    Returns:
        MSystem with m (..., LM, LM), m_hat (..., LN, LN), rhs (..., N, LM), rhs_hat (..., M, LN)
    """
    p = cfg.params
    x = np.asarray(x, dtype=float)
    big_l, n_dim, m_dim = cfg.modes, cfg.n_dim, cfg.m_dim
    f, f_hat = _kernel_entries(cfg, x, t)

    # P[b, a] = sum_g f[b,g,a] bh_g b_a: blocks (M x M)
    bh_b = np.einsum("gmn,ank->gamk", cfg.b_hat, cfg.b)
    p_blocks = np.einsum("...bga,gamk->...bmak", f, bh_b)
    p_matrix = p_blocks.reshape(x.shape + (big_l * m_dim, big_l * m_dim))

    b_bh = np.einsum("gnm,amk->gank", cfg.b, cfg.b_hat)
    p_hat_blocks = np.einsum("...bga,gank->...bnak", f_hat, b_bh)
    p_hat_matrix = p_hat_blocks.reshape(x.shape + (big_l * n_dim, big_l * n_dim))

    phase = np.exp(p.lam * t - np.multiply.outer(x, p.kappa))
    rhs = np.einsum("...a,anm->...nam", phase, cfg.b).reshape(x.shape + (n_dim, big_l * m_dim))
    phase_hat = np.exp(p.lam_hat * t - np.multiply.outer(x, p.mu_hat))
    rhs_hat = np.einsum("...a,amn->...man", phase_hat, cfg.b_hat).reshape(x.shape + (m_dim, big_l * n_dim))

    return MSystem(
        m=np.eye(big_l * m_dim) - p_matrix,
        m_hat=np.eye(big_l * n_dim) - p_hat_matrix,
        rhs=rhs,
        rhs_hat=rhs_hat,
    )


def _mode_roles(cfg: SolitonConfig, hat: bool):
    """
    (p, q, Lambda, c) of the outer modes and (p', q', Lambda', c') of the inner ones.

    P = U V with U[b, g] = exp(-(p_b + p'_g) x) exp(Lambda'_g t) c'_g / (p_b + p'_g) and
    V[g, a] = exp(-(q'_g + q_a) x) exp(Lambda_a t) c_a / (q'_g + q_a).
    """
    p = cfg.params
    if hat:
        return (p.kappa_hat, p.mu_hat, p.lam_hat, cfg.b_hat), (p.kappa, p.mu, p.lam, cfg.b)
    return (p.mu, p.kappa, p.lam, cfg.b), (p.mu_hat, p.kappa_hat, p.lam_hat, cfg.b_hat)


@dataclass(frozen=True, eq=False)
class BalancedSystem:
    """
    The M (or M.hat) system with per-mode exponentials balanced.

    Unknowns are L'_b = L_b exp((q_b - p_b) x / 2). With s = (p + q) / 2 the blocks
    U'[b, g] ~ exp(-(s_b + s'_g) x) and V'[g, a] ~ exp(-(s'_g + s_a) x) have equal size,
    the right-hand side is c_a exp(Lambda_a t - s_a x) and K(x, x) = sum_b L'_b exp(-s_b x).
    ``inner_rhs`` writes the right-hand side as inner_rhs V'.
    """

    u: np.ndarray
    v: np.ndarray
    rhs: np.ndarray
    inner_rhs: np.ndarray
    decay: np.ndarray
    unscale: np.ndarray
    modes: int
    rows: int
    width: int


def balanced_system(cfg: SolitonConfig, x, t: float = 0.0, hat: bool = False) -> BalancedSystem:
    """Balanced blocks of the M system (``hat=False``) or the M.hat system at the points ``x``."""
    (p, q, lam, coeff), (p_in, q_in, lam_in, coeff_in) = _mode_roles(cfg, hat)
    x = np.asarray(x, dtype=float)
    big_l, rows, width = coeff.shape
    s = (p + q) / 2
    s_in = (p_in + q_in) / 2
    points = x[..., None, None]

    u = np.exp(lam_in * t - np.add.outer(s, s_in) * points) / np.add.outer(p, p_in)
    v = np.exp(lam * t - np.add.outer(s_in, s) * points) / np.add.outer(q_in, q)
    u_blocks = np.einsum("...bg,gsr->...bsgr", u, coeff_in).reshape(x.shape + (big_l * width, big_l * rows))
    v_blocks = np.einsum("...ga,grs->...gras", v, coeff).reshape(x.shape + (big_l * rows, big_l * width))

    phase = np.exp(lam * t - np.multiply.outer(x, s))
    rhs = np.einsum("...a,ars->...ras", phase, coeff).reshape(x.shape + (rows, big_l * width))

    # sum_g gamma_g / (q'_g + q_a) = 1 for every a
    gamma = np.linalg.solve((1 / np.add.outer(q_in, q)).T, np.ones(big_l))
    weights = gamma * np.exp(np.multiply.outer(x, s_in))
    inner_rhs = np.einsum("...g,rk->...rgk", weights, np.eye(rows)).reshape(x.shape + (rows, big_l * rows))

    return BalancedSystem(
        u=u_blocks,
        v=v_blocks,
        rhs=rhs,
        inner_rhs=inner_rhs,
        decay=np.exp(-np.multiply.outer(x, s)),
        unscale=np.exp(np.multiply.outer(x, (p - q) / 2)),
        modes=big_l,
        rows=rows,
        width=width,
    )


def _identity_minus(product: np.ndarray, x: np.ndarray, t: float, name: str) -> np.ndarray:
    """
    I - product, raising SingularM where |det| < 1e-12 relative to prod_i (1 + |product_i|).

    The reference scale is the row size of the two terms, so det = 1 - 1e30 far out
    on the tail is regular and det = 1e-16 at a pole is not.
    """
    matrix = np.eye(product.shape[-1]) - product
    sign, log_abs = np.linalg.slogdet(matrix)
    log_scale = np.sum(np.log1p(np.linalg.norm(product, axis=-1)), axis=-1)
    relative = np.where(sign == 0, -np.inf, log_abs - log_scale)
    if np.any(relative < np.log(SINGULAR_DET)):
        index = np.unravel_index(int(np.argmin(relative)), np.shape(relative))
        det = complex(sign[index] * np.exp(log_abs[index]))
        raise SingularM(f"{name} is singular at x={float(x[index]):.6g}, t={t}", det)
    condition = float(np.max(np.linalg.cond(matrix))) if matrix.size else 1.0
    if condition > 1e10:
        logger.warning(f"{name} is ill-conditioned (cond = {condition:.2e})")
    else:
        logger.debug(f"{name} condition number {condition:.2e}")
    return matrix


def _solve_row(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """X with X matrix = rhs."""
    return np.swapaxes(np.linalg.solve(np.swapaxes(matrix, -1, -2), np.swapaxes(rhs, -1, -2)), -1, -2)


def _balanced_coefficients(system: BalancedSystem, x: np.ndarray, t: float, name: str) -> np.ndarray:
    """
    Balanced coefficients L'_b (..., L, R, S).

    det(I - U'V') = det(I - V'U') and only the smaller of the two is solved: the
    larger has rank-deficient P and rounds the identity away where P is huge.
    """
    if system.u.shape[-2] <= system.v.shape[-2]:
        matrix = _identity_minus(system.u @ system.v, x, t, name)
        row = _solve_row(matrix, -system.rhs)
    else:
        matrix = _identity_minus(system.v @ system.u, x, t, name)
        row = _solve_row(matrix, -system.inner_rhs) @ system.v
    blocks = row.reshape(x.shape + (system.rows, system.modes, system.width))
    return np.moveaxis(blocks, -2, -3)


def solve_coefficients(cfg: SolitonConfig, x, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-mode coefficients L_b (..., L, N, M) and L.hat_b (..., L, M, N).

    Raises:
        SingularM: If det M or det M.hat is below 1e-12 relative to the size of its terms at some point
    """
    x = np.asarray(x, dtype=float)
    result = []
    for hat, name in ((False, "M"), (True, "M.hat")):
        system = balanced_system(cfg, x, t, hat)
        scaled = _balanced_coefficients(system, x, t, name)
        result.append(scaled * system.unscale[..., None, None])
    return result[0], result[1]


def neumann_coefficients(cfg: SolitonConfig, x, t: float = 0.0, terms: int = 20) -> Tuple[np.ndarray, np.ndarray]:
    """Same coefficients from L = -B sum_{m <= terms} P^m (valid for ||P|| < 1)."""
    x = np.asarray(x, dtype=float)
    system = build_m_matrices(cfg, x, t)

    def series(rhs, p):
        total = -rhs
        term = -rhs
        for _ in range(terms):
            term = term @ p
            total = total + term
        return total

    row = series(system.rhs, system.p)
    row_hat = series(system.rhs_hat, system.p_hat)
    big_l, n_dim, m_dim = cfg.modes, cfg.n_dim, cfg.m_dim
    return (
        np.moveaxis(row.reshape(x.shape + (n_dim, big_l, m_dim)), -2, -3),
        np.moveaxis(row_hat.reshape(x.shape + (m_dim, big_l, n_dim)), -2, -3),
    )


def solve_fields(cfg: SolitonConfig, x, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fields (u, u.hat) at the points ``x`` and time ``t`` by solving the M systems.

    The diagonal kernels are summed from the balanced coefficients,
    K(x, x) = sum_b L'_b exp(-s_b x).

    Returns:
        u with shape (..., M, N) and u.hat with shape (..., N, M)

    Raises:
        SingularM: On the blow-up locus of the solution
    """
    x = np.asarray(x, dtype=float)
    diagonals = []
    for hat, name in ((False, "M"), (True, "M.hat")):
        system = balanced_system(cfg, x, t, hat)
        scaled = _balanced_coefficients(system, x, t, name)
        diagonals.append(np.einsum("...b,...brs->...rs", system.decay, scaled))
    b_diag, c_diag = diagonals
    return -cfg.h * c_diag, cfg.h * b_diag


def tl_denominator(cfg: SolitonConfig, x, t: float = 0.0) -> np.ndarray:
    """1 - xi f(x, t) of the single-mode closed form."""
    if cfg.xi is None:
        raise ValueError("Closed forms need a Temperley-Lieb scalar xi")
    f, _ = _kernel_entries(cfg, x, t)
    return 1 - cfg.xi * f[..., 0, 0, 0]


def closed_form_one_soliton(cfg: SolitonConfig, x, z, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Resummed single-mode kernels
    B(x, z) = -b exp(Lambda t - kappa x - mu z) / (1 - xi f),
    C(x, z) = -b.hat exp(Lambda.hat t - mu.hat x - kappa.hat z) / (1 - xi f).

    Raises:
        PoleAt: If |1 - xi f| < 1e-12 at some point
    """
    if cfg.modes != 1:
        raise ValueError("Closed forms apply to a single mode; use solve_fields for L >= 2")
    p = cfg.params
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    denominator = tl_denominator(cfg, x, t)
    if np.any(np.abs(denominator) < POLE_TOLERANCE):
        index = np.unravel_index(int(np.argmin(np.abs(denominator))), denominator.shape)
        raise PoleAt(float(x[index]), t, complex(denominator[index]))
    phase = np.exp(p.lam[0] * t - p.kappa[0] * x - p.mu[0] * z) / denominator
    phase_hat = np.exp(p.lam_hat[0] * t - p.mu_hat[0] * x - p.kappa_hat[0] * z) / denominator
    return -phase[..., None, None] * cfg.b[0], -phase_hat[..., None, None] * cfg.b_hat[0]


def soliton_kernels(cfg: SolitonConfig, x: np.ndarray, z: np.ndarray, t: float = 0.0) -> Dict[str, np.ndarray]:
    """
    Dressing kernels A, B, C, D on the product grid x x z.

    A = -sum L_b bh_g exp(Lh_g t - kh_g z) exp(-(mu_b + muh_g) x) / (mu_b + muh_g)
    D = -sum Lh_b b_g exp(L_g t - mu_g z) exp(-(kh_b + k_g) x) / (kh_b + k_g)

    Returns:
        Dict with "A" (X, Z, N, N), "B" (X, Z, N, M), "C" (X, Z, M, N), "D" (X, Z, M, M)
    """
    p = cfg.params
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    coeffs, coeffs_hat = solve_coefficients(cfg, x, t)

    kernel_b = np.einsum("xbnm,zb->xznm", coeffs, np.exp(-np.multiply.outer(z, p.mu)))
    kernel_c = np.einsum("xbmn,zb->xzmn", coeffs_hat, np.exp(-np.multiply.outer(z, p.kappa_hat)))

    pair = p.mu[:, None] + p.mu_hat[None, :]
    x_factor = np.exp(-np.multiply.outer(x, pair)) / pair
    z_factor = np.exp(p.lam_hat * t - np.multiply.outer(z, p.kappa_hat))
    kernel_a = -np.einsum("xbnm,gmk,xbg,zg->xznk", coeffs, cfg.b_hat, x_factor, z_factor, optimize=True)

    pair_hat = p.kappa_hat[:, None] + p.kappa[None, :]
    x_factor_hat = np.exp(-np.multiply.outer(x, pair_hat)) / pair_hat
    z_factor_hat = np.exp(p.lam * t - np.multiply.outer(z, p.mu))
    kernel_d = -np.einsum("xbmn,gnk,xbg,zg->xzmk", coeffs_hat, cfg.b, x_factor_hat, z_factor_hat, optimize=True)

    return {"A": kernel_a, "B": kernel_b, "C": kernel_c, "D": kernel_d}


@dataclass(frozen=True, eq=False)
class SolitonField:
    """Pointwise evaluator of (u, u.hat) for one soliton configuration."""

    config: SolitonConfig
    provenance: str = "matrix-solve-L"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"Unknown provenance '{self.provenance}'; expected one of {PROVENANCES}")
        if self.provenance == "closed-form-TL" and (self.config.xi is None or self.config.modes != 1):
            raise ValueError("closed-form-TL provenance needs a single Temperley-Lieb mode")

    @classmethod
    def closed_form(cls, config: SolitonConfig) -> "SolitonField":
        return cls(config=config, provenance="closed-form-TL")

    def fields(self, x, t: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
        """(u, u.hat) at points x and time t."""
        if self.provenance == "closed-form-TL":
            kernel_b, kernel_c = closed_form_one_soliton(self.config, x, x, t)
            return -self.config.h * kernel_c, self.config.h * kernel_b
        return solve_fields(self.config, x, t)

    def u(self, x, t: float = 0.0) -> np.ndarray:
        return self.fields(x, t)[0]

    def uhat(self, x, t: float = 0.0) -> np.ndarray:
        return self.fields(x, t)[1]

    def sample(self, x: np.ndarray, t_levels, label: Optional[str] = None) -> GridField:
        """Trajectory along the flow ``config.flow`` as a GridField."""
        t_levels = np.atleast_1d(np.asarray(t_levels, dtype=float))
        x = np.asarray(x, dtype=float)
        samples = [self.fields(x, t) for t in t_levels]
        field = GridField(
            x=x,
            t=t_levels,
            u=np.stack([s[0] for s in samples]),
            uhat=np.stack([s[1] for s in samples]),
            flow=self.config.flow,
            label=label or f"soliton-{self.provenance}",
        )
        logger.debug(f"Sampled {field.label}: T={len(t_levels)}, X={len(x)}")
        return field


def sample_fields(cfg: SolitonConfig, x: np.ndarray, t_levels, provenance: str = "matrix-solve-L") -> GridField:
    """Shorthand for SolitonField(cfg, provenance).sample(x, t_levels)."""
    return SolitonField(config=cfg, provenance=provenance).sample(x, t_levels)
