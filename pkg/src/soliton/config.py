"""Soliton parameter sets: dispersion data, mode amplitudes and the Temperley-Lieb scalar."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from src.linearsol.dispersion import DispersionParams, close_dispersion
from src.utils.errors import AknsError, ConfigError

logger = logging.getLogger(__name__)

TL_TOLERANCE = 1e-12


def parse_complex(value: Any, field_path: str) -> complex:
    """
    Read a complex number from JSON: a number, a [re, im] pair or a string like "1-2j".

    Raises:
        ConfigError: If the value is none of these
    """
    if isinstance(value, bool):
        raise ConfigError(field_path, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            pass
    raise ConfigError(field_path, f"expected a number, [re, im] pair or complex string, got {value!r}")


def parse_matrix(value: Any, field_path: str) -> np.ndarray:
    """Read a rectangular matrix of complex entries (list of rows)."""
    if not isinstance(value, list) or not value or not all(isinstance(row, list) and row for row in value):
        raise ConfigError(field_path, "expected a non-empty list of non-empty rows")
    width = len(value[0])
    if any(len(row) != width for row in value):
        raise ConfigError(field_path, "rows have different lengths")
    return np.array(
        [[parse_complex(entry, f"{field_path}[{i}][{j}]") for j, entry in enumerate(row)] for i, row in enumerate(value)],
        dtype=complex,
    )


@dataclass(frozen=True, eq=False)
class SolitonConfig:
    """
    L-mode soliton data.

    b has shape (L, N, M) and b_hat (L, M, N). ``xi`` is set when the single
    mode obeys the Temperley-Lieb relations b b.hat b = xi b, b.hat b b.hat = xi b.hat.
    """

    params: DispersionParams
    b: np.ndarray
    b_hat: np.ndarray
    xi: Optional[complex] = None
    notes: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=complex)
        b_hat = np.asarray(self.b_hat, dtype=complex)
        if b.ndim != 3 or b_hat.ndim != 3:
            raise ValueError(f"Amplitudes must be stacks of matrices, got {b.shape} and {b_hat.shape}")
        if b.shape[0] != self.params.modes or b_hat.shape[0] != self.params.modes:
            raise ValueError(f"Expected {self.params.modes} amplitude matrices, got {b.shape[0]} and {b_hat.shape[0]}")
        if b.shape[1:] != b_hat.shape[1:][::-1]:
            raise ValueError(f"b is {b.shape[1:]} per mode but b_hat is {b_hat.shape[1:]}")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "b_hat", b_hat)
        if self.xi is not None:
            self.check_temperley_lieb()

    @property
    def modes(self) -> int:
        return self.params.modes

    @property
    def n_dim(self) -> int:
        return self.b.shape[1]

    @property
    def m_dim(self) -> int:
        return self.b.shape[2]

    @property
    def h(self) -> complex:
        return self.params.h

    @property
    def flow(self) -> int:
        return self.params.n

    def check_temperley_lieb(self) -> None:
        """
        Raises:
            ValueError: If there is more than one mode or either relation fails at 1e-12
        """
        if self.modes != 1:
            raise ValueError("Temperley-Lieb closed forms apply to a single mode")
        b, b_hat = self.b[0], self.b_hat[0]
        first = np.linalg.norm(b @ b_hat @ b - self.xi * b)
        second = np.linalg.norm(b_hat @ b @ b_hat - self.xi * b_hat)
        if first >= TL_TOLERANCE or second >= TL_TOLERANCE:
            raise ValueError(
                f"Amplitudes violate the Temperley-Lieb relations with xi={self.xi} "
                f"(residuals {first:.2e}, {second:.2e})"
            )

    def shifted(self, delta: float) -> "SolitonConfig":
        """
        Config whose fields are translated: u_new(x) = u_old(x + delta).

        b_a -> b_a exp(-(kappa_a + mu_a) delta), b.hat_a -> b.hat_a exp(-(kappa.hat_a + mu.hat_a) delta).
        """
        p = self.params
        factor = np.exp(-(p.kappa + p.mu) * delta)
        factor_hat = np.exp(-(p.kappa_hat + p.mu_hat) * delta)
        xi = None
        if self.xi is not None:
            xi = self.xi * complex(factor[0] * factor_hat[0])
        return SolitonConfig(
            params=p,
            b=self.b * factor[:, None, None],
            b_hat=self.b_hat * factor_hat[:, None, None],
            xi=xi,
            notes=dict(self.notes, shift=self.notes.get("shift", 0.0) + delta),
        )

    def scaled(self, factor: complex) -> "SolitonConfig":
        """Same dispersion data with b multiplied by ``factor`` (no TL scalar)."""
        return SolitonConfig(params=self.params, b=self.b * factor, b_hat=self.b_hat, xi=None, notes=dict(self.notes))

    @classmethod
    def from_parameters(
        cls,
        w1: complex,
        w2: complex,
        n: int,
        kappa: Sequence[complex],
        kappa_hat: Sequence[complex],
        b,
        b_hat,
        xi: Optional[complex] = None,
        what1: complex = 1.0,
        what2: complex = 1.0,
    ) -> "SolitonConfig":
        """Close the dispersion relations and wrap the amplitudes."""
        params = close_dispersion(w1, w2, kappa, kappa_hat, n, what1, what2)
        b = np.asarray(b, dtype=complex)
        b_hat = np.asarray(b_hat, dtype=complex)
        if b.ndim == 2:
            b = b[None]
        if b_hat.ndim == 2:
            b_hat = b_hat[None]
        return cls(params=params, b=b, b_hat=b_hat, xi=xi)

    @classmethod
    def from_dict(cls, parameters: Dict[str, Any], soliton: Dict[str, Any],
                  path: str = "soliton", parameters_path: str = "parameters") -> "SolitonConfig":
        """
        Build from the ``parameters`` and ``soliton`` blocks of a scenario.

        parameters: w1, w2, n, optional what1, what2.
        soliton: modes (list of {kappa, kappa_hat, b, b_hat}), optional xi and shift.

        Raises:
            ConfigError: Naming the dotted path of the first invalid field
        """
        for key in ("w1", "w2", "n"):
            if key not in parameters:
                raise ConfigError(f"{parameters_path}.{key}", "required field is missing")
        w1 = parse_complex(parameters["w1"], f"{parameters_path}.w1")
        w2 = parse_complex(parameters["w2"], f"{parameters_path}.w2")
        if w2 == 0:
            raise ConfigError(f"{parameters_path}.w2", "must be non-zero")
        if w1 == w2:
            raise ConfigError(f"{parameters_path}.w2", "must differ from w1")
        n = parameters["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ConfigError(f"{parameters_path}.n", f"expected a positive integer, got {n!r}")
        what1 = parse_complex(parameters.get("what1", 1.0), f"{parameters_path}.what1")
        what2 = parse_complex(parameters.get("what2", 1.0), f"{parameters_path}.what2")

        modes = soliton.get("modes")
        if not isinstance(modes, list) or not modes:
            raise ConfigError(f"{path}.modes", "expected a non-empty list of modes")
        kappa, kappa_hat, b, b_hat = [], [], [], []
        for index, mode in enumerate(modes):
            mode_path = f"{path}.modes[{index}]"
            if not isinstance(mode, dict):
                raise ConfigError(mode_path, "expected an object")
            for key in ("kappa", "kappa_hat", "b", "b_hat"):
                if key not in mode:
                    raise ConfigError(f"{mode_path}.{key}", "required field is missing")
            kappa.append(parse_complex(mode["kappa"], f"{mode_path}.kappa"))
            kappa_hat.append(parse_complex(mode["kappa_hat"], f"{mode_path}.kappa_hat"))
            b.append(parse_matrix(mode["b"], f"{mode_path}.b"))
            b_hat.append(parse_matrix(mode["b_hat"], f"{mode_path}.b_hat"))
            if b[-1].shape != b[0].shape:
                raise ConfigError(f"{mode_path}.b", f"shape {b[-1].shape} differs from mode 0 {b[0].shape}")
            if b_hat[-1].shape != b[-1].shape[::-1]:
                raise ConfigError(f"{mode_path}.b_hat", f"expected shape {b[-1].shape[::-1]}, got {b_hat[-1].shape}")

        xi = None
        if soliton.get("xi") is not None:
            xi = parse_complex(soliton["xi"], f"{path}.xi")

        try:
            config = cls.from_parameters(w1, w2, n, kappa, kappa_hat, np.stack(b), np.stack(b_hat), xi, what1, what2)
        except AknsError as e:
            raise ConfigError(f"{path}.modes", str(e))
        except ValueError as e:
            raise ConfigError(f"{path}.xi" if xi is not None else f"{path}.modes", str(e))

        shift = soliton.get("shift", 0.0)
        if not isinstance(shift, (int, float)) or isinstance(shift, bool):
            raise ConfigError(f"{path}.shift", f"expected a real number, got {shift!r}")
        if shift:
            config = config.shifted(float(shift))
        logger.debug(f"Soliton config: L={config.modes}, N={config.n_dim}, M={config.m_dim}, xi={config.xi}")
        return config
