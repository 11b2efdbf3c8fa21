"""Report writers: deterministic JSON verdicts and plot-ready CSV tables."""

import json
import logging
import os
from typing import Any, Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from src.riccati.charges import ChargeReport
from src.utils.errors import ConfigError
from src.utils.grid import GridField

logger = logging.getLogger(__name__)


def check_entry(name: str, value: float, tolerance: float, expect: str = "below", **extra) -> Dict[str, Any]:
    """
    One named check. ``expect="below"`` passes when value < tolerance,
    ``expect="above"`` when value > tolerance (negative controls).
    """
    if expect not in ("below", "above"):
        raise ValueError(f"expect must be 'below' or 'above', got {expect!r}")
    value = float(value)
    passed = bool(np.isfinite(value) and (value < tolerance if expect == "below" else value > tolerance))
    entry = {"name": name, "value": value, "tolerance": float(tolerance), "expect": expect, "pass": passed}
    entry.update(extra)
    return entry


def failed_checks(checks: Iterable[Dict[str, Any]]) -> List[str]:
    return [check["name"] for check in checks if not check["pass"]]


def _plain(value: Any) -> Any:
    """Convert numpy/complex values into JSON-friendly Python objects."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(np.real(value)), float(np.imag(value))]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def report_json(report: Dict[str, Any]) -> str:
    """Canonical JSON text (sorted keys, fixed indentation)."""
    return json.dumps(_plain(report), sort_keys=True, indent=2) + "\n"


def write_json_report(path: str, report: Dict[str, Any]) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        f.write(report_json(report))
    logger.info(f"Report saved to: {path}")
    return path


def field_frame(field: GridField) -> pd.DataFrame:
    """
    Long table of a sampled field: columns x, t, then Re_u_ij, Im_u_ij,
    Re_uhat_ij, Im_uhat_ij for every matrix entry.
    """
    tt, xx = np.meshgrid(field.t, field.x, indexing="ij")
    columns = {"x": xx.ravel(), "t": tt.ravel()}
    for name, values in (("u", field.u), ("uhat", field.uhat)):
        for i in range(values.shape[2]):
            for j in range(values.shape[3]):
                entry = values[:, :, i, j].ravel()
                columns[f"Re_{name}_{i}{j}"] = entry.real
                columns[f"Im_{name}_{i}{j}"] = entry.imag
    return pd.DataFrame(columns)


def charges_frame(reports: Iterable[ChargeReport]) -> pd.DataFrame:
    """Charge time series: columns k, variant, t, Re_I, Im_I."""
    rows = []
    for report in reports:
        for t, value in zip(report.times, report.values):
            rows.append({
                "k": report.k,
                "variant": report.variant,
                "t": t,
                "Re_I": float(np.real(value)),
                "Im_I": float(np.imag(value)),
            })
    return pd.DataFrame(rows, columns=["k", "variant", "t", "Re_I", "Im_I"])


def samples_frame(x: np.ndarray, values: np.ndarray, x_name: str = "x", value_name: str = "f",
                  t: Optional[float] = None) -> pd.DataFrame:
    """Table of matrix-valued samples on a 1D grid: x, [t], Re_<name>_ij, Im_<name>_ij."""
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[:, None, None]
    columns = {x_name: np.asarray(x, dtype=float)}
    if t is not None:
        columns["t"] = np.full(len(columns[x_name]), t)
    for i in range(values.shape[1]):
        for j in range(values.shape[2]):
            columns[f"Re_{value_name}_{i}{j}"] = values[:, i, j].real
            columns[f"Im_{value_name}_{i}{j}"] = values[:, i, j].imag
    return pd.DataFrame(columns)


def write_csv(frame: pd.DataFrame, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Table saved to: {path} ({len(frame)} rows)")
    return path


def read_field_csv(path: str, flow: Optional[int] = None) -> GridField:
    """
    Rebuild a GridField from a table written by ``field_frame``.

    Raises:
        FileNotFoundError: If the file doesn't exist
        ConfigError: If columns are missing or the rows do not fill a grid
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Field table not found: {path}")
    frame = pd.read_csv(path)
    for column in ("x", "t"):
        if column not in frame.columns:
            raise ConfigError("path", f"{path} has no '{column}' column")

    def entries(name: str):
        found = [c[len(f"Re_{name}_"):] for c in frame.columns if c.startswith(f"Re_{name}_")]
        if not found:
            raise ConfigError("path", f"{path} has no Re_{name}_ij columns")
        return max(int(ij[0]) for ij in found) + 1, max(int(ij[1]) for ij in found) + 1

    m, n = entries("u")
    frame = frame.sort_values(["t", "x"], kind="stable")
    t = np.unique(frame["t"].to_numpy())
    x = np.unique(frame["x"].to_numpy())
    if len(frame) != len(t) * len(x):
        raise ConfigError("path", f"{path} has {len(frame)} rows, expected {len(t)} x {len(x)}")

    def block(name: str, rows: int, cols: int) -> np.ndarray:
        values = np.zeros((len(t), len(x), rows, cols), dtype=complex)
        for i in range(rows):
            for j in range(cols):
                re = frame.get(f"Re_{name}_{i}{j}")
                im = frame.get(f"Im_{name}_{i}{j}")
                if re is None or im is None:
                    raise ConfigError("path", f"{path} is missing the {name}_{i}{j} columns")
                values[:, :, i, j] = (re.to_numpy() + 1j * im.to_numpy()).reshape(len(t), len(x))
        return values

    return GridField(x=x, t=t, u=block("u", m, n), uhat=block("uhat", n, m), flow=flow, label=os.path.basename(path))
