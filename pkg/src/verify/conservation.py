"""Conservation drift of the trace charges along a sampled trajectory."""

import logging
from typing import List, Optional

from src.riccati.charges import ChargeReport, boundary_leak, charge_series
from src.utils.grid import GridField
from src.utils.parallel import parallel_map
from src.verify.fd import FdScheme

logger = logging.getLogger(__name__)

DRIFT_TOLERANCE = 1e-6


def conservation_drift(
    kmax: int,
    trajectory: GridField,
    scheme: Optional[FdScheme] = None,
    variant: str = "plain",
    workers: Optional[int] = None,
    tolerance: float = DRIFT_TOLERANCE,
) -> List[ChargeReport]:
    """
    Charges I(1) .. I(kmax) at every time level of ``trajectory``.

    Emits a BoundaryLeak warning (and flags every report) when the fields do
    not decay at the grid ends. Reports whose drift reaches ``tolerance`` get
    a note and a logged warning.
    """
    if kmax < 1:
        raise ValueError(f"kmax must be at least 1, got {kmax}")
    scheme = scheme or FdScheme()
    leaking = boundary_leak(trajectory)

    def one_charge(k: int) -> ChargeReport:
        values = charge_series(k, trajectory, scheme, variant)
        report = ChargeReport(
            k=k,
            times=[float(t) for t in trajectory.t],
            values=[complex(v) for v in values],
            variant=variant,
            boundary_leak=leaking,
        )
        if leaking:
            report.notes.append("fields do not decay at the grid ends")
        return report

    reports = parallel_map(one_charge, range(1, kmax + 1), workers)
    for report in reports:
        logger.info(f"I({report.k}) [{variant}]: drift {report.drift:.3e}")
        if not report.drift < tolerance:
            logger.warning(f"I({report.k}) drifts by {report.drift:.3e}, above {tolerance:.1e}")
            report.notes.append(f"drift above {tolerance:.1e}")
    return reports
