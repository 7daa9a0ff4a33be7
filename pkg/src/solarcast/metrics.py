"""Forecast error measures on scaled (p.u.) values."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConstantVector, EmptyInput, LengthMismatch, ZeroDenominator


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    mae: float
    smape: float
    cc2: float
    n_points: int
    training_time: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(D, O) -> tuple[np.ndarray, np.ndarray]:
    D = np.asarray(D, dtype=np.float64).ravel()
    O = np.asarray(O, dtype=np.float64).ravel()
    if D.shape != O.shape:
        raise LengthMismatch(f"targets have {D.size} values, predictions {O.size}")
    if D.size == 0:
        raise EmptyInput("metrics need at least one point")
    return D, O


def rmse(D, O) -> float:
    D, O = _pair(D, O)
    r = np.abs(D - O)
    peak = r.max()
    if peak == 0:
        return 0.0
    # scale before squaring so tiny residuals do not underflow
    r = r / peak
    return float(peak * np.sqrt(np.mean(r * r)))


def mae(D, O) -> float:
    D, O = _pair(D, O)
    return float(np.mean(np.abs(D - O)))


def smape(D, O) -> float:
    """Aggregate-ratio SMAPE in percent: ``100 * sum|D - O| / sum(D + O)``.

    Unlike the per-point mean form this stays finite when individual targets
    are zero (night-time or heavily clouded samples).
    """
    D, O = _pair(D, O)
    denom = float(np.sum(D + O))
    if denom == 0.0:
        raise ZeroDenominator("sum of targets and predictions is zero")
    return 100.0 * float(np.sum(np.abs(D - O))) / denom


def cc2(D, O) -> float:
    """Squared Pearson correlation between targets and predictions."""
    D, O = _pair(D, O)
    if D.size < 2:
        raise EmptyInput("cc2 needs at least two points")
    # centered moments; same value as the raw-moment form, less cancellation
    dc = D - D.mean()
    oc = O - O.mean()
    sdd = float(dc @ dc)
    soo = float(oc @ oc)
    if sdd == 0.0 or soo == 0.0:
        raise ConstantVector("cc2 is undefined for a constant vector")
    sdo = float(dc @ oc)
    return min(1.0, (sdo * sdo) / (sdd * soo))


def evaluate(D, O, training_time: float = 0.0) -> EvalReport:
    D = np.asarray(D, dtype=np.float64)
    O = np.asarray(O, dtype=np.float64)
    if D.shape != O.shape:
        raise LengthMismatch(f"target shape {D.shape} differs from prediction shape {O.shape}")
    return EvalReport(
        rmse=rmse(D, O),
        mae=mae(D, O),
        smape=smape(D, O),
        cc2=cc2(D, O),
        n_points=int(D.size),
        training_time=float(training_time),
    )
