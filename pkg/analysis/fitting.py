"""
Echo decay fits: A*exp(-t/tau) and A*exp(-t/tau) + C.

Fits run in normalized units (t / span, y / max y) from a log-spaced grid
of tau starts; the best least-squares result wins. A tau stuck on its
bound is reported as not converged instead of being clamped.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Dict, Iterable, Tuple

import numpy as np
from lmfit import Minimizer, Parameters

log = logging.getLogger(__name__)

EXP = "EXP"
EXP_OFFSET = "EXP_OFFSET"
MODELS = (EXP, EXP_OFFSET)

N_STARTS = 32
TAU_MIN = 1e-3
TAU_MAX = 1e3
# Normalized tau above this leaves less than 1% decay across the data
TAU_UNRESOLVED = 1e2
MIN_POINTS = {EXP: 3, EXP_OFFSET: 4}


@dataclass
class DecayFit:
    model: str
    params: Dict[str, float]
    rms_residual: float
    converged: bool
    message: str = ""
    n_points: int = 0

    def predict(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.params["A"] * np.exp(-t / self.params["tau"]) + self.params.get("C", 0.0)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "rms_residual": self.rms_residual,
            "converged": self.converged,
            "message": self.message,
            "n_points": self.n_points,
        }


def _residual(pars, x, data=None):
    model = pars["A"] * np.exp(-x / pars["tau"])
    if "C" in pars:
        model = model + pars["C"]
    if data is None:
        return model
    return model - data


def _linear_start(x: np.ndarray, y: np.ndarray, tau: float, offset: bool) -> Tuple[float, float]:
    columns = [np.exp(-x / tau)]
    if offset:
        columns.append(np.ones_like(x))
    coeffs, *_ = np.linalg.lstsq(np.stack(columns, axis=1), y, rcond=None)
    amplitude = max(float(coeffs[0]), 1e-6)
    constant = max(float(coeffs[1]), 1e-6) if offset else 0.0
    return amplitude, constant


def fit_decay(points: Iterable[Tuple[float, float]], model: str = EXP_OFFSET, n_starts: int = N_STARTS) -> DecayFit:
    """
    Least-squares decay fit with multiple tau starts.

    Args:
        points: (t, amplitude) pairs, t in seconds
        model: EXP or EXP_OFFSET
        n_starts: Number of log-spaced tau starts

    Returns:
        DecayFit with params A, tau (s) and C (EXP_OFFSET only)

    Raises:
        ValueError: Unknown model, too few points, negative or non-finite data
    """
    if model not in MODELS:
        raise ValueError(f"Unknown decay model {model!r}; expected one of {MODELS}")
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("Points must be (t, amplitude) pairs")
    if data.shape[0] < MIN_POINTS[model]:
        raise ValueError(f"{model} needs at least {MIN_POINTS[model]} points, got {data.shape[0]}")
    if not np.all(np.isfinite(data)):
        raise ValueError("Points must be finite")
    t, y = data[:, 0], data[:, 1]
    if np.any(y < 0):
        raise ValueError("Amplitudes must be >= 0")
    span = float(t.max() - t.min())
    if not span > 0:
        raise ValueError("Points need at least two distinct times")

    offset = model == EXP_OFFSET
    y_scale = float(y.max())
    if y_scale == 0:
        params = {"A": 0.0, "tau": math.nan}
        if offset:
            params["C"] = 0.0
        return DecayFit(model=model, params=params, rms_residual=0.0, converged=False,
                        message="all amplitudes are zero", n_points=t.size)

    x = t / span
    yn = y / y_scale
    best = None
    for tau0 in np.logspace(math.log10(1.0 / 50.0), math.log10(50.0), n_starts):
        amplitude0, constant0 = _linear_start(x, yn, tau0, offset)
        pars = Parameters()
        pars.add("A", value=amplitude0, min=0.0)
        pars.add("tau", value=tau0, min=TAU_MIN, max=TAU_MAX)
        if offset:
            pars.add("C", value=constant0, min=0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = Minimizer(_residual, pars, fcn_args=(x,), fcn_kws={"data": yn}).leastsq()
        if not math.isfinite(result.chisqr):
            continue
        if best is None or result.chisqr < best.chisqr:
            best = result

    if best is None:
        return DecayFit(model=model, params={"A": math.nan, "tau": math.nan}, rms_residual=math.nan,
                        converged=False, message="no start produced a finite fit", n_points=t.size)

    tau_n = float(best.params["tau"].value)
    params = {"A": float(best.params["A"].value) * y_scale, "tau": tau_n * span}
    if offset:
        params["C"] = float(best.params["C"].value) * y_scale

    converged = bool(best.success)
    message = str(best.message) if not converged else "ok"
    if tau_n >= TAU_MAX * (1 - 1e-6) or tau_n <= TAU_MIN * (1 + 1e-6):
        converged = False
        message = "tau at fit bound"
    elif tau_n > TAU_UNRESOLVED:
        converged = False
        message = "decay not resolved within the data span"

    fit = DecayFit(model=model, params=params, rms_residual=0.0, converged=converged, message=message,
                   n_points=t.size)
    fit.rms_residual = float(np.sqrt(np.mean((fit.predict(t) - y) ** 2)))
    if not converged:
        log.warning("%s fit did not converge: %s", model, message)
    return fit
