"""FISTA reconstruction of a datacube from one sensor image."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import HyperspectralCube, Measurement, operator_norm
from .priors import TvWeights, nuclear_value, prox_nuclear, prox_tv3d, tv3d_value
from .validation import (
    NumericalError,
    ShapeMismatchError,
    check_finite_array,
    check_nonnegative,
    check_positive,
    check_positive_int,
)

__all__ = [
    "SolverConfig",
    "SolveDiagnostics",
    "objective",
    "data_fidelity",
    "fista_reconstruct",
    "STEP_SAFETY",
    "CONVERGENCE_WINDOW",
]

logger = logging.getLogger(__name__)

STEP_SAFETY = 0.9
CONVERGENCE_WINDOW = 5


@dataclass(frozen=True)
class SolverConfig:
    """Regularization weights and iteration controls.

    Attributes
    ----------
    tau1 : float
        Weight of the 3D total-variation penalty.
    tau2 : float
        Weight of the nuclear-norm (spectral low-rank) penalty.
    tv_weights : TvWeights
        Per-axis TV weights.
    max_iters : int
    step : float or None
        Gradient step. ``None`` uses ``0.9 / L`` with ``L`` from power iteration.
    convergence_tol : float
        Stop when the relative objective change over 5 iterations falls below
        this. Zero disables the test.
    log_every : int
        Record the objective every ``log_every`` iterations.
    """

    tau1: float = 0.0
    tau2: float = 0.0
    tv_weights: TvWeights = field(default_factory=TvWeights)
    max_iters: int = 500
    step: float = None
    convergence_tol: float = 0.0
    log_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tau1", check_nonnegative(self.tau1, "tau1"))
        object.__setattr__(self, "tau2", check_nonnegative(self.tau2, "tau2"))
        object.__setattr__(self, "tv_weights", TvWeights.coerce(self.tv_weights))
        object.__setattr__(self, "max_iters", check_positive_int(self.max_iters, "max_iters"))
        if self.step is not None:
            object.__setattr__(self, "step", check_positive(self.step, "step"))
        object.__setattr__(self, "convergence_tol",
                           check_nonnegative(self.convergence_tol, "convergence_tol"))
        object.__setattr__(self, "log_every", check_positive_int(self.log_every, "log_every"))
        tw = self.tv_weights
        if self.tau1 > 0 and tw.wx == tw.wy == tw.wl == 0:
            raise ValueError("TV prior enabled with all-zero tv_weights")


@dataclass
class SolveDiagnostics:
    objective_history: list = field(default_factory=list)
    data_fidelity_history: list = field(default_factory=list)
    iterations_run: int = 0
    final_step: float = float("nan")
    lipschitz: float = None
    converged: bool = False


def _arrays(model, b, v=None):
    bdata = b.data if isinstance(b, Measurement) else check_finite_array(b, 2, "measurement")
    if bdata.shape != model.sensor_shape:
        raise ShapeMismatchError(
            f"measurement shape {bdata.shape} != sensor {model.sensor_shape}")
    if v is None:
        return bdata
    vdata = v.data if isinstance(v, HyperspectralCube) else check_finite_array(v, 3, "cube")
    if vdata.shape != model.cube_shape:
        raise ShapeMismatchError(f"cube shape {vdata.shape} != model {model.cube_shape}")
    return bdata, vdata


def data_fidelity(model, b, v):
    """``½‖b − A v‖²``."""
    bdata, vdata = _arrays(model, b, v)
    r = model.apply(vdata) - bdata
    return 0.5 * float(np.vdot(r, r))


def _objective(model, bdata, x, cfg):
    r = model.apply(x) - bdata
    fid = 0.5 * float(np.vdot(r, r))
    total = fid
    if cfg.tau1:
        total += cfg.tau1 * tv3d_value(x, cfg.tv_weights)
    if cfg.tau2:
        total += cfg.tau2 * nuclear_value(x)
    return total, fid


def objective(model, b, v, cfg):
    """``½‖b − Av‖² + tau1·TV(v) + tau2·‖v‖_*``."""
    bdata, vdata = _arrays(model, b, v)
    return _objective(model, bdata, vdata, cfg)[0]


def _prox(x, step, cfg):
    if cfg.tau1:
        x = prox_tv3d(x, cfg.tv_weights, cfg.tau1 * step)
    if cfg.tau2:
        x = prox_nuclear(x, cfg.tau2 * step)
    return np.maximum(x, 0.0, out=x)


def fista_reconstruct(model, b, cfg=None, callback=None):
    """Reconstruct a non-negative datacube from measurement ``b``.

    Each iteration takes a gradient step on the data term from the momentum
    point, then applies the TV prox, the nuclear-norm prox and the
    non-negative projection in that order. The start point is the zero cube.

    Parameters
    ----------
    model : SystemModel
    b : Measurement or ndarray
    cfg : SolverConfig, optional
    callback : callable, optional
        Called as ``callback(k, x)`` after iteration ``k`` (1-based).

    Returns
    -------
    cube : HyperspectralCube
    diagnostics : SolveDiagnostics

    Raises
    ------
    NumericalError
        If the iterate stops being finite.
    """
    cfg = cfg or SolverConfig()
    bdata = _arrays(model, b)
    diag = SolveDiagnostics()
    if cfg.step is None:
        lip = operator_norm(model)
        diag.lipschitz = lip
        if not lip > 0:
            raise NumericalError("operator norm is zero; nothing is measured",
                                 {"lipschitz": lip})
        step = STEP_SAFETY / lip
    else:
        step = cfg.step
    diag.final_step = step

    x = np.zeros(model.cube_shape)
    y = x.copy()
    t = 1.0
    track = cfg.convergence_tol > 0
    recent = []
    for k in range(1, cfg.max_iters + 1):
        grad = model.apply_adjoint(model.apply(y) - bdata)
        x_new = _prox(y - step * grad, step, cfg)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError(
                f"non-finite iterate at iteration {k}",
                {"iteration": k, "step": step,
                 "objective_history": list(diag.objective_history)})
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        diag.iterations_run = k

        record = (k - 1) % cfg.log_every == 0
        if record or track:
            obj, fid = _objective(model, bdata, x, cfg)
            if record:
                diag.objective_history.append(obj)
                diag.data_fidelity_history.append(fid)
                logger.debug("iter %d objective %.6e fidelity %.6e", k, obj, fid)
            if track:
                recent.append(obj)
                if len(recent) > CONVERGENCE_WINDOW:
                    old = recent.pop(0)
                    if abs(old - obj) <= cfg.convergence_tol * max(abs(old), np.finfo(float).tiny):
                        diag.converged = True
                        if callback is not None:
                            callback(k, x)
                        break
        if callback is not None:
            callback(k, x)

    return HyperspectralCube(x, model.wavelengths_nm), diag
