"""scikit-learn style wrapper around the reconstruction."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import FilterFunction, HyperspectralCube, Measurement, Psf, SystemModel, operator_norm
from .priors import TvWeights
from .solver import STEP_SAFETY, SolverConfig, fista_reconstruct
from .validation import ShapeMismatchError

__all__ = ["HyperspectralReconstructor"]


class HyperspectralReconstructor(TransformerMixin, BaseEstimator):
    """Recover datacubes from lensless filter-array measurements.

    ``fit`` builds the measurement operator and its Lipschitz constant;
    ``transform`` reconstructs one cube per measurement and
    ``inverse_transform`` simulates measurements from cubes. Samples are
    flattened row-major: measurements to ``ny*nx`` features, cubes to
    ``K*ny_scene*nx_scene`` features (channel-major).

    Parameters
    ----------
    psf : Psf or array_like
    filter_function : FilterFunction or array_like of shape (K, ny, nx)
    scene_shape : tuple of int, optional
    tau1, tau2 : float
        TV and nuclear-norm weights.
    tv_weights : tuple of float
        (wx, wy, wl).
    max_iters : int
    step : float, optional
        Defaults to ``0.9 / L``.
    convergence_tol : float
    log_every : int

    Attributes
    ----------
    model_ : SystemModel
    lipschitz_ : float
    step_ : float
    n_features_in_ : int
    diagnostics_ : list of SolveDiagnostics
        From the most recent ``transform``.
    """

    def __init__(self, psf=None, filter_function=None, scene_shape=None, tau1=0.0, tau2=0.0,
                 tv_weights=(1.0, 1.0, 1.0), max_iters=500, step=None, convergence_tol=0.0,
                 log_every=1):
        self.psf = psf
        self.filter_function = filter_function
        self.scene_shape = scene_shape
        self.tau1 = tau1
        self.tau2 = tau2
        self.tv_weights = tv_weights
        self.max_iters = max_iters
        self.step = step
        self.convergence_tol = convergence_tol
        self.log_every = log_every

    def _solver_config(self):
        return SolverConfig(tau1=self.tau1, tau2=self.tau2,
                            tv_weights=TvWeights.coerce(self.tv_weights),
                            max_iters=self.max_iters, step=self.step_,
                            convergence_tol=self.convergence_tol, log_every=self.log_every)

    def fit(self, X=None, y=None):
        """Build the operator. ``X`` and ``y`` are ignored."""
        if self.psf is None or self.filter_function is None:
            raise ValueError("psf and filter_function are required")
        psf = self.psf if isinstance(self.psf, Psf) else Psf(self.psf)
        filt = self.filter_function
        if not isinstance(filt, FilterFunction):
            filt = FilterFunction(filt)
        self.model_ = SystemModel(psf, filt, self.scene_shape)
        self.lipschitz_ = operator_norm(self.model_)
        self.step_ = self.step if self.step is not None else STEP_SAFETY / self.lipschitz_
        self._solver_config()  # validate hyper-parameters eagerly
        self.n_features_in_ = int(np.prod(self.model_.sensor_shape))
        return self

    def _measurements(self, X):
        if isinstance(X, Measurement):
            X = X.data[None]
        X = check_array(X, allow_nd=True, dtype=np.float64)
        ny, nx = self.model_.sensor_shape
        if X.ndim == 3 and X.shape[1:] == (ny, nx):
            return X
        if X.ndim == 2 and X.shape[1] == ny * nx:
            return X.reshape(-1, ny, nx)
        raise ShapeMismatchError(
            f"expected (n, {ny * nx}) or (n, {ny}, {nx}) measurements, got {X.shape}")

    def transform(self, X):
        """Reconstruct each measurement; returns ``(n_samples, K*ny*nx)``."""
        check_is_fitted(self, "model_")
        cfg = self._solver_config()
        out, diags = [], []
        for b in self._measurements(X):
            cube, diag = fista_reconstruct(self.model_, b, cfg)
            out.append(cube.data.ravel())
            diags.append(diag)
        self.diagnostics_ = diags
        return np.stack(out)

    def reconstruct(self, b):
        """Reconstruct one measurement as a :class:`HyperspectralCube`."""
        flat = self.transform(self._measurements(b)[:1])
        return HyperspectralCube(flat[0].reshape(self.model_.cube_shape),
                                 self.model_.wavelengths_nm)

    def inverse_transform(self, X):
        """Simulate measurements of cubes; returns ``(n_samples, ny*nx)``."""
        check_is_fitted(self, "model_")
        shape = self.model_.cube_shape
        X = check_array(X, allow_nd=True, dtype=np.float64)
        if X.ndim == 2 and X.shape[1] == int(np.prod(shape)):
            X = X.reshape((-1,) + shape)
        if X.shape[1:] != shape:
            raise ShapeMismatchError(f"expected cubes of shape {shape}, got {X.shape[1:]}")
        return np.stack([self.model_.apply(v).ravel() for v in X])
