"""Penalties and proximal operators for the regularized reconstruction.

All functions accept either a :class:`~lenslesshsi.core.HyperspectralCube` or a
raw ``(K, ny, nx)`` array and return the same kind they were given.
"""

from dataclasses import dataclass

import numpy as np

from .core import HyperspectralCube
from .validation import NumericalError, check_finite_array, check_nonnegative

__all__ = [
    "TvWeights",
    "tv3d_value",
    "prox_tv3d",
    "nuclear_value",
    "prox_nuclear",
    "project_nonneg",
    "N_TV_COMPONENTS",
]

# Two shifts per axis over three axes.
N_TV_COMPONENTS = 6


@dataclass(frozen=True)
class TvWeights:
    """Per-axis weights of the anisotropic 3D total variation."""

    wx: float = 1.0
    wy: float = 1.0
    wl: float = 1.0

    def __post_init__(self):
        for name in ("wx", "wy", "wl"):
            object.__setattr__(self, name, check_nonnegative(getattr(self, name), name))

    @classmethod
    def coerce(cls, w):
        if w is None:
            return cls()
        if isinstance(w, cls):
            return w
        wx, wy, wl = w
        return cls(float(wx), float(wy), float(wl))

    def as_list(self):
        return [self.wx, self.wy, self.wl]

    def per_axis(self):
        """Weights in array-axis order (λ, y, x)."""
        return (self.wl, self.wy, self.wx)


def _unwrap(v):
    if isinstance(v, HyperspectralCube):
        return v.data, v.with_data
    return check_finite_array(v, 3, "cube"), lambda a: a


def tv3d_value(v, w=None):
    """Weighted anisotropic TV: sum of weighted absolute forward differences.

    The difference past the last index of each axis is taken as zero.
    """
    data, _ = _unwrap(v)
    w = TvWeights.coerce(w)
    total = 0.0
    for axis, weight in enumerate(w.per_axis()):
        if weight and data.shape[axis] > 1:
            total += weight * np.abs(np.diff(data, axis=axis)).sum()
    return float(total)


def _haar_shrink(x, axis, shift, threshold):
    """Soft-threshold the orthonormal Haar details of pairs ``(i, i+1)``, ``i ≡ shift (mod 2)``.

    Elements without a partner (the boundary) pass through unchanged.
    """
    out = x.copy()
    n = x.shape[axis]
    n_pairs = (n - shift) // 2
    if n_pairs == 0:
        return out
    lo = [slice(None)] * x.ndim
    hi = [slice(None)] * x.ndim
    lo[axis] = slice(shift, shift + 2 * n_pairs, 2)
    hi[axis] = slice(shift + 1, shift + 2 * n_pairs, 2)
    a, b = x[tuple(lo)], x[tuple(hi)]
    mean = (a + b) / np.sqrt(2.0)
    detail = (b - a) / np.sqrt(2.0)
    detail = np.sign(detail) * np.maximum(np.abs(detail) - threshold, 0.0)
    out[tuple(lo)] = (mean - detail) / np.sqrt(2.0)
    out[tuple(hi)] = (mean + detail) / np.sqrt(2.0)
    return out


def prox_tv3d(v, w=None, gamma=1.0):
    """Approximate proximal operator of ``gamma * TV_w`` by parallel Haar shrinkage.

    TV is split into six pieces, one per (axis, pair parity). Each piece is
    separable in an orthonormal Haar basis, so its proximal map is a soft
    threshold of the pair details. The six maps are evaluated with the penalty
    scaled by 6 and their outputs averaged. For a pair the detail coordinate
    is ``(b - a)/√2``, so the threshold there is ``6·√2·gamma·w_axis``.

    The result is exact for ``gamma = 0`` and on constant cubes, and preserves
    the cube mean. It is not the exact prox; the error grows with ``gamma``
    relative to the jump heights.
    """
    if gamma < 0 or not np.isfinite(gamma):
        raise ValueError(f"gamma must be a finite real >= 0, got {gamma!r}")
    data, wrap = _unwrap(v)
    if gamma == 0:
        return wrap(data.copy())
    w = TvWeights.coerce(w)
    acc = np.zeros_like(data)
    for axis, weight in enumerate(w.per_axis()):
        threshold = N_TV_COMPONENTS * np.sqrt(2.0) * gamma * weight
        for shift in (0, 1):
            if threshold == 0:
                acc += data
            else:
                acc += _haar_shrink(data, axis, shift, threshold)
    return wrap(acc / N_TV_COMPONENTS)


def _unfold(data):
    """(K, ny, nx) -> (ny*nx, K): pixels as rows, channels as columns."""
    k = data.shape[0]
    return data.reshape(k, -1).T


def _fold(mat, shape):
    return mat.T.reshape(shape)


def _svd(mat):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge: {exc}",
            {"shape": mat.shape, "finite": bool(np.all(np.isfinite(mat))),
             "fro_norm": float(np.linalg.norm(mat))},
        ) from exc


def nuclear_value(v):
    """Sum of singular values of the (pixels × channels) unfolding."""
    data, _ = _unwrap(v)
    try:
        s = np.linalg.svd(_unfold(data), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}", {"shape": data.shape}) from exc
    return float(s.sum())


def prox_nuclear(v, gamma):
    """Singular value soft-thresholding of the (pixels × channels) unfolding."""
    if gamma < 0 or not np.isfinite(gamma):
        raise ValueError(f"gamma must be a finite real >= 0, got {gamma!r}")
    data, wrap = _unwrap(v)
    if gamma == 0:
        return wrap(data.copy())
    u, s, vt = _svd(_unfold(data))
    s = np.maximum(s - gamma, 0.0)
    keep = s > 0
    mat = (u[:, keep] * s[keep]) @ vt[keep]
    return wrap(_fold(mat, data.shape))


def project_nonneg(v):
    data, wrap = _unwrap(v)
    return wrap(np.maximum(data, 0.0))
