"""Resolution and conditioning analyses: PSF autocorrelation width, two-point
tests, local condition numbers and spectral peak accuracy.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .core import HyperspectralCube, Psf
from .simkit import make_point_scene, simulate_measurement
from .solver import fista_reconstruct
from .validation import check_positive_int

__all__ = [
    "AUTOCORR_LEVEL",
    "RAYLEIGH_DIP",
    "GOOD_CONDITION",
    "CondSweepRow",
    "TwoPointRow",
    "autocorr_resolution",
    "is_resolved",
    "two_point_sweep",
    "two_point_test",
    "local_condition_number",
    "lattice_support",
    "condition_sweep",
    "spectral_peak_error",
    "psnr",
]

AUTOCORR_LEVEL = 0.7
RAYLEIGH_DIP = 0.735
# Reporting threshold only.
GOOD_CONDITION = 40.0
_RANK_TOL = 1e-12


def autocorr_resolution(psf):
    """Half-width (pixels) of the PSF autocorrelation peak at 70 % of its maximum.

    The autocorrelation of the mean-subtracted PSF is computed with zero
    padding; the width is read on the horizontal profile through the peak,
    interpolating linearly between samples.
    """
    h = psf.data if isinstance(psf, Psf) else np.asarray(psf, dtype=np.float64)
    h = h - h.mean()
    if not np.any(h):
        raise ValueError("flat PSF has no autocorrelation peak")
    ny, nx = h.shape
    s = (sfft.next_fast_len(2 * ny - 1, real=True), sfft.next_fast_len(2 * nx - 1, real=True))
    spec = sfft.rfft2(h, s=s)
    ac = sfft.irfft2(spec * np.conj(spec), s=s)
    ac = np.fft.fftshift(ac)
    cy, cx = s[0] // 2, s[1] // 2
    profile = ac[cy, cx:]
    peak = profile[0]
    level = AUTOCORR_LEVEL * peak
    below = np.nonzero(profile <= level)[0]
    if below.size == 0:
        raise ValueError("autocorrelation never falls to 70 % of its peak")
    i = below[0]
    p0, p1 = profile[i - 1], profile[i]
    return float((i - 1) + (p0 - level) / (p0 - p1))


def _local_maxima(p):
    idx = []
    for i in range(len(p)):
        left = p[i - 1] if i > 0 else -np.inf
        right = p[i + 1] if i + 1 < len(p) else -np.inf
        if p[i] > 0 and p[i] >= left and p[i] >= right and (p[i] > left or p[i] > right):
            idx.append(i)
    return idx


def is_resolved(profile, pos_a, pos_b, dip=RAYLEIGH_DIP, tol_px=1):
    """Two-peak test on a 1D profile.

    Resolved when distinct local maxima sit within ``tol_px`` of both true
    positions and the minimum between them is at most ``dip`` times the mean
    of the two peak values.
    """
    p = np.asarray(profile, dtype=np.float64)
    lo, hi = sorted((pos_a, pos_b))
    if hi - lo < 2:
        return False
    maxima = _local_maxima(p)

    def best(pos):
        near = [i for i in maxima if abs(i - pos) <= tol_px]
        return max(near, key=lambda i: p[i]) if near else None

    ia, ib = best(lo), best(hi)
    if ia is None or ib is None or ib - ia < 2:
        return False
    valley = p[ia + 1:ib].min()
    return bool(valley <= dip * 0.5 * (p[ia] + p[ib]))


@dataclass(frozen=True)
class TwoPointRow:
    separation_px: int
    separation_superpx: float
    resolved: bool
    valley_ratio: float


def _two_point_positions(scene_shape, separation):
    ny, nx = scene_shape
    y = ny // 2
    xa = nx // 2 - separation // 2
    return y, xa, xa + separation


def two_point_sweep(model, cfg, channel, separations_px, noise_var=0.0, seed=0,
                    superpixel_px=None):
    """Simulate, reconstruct and score a horizontal point pair per separation."""
    seps = list(separations_px)
    if any(s < 0 for s in seps) or seps != sorted(seps):
        raise ValueError("separations must be non-negative and sorted ascending")
    sp = superpixel_px or model.filter.superpixel_px or 1
    rows = []
    for d in seps:
        y, xa, xb = _two_point_positions(model.scene_shape, int(d))
        pts = [(xa, y, channel, 1.0)] if d == 0 else [(xa, y, channel, 1.0), (xb, y, channel, 1.0)]
        scene = make_point_scene(model.scene_shape, pts, wavelengths_nm=model.wavelengths_nm)
        meas, _ = simulate_measurement(model, scene, noise_var, seed)
        recon, _ = fista_reconstruct(model, meas, cfg)
        profile = recon.data[channel, y]
        resolved = d > 0 and is_resolved(profile, xa, xb)
        peak = 0.5 * (profile[xa] + profile[xb])
        between = profile[xa + 1:xb].min() if xb - xa >= 2 else peak
        ratio = float(between / peak) if peak > 0 else float("nan")
        rows.append(TwoPointRow(int(d), d / sp, bool(resolved), ratio))
    return rows


def two_point_test(model, cfg, channel, separations_px, noise_var=0.0, seed=0):
    """Smallest separation (pixels) whose pair is Rayleigh-resolved, or ``None``."""
    for row in two_point_sweep(model, cfg, channel, separations_px, noise_var, seed):
        if row.resolved:
            return row.separation_px
    return None


def local_condition_number(model, support):
    """Condition number of the columns of ``A`` selected by ``support``.

    Each column is the flattened measurement of a unit impulse at voxel
    ``(x, y, channel)``. Returns ``inf`` when the smallest singular value is
    below ``1e-12`` times the largest, or when every column is numerically zero.
    """
    support = [tuple(int(c) for c in s) for s in support]
    if not support:
        raise ValueError("support is empty")
    if len(set(support)) != len(support):
        raise ValueError("support has duplicate voxels")
    k, ny, nx = model.cube_shape
    cols = []
    for x, y, c in support:
        if not (0 <= x < nx and 0 <= y < ny and 0 <= c < k):
            raise ValueError(f"voxel {(x, y, c)} outside the scene")
        impulse = np.zeros(model.cube_shape)
        impulse[c, y, x] = 1.0
        cols.append(model.apply(impulse).ravel())
    s = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
    # FFT round-off leaves ~1e-17 in columns that should be exactly zero.
    scale = np.linalg.norm(model.psf.data) * model.filter.data.max()
    if s[0] <= _RANK_TOL * scale or s[-1] <= _RANK_TOL * s[0]:
        return math.inf
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class CondSweepRow:
    num_points: int
    separation_px: float
    separation_superpx: float
    condition_number: float
    skipped: bool = False


def lattice_support(scene_shape, n_lambda, num_points, separation_px, mode="spatial_2d",
                    channel=None):
    """Centered lattice of ``num_points`` voxels with spatial pitch ``separation_px``.

    ``spatial_2d`` fills an m×m square (m = ⌈√n⌉) row by row in one channel
    (default the middle one). ``spectral_3d`` fills an m×m×m cube
    (m = ⌈∛n⌉) whose spectral pitch is one channel, centered on the middle
    channel. Returns ``None`` when the lattice does not fit.
    """
    ny, nx = scene_shape
    d = int(round(separation_px))
    if mode == "spatial_2d":
        m = math.ceil(math.sqrt(num_points) - 1e-12)
        mc = 1
    elif mode == "spectral_3d":
        m = math.ceil(num_points ** (1.0 / 3.0) - 1e-9)
        mc = m
    else:
        raise ValueError(f"unknown mode {mode!r}")
    span = (m - 1) * d
    x0 = (nx - 1 - span) // 2
    y0 = (ny - 1 - span) // 2
    c_mid = (n_lambda // 2) if channel is None else channel
    c0 = c_mid - (mc - 1) // 2
    if x0 < 0 or y0 < 0 or c0 < 0 or c0 + mc > n_lambda:
        return None
    pts = []
    for c in range(mc):
        for j in range(m):
            for i in range(m):
                pts.append((x0 + i * d, y0 + j * d, c0 + c))
    return pts[:num_points]


def condition_sweep(model, max_points, separations_px, mode="spatial_2d", superpixel_px=None,
                    channel=None):
    """Local condition numbers over point counts 1..max_points and the given separations.

    Lattices that leave the scene produce a row with ``skipped=True`` and a NaN
    condition number.
    """
    max_points = check_positive_int(max_points, "max_points")
    if any(d < 1 for d in separations_px):
        raise ValueError("separations must be >= 1 pixel")
    sp = superpixel_px or model.filter.superpixel_px or 1
    rows = []
    for n in range(1, max_points + 1):
        for d in separations_px:
            support = lattice_support(model.scene_shape, model.n_lambda, n, d, mode, channel)
            if support is None:
                rows.append(CondSweepRow(n, float(d), d / sp, math.nan, skipped=True))
                continue
            rows.append(CondSweepRow(n, float(d), d / sp, local_condition_number(model, support)))
    return rows


def spectral_peak_error(recon, true_point, true_lambda_nm, window=1):
    """|wavelength of the reconstructed spectral peak − true wavelength| in nm.

    The spatial peak is searched within ±``window`` pixels of ``true_point =
    (x, y)`` on the channel-summed image; the spectrum there is taken and its
    arg-max channel compared to ``true_lambda_nm``.
    """
    data = recon.data
    if not np.any(data):
        raise ValueError("reconstruction is all zeros")
    x, y = true_point
    k, ny, nx = data.shape
    if not (0 <= x < nx and 0 <= y < ny):
        raise ValueError(f"point {true_point} outside the cube")
    y0, y1 = max(0, y - window), min(ny, y + window + 1)
    x0, x1 = max(0, x - window), min(nx, x + window + 1)
    energy = data[:, y0:y1, x0:x1].sum(axis=0)
    iy, ix = np.unravel_index(np.argmax(energy), energy.shape)
    spectrum = data[:, y0 + iy, x0 + ix]
    return float(abs(recon.wavelengths_nm[int(np.argmax(spectrum))] - true_lambda_nm))


def psnr(estimate, truth, peak=None):
    """Peak signal-to-noise ratio in dB; ``peak`` defaults to ``truth.max()``."""
    est = estimate.data if isinstance(estimate, HyperspectralCube) else np.asarray(estimate)
    ref = truth.data if isinstance(truth, HyperspectralCube) else np.asarray(truth)
    peak = float(ref.max()) if peak is None else float(peak)
    mse = float(np.mean((est - ref) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak ** 2 / mse)
