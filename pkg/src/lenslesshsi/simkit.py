"""Seeded generators for PSFs, filter arrays, test scenes and sensor noise."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import FilterFunction, HyperspectralCube, Measurement, Psf, forward
from .validation import check_finite_array, check_positive_int, check_shape2

__all__ = [
    "FilterArraySpec",
    "FINE_FILTER_SPEC",
    "DIFFUSER_CONTRAST",
    "generate_diffuser_psf",
    "generate_lens_psf",
    "generate_filter_function",
    "filter_center_wavelengths",
    "make_point_scene",
    "make_resolution_target",
    "BarGroup",
    "add_gaussian_noise",
    "simulate_measurement",
]

DIFFUSER_CONTRAST = 4.0
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class FilterArraySpec:
    """Geometry and passbands of a tiled spectral filter array.

    ``grid`` counts filters per super-pixel as (rows, cols); each filter covers
    ``filter_px`` × ``filter_px`` sensor pixels. Passbands are Gaussian with
    FWHM ``bandwidth_nm`` and centers spread uniformly over
    [``lambda_min_nm``, ``lambda_max_nm``].
    """

    grid: tuple = (4, 4)
    filter_px: int = 4
    lambda_min_nm: float = 386.0
    lambda_max_nm: float = 898.0
    bandwidth_nm: float = 12.0
    peak_transmittance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "grid", check_shape2(tuple(self.grid), "grid"))
        object.__setattr__(self, "filter_px", check_positive_int(self.filter_px, "filter_px"))
        if not self.lambda_min_nm < self.lambda_max_nm and self.n_channels > 1:
            raise ValueError("lambda_min_nm must be < lambda_max_nm")
        if not self.bandwidth_nm > 0:
            raise ValueError("bandwidth_nm must be > 0")
        if not 0 < self.peak_transmittance <= 1:
            raise ValueError("peak_transmittance must lie in (0, 1]")

    @property
    def n_channels(self):
        return self.grid[0] * self.grid[1]

    @property
    def superpixel_px(self):
        """Super-pixel width in sensor pixels."""
        return self.grid[1] * self.filter_px


# 8×8 filters over 386–898 nm, one 20 µm filter ≈ 2 sensor pixels.
FINE_FILTER_SPEC = FilterArraySpec(grid=(8, 8), filter_px=2)


def filter_center_wavelengths(spec):
    """Filter center wavelengths in raster order."""
    if spec.n_channels == 1:
        return np.array([0.5 * (spec.lambda_min_nm + spec.lambda_max_nm)])
    return np.linspace(spec.lambda_min_nm, spec.lambda_max_nm, spec.n_channels)


def generate_diffuser_psf(seed, shape=(64, 64), feature_px=1.5):
    """Pseudorandom caustic-like PSF covering the whole frame.

    Unit white noise is low-passed with a Gaussian of width ``feature_px``,
    passed through ``exp(4·z)`` to emphasize bright ridges, shifted to a zero
    minimum and normalized to unit sum.
    """
    ny, nx = check_shape2(tuple(shape), "shape")
    if ny * nx < 2:
        raise ValueError(f"degenerate PSF shape {shape!r}")
    if not feature_px >= 1:
        raise ValueError("feature_px must be >= 1")
    rng = np.random.default_rng(seed)
    z = ndimage.gaussian_filter(rng.standard_normal((ny, nx)), sigma=feature_px, mode="wrap")
    h = np.exp(DIFFUSER_CONTRAST * z)
    h -= h.min()
    return Psf(h)


def generate_lens_psf(kind, shape=(64, 64), superpixel_px=16):
    """Lens baselines: ``high_na`` is a centered delta, ``low_na`` a centered
    Gaussian whose FWHM equals the super-pixel size.
    """
    ny, nx = check_shape2(tuple(shape), "shape")
    superpixel_px = check_positive_int(superpixel_px, "superpixel_px")
    kind = kind.replace("-", "_")
    cy, cx = ny // 2, nx // 2
    if kind == "high_na":
        h = np.zeros((ny, nx))
        h[cy, cx] = 1.0
    elif kind == "low_na":
        sigma = superpixel_px * _FWHM_TO_SIGMA
        yy, xx = np.mgrid[:ny, :nx]
        h = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma ** 2))
    else:
        raise ValueError(f"unknown lens kind {kind!r}")
    return Psf(h)


def generate_filter_function(sensor_shape, spec=None, wavelengths_nm=None):
    """Tile the filter array across the sensor and evaluate its passbands.

    Parameters
    ----------
    sensor_shape : (ny, nx)
    spec : FilterArraySpec, optional
    wavelengths_nm : sequence of float, optional
        Cube channel wavelengths; one per filter. Defaults to the filter centers.

    Returns
    -------
    FilterFunction
    """
    ny, nx = check_shape2(tuple(sensor_shape), "sensor_shape")
    spec = spec or FilterArraySpec()
    centers = filter_center_wavelengths(spec)
    if wavelengths_nm is None:
        wavelengths_nm = centers
    wl = np.asarray(wavelengths_nm, dtype=np.float64).reshape(-1)
    if wl.size != spec.n_channels:
        raise ValueError(f"{wl.size} wavelengths for {spec.n_channels} filters")
    rows, cols = spec.grid
    fy = (np.arange(ny) // spec.filter_px) % rows
    fx = (np.arange(nx) // spec.filter_px) % cols
    index = fy[:, None] * cols + fx[None, :]
    center_map = centers[index]
    data = spec.peak_transmittance * np.exp(
        -4.0 * math.log(2.0) * (wl[:, None, None] - center_map[None]) ** 2
        / spec.bandwidth_nm ** 2)
    return FilterFunction(data, wl, superpixel=spec.grid, filter_px=spec.filter_px)


def _wavelength_grid(n_lambda, wavelengths_nm):
    if wavelengths_nm is None:
        return None, check_positive_int(n_lambda, "n_lambda")
    wl = np.asarray(wavelengths_nm, dtype=np.float64)
    return wl, wl.size


def make_point_scene(shape, points, n_lambda=None, wavelengths_nm=None):
    """Zero cube with impulses ``(x, y, channel, amplitude)``.

    ``shape`` is the spatial (ny, nx); give either ``n_lambda`` or
    ``wavelengths_nm`` for the spectral axis.
    """
    ny, nx = check_shape2(tuple(shape), "shape")
    wl, k = _wavelength_grid(n_lambda, wavelengths_nm)
    data = np.zeros((k, ny, nx))
    for x, y, c, amp in points:
        if not (0 <= x < nx and 0 <= y < ny and 0 <= c < k):
            raise ValueError(f"point {(x, y, c)} outside cube ({k}, {ny}, {nx})")
        if not amp > 0:
            raise ValueError("point amplitudes must be > 0")
        data[c, y, x] += amp
    return HyperspectralCube(data, wl)


@dataclass(frozen=True)
class BarGroup:
    """Three-bar group with top-left corner ``position = (x, y)``.

    Bars are vertical, ``bar_width_px`` wide with equal gaps, and
    ``length_px`` tall (default five bar widths). ``channel=None`` means a
    broadband source with equal amplitude in every channel. ``orientation``
    is ``"vertical"`` or ``"horizontal"``.
    """

    position: tuple
    bar_width_px: int
    channel: int = None
    length_px: int = None
    amplitude: float = 1.0
    orientation: str = "vertical"

    @property
    def extent(self):
        """(height, width) of the group footprint."""
        w = self.bar_width_px
        length = self.length_px or 5 * w
        if self.orientation == "vertical":
            return length, 5 * w
        return 5 * w, length

    def bar_centers(self):
        """Centers of the three bars across the bar direction, in pixels."""
        x, y = self.position
        w = self.bar_width_px
        origin = x if self.orientation == "vertical" else y
        return [origin + (2 * i) * w + (w - 1) / 2.0 for i in range(3)]


def _coerce_group(g):
    if isinstance(g, BarGroup):
        return g
    if isinstance(g, dict):
        return BarGroup(**g)
    position, width, channel = g
    return BarGroup(tuple(position), int(width), channel)


def make_resolution_target(shape, bar_groups, n_lambda=None, wavelengths_nm=None):
    """USAF-style target made of three-bar groups.

    Raises
    ------
    ValueError
        If a group leaves the frame or two groups overlap.
    """
    ny, nx = check_shape2(tuple(shape), "shape")
    wl, k = _wavelength_grid(n_lambda, wavelengths_nm)
    data = np.zeros((k, ny, nx))
    occupied = np.zeros((ny, nx), dtype=bool)
    for g in map(_coerce_group, bar_groups):
        w = check_positive_int(g.bar_width_px, "bar_width_px")
        if g.orientation not in ("vertical", "horizontal"):
            raise ValueError(f"bad orientation {g.orientation!r}")
        x0, y0 = g.position
        h, wd = g.extent
        if x0 < 0 or y0 < 0 or y0 + h > ny or x0 + wd > nx:
            raise ValueError(f"bar group at {g.position} leaves the {ny}x{nx} frame")
        if occupied[y0:y0 + h, x0:x0 + wd].any():
            raise ValueError(f"bar group at {g.position} overlaps another group")
        occupied[y0:y0 + h, x0:x0 + wd] = True
        pattern = np.zeros((h, wd))
        for i in range(3):
            if g.orientation == "vertical":
                pattern[:, 2 * i * w:(2 * i + 1) * w] = g.amplitude
            else:
                pattern[2 * i * w:(2 * i + 1) * w, :] = g.amplitude
        if g.channel is None:
            data[:, y0:y0 + h, x0:x0 + wd] += pattern
        else:
            if not 0 <= g.channel < k:
                raise ValueError(f"channel {g.channel} outside 0..{k - 1}")
            data[g.channel, y0:y0 + h, x0:x0 + wd] += pattern
    return HyperspectralCube(data, wl)


def add_gaussian_noise(b, variance, seed):
    """Add i.i.d. zero-mean Gaussian noise; negative pixels are kept."""
    if not variance >= 0:
        raise ValueError(f"variance must be >= 0, got {variance!r}")
    data = b.data if isinstance(b, Measurement) else check_finite_array(b, 2, "measurement")
    if variance == 0:
        return Measurement(data.copy())
    rng = np.random.default_rng(seed)
    return Measurement(data + rng.normal(0.0, math.sqrt(variance), data.shape))


def simulate_measurement(model, scene, noise_variance=0.0, seed=0, normalize=True):
    """Forward-simulate ``scene`` and add noise.

    With ``normalize=True`` the scene is first rescaled so the clean
    measurement peaks at 1, which makes ``noise_variance`` a fraction of the
    full-scale signal.

    Returns
    -------
    measurement : Measurement
    scene : HyperspectralCube
        The (possibly rescaled) ground truth matching the measurement.
    """
    clean = forward(model, scene)
    if normalize:
        peak = float(clean.data.max())
        if peak <= 0:
            raise ValueError("scene produces an all-zero measurement")
        scene = scene.with_data(scene.data / peak)
        clean = Measurement(clean.data / peak)
    return add_gaussian_noise(clean, noise_variance, seed), scene
