"""JSON run configuration shared by the CLI subcommands."""

import json
from dataclasses import dataclass, field

from .priors import TvWeights
from .simkit import FilterArraySpec, generate_diffuser_psf, generate_lens_psf
from .solver import SolverConfig

__all__ = ["RunConfig", "ConfigError", "DEFAULT_FILTER", "DEFAULT_PSF"]

DEFAULT_FILTER = {
    "grid": [4, 4],
    "filter_px": 4,
    "lambda_min_nm": 386.0,
    "lambda_max_nm": 898.0,
    "bandwidth_nm": 12.0,
    "peak_transmittance": 1.0,
}

DEFAULT_PSF = {
    "kind": "diffuser",
    "seed": 0,
    "feature_px": 2.75,
    "superpixel_px": 16,
}

_TOP_KEYS = {
    "tau1", "tau2", "tv_weights", "max_iters", "step", "convergence_tol",
    "filter", "psf", "noise_variance", "seed",
}
_PSF_KINDS = {"diffuser", "high_na", "low_na"}


class ConfigError(ValueError):
    """Malformed run configuration."""


def _merge(section, given, defaults):
    if given is None:
        return dict(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"'{section}' must be an object")
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in '{section}': {sorted(unknown)}")
    out = dict(defaults)
    out.update(given)
    return out


@dataclass
class RunConfig:
    """Everything an experiment needs besides file paths.

    Missing keys take the defaults below; unknown keys are rejected.
    """

    tau1: float = 1e-7
    tau2: float = 0.0
    tv_weights: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    max_iters: int = 500
    step: float = None
    convergence_tol: float = 0.0
    filter: dict = field(default_factory=lambda: dict(DEFAULT_FILTER))
    psf: dict = field(default_factory=lambda: dict(DEFAULT_PSF))
    noise_variance: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        self.filter = _merge("filter", self.filter, DEFAULT_FILTER)
        self.psf = _merge("psf", self.psf, DEFAULT_PSF)
        self.psf["kind"] = str(self.psf["kind"]).replace("-", "_")
        if self.psf["kind"] not in _PSF_KINDS:
            raise ConfigError(f"psf.kind must be one of {sorted(_PSF_KINDS)}")
        try:
            self.solver_config()
            self.filter_spec()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if not (isinstance(self.noise_variance, (int, float)) and self.noise_variance >= 0):
            raise ConfigError("noise_variance must be >= 0")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tv_weights": list(self.tv_weights),
            "max_iters": self.max_iters,
            "step": self.step,
            "convergence_tol": self.convergence_tol,
            "filter": dict(self.filter),
            "psf": dict(self.psf),
            "noise_variance": self.noise_variance,
            "seed": self.seed,
        }

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def solver_config(self, **overrides):
        kw = dict(tau1=self.tau1, tau2=self.tau2, tv_weights=TvWeights.coerce(self.tv_weights),
                  max_iters=self.max_iters, step=self.step,
                  convergence_tol=self.convergence_tol)
        kw.update(overrides)
        return SolverConfig(**kw)

    def filter_spec(self):
        f = self.filter
        return FilterArraySpec(grid=tuple(f["grid"]), filter_px=f["filter_px"],
                               lambda_min_nm=f["lambda_min_nm"], lambda_max_nm=f["lambda_max_nm"],
                               bandwidth_nm=f["bandwidth_nm"],
                               peak_transmittance=f["peak_transmittance"])

    def make_psf(self, shape):
        p = self.psf
        if p["kind"] == "diffuser":
            return generate_diffuser_psf(p["seed"], shape, p["feature_px"])
        return generate_lens_psf(p["kind"], shape, p["superpixel_px"])
