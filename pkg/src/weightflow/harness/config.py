"""Experiment configuration: loading, defaults and validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .. import presets
from ..kernels import from_preset, kernel_sin2, source_m1

PRESETS = ("m1_paper", "appendixB", "custom")


@dataclass
class ExperimentConfig:
    """Declarative description of a run.

    Unset ``k`` is chosen as the smallest level with ``dt * S_bar <= 0.5``;
    unset ``sample_times`` become four equally spaced times in ``(0, T]``.
    """

    preset: str = "m1_paper"
    N_list: list = field(default_factory=lambda: [20, 50, 100])
    G: int = 400
    k: int | None = None
    T: float = 10.0
    beta: float = presets.BETA
    R: float = presets.RADIUS
    mass_convention: str = "N"
    seed: int = 0
    output_dir: str | None = None
    sample_times: list | None = None
    dt: float = 1e-3
    integrator: str = "rk4"
    transport_substeps: int = 4
    domain: tuple = (0.0, 1.0)
    stop_tol: float | None = 1e-6
    bins: int = presets.COUNTING_BINS
    cluster_threshold: float = 1e-3
    cluster_centers: list = field(default_factory=lambda: list(presets.CLUSTER_CENTERS))
    cluster_tol: float = 0.03
    kernel: str | None = None
    source: str | None = None
    dt_list: list = field(default_factory=lambda: [0.1, 0.01])
    steps: int = 2
    pairs: int = 100
    metric_radius: float = 1.0
    p_list: list = field(default_factory=lambda: [1, 2, 3])
    courant: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}, got {self.preset!r}")
        if self.preset == "custom" and not (self.kernel and self.source):
            raise ValueError("custom preset needs 'kernel' and 'source' preset strings")
        if self.mass_convention not in ("N", "unit"):
            raise ValueError("mass_convention must be 'N' or 'unit'")
        n = [int(v) for v in self.N_list]
        if not n or min(n) < 1 or any(b <= a for a, b in zip(n, n[1:])):
            raise ValueError(f"N_list must be strictly increasing positive integers, got {self.N_list}")
        self.N_list = n
        if not self.T > 0 or not self.dt > 0 or self.dt > self.T:
            raise ValueError("need T > 0 and 0 < dt <= T")
        if self.G < 1 or self.bins < 1:
            raise ValueError("G and bins must be positive")
        if self.k is not None and self.k < 0:
            raise ValueError("k must be >= 0")
        self.domain = tuple(float(v) for v in self.domain)
        if len(self.domain) != 2 or not self.domain[1] > self.domain[0]:
            raise ValueError(f"bad domain {self.domain}")
        if self.sample_times is not None:
            ts = [float(t) for t in self.sample_times]
            if any(t < 0 or t > self.T for t in ts):
                raise ValueError("sample_times must lie in [0, T]")
            self.sample_times = ts
        if not 0 < self.courant <= 1:
            raise ValueError("courant must lie in (0, 1]")

    def times(self) -> list:
        if self.sample_times is not None:
            return list(self.sample_times)
        return [self.T * (i + 1) / 4 for i in range(4)]

    def kernels(self):
        """Interaction kernel and source kernel for the configured model."""
        if self.preset == "custom":
            return from_preset(self.kernel), from_preset(self.source)
        if self.preset == "appendixB":
            return from_preset("appendixB_field"), from_preset("appendixB_linear")
        phi = kernel_sin2(self.R)
        return phi, source_m1(phi, self.beta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["domain"] = list(self.domain)
        return d


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML or JSON file of :class:`ExperimentConfig` keys."""
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    data = dict(data or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**data)
