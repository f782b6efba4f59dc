"""Seeded synthetic benchmark tables.

The generator plants a configurable number of informative risk-style
features whose distributions shift between the C and NC classes, plus
label-independent noise features. When at least one noise feature is
requested the last one is constant, which anchors the expectation that
permutation importance scores an unused feature exactly zero. One noise
feature is categorical so end-to-end runs exercise level splits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import FeatureTable
from .errors import ConfigError
from .records import FeatureSchema, FeatureSpec


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a synthetic table."""

    n_rows: int = 9200
    imbalance: float = 45.0  # NC rows per C row
    n_informative: int = 4
    n_noise: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_rows < 2:
            raise ConfigError("need at least two rows")
        if self.imbalance < 1.0:
            raise ConfigError("imbalance is NC per C and must be >= 1")
        if self.n_informative < 1:
            raise ConfigError("need at least one informative feature")
        if self.n_noise < 0:
            raise ConfigError("noise feature count cannot be negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def n_c(self) -> int:
        return max(1, round(self.n_rows / (1.0 + self.imbalance)))

    @property
    def n_nc(self) -> int:
        return self.n_rows - self.n_c


# Class-conditional samplers for the planted features. Each returns a
# column for (rng, size); the C variants sit higher but overlap the NC
# ones enough that a forest trained on the raw imbalance stays biased
# toward NC.
def _rad_c(rng, size):
    return rng.beta(3.8, 2.0, size)


def _rad_nc(rng, size):
    return rng.beta(1.7, 3.2, size)


def _fav_c(rng, size):
    return 0.99 * rng.beta(3.1, 2.0, size)


def _fav_nc(rng, size):
    return 0.99 * rng.beta(1.75, 3.4, size)


def _spw_c(rng, size):
    return rng.lognormal(12.05, 1.05, size)


def _spw_nc(rng, size):
    return rng.lognormal(11.05, 1.2, size)


def _cpw_c(rng, size):
    return 1.0 + rng.gamma(2.8, 1.55, size)


def _cpw_nc(rng, size):
    return 1.0 + rng.gamma(1.55, 1.15, size)


_PLANTED = (
    ("RAD", _rad_c, _rad_nc),
    ("Fav", _fav_c, _fav_nc),
    ("SPW", _spw_c, _spw_nc),
    ("CPW", _cpw_c, _cpw_nc),
)

_NOISE_LEVELS = ("APF", "GE", "GM")


def _noise_columns(rng, n, count):
    """Label-independent noise columns; the last one is constant."""
    specs = []
    cols = []
    makers = [
        ("GO", "categorical", lambda: rng.choice(3, size=n, p=[0.5, 0.3, 0.2]).astype(float)),
        ("BeginningWeek", "numeric", lambda: rng.integers(1, 54, size=n).astype(float)),
        ("Spending", "numeric", lambda: rng.lognormal(12.0, 1.3, size=n)),
        ("noise_u", "numeric", lambda: rng.uniform(0.0, 1.0, size=n)),
        ("noise_n", "numeric", lambda: rng.standard_normal(size=n)),
    ]
    body = count - 1  # last slot is the constant column
    for i in range(body):
        name, kind, make = makers[i % len(makers)]
        if i >= len(makers):
            name = f"{name}{i // len(makers) + 1}"
        if kind == "categorical":
            specs.append(FeatureSpec(name, "categorical", _NOISE_LEVELS))
        else:
            specs.append(FeatureSpec(name, "numeric"))
        cols.append(make())
    if count >= 1:
        specs.append(FeatureSpec("const", "numeric"))
        cols.append(np.ones(n))
    return specs, cols


def generate_synthetic_table(spec: SynthSpec):
    """Build a labeled table; returns (table, planted_names, noise_names)."""
    rng = np.random.default_rng(spec.seed)
    n_c, n_nc, n = spec.n_c, spec.n_nc, spec.n_rows

    planted_specs = []
    planted_cols = []
    for i in range(spec.n_informative):
        name, sample_c, sample_nc = _PLANTED[i % len(_PLANTED)]
        if i >= len(_PLANTED):
            name = f"{name}{i // len(_PLANTED) + 1}"
        planted_specs.append(FeatureSpec(name, "numeric"))
        col = np.empty(n)
        col[:n_c] = sample_c(rng, n_c)
        col[n_c:] = sample_nc(rng, n_nc)
        planted_cols.append(col)

    noise_specs, noise_cols = _noise_columns(rng, n, spec.n_noise)

    schema = FeatureSchema(planted_specs + noise_specs)
    X = np.column_stack(planted_cols + noise_cols) if planted_cols or noise_cols else np.empty((n, 0))
    y = np.zeros(n, dtype=np.uint8)
    y[n_c:] = 1  # NC

    order = rng.permutation(n)
    table = FeatureTable(schema=schema, X=X[order], y=y[order])
    planted = tuple(s.name for s in planted_specs)
    noise = tuple(s.name for s in noise_specs)
    return table, planted, noise
