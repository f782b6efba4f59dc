"""Synthetic benchmark table generator."""

import numpy as np
import pytest

from hyperforest.errors import ConfigError
from hyperforest.synth import SynthSpec, generate_synthetic_table


def test_documented_shape():
    spec = SynthSpec(n_rows=4_600, imbalance=45.0, seed=1)
    assert spec.n_c == 100
    assert spec.n_nc == 4_500
    table, planted, noise = generate_synthetic_table(spec)
    assert table.n_rows == 4_600
    assert int((table.y == 0).sum()) == 100
    assert int((table.y == 1).sum()) == 4_500


def test_default_shape():
    spec = SynthSpec(seed=0)
    assert spec.n_rows == 9_200
    assert spec.n_c == 200
    assert spec.n_nc == 9_000


def test_planted_and_noise_names():
    table, planted, noise = generate_synthetic_table(
        SynthSpec(n_rows=200, imbalance=4.0, n_informative=4, n_noise=6, seed=2)
    )
    assert planted == ("RAD", "Fav", "SPW", "CPW")
    assert len(noise) == 6
    assert noise[-1] == "const"
    assert table.schema.names == planted + noise
    assert table.n_features == 10


def test_constant_column_is_constant():
    table, _, noise = generate_synthetic_table(
        SynthSpec(n_rows=300, imbalance=5.0, seed=3)
    )
    col = table.X[:, table.schema.index("const")]
    assert np.all(col == col[0])


def test_includes_categorical_noise():
    table, _, noise = generate_synthetic_table(
        SynthSpec(n_rows=300, imbalance=5.0, seed=4)
    )
    spec = table.schema["GO"]
    assert spec.kind == "categorical"
    col = table.X[:, table.schema.index("GO")]
    assert set(np.unique(col)) <= {0.0, 1.0, 2.0}


def test_planted_columns_shift_with_class():
    table, planted, _ = generate_synthetic_table(
        SynthSpec(n_rows=2_000, imbalance=4.0, seed=5)
    )
    for name in planted:
        col = table.X[:, table.schema.index(name)]
        c_mean = col[table.y == 0].mean()
        nc_mean = col[table.y == 1].mean()
        assert c_mean > nc_mean, name


def test_noise_columns_do_not_shift_much():
    table, _, noise = generate_synthetic_table(
        SynthSpec(n_rows=4_000, imbalance=3.0, seed=6)
    )
    col = table.X[:, table.schema.index("noise_u")]
    c_mean = col[table.y == 0].mean()
    nc_mean = col[table.y == 1].mean()
    assert abs(c_mean - nc_mean) < 0.05


def test_deterministic_given_seed():
    a, _, _ = generate_synthetic_table(SynthSpec(n_rows=500, imbalance=4.0, seed=9))
    b, _, _ = generate_synthetic_table(SynthSpec(n_rows=500, imbalance=4.0, seed=9))
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)
    c, _, _ = generate_synthetic_table(SynthSpec(n_rows=500, imbalance=4.0, seed=10))
    assert not np.array_equal(a.X, c.X)


def test_rows_are_shuffled():
    table, _, _ = generate_synthetic_table(SynthSpec(n_rows=500, imbalance=4.0, seed=11))
    # The C rows must not sit in one contiguous prefix.
    positions = np.flatnonzero(table.y == 0)
    assert positions.max() - positions.min() >= len(positions)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SynthSpec(n_rows=1)
    with pytest.raises(ConfigError):
        SynthSpec(imbalance=0.5)
    with pytest.raises(ConfigError):
        SynthSpec(n_informative=0)
    with pytest.raises(ConfigError):
        SynthSpec(n_noise=-1)
    with pytest.raises(ConfigError):
        SynthSpec(seed=-1)


def test_zero_noise_allowed():
    table, planted, noise = generate_synthetic_table(
        SynthSpec(n_rows=100, imbalance=3.0, n_noise=0, seed=12)
    )
    assert noise == ()
    assert table.n_features == 4
