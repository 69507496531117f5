import numpy as np
import pytest

from ohbk.linalg import DimensionError
from ohbk.sources import (
    BLOCK,
    CsvParseError,
    MeasurementSource,
    SourceSpec,
    bundled_standin_path,
    load_csv_matrix,
    load_wdbc,
    make_rng,
    next_measurement,
    sample_gaussian_vector,
    sample_sphere_vector,
    sample_uniform_vector,
    standard_normals,
    synthesize_ground_truth,
    write_wdbc_standin,
)


def test_rng_determinism():
    a = make_rng(0).random(100)
    b = make_rng(0).random(100)
    c = make_rng(1).random(100)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_uniform_law_of_large_numbers():
    u = make_rng(5).random(10**6)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) <= 0.01


def test_gaussian_moments():
    z = standard_normals(make_rng(2), 10**6)
    assert abs(z.mean()) <= 0.01
    assert abs(z.var() - 1.0) <= 0.01


def test_gaussian_vector_repeatable():
    assert np.array_equal(sample_gaussian_vector(make_rng(9), 37), sample_gaussian_vector(make_rng(9), 37))


def test_uniform_vector_range_and_rejects_empty_range():
    v = sample_uniform_vector(make_rng(1), 1000, 0.0, 1.0)
    assert v.min() >= 0.0 and v.max() <= 1.0
    with pytest.raises(ValueError):
        sample_uniform_vector(make_rng(1), 5, 0.3, 0.3)


def test_narrow_uniform_is_coherent():
    rng = make_rng(4)
    cosines = []
    for _ in range(1000):
        u = sample_uniform_vector(rng, 50, 0.9, 1.0)
        v = sample_uniform_vector(rng, 50, 0.9, 1.0)
        cosines.append(u @ v / np.sqrt((u @ u) * (v @ v)))
    assert min(cosines) >= 0.99


def test_sphere_vectors():
    rng = make_rng(8)
    for n in (1, 2, 7, 50):
        v = sample_sphere_vector(rng, n)
        assert abs(v @ v - 1.0) <= 1e-12


def test_sphere_mean_is_zero():
    src = MeasurementSource(SourceSpec("sphere", 3, seed=1))
    phis, _ = src.take(10**6)
    np.testing.assert_allclose(phis.mean(axis=0), 0.0, atol=0.01)
    np.testing.assert_allclose(np.einsum("ij,ij->i", phis, phis), 1.0, rtol=0, atol=1e-12)


def test_ground_truth_repeatable():
    x = synthesize_ground_truth(make_rng(3), 50)
    assert x.shape == (50,)
    assert np.array_equal(x, synthesize_ground_truth(make_rng(3), 50))


def test_measurement_against_basis_vector():
    x_star = np.zeros(4)
    x_star[0] = 1.0
    rows = np.array([[2.0, 0.0, 0.0, 0.0]])
    src = MeasurementSource(SourceSpec("dataset", 4, rows=rows), x_star=x_star)
    m = next_measurement(src)
    assert m.y == 2.0


SPECS = [
    SourceSpec("gaussian", 20, seed=3),
    SourceSpec("uniform", 20, seed=3),
    SourceSpec("uniform", 20, seed=3, lo=0.5, hi=1.0),
    SourceSpec("sphere", 20, seed=3),
    SourceSpec("dataset", 20, seed=3, rows=np.random.default_rng(0).integers(1, 11, (150, 20)).astype(float),
               row_mode="random"),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.describe())
def test_noiseless_consistency(spec):
    src = MeasurementSource(spec)
    phis, ys = src.take(10**4)
    xs = src.x_star
    resid = np.abs(ys - phis @ xs)
    scale = np.linalg.norm(phis, axis=1) * np.linalg.norm(xs)
    assert np.all(resid <= 1e-12 * scale)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.describe())
def test_replay_is_identical(spec):
    a, b = MeasurementSource(spec), MeasurementSource(spec)
    pa, ya = a.take(700)
    pb, yb = b.take(700)
    assert np.array_equal(pa, pb) and np.array_equal(ya, yb)
    a.restart()
    pc, _ = a.take(700)
    assert np.array_equal(pa, pc)


def test_single_and_block_consumption_agree():
    spec = SourceSpec("gaussian", 5, seed=12)
    block, _ = MeasurementSource(spec).take(BLOCK + 17)
    src = MeasurementSource(spec)
    singles = np.array([src.next_measurement().phi for _ in range(BLOCK + 17)])
    assert np.array_equal(block, singles)


def test_cyclic_dataset_repeats_with_row_period():
    rows = np.arange(21.0).reshape(7, 3) + 1.0
    src = MeasurementSource(SourceSpec("dataset", 3, rows=rows, row_mode="cyclic"))
    phis, ys = src.take(30)
    np.testing.assert_array_equal(phis[:23], phis[7:])
    np.testing.assert_array_equal(ys[:23], ys[7:])


def test_stream_once_ends():
    loaded = load_wdbc(bundled_standin_path())
    src = MeasurementSource(SourceSpec("dataset", 10, rows=loaded.values, row_mode="once"))
    got = list(src)
    assert len(got) == 699
    assert src.next_measurement() is None
    assert src.exhausted


def test_shuffled_single_pass_is_a_permutation():
    rows = np.arange(40.0).reshape(20, 2)
    src = MeasurementSource(SourceSpec("dataset", 2, seed=5, rows=rows, row_mode="once", shuffle=True))
    phis, _ = src.take(50)
    assert phis.shape == (20, 2)
    assert sorted(map(tuple, phis)) == sorted(map(tuple, rows))


def test_spec_validation():
    with pytest.raises(ValueError):
        SourceSpec("laplace", 3)
    with pytest.raises(ValueError):
        SourceSpec("uniform", 3, lo=1.0, hi=1.0)
    with pytest.raises(ValueError):
        SourceSpec("dataset", 3)
    with pytest.raises(DimensionError):
        SourceSpec("dataset", 3, rows=np.ones((4, 2)))


def test_csv_basic(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,4\n5,6\n")
    out = load_csv_matrix(p)
    np.testing.assert_array_equal(out.values, [[1, 2], [3, 4], [5, 6]])
    assert out.dropped_rows == 0


def test_csv_missing_token_and_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b\n1,2\n3,?\n5,6\n")
    out = load_csv_matrix(p, skip_header=True)
    np.testing.assert_array_equal(out.values, [[1, 2], [5, 6]])
    assert out.dropped_rows == 1


def test_csv_column_selection_and_delimiter(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("10;1;2\n11;3;4\n")
    np.testing.assert_array_equal(load_csv_matrix(p, delimiter=";", drop_columns=[0]).values, [[1, 2], [3, 4]])
    np.testing.assert_array_equal(load_csv_matrix(p, delimiter=";", columns=[2]).values, [[2], [4]])


def test_csv_parse_error_location(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3,x\n")
    with pytest.raises(CsvParseError) as info:
        load_csv_matrix(p)
    assert (info.value.row, info.value.column) == (2, 2)


def test_csv_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_csv_matrix(tmp_path / "nope.csv")


def test_standin_matches_bundled_file(tmp_path):
    p = write_wdbc_standin(tmp_path / "w.csv")
    assert p.read_bytes() == bundled_standin_path().read_bytes()
    loaded = load_wdbc(p)
    assert loaded.values.shape == (699, 10)
    assert loaded.dropped_rows == 16
