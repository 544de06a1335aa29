import math

import numpy as np
import pytest

from ane.graph import parse_edge_lines, preprocess, row_normalize
from ane.proximity import (
    PpmiConfig,
    accumulate_powers,
    load_feature_matrix,
    load_ppmi,
    ppmi_features,
    save_ppmi,
    shifted_ppmi,
)


def scalar_ppmi_oracle(m, beta):
    """Independent per-cell evaluation: explicit loops and math.log."""
    n_rows, n_cols = m.shape
    col_sums = [sum(m[i][j] for i in range(n_rows)) for j in range(n_cols)]
    out = np.zeros_like(np.asarray(m, dtype=np.float64))
    for i in range(n_rows):
        for j in range(n_cols):
            if m[i][j] == 0 or col_sums[j] == 0:
                continue
            out[i, j] = max(math.log(m[i][j] / col_sums[j]) - math.log(beta), 0.0)
    return out


def random_transition(rng, n):
    mat = rng.random((n, n)) * (rng.random((n, n)) < 0.6)
    mat[np.arange(n), rng.integers(n, size=n)] += 0.2  # no all-zero rows
    return mat / mat.sum(axis=1, keepdims=True)


def test_two_cycle_powers():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(accumulate_powers(a, 2), np.ones((2, 2)))


def test_power_t1_is_identity_case():
    rng = np.random.default_rng(0)
    a = random_transition(rng, 5)
    np.testing.assert_array_equal(accumulate_powers(a, 1), a)


def test_powers_match_matrix_power_oracle():
    rng = np.random.default_rng(1)
    a = random_transition(rng, 10)
    oracle = sum(np.linalg.matrix_power(a, k) for k in range(1, 4))
    np.testing.assert_allclose(accumulate_powers(a, 3), oracle, atol=1e-9)


def test_powers_row_sums():
    rng = np.random.default_rng(2)
    for t in (1, 2, 4):
        a = random_transition(rng, 8)
        np.testing.assert_allclose(accumulate_powers(a, t).sum(axis=1), t, atol=1e-6)


def test_powers_rejects_t_zero():
    with pytest.raises(ValueError, match="t must be >= 1"):
        accumulate_powers(np.eye(2), 0)


def test_two_cycle_ppmi_hand_value():
    m = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = shifted_ppmi(m, beta=0.5).matrix
    ln2 = math.log(2.0)
    np.testing.assert_allclose(x, [[0.0, ln2], [ln2, 0.0]])
    assert x[0, 0] == 0.0  # zero cell stays exactly zero


def test_uniform_matrix_cancels_exactly():
    m = np.full((4, 4), 0.25)
    x = shifted_ppmi(m, beta=0.25).matrix
    np.testing.assert_array_equal(x, np.zeros((4, 4)))


def test_matches_scalar_oracle_random():
    rng = np.random.default_rng(3)
    a = random_transition(rng, 8)
    m = accumulate_powers(a, 2)
    x = shifted_ppmi(m, beta=1 / 8).matrix
    np.testing.assert_allclose(x, scalar_ppmi_oracle(m, 1 / 8), atol=1e-9)


def test_zero_column_flagged_and_zeroed():
    m = np.array([[0.5, 0.0], [0.5, 0.0]])
    res = shifted_ppmi(m, beta=0.1)
    assert res.zero_columns == 1
    assert (res.matrix[:, 1] == 0).all()


def test_monotone_in_beta():
    rng = np.random.default_rng(4)
    m = accumulate_powers(random_transition(rng, 6), 3)
    x_small = shifted_ppmi(m, beta=0.05).matrix
    x_large = shifted_ppmi(m, beta=0.5).matrix
    assert (x_small >= x_large).all()


def test_column_scale_invariance():
    rng = np.random.default_rng(5)
    m = accumulate_powers(random_transition(rng, 6), 2)
    scaled = m.copy()
    scaled[:, 2] *= 7.5
    a = shifted_ppmi(m, beta=0.2).matrix
    b = shifted_ppmi(scaled, beta=0.2).matrix
    np.testing.assert_allclose(a[:, 2], b[:, 2], atol=1e-12)
    np.testing.assert_array_equal(a[:, [0, 1, 3, 4, 5]], b[:, [0, 1, 3, 4, 5]])


def test_sparsity_alignment():
    rng = np.random.default_rng(6)
    m = accumulate_powers(random_transition(rng, 7), 2)
    x = shifted_ppmi(m, beta=1 / 7).matrix
    assert not ((x > 0) & (m == 0)).any()


def test_negative_input_rejected():
    with pytest.raises(ValueError, match="non-negative"):
        shifted_ppmi(np.array([[-1.0]]), beta=0.5)
    with pytest.raises(ValueError, match="beta"):
        shifted_ppmi(np.eye(2), beta=0.0)


def test_ppmi_features_defaults_beta_to_inverse_n():
    g = preprocess(parse_edge_lines(["a b", "b c", "c a"]))
    feats = ppmi_features(g)
    assert feats.beta == pytest.approx(1 / 3)
    assert feats.steps == 4
    assert feats.matrix.shape == (3, 3)


def test_ppmi_features_size_guard():
    g = preprocess(parse_edge_lines(["a b", "b c"]))
    with pytest.raises(ValueError, match="dense limit"):
        ppmi_features(g, max_nodes=2)


def test_config_validation():
    with pytest.raises(ValueError):
        PpmiConfig(steps=0)
    with pytest.raises(ValueError):
        PpmiConfig(beta=-0.1)


def test_save_load_roundtrip_bitwise(tmp_path):
    g = preprocess(parse_edge_lines(["a b 2", "b c 1", "c a 0.5", "c d 4"]))
    feats = ppmi_features(g)
    path = tmp_path / "x.ppmi"
    save_ppmi(feats, path)
    back = load_ppmi(path)
    assert np.array_equal(back.matrix, feats.matrix)  # bitwise after text roundtrip
    assert back.steps == feats.steps
    assert back.beta == feats.beta


def test_load_feature_matrix_generic_header(tmp_path):
    path = tmp_path / "feats.txt"
    path.write_text("2 3\n1 2 3\n4 5 6\n")
    mat = load_feature_matrix(path)
    np.testing.assert_array_equal(mat, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])


def test_load_feature_matrix_accepts_ppmi_cache(tmp_path):
    g = preprocess(parse_edge_lines(["a b", "b c", "c a"]))
    feats = ppmi_features(g)
    path = tmp_path / "x.ppmi"
    save_ppmi(feats, path)
    np.testing.assert_array_equal(load_feature_matrix(path), feats.matrix)


def test_load_feature_matrix_bad_rows(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 3\n1 2 3\n4 5\n")
    with pytest.raises(ValueError, match="row 1"):
        load_feature_matrix(path)


def test_row_normalize_feeds_accumulate():
    g = preprocess(parse_edge_lines(["a b", "b c", "c d", "d a"]))
    m = accumulate_powers(row_normalize(g), 4)
    np.testing.assert_allclose(m.sum(axis=1), 4.0, atol=1e-6)
