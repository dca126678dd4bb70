import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockdiscrim.errors import DatasetFormatError, ModelError, UsageError
from blockdiscrim.model import (
    BlockParams,
    BlockPartition,
    LabeledDataset,
    PopulationModel,
    block_divergence,
    block_noncentrality,
    canonical_model,
    fit,
    read_dataset_csv,
    sample,
    total_divergence,
    write_dataset_csv,
)


def random_spd(rng, m):
    a = rng.standard_normal((m, m))
    return a @ a.T + m * np.eye(m)


class TestPartition:
    def test_total_features(self):
        assert BlockPartition(8, 3).total_features == 24

    @pytest.mark.parametrize("k,m", [(0, 3), (3, 0), (2.5, 1)])
    def test_invalid(self, k, m):
        with pytest.raises(UsageError):
            BlockPartition(k, m)


class TestDivergence:
    def test_identical_means(self):
        rng = np.random.default_rng(0)
        mu = rng.standard_normal(4)
        assert block_divergence(BlockParams(mu, mu, random_spd(rng, 4))) == 0.0

    def test_scalar_block(self):
        assert block_divergence(BlockParams([1.0], [-1.0], [[1.0]])) == pytest.approx(4.0, abs=1e-15)

    def test_reference_calibration(self):
        block = BlockParams([math.sqrt(0.1), 0, 0], [0, 0, 0], np.eye(3))
        assert block_divergence(block) == pytest.approx(0.1, abs=1e-15)

    @pytest.mark.parametrize("cov", [[[1.0, 2.0], [2.0, 1.0]], [[1.0, 0.5], [0.4, 1.0]], [[0.0, 0.0], [0.0, 1.0]]])
    def test_rejects_bad_covariance(self, cov):
        with pytest.raises(ModelError):
            block_divergence(BlockParams([1.0, 0.0], [0.0, 0.0], cov))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_reparameterization_invariance(self, m, seed):
        rng = np.random.default_rng(seed)
        cov = random_spd(rng, m)
        mu1, mu2 = rng.standard_normal(m), rng.standard_normal(m)
        a = rng.standard_normal((m, m)) + 3 * np.eye(m)
        base = block_divergence(BlockParams(mu1, mu2, cov))
        moved = block_divergence(BlockParams(a @ mu1, a @ mu2, a @ cov @ a.T))
        assert moved == pytest.approx(base, rel=1e-10, abs=1e-10)

    def test_total_examples(self):
        assert total_divergence(canonical_model(8, 3, 1.8, 36)) == pytest.approx(0.8, abs=1e-14)
        assert total_divergence(canonical_model(5, 2, 0.0, 10)) == 0.0
        part = BlockPartition(2, 1)
        model = PopulationModel(part, [BlockParams([1.0], [-1.0], [[1.0]]), BlockParams([0.3], [0.3], [[2.0]])])
        assert total_divergence(model) == pytest.approx(4.0, abs=1e-15)

    def test_total_additive_over_concatenation(self):
        rng = np.random.default_rng(3)
        blocks = [BlockParams(rng.standard_normal(2), rng.standard_normal(2), random_spd(rng, 2)) for _ in range(5)]
        left = PopulationModel(BlockPartition(2, 2), blocks[:2])
        right = PopulationModel(BlockPartition(3, 2), blocks[2:])
        whole = PopulationModel(BlockPartition(5, 2), blocks)
        assert total_divergence(whole) == pytest.approx(total_divergence(left) + total_divergence(right), rel=1e-14)


class TestNoncentrality:
    def test_reference_value(self):
        block = BlockParams([math.sqrt(0.1), 0, 0], [0, 0, 0], np.eye(3))
        assert block_noncentrality(block, 36) == pytest.approx(1.8, abs=1e-13)

    def test_hand_value(self):
        assert block_noncentrality(BlockParams([1.0], [-1.0], [[1.0]]), 2) == pytest.approx(4.0)

    def test_identity(self):
        rng = np.random.default_rng(5)
        block = BlockParams(rng.standard_normal(3), rng.standard_normal(3), random_spd(rng, 3))
        for n in (1, 7, 36, 1000):
            assert block_noncentrality(block, n) == (n / 2) * block_divergence(block)
        assert block_noncentrality(BlockParams([2.0], [2.0], [[1.0]]), 50) == 0.0


class TestCanonicalModel:
    @pytest.mark.parametrize("kappa,m,total", [(8, 3, 0.8), (4, 6, 0.4)])
    def test_reference_configs(self, kappa, m, total):
        model = canonical_model(kappa, m, 1.8, 36, 0.5)
        for b in model.blocks:
            assert block_divergence(b) == pytest.approx(0.1, abs=1e-14)
            np.testing.assert_array_equal(b.covariance, np.eye(m))
            np.testing.assert_allclose(b.mean1, -b.mean2)
        assert total_divergence(model) == pytest.approx(total, abs=1e-14)

    def test_zero_power(self):
        model = canonical_model(3, 2, 0.0, 10)
        for b in model.blocks:
            assert not b.mean1.any() and not b.mean2.any()

    @given(st.floats(0, 50), st.integers(1, 500))
    def test_round_trip(self, g2, n):
        model = canonical_model(2, 3, g2, n)
        assert block_noncentrality(model.blocks[0], n) == pytest.approx(g2, abs=1e-12, rel=1e-12)


class TestSample:
    def test_determinism(self):
        model = canonical_model(4, 3, 1.8, 36)
        a = sample(model, 1, 50, 123)
        b = sample(model, 1, 50, 123)
        np.testing.assert_array_equal(a.features, b.features)
        assert not np.array_equal(a.features, sample(model, 1, 50, 124).features)

    def test_count_must_be_positive(self):
        with pytest.raises(UsageError):
            sample(canonical_model(2, 2, 1.0, 10), 1, 0, 1)

    def test_single_row_standard_normal(self):
        model = canonical_model(2, 2, 0.0, 10)
        draws = np.stack([sample(model, 1, 1, seed).features[0] for seed in range(4000)])
        assert draws.shape == (4000, 4)
        assert np.all(np.abs(draws.mean(axis=0)) < 4 / math.sqrt(4000))
        assert np.all(np.abs(draws.var(axis=0) - 1) < 4 * math.sqrt(2 / 4000))

    def test_law_of_large_numbers(self):
        rng = np.random.default_rng(9)
        cov = random_spd(rng, 3)
        block = BlockParams(rng.standard_normal(3), rng.standard_normal(3), cov)
        model = PopulationModel(BlockPartition(2, 3), [block, block])
        n = 100_000
        x = sample(model, 2, n, 77).features
        sd = np.sqrt(np.tile(np.diag(cov), 2))
        assert np.all(np.abs(x.mean(axis=0) - np.tile(block.mean2, 2)) < 4 * sd / math.sqrt(n))


class TestFit:
    def test_single_row(self):
        part = BlockPartition(2, 2)
        r1 = np.array([[1.0, 2.0, 3.0, 4.0]])
        r2 = np.array([[0.0, 0.0, 0.0, 1.0]])
        clf = fit(r1, r2, [np.eye(2)] * 2, part)
        np.testing.assert_array_equal(clf.mean1, r1.reshape(2, 2))
        assert clf.train_size == 1

    def test_symmetric_data(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((10, 6))
        clf = fit(x, -x, [np.eye(3)] * 2, BlockPartition(2, 3))
        np.testing.assert_allclose(clf.mean1, -clf.mean2)

    def test_unequal_sizes(self):
        with pytest.raises(UsageError):
            fit(np.zeros((3, 2)), np.zeros((4, 2)), [np.eye(1)] * 2, BlockPartition(2, 1))

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            fit(np.zeros((3, 5)), np.zeros((3, 5)), [np.eye(2)] * 2, BlockPartition(2, 2))
        with pytest.raises(UsageError):
            fit(np.zeros((3, 4)), np.zeros((3, 4)), [np.eye(2)] * 3, BlockPartition(2, 2))

    def test_statistical_accuracy(self):
        model = canonical_model(3, 2, 4.0, 20)
        n = 10_000
        clf = fit(sample(model, 1, n, 1), sample(model, 2, n, 2), model.covariances, model.partition)
        assert np.all(np.abs(clf.mean1 - model.class_means(1)) < 4 / math.sqrt(n))
        assert np.all(np.abs(clf.mean2 - model.class_means(2)) < 4 / math.sqrt(n))


class TestFileFormats:
    def test_csv_round_trip_bytes(self, tmp_path):
        model = canonical_model(2, 3, 1.8, 36)
        data = LabeledDataset.concat([sample(model, 1, 5, 1), sample(model, 2, 5, 2)])
        first = tmp_path / "a.csv"
        write_dataset_csv(data, first)
        parsed = read_dataset_csv(first, model.partition)
        np.testing.assert_array_equal(parsed.features, data.features)
        np.testing.assert_array_equal(parsed.labels, data.labels)
        second = tmp_path / "b.csv"
        write_dataset_csv(parsed, second)
        assert first.read_bytes() == second.read_bytes()

    def test_comments_and_header(self):
        text = "# produced by hand\nlabel,f1,f2\n1,0.5,1\n# mid comment\n2,-1,2e-3\n"
        data = read_dataset_csv(io.StringIO(text))
        assert data.labels.tolist() == [1, 2]
        assert data.features[1, 1] == 2e-3

    @pytest.mark.parametrize("text,line", [
        ("label,f1\n1,0.5\n3,1\n", 3),
        ("label,f1\n1,abc\n", 2),
        ("label,f1,f2\n1,0.5\n", 2),
        ("lbl,f1\n1,2\n", 1),
    ])
    def test_malformed(self, text, line):
        with pytest.raises(DatasetFormatError) as info:
            read_dataset_csv(io.StringIO(text))
        assert info.value.line == line

    def test_model_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        blocks = [BlockParams(rng.standard_normal(2), rng.standard_normal(2), random_spd(rng, 2)) for _ in range(3)]
        model = PopulationModel(BlockPartition(3, 2), blocks, 0.3)
        path = tmp_path / "m.json"
        model.save(path)
        back = PopulationModel.load(path)
        assert back.prior1 == 0.3
        for a, b in zip(model.blocks, back.blocks):
            np.testing.assert_array_equal(a.covariance, b.covariance)
            np.testing.assert_array_equal(a.mean1, b.mean1)

    def test_model_validation(self):
        with pytest.raises(ModelError):
            PopulationModel(BlockPartition(2, 1), [BlockParams([0.0], [1.0], [[1.0]])])
        with pytest.raises(ModelError):
            PopulationModel(BlockPartition(1, 1), [BlockParams([0.0], [1.0], [[1.0]])], prior1=1.0)
