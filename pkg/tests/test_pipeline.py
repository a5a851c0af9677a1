from dataclasses import replace

import numpy as np
import pytest

from src.dataset import TextureSheet, build_manifest
from src.errors import FeatureMismatchError, ParameterError
from src.forest import ForestParams, forest_to_dict
from src.pca import pca_fit
from src.pipeline import (
    FeatureTable,
    RunConfig,
    assemble_table,
    bench_second_order,
    evaluate,
    extract_features,
    extract_features_with_pca,
    fit_model,
    pca_matrix,
    run_sweep,
    signature_columns,
    train_accuracy,
    train_subset,
)
from src.sigcore import DifferenceScheme


def test_run_config_validation():
    RunConfig().validate()
    with pytest.raises(ParameterError):
        RunConfig(signatures=False, n_pcs=0).validate()
    RunConfig(signatures=False, n_pcs=0, baseline=True).validate()
    with pytest.raises(ParameterError):
        RunConfig(n_pcs=-1).validate()


def test_signature_columns():
    assert len(signature_columns(RunConfig(symmetrize=True))) == 12
    assert len(signature_columns(RunConfig(include_first_order=True))) == 18
    assert len(signature_columns(RunConfig(cross_channel=True))) == 36
    assert signature_columns(RunConfig(symmetrize=False))[0] == "sig2.boxbox.ch0"


def test_symmetrized_signatures_plus_three_pcs(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(symmetrize=True, n_pcs=3))
    assert len(table.feature_names) == 15
    assert table.feature_names[:1] == ["sig2.boxbox.ch0.sym"]
    assert table.feature_names[-3:] == ["pca.1", "pca.2", "pca.3"]
    assert table.values.shape == (len(manifest.entries), 15)
    assert table.index == list(range(len(manifest.entries)))
    assert table.labels[0] == manifest.classes[0]


def test_first_order_and_central_scheme(small_dataset):
    manifest, patches = small_dataset
    config = RunConfig(scheme=DifferenceScheme.CENTRAL, symmetrize=False, include_first_order=True)
    table = extract_features(manifest, patches, config)
    assert table.feature_names[0] == "sig1.box.ch0"
    assert np.isfinite(table.values).all()


def test_patch_count_must_match(small_dataset):
    manifest, patches = small_dataset
    with pytest.raises(ParameterError):
        extract_features(manifest, patches[:-1], RunConfig())


def test_constant_images_have_zero_signatures():
    sheets = [TextureSheet(class_name=n, id=n, field=np.full((24, 24, 3), v)) for n, v in (("dark", 0.1), ("light", 0.9))]
    manifest = build_manifest(sheets, 3, 3, 8, seed=0)
    patches = [np.full((8, 8, 3), 0.1 if e.class_index == 0 else 0.9) for e in manifest.entries]
    table = extract_features(manifest, patches, RunConfig(symmetrize=True, include_first_order=True))
    assert np.all(table.values == 0.0)


def test_pca_is_fitted_on_train_rows_only(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(signatures=False, n_pcs=2))
    leaked = pca_matrix(patches, pca_fit(patches, 2))
    assert not np.allclose(table.values, leaked)
    train = [p for p, e in zip(patches, manifest.entries) if e.split == "train"]
    assert np.array_equal(table.values, pca_matrix(patches, pca_fit(train, 2)))


def test_csv_round_trip_is_bit_exact(small_dataset, tmp_path):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(symmetrize=True, n_pcs=2))
    table.to_csv(tmp_path / "features.csv")
    loaded = FeatureTable.read_csv(tmp_path / "features.csv")
    assert loaded.feature_names == table.feature_names
    assert loaded.labels == table.labels and loaded.splits == table.splits
    assert np.array_equal(loaded.values, table.values)

    params = ForestParams(n_trees=10, seed=4)
    assert forest_to_dict(fit_model(loaded, params)) == forest_to_dict(fit_model(table, params))


def test_zero_feature_table_round_trip(small_dataset, tmp_path):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(signatures=False, baseline=True))
    assert table.feature_names == []
    table.to_csv(tmp_path / "empty.csv")
    loaded = FeatureTable.read_csv(tmp_path / "empty.csv")
    assert loaded.values.shape == (len(manifest.entries), 0)


def test_baseline_accuracy_is_chance(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(signatures=False, baseline=True))
    for seed in range(5):
        report = evaluate(fit_model(table, ForestParams(n_trees=20, seed=seed)), table)
        assert report.accuracy == pytest.approx(1 / 3)
        assert report.chance == pytest.approx(1 / 3)


def test_evaluate_reports_confusion(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(symmetrize=True, n_pcs=2))
    model = fit_model(table, ForestParams(n_trees=100))
    report = evaluate(model, table)
    assert report.n_rows == 30
    assert int(report.confusion.to_numpy().sum()) == 30
    assert list(report.confusion.index) == manifest.classes
    assert report.accuracy == pytest.approx(np.trace(report.confusion.to_numpy()) / 30)
    assert train_accuracy(model, table) >= 0.9


def test_evaluate_refuses_other_columns(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(symmetrize=True))
    model = fit_model(table, ForestParams(n_trees=5))
    other = extract_features(manifest, patches, RunConfig(symmetrize=False))
    with pytest.raises(FeatureMismatchError):
        evaluate(model, other)


def test_train_subset_keeps_all_test_rows(small_dataset):
    manifest, _ = small_dataset
    keep = train_subset(manifest, 2)
    kept = [manifest.entries[i] for i in keep]
    assert sum(e.split == "train" for e in kept) == 2 * len(manifest.classes)
    assert sum(e.split == "test" for e in kept) == len(manifest.split("test"))
    assert train_subset(manifest, None) == list(range(len(manifest.entries)))


def test_sweep_grid_matches_direct_runs(small_dataset):
    manifest, patches = small_dataset
    base = RunConfig(forest=ForestParams(n_trees=15))
    grid = run_sweep(manifest, patches, base, pcs_list=[0, 3], train_sizes=[None, 4], seeds=[0, 1])
    assert len(grid) == 2 * 2 * 2 * 2 * 2
    assert set(grid.columns) >= {"seed", "train_size", "n_pcs", "signatures", "symmetrize", "accuracy", "chance"}

    chance = grid[(grid.n_pcs == 0) & (~grid.signatures)]
    assert np.allclose(chance.accuracy, 1 / 3)

    config = replace(base, n_pcs=3, symmetrize=True, signatures=True)
    table = extract_features(manifest, patches, config)
    direct = evaluate(fit_model(table, replace(base.forest, seed=1)), table).accuracy
    cell = grid[(grid.n_pcs == 3) & grid.signatures & grid.symmetrize & (grid.seed == 1) & (grid.train_size == 6)]
    assert cell.accuracy.tolist() == [direct]


def test_assemble_table_subset(small_dataset):
    manifest, patches = small_dataset
    config = RunConfig(signatures=False, baseline=True)
    table = assemble_table(manifest, config, None, None, 3, entries=[0, 5, 40])
    assert table.index == [0, 5, 40]
    assert table.values.shape == (3, 0)


def test_bench_report():
    report = bench_second_order([2, 8], seed=0, oracle_limit=8, repeats=2)
    assert report["size"].tolist() == [2, 8]
    assert (report["max_rel_deviation"] <= 1e-9).all()
    skipped = bench_second_order([16], oracle_limit=8, repeats=1)
    assert np.isnan(skipped["oracle_seconds"].iloc[0])
    with pytest.raises(ParameterError):
        bench_second_order([1])


def test_confusion_of_constant_predictions(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(signatures=False, baseline=True))
    report = evaluate(fit_model(table, ForestParams(n_trees=5, seed=2)), table)
    counts = report.confusion.to_numpy()
    assert counts.sum(axis=1).tolist() == [10, 10, 10]
    assert (counts.sum(axis=0) > 0).sum() == 1
    assert report.confusion.index.name == "true" and report.confusion.columns.name == "predicted"


def test_evaluate_rejects_unseen_test_label(small_dataset):
    manifest, patches = small_dataset
    table = extract_features(manifest, patches, RunConfig(symmetrize=True))
    model = fit_model(table, ForestParams(n_trees=5))
    table.labels[table.splits.index("test")] = "granite"
    with pytest.raises(ParameterError):
        evaluate(model, table)


def test_extraction_exposes_the_fitted_pca(small_dataset):
    manifest, patches = small_dataset
    table, model = extract_features_with_pca(manifest, patches, RunConfig(symmetrize=True, n_pcs=2))
    assert model.n_components == 2
    assert np.array_equal(table.values[:, -2:], pca_matrix(patches, model))
    _, none = extract_features_with_pca(manifest, patches, RunConfig(symmetrize=True))
    assert none is None
