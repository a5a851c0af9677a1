# src/pipeline.py
"""
Feature extraction, training and evaluation shared by the CLI components.

The feature-name header is the contract between extract, train and eval: a
model refuses tables whose columns differ from the ones it was trained on.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import accuracy_score, confusion_matrix

from src.dataset import DatasetManifest
from src.errors import DatasetIOError, ParameterError
from src.forest import ForestModel, ForestParams, predict_batch, train_forest
from src.logger import log_message
from src.pca import PcaModel, pca_fit, pca_transform, variance_profile
from src.sigcore import (
    SECOND_ORDER_KINDS,
    DifferenceScheme,
    ImageField,
    SignatureKind,
    Window,
    brute_force_second,
    cross_channel_names,
    cross_channel_vector,
    full_window,
    max_relative_deviation,
    sig_second,
    signature_names,
    signature_vector,
)
from src.symmetry import symmetrized

FIRST_ORDER_KINDS = (SignatureKind.FIRST_12, SignatureKind.FIRST_HAT)
META_COLUMNS = ("index", "label", "split")
FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class RunConfig:
    scheme: DifferenceScheme = DifferenceScheme.FORWARD
    symmetrize: bool = True
    n_pcs: int = 0
    signatures: bool = True
    include_first_order: bool = False
    cross_channel: bool = False
    baseline: bool = False
    forest: ForestParams = field(default_factory=ForestParams)
    workers: int = 1

    def validate(self):
        if self.n_pcs < 0:
            raise ParameterError(f"n_pcs must be >= 0, got {self.n_pcs}")
        if not self.has_features() and not self.baseline:
            raise ParameterError("configuration selects no features; enable the baseline mode for chance level")

    def has_features(self) -> bool:
        return self.signatures or self.n_pcs > 0


@dataclass
class FeatureTable:
    feature_names: List[str]
    index: List[int]
    labels: List[str]
    splits: List[str]
    values: np.ndarray  # (rows, features)

    def rows(self, split: str) -> "FeatureTable":
        keep = [i for i, s in enumerate(self.splits) if s == split]
        return FeatureTable(
            feature_names=list(self.feature_names),
            index=[self.index[i] for i in keep],
            labels=[self.labels[i] for i in keep],
            splits=[self.splits[i] for i in keep],
            values=self.values[keep].reshape(len(keep), len(self.feature_names)),
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.feature_names)
        frame.insert(0, "split", self.splits)
        frame.insert(0, "label", self.labels)
        frame.insert(0, "index", self.index)
        return frame

    def to_csv(self, path):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            self.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8", lineterminator="\n")
        except OSError as e:
            raise DatasetIOError(path, f"cannot write feature table: {e}", e) from e

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        path = Path(path)
        try:
            frame = pd.read_csv(
                path,
                encoding="utf-8",
                float_precision="round_trip",
                dtype={"label": str, "split": str},
                keep_default_na=False,
            )
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise DatasetIOError(path, f"cannot read feature table: {e}", e) from e
        missing = [c for c in META_COLUMNS if c not in frame.columns]
        if missing:
            raise DatasetIOError(path, f"feature table lacks columns {missing}")
        names = [c for c in frame.columns if c not in META_COLUMNS]
        return cls(
            feature_names=names,
            index=[int(i) for i in frame["index"]],
            labels=list(frame["label"]),
            splits=list(frame["split"]),
            values=frame[names].to_numpy(dtype=np.float64).reshape(len(frame), len(names)),
        )


# --- extraction ---

def _signature_block(patch: ImageField, config: RunConfig) -> np.ndarray:
    scheme = config.scheme
    kinds = (FIRST_ORDER_KINDS if config.include_first_order else ()) + SECOND_ORDER_KINDS

    def plain(img: ImageField) -> np.ndarray:
        window = full_window(img.shape[0], img.shape[1], scheme)
        vector = signature_vector(img, window, scheme).select(kinds)
        if config.cross_channel:
            vector = np.concatenate([vector, cross_channel_vector(img, window, scheme)])
        return vector

    return symmetrized(patch, plain) if config.symmetrize else plain(patch)


def signature_columns(config: RunConfig, channels: int = 3) -> List[str]:
    kinds = (FIRST_ORDER_KINDS if config.include_first_order else ()) + SECOND_ORDER_KINDS
    names = signature_names(channels, config.symmetrize, kinds)
    if config.cross_channel:
        names += cross_channel_names(channels, config.symmetrize)
    return names


def signature_matrix(patches: Sequence[ImageField], config: RunConfig) -> np.ndarray:
    """Signature features of every patch, rows in input order."""
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            rows = list(pool.map(lambda p: _signature_block(p, config), patches))
    else:
        rows = [_signature_block(p, config) for p in patches]
    width = len(signature_columns(config, patches[0].shape[2])) if patches else 0
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), width)


def fit_pca_on_train(patches: Sequence[ImageField], splits: Sequence[str], n_pcs: int) -> PcaModel:
    train = [p for p, s in zip(patches, splits) if s == "train"]
    model = pca_fit(train, n_pcs)
    log_message("EXTRACT", f"PCA on {len(train)} train patches: " + " ".join(variance_profile(model)))
    return model


def pca_matrix(patches: Sequence[ImageField], model: PcaModel) -> np.ndarray:
    return np.asarray([pca_transform(model, p) for p in patches], dtype=np.float64).reshape(
        len(patches), model.n_components
    )


def assemble_table(
    manifest: DatasetManifest,
    config: RunConfig,
    signatures: Optional[np.ndarray],
    pcs: Optional[np.ndarray],
    channels: int = 3,
    entries: Optional[Sequence[int]] = None,
) -> FeatureTable:
    rows = list(entries) if entries is not None else list(range(len(manifest.entries)))
    blocks, names = [], []
    if config.signatures and signatures is not None:
        blocks.append(signatures)
        names += signature_columns(config, channels)
    if pcs is not None and pcs.shape[1]:
        blocks.append(pcs)
        names += [f"pca.{j + 1}" for j in range(pcs.shape[1])]
    values = np.hstack(blocks) if blocks else np.zeros((len(rows), 0))
    return FeatureTable(
        feature_names=names,
        index=[manifest.entries[i].index for i in rows],
        labels=[manifest.classes[manifest.entries[i].class_index] for i in rows],
        splits=[manifest.entries[i].split for i in rows],
        values=values,
    )


def extract_features_with_pca(
    manifest: DatasetManifest,
    patches: Sequence[ImageField],
    config: RunConfig,
) -> Tuple[FeatureTable, Optional[PcaModel]]:
    """
    Builds the feature table in manifest order: signature columns (symmetrized
    or raw), then PCA projections fitted on the train rows only.

    Returns:
        The table and the fitted PcaModel (None when no components were requested).
    """
    config.validate()
    if len(patches) != len(manifest.entries):
        raise ParameterError(f"{len(patches)} patches for {len(manifest.entries)} manifest entries")
    started = time.perf_counter()
    signatures = signature_matrix(patches, config) if config.signatures else None
    model, pcs = None, None
    if config.n_pcs > 0:
        model = fit_pca_on_train(patches, [e.split for e in manifest.entries], config.n_pcs)
        pcs = pca_matrix(patches, model)
    table = assemble_table(manifest, config, signatures, pcs, patches[0].shape[2] if patches else 3)
    log_message(
        "EXTRACT",
        f"{len(table.index)} rows x {len(table.feature_names)} features in {time.perf_counter() - started:.2f}s",
    )
    return table, model


def extract_features(manifest: DatasetManifest, patches: Sequence[ImageField], config: RunConfig) -> FeatureTable:
    return extract_features_with_pca(manifest, patches, config)[0]


# --- training and evaluation ---

def fit_model(table: FeatureTable, params: ForestParams, workers: int = 1, baseline: bool = False) -> ForestModel:
    """Trains on the train rows; class order is the order of first appearance."""
    train = table.rows("train")
    if not train.labels:
        raise ParameterError("feature table has no train rows")
    classes = list(dict.fromkeys(train.labels))
    return train_forest(
        train.values,
        train.labels,
        params,
        feature_names=table.feature_names,
        classes=classes,
        workers=workers,
        baseline=baseline or not table.feature_names,
    )


@dataclass
class EvalReport:
    accuracy: float
    chance: float
    confusion: pd.DataFrame
    n_rows: int


def evaluate(model: ForestModel, table: FeatureTable, split: str = "test") -> EvalReport:
    """
    Overall accuracy and confusion matrix (rows = true class, columns =
    predicted class) on the rows of one split.
    """
    model.check_features(table.feature_names)
    rows = table.rows(split)
    if not rows.labels:
        raise ParameterError(f"feature table has no {split} rows")
    predicted, _ = predict_batch(model, rows.values)
    classes = [str(c) for c in model.classes]
    truth = [str(t) for t in rows.labels]
    guesses = [str(p) for p in predicted]
    unseen = sorted(set(truth) - set(classes))
    if unseen:
        raise ParameterError(f"test labels {unseen} were never seen in training")
    confusion = pd.DataFrame(
        confusion_matrix(truth, guesses, labels=classes),
        index=pd.Index(classes, name="true"),
        columns=pd.Index(classes, name="predicted"),
    )
    return EvalReport(
        accuracy=float(accuracy_score(truth, guesses)),
        chance=1.0 / len(classes),
        confusion=confusion,
        n_rows=len(rows.labels),
    )


def train_accuracy(model: ForestModel, table: FeatureTable) -> float:
    return evaluate(model, table, split="train").accuracy


# --- experiment grid ---

def train_subset(manifest: DatasetManifest, size: Optional[int]) -> List[int]:
    """Entry positions kept when each class uses only its first `size` train patches; test rows all kept."""
    if size is None:
        return list(range(len(manifest.entries)))
    seen: Dict[int, int] = {}
    keep = []
    for i, entry in enumerate(manifest.entries):
        if entry.split == "train":
            seen[entry.class_index] = seen.get(entry.class_index, 0) + 1
            if seen[entry.class_index] > size:
                continue
        keep.append(i)
    return keep


def run_sweep(
    manifest: DatasetManifest,
    patches: Sequence[ImageField],
    base: RunConfig,
    pcs_list: Sequence[int],
    train_sizes: Sequence[Optional[int]],
    seeds: Sequence[int],
) -> pd.DataFrame:
    """
    Test accuracy over seeds x train sizes x n_pcs x signatures on/off x
    symmetrize on/off. Signatures are computed once per symmetrize setting and
    PCA once per (train size, n_pcs), always on train rows only.
    """
    channels = patches[0].shape[2]
    full_size = max(n_train for n_train, _ in manifest.counts().values())
    signature_cache = {
        sym: signature_matrix(patches, replace(base, symmetrize=sym, signatures=True)) for sym in (True, False)
    }
    records: List[Dict[str, Any]] = []
    for size in train_sizes:
        keep = train_subset(manifest, size)
        kept_patches = [patches[i] for i in keep]
        kept_splits = [manifest.entries[i].split for i in keep]
        for n_pcs in pcs_list:
            pcs = pca_matrix(kept_patches, fit_pca_on_train(kept_patches, kept_splits, n_pcs)) if n_pcs else None
            for use_sigs in (True, False):
                for sym in (True, False):
                    config = replace(base, n_pcs=n_pcs, signatures=use_sigs, symmetrize=sym)
                    baseline = not config.has_features()
                    config = replace(config, baseline=baseline)
                    sigs = signature_cache[sym][keep] if use_sigs else None
                    table = assemble_table(manifest, config, sigs, pcs, channels, keep)
                    for seed in seeds:
                        params = replace(base.forest, seed=seed)
                        model = fit_model(table, params, base.workers, baseline)
                        report = evaluate(model, table)
                        records.append(
                            {
                                "seed": seed,
                                "train_size": size if size is not None else full_size,
                                "n_pcs": n_pcs,
                                "signatures": use_sigs,
                                "symmetrize": sym,
                                "n_features": len(table.feature_names),
                                "accuracy": report.accuracy,
                                "chance": report.chance,
                            }
                        )
                        log_message(
                            "SWEEP",
                            f"size={records[-1]['train_size']} pcs={n_pcs} sigs={use_sigs} sym={sym} "
                            f"seed={seed} -> {report.accuracy:.4f}",
                        )
    return pd.DataFrame.from_records(records)


# --- benchmark ---

def bench_second_order(
    sizes: Sequence[int],
    seed: int = 0,
    oracle_limit: int = 64,
    repeats: int = 5,
) -> pd.DataFrame:
    """
    Times the prefix-sum path against the quadruple-loop oracle on random
    size x size images, all four second-order kinds on channel 0.
    """
    rng = np.random.default_rng(seed)
    records = []
    for size in sizes:
        if size < 2:
            raise ParameterError(f"bench sizes must be >= 2, got {size}")
        x = rng.random((size, size, 3))
        window = Window(0, size - 1, 0, size - 1)

        fast_values = {}
        fast_time = float("inf")
        for _ in range(repeats):
            started = time.perf_counter()
            for kind in SECOND_ORDER_KINDS:
                fast_values[kind] = sig_second(x, kind, 0, 0, window)
            fast_time = min(fast_time, time.perf_counter() - started)

        oracle_time = float("nan")
        deviation = float("nan")
        if size <= oracle_limit:
            started = time.perf_counter()
            oracle_values = {kind: brute_force_second(x, kind, 0, 0, window) for kind in SECOND_ORDER_KINDS}
            oracle_time = time.perf_counter() - started
            deviation = max(max_relative_deviation(fast_values[k], oracle_values[k]) for k in SECOND_ORDER_KINDS)
        records.append(
            {
                "size": size,
                "fast_seconds": fast_time,
                "oracle_seconds": oracle_time,
                "speedup": oracle_time / fast_time if fast_time > 0 else float("nan"),
                "max_rel_deviation": deviation,
            }
        )
    return pd.DataFrame.from_records(records)
