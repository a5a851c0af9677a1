# src/components/train.py
from typing import Optional

from src.base_component import BaseComponent
from src.forest import ForestParams, save_forest
from src.logger import log_message
from src.pipeline import FeatureTable, fit_model, train_accuracy


class TrainComponent(BaseComponent):
    """
    Train a random forest on the train rows of a feature CSV.
    """

    command = "train"

    def use(
        self,
        features: Optional[str] = None,
        trees: int = 100,
        max_depth: Optional[int] = None,
        min_leaf: int = 1,
        mtry: Optional[int] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        data_dir: Optional[str] = None,
        out: Optional[str] = None,
    ) -> int:
        """
        Writes the model JSON and reports training accuracy.

        Args:
            features: Feature CSV (defaults to <data-dir>/features.csv).
            trees: Number of trees.
            max_depth: Maximum tree depth (unlimited when omitted).
            min_leaf: Minimum rows per leaf.
            mtry: Features sampled per split (ceil(sqrt(F)) when omitted).
            seed: Forest seed (defaults to SIG2D_SEED).
            workers: Tree-growing threads (defaults to SIG2D_WORKERS).
            data_dir: Data directory (defaults to SIG2D_DATA_DIR).
            out: Model path (defaults to <data-dir>/model.json).
        """
        params = ForestParams(
            n_trees=trees,
            max_depth=max_depth,
            min_leaf=min_leaf,
            mtry=mtry,
            seed=self.settings.seed if seed is None else seed,
        )
        table = FeatureTable.read_csv(self.data_path(features, "features.csv", data_dir))
        if not table.feature_names:
            log_message("WARNING", "Feature table has no columns; training the chance baseline")
        model = fit_model(table, params, workers or self.settings.workers)

        out_path = self.data_path(out, "model.json", data_dir)
        save_forest(model, out_path)
        log_message("TRAIN", f"{params.n_trees} trees on {len(table.rows('train').labels)} rows, {model.n_features} features")
        used = sorted(model.split_counts().items(), key=lambda kv: -kv[1])[:5]
        if used:
            log_message("TRAIN", "Most used features: " + ", ".join(f"{k}={v}" for k, v in used))
        log_message("RESULT", f"Train accuracy {train_accuracy(model, table):.4f}; model written to {out_path}")
        return 0
