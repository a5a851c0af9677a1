# src/components/evaluate.py
from typing import Optional

from src.base_component import BaseComponent
from src.errors import DatasetIOError
from src.forest import load_forest
from src.logger import log_message
from src.pipeline import FeatureTable, evaluate


class EvalComponent(BaseComponent):
    """
    Evaluate a trained model on the test rows: overall accuracy and confusion matrix.
    """

    command = "eval"

    def use(
        self,
        model: Optional[str] = None,
        features: Optional[str] = None,
        data_dir: Optional[str] = None,
        out: Optional[str] = None,
    ) -> int:
        """
        Writes the confusion matrix CSV (rows = true class, columns = predicted).

        Args:
            model: Model JSON (defaults to <data-dir>/model.json).
            features: Feature CSV (defaults to <data-dir>/features.csv).
            data_dir: Data directory (defaults to SIG2D_DATA_DIR).
            out: Confusion matrix path (defaults to <data-dir>/confusion.csv).
        """
        forest = load_forest(self.data_path(model, "model.json", data_dir))
        table = FeatureTable.read_csv(self.data_path(features, "features.csv", data_dir))
        report = evaluate(forest, table)

        out_path = self.data_path(out, "confusion.csv", data_dir)
        try:
            out_path.parent.mkdir(parents=True, exist_ok=True)
            report.confusion.to_csv(out_path, encoding="utf-8", lineterminator="\n")
        except OSError as e:
            raise DatasetIOError(out_path, f"cannot write confusion matrix: {e}", e) from e

        log_message("EVAL", f"{report.n_rows} test rows, chance level {report.chance:.4f}")
        log_message("RESULT", f"Accuracy {report.accuracy:.4f}; confusion matrix written to {out_path}")
        return 0
