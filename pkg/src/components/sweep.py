# src/components/sweep.py
from typing import Literal, Optional

from src.base_component import BaseComponent
from src.dataset import load_manifest, load_patches
from src.forest import ForestParams
from src.logger import log_message
from src.pipeline import RunConfig, run_sweep
from src.sigcore import DifferenceScheme


class SweepComponent(BaseComponent):
    """
    Accuracy grid over principal components, signatures on/off, symmetrization on/off and train sizes.
    """

    command = "sweep"

    def use(
        self,
        manifest: Optional[str] = None,
        pcs: list[int] = [0, 1, 3, 5, 10],
        train_sizes: Optional[list[int]] = None,
        seeds: Optional[list[int]] = None,
        scheme: Literal["forward", "central"] = "forward",
        first_order: bool = False,
        trees: int = 100,
        workers: Optional[int] = None,
        data_dir: Optional[str] = None,
        out: Optional[str] = None,
    ) -> int:
        """
        Writes one CSV row per grid cell and seed.

        Args:
            manifest: Manifest JSON (defaults to <data-dir>/manifest.json).
            pcs: Numbers of principal components to try.
            train_sizes: Train patches per class to try (all of them when omitted).
            seeds: Forest seeds (defaults to SIG2D_SEED).
            scheme: Difference scheme for the hat differentials.
            first_order: Include the 6 first-order signature columns with the signatures.
            trees: Number of trees per forest.
            workers: Threads for extraction and tree growing (defaults to SIG2D_WORKERS).
            data_dir: Data directory (defaults to SIG2D_DATA_DIR).
            out: Grid CSV path (defaults to <data-dir>/sweep.csv).
        """
        base = RunConfig(
            scheme=DifferenceScheme(scheme),
            include_first_order=first_order,
            forest=ForestParams(n_trees=trees),
            workers=workers or self.settings.workers,
        )
        manifest_path = self.data_path(manifest, "manifest.json", data_dir)
        dataset = load_manifest(manifest_path)
        patches = load_patches(dataset, manifest_path.parent, base.workers)

        grid = run_sweep(
            dataset,
            patches,
            base,
            pcs_list=pcs,
            train_sizes=train_sizes or [None],
            seeds=seeds or [self.settings.seed],
        )
        out_path = self.data_path(out, "sweep.csv", data_dir)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        grid.to_csv(out_path, index=False, float_format="%.17g", lineterminator="\n")

        best = grid.groupby(["n_pcs", "signatures", "symmetrize"])["accuracy"].mean().idxmax()
        log_message("RESULT", f"{len(grid)} grid rows written to {out_path}; best mean cell (pcs, sigs, sym) = {best}")
        return 0
