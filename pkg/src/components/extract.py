# src/components/extract.py
from typing import Literal, Optional

from src.base_component import BaseComponent
from src.dataset import load_manifest, load_patches
from src.logger import log_message
from src.pca import save_pca
from src.pipeline import RunConfig, extract_features_with_pca
from src.sigcore import DifferenceScheme


class ExtractComponent(BaseComponent):
    """
    Compute signature and PCA features for every manifest patch into a CSV table.
    """

    command = "extract"

    def use(
        self,
        manifest: Optional[str] = None,
        scheme: Literal["forward", "central"] = "forward",
        symmetrize: bool = False,
        pcs: int = 0,
        signatures: bool = True,
        first_order: bool = False,
        cross_channel: bool = False,
        baseline: bool = False,
        workers: Optional[int] = None,
        data_dir: Optional[str] = None,
        out: Optional[str] = None,
        pca_out: Optional[str] = None,
    ) -> int:
        """
        Writes the feature CSV (and the PCA model when --pcs > 0).

        Args:
            manifest: Manifest JSON (defaults to <data-dir>/manifest.json).
            scheme: Difference scheme for the hat differentials.
            symmetrize: Average signatures over the eight orientations.
            pcs: Number of principal components, fitted on train rows only.
            signatures: Include the 12 second-order signature columns.
            first_order: Also include the 6 first-order signature columns.
            cross_channel: Also include the off-diagonal (i1 != i2) second-order columns.
            baseline: Allow a table without any feature (chance baseline).
            workers: Extraction threads (defaults to SIG2D_WORKERS).
            data_dir: Data directory (defaults to SIG2D_DATA_DIR).
            out: Feature CSV path (defaults to <data-dir>/features.csv).
            pca_out: PCA model path (defaults to <data-dir>/pca.json).
        """
        config = RunConfig(
            scheme=DifferenceScheme(scheme),
            symmetrize=symmetrize,
            n_pcs=pcs,
            signatures=signatures,
            include_first_order=first_order,
            cross_channel=cross_channel,
            baseline=baseline,
            workers=workers or self.settings.workers,
        )
        config.validate()
        manifest_path = self.data_path(manifest, "manifest.json", data_dir)
        dataset = load_manifest(manifest_path)
        patches = load_patches(dataset, manifest_path.parent, config.workers)
        log_message("EXTRACT", f"{len(patches)} patches, scheme={scheme}, symmetrize={symmetrize}, pcs={pcs}")

        table, model = extract_features_with_pca(dataset, patches, config)
        if model is not None:
            save_pca(model, self.data_path(pca_out, "pca.json", data_dir))
        out_path = self.data_path(out, "features.csv", data_dir)
        table.to_csv(out_path)
        log_message("RESULT", f"Wrote {len(table.index)} rows x {len(table.feature_names)} features to {out_path}")
        return 0
