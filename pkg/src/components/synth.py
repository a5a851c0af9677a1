# src/components/synth.py
import os
from pathlib import Path
from typing import Optional

from src.base_component import BaseComponent
from src.dataset import (
    TEXTURE_VARIANTS,
    TextureSheet,
    build_manifest,
    discover_sheets,
    manifest_digest,
    materialize_patches,
    save_manifest,
    save_ppm,
    synth_textures,
)
from src.logger import log_message


class SynthComponent(BaseComponent):
    """
    Synthesize texture sheets (or index a user texture directory) and sample a train/test manifest.
    """

    command = "synth"

    def use(
        self,
        classes: int = 8,
        sheet_size: int = 256,
        patch: int = 64,
        train: int = 10,
        test: int = 100,
        seed: Optional[int] = None,
        from_dir: Optional[str] = None,
        materialize: bool = False,
        data_dir: Optional[str] = None,
        out: Optional[str] = None,
    ) -> int:
        """
        Writes sheets and a manifest JSON.

        Args:
            classes: Number of synthetic texture classes.
            sheet_size: Side of each synthetic sheet in pixels.
            patch: Patch side in pixels.
            train: Train patches per class.
            test: Test patches per class.
            seed: Master seed (defaults to SIG2D_SEED).
            from_dir: Use the PNG/PPM textures of this directory instead of synthetic ones.
            materialize: Also write every patch as {class}_{split}_{index}.ppm.
            data_dir: Data directory (defaults to SIG2D_DATA_DIR).
            out: Manifest path (defaults to <data-dir>/manifest.json).
        """
        seed = self.settings.seed if seed is None else seed
        manifest_path = self.data_path(out, "manifest.json", data_dir)
        root = manifest_path.parent
        root.mkdir(parents=True, exist_ok=True)

        if from_dir:
            sheets = discover_sheets(from_dir)
            for sheet in sheets:
                sheet.path = Path(os.path.relpath(Path(from_dir) / sheet.path, root)).as_posix()
            log_message("SYNTH", f"Indexed {len(sheets)} sheets from {from_dir}")
        else:
            sheets = []
            for i, (name, field) in enumerate(synth_textures(classes, sheet_size, seed)):
                rel = f"sheets/{name}.ppm"
                save_ppm(root / rel, field)
                variant = TEXTURE_VARIANTS[i]
                sheets.append(
                    TextureSheet(
                        class_name=name,
                        id=name,
                        field=field,
                        path=rel,
                        meta={"family": variant.family, **variant.params},
                    )
                )
            log_message("SYNTH", f"Rendered {len(sheets)} {sheet_size}x{sheet_size} sheets into {root / 'sheets'}")

        manifest = build_manifest(sheets, train, test, patch, seed)
        if materialize:
            materialize_patches(manifest, root)
            log_message("SYNTH", f"Wrote {len(manifest.entries)} patch files")
        save_manifest(manifest, manifest_path)

        log_message("RESULT", f"{'class':<28} {'train':>6} {'test':>6}")
        for name, (n_train, n_test) in manifest.counts().items():
            log_message("RESULT", f"{name:<28} {n_train:>6} {n_test:>6}")
        log_message("RESULT", f"Manifest {manifest_path} sha256={manifest_digest(manifest)}")
        return 0
