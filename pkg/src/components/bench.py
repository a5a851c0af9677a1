# src/components/bench.py
from typing import Optional

from src.base_component import BaseComponent
from src.logger import log_message
from src.pipeline import bench_second_order

ORACLE_TOLERANCE = 1e-9
ORACLE_LIMIT = 64


class BenchComponent(BaseComponent):
    """
    Time the prefix-sum second-order path against the quadruple-loop oracle.
    """

    command = "bench"

    def use(
        self,
        sizes: list[int] = [8, 16, 32, 64, 128],
        repeats: int = 5,
        seed: Optional[int] = None,
        out: Optional[str] = None,
    ) -> int:
        """
        Reports timings and the oracle deviation; exits 1 when a deviation exceeds 1e-9.

        Args:
            sizes: Image sides to benchmark; the oracle runs only up to 64.
            repeats: Fast-path repetitions (best time kept).
            seed: Seed of the random test images (defaults to SIG2D_SEED).
            out: Optional CSV path for the timing table.
        """
        report = bench_second_order(
            sizes,
            seed=self.settings.seed if seed is None else seed,
            oracle_limit=ORACLE_LIMIT,
            repeats=repeats,
        )
        for row in report.itertuples():
            log_message(
                "BENCH",
                f"size={row.size:<4} fast={row.fast_seconds * 1e3:9.3f}ms "
                f"oracle={row.oracle_seconds * 1e3:11.3f}ms speedup={row.speedup:9.1f} "
                f"max_rel_dev={row.max_rel_deviation:.2e}",
            )
        times = dict(zip(report["size"], report["fast_seconds"]))
        if 64 in times and 128 in times:
            log_message("BENCH", f"fast-path time ratio 128/64 = {times[128] / times[64]:.2f}")
        if out:
            report.to_csv(out, index=False, float_format="%.17g", lineterminator="\n")

        failing = report[report["max_rel_deviation"] > ORACLE_TOLERANCE]
        if not failing.empty:
            log_message("ERROR", f"Oracle deviation above {ORACLE_TOLERANCE} at sizes {list(failing['size'])}")
            return 1
        log_message("RESULT", "Fast path agrees with the oracle")
        return 0
