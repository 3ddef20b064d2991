"""Grid scans over (n, z0, T, E_F, spacing) with fixed-column CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .atomic import AtomicState
from .config import ScanConfig, with_fermi_energy, with_model
from .cp import regime_report, total_potential

__all__ = ["COLUMNS", "ScanResult", "evaluate_point", "format_value", "read_table", "run_scan", "write_csv"]

log = logging.getLogger(__name__)

COLUMNS = (
    "n",
    "z0_m",
    "z0_um",
    "temperature_K",
    "fermi_energy_eV",
    "spacing_m",
    "spacing_um",
    "u_nres_Hz",
    "u_res_evan_Hz",
    "u_res_prop_Hz",
    "u_total_Hz",
    "retarded",
    "non_retarded",
    "spectroscopic_low_T",
    "spectroscopic_high_T",
    "geometric_low_T",
    "geometric_high_T",
    "intermediate",
    "matsubara_terms",
    "wall_time_s",
    "error",
)
_FLAG_COLUMNS = {
    "retarded": "retarded",
    "non_retarded": "non-retarded",
    "spectroscopic_low_T": "spectroscopic-low-T",
    "spectroscopic_high_T": "spectroscopic-high-T",
    "geometric_low_T": "geometric-low-T",
    "geometric_high_T": "geometric-high-T",
    "intermediate": "intermediate",
}


def format_value(v) -> str:
    """Deterministic text for one CSV cell."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


@dataclass(frozen=True)
class ScanResult:
    rows: tuple  # of dicts keyed by COLUMNS
    n_failed: int

    @property
    def ok(self) -> bool:
        return self.n_failed == 0


def _point_stack(config: ScanConfig, point: dict):
    stack = config.stack.stack
    if "spacing" in point:
        stack = config.stack.with_spacing(point["spacing"])
    if "fermi_energy" in point:
        stack = with_fermi_energy(stack, point["fermi_energy"])
    if config.model:
        stack = with_model(stack, config.model)
    return stack


def evaluate_point(config: ScanConfig, point: dict, timing: bool = False) -> dict:
    """One CSV row; failures land in the ``error`` column instead of raising."""
    row = dict.fromkeys(COLUMNS)
    n, z0, t = point["n"], point["z0"], point["temperature"]
    row.update(n=n, z0_m=z0, z0_um=z0 * 1e6, temperature_K=t)
    if "fermi_energy" in point:
        row["fermi_energy_eV"] = point["fermi_energy"]
    if "spacing" in point:
        row["spacing_m"] = point["spacing"]
        row["spacing_um"] = point["spacing"] * 1e6
    t0 = time.perf_counter()
    try:
        state = AtomicState(n, 0, 0.5)
        stack = _point_stack(config, point)
        b = total_potential(
            state, stack, z0, t, tol=config.tolerances["matsubara"], green_rtol=config.tolerances["green_rtol"]
        )
        row.update(
            u_nres_Hz=b.u_nres,
            u_res_evan_Hz=b.u_res_evan,
            u_res_prop_Hz=b.u_res_prop,
            u_total_Hz=b.total,
            matsubara_terms=b.matsubara_terms,
        )
        flags = regime_report(state, z0, t).flags()
        row.update({col: flags[key] for col, key in _FLAG_COLUMNS.items()})
    except Exception as exc:  # recorded per point, reported through the exit status
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    if timing:
        row["wall_time_s"] = round(time.perf_counter() - t0, 3)
    return row


def _worker(args):
    config, point, timing = args
    return evaluate_point(config, point, timing)


def run_scan(config: ScanConfig, workers: int = 1, timing: bool = False, progress=None) -> ScanResult:
    """Evaluate every grid point; row order follows the grid, whatever ``workers`` is."""
    points = list(config.points())
    if not points:
        raise ValueError("scan grid is empty")
    jobs = [(config, p, timing) for p in points]
    rows = []
    workers = max(1, int(workers))
    if workers == 1:
        it = map(_worker, jobs)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        it = pool.map(_worker, jobs)
    try:
        for i, row in enumerate(it, 1):
            rows.append(row)
            if progress is not None:
                progress(i, len(points), row)
    finally:
        if pool is not None:
            pool.shutdown()
    failed = sum(1 for r in rows if r["error"])
    return ScanResult(tuple(rows), failed)


def write_csv(rows, path=None, columns=COLUMNS) -> str:
    """Render rows to CSV text; also write it to ``path`` when given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(str(path) + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    return text


def read_table(path) -> tuple[list[str], list[dict]]:
    """Header and rows of a CSV file, values left as strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def stderr_progress(i, total, row):
    tag = "FAILED " + row["error"] if row["error"] else f"U = {row['u_total_Hz']:.6g} Hz"
    print(f"[{i}/{total}] n={row['n']} z0={row['z0_um']:.4g} um T={row['temperature_K']:g} K  {tag}", file=sys.stderr)
