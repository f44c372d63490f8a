"""Telemetry capture: decimated per-sample records with a fixed CSV layout.

One row per decimated plant step: simulation time, total power, the active
budget, whether capping was engaged at the last controller step, the controller
step counter, then per-core temperature, power, frequency, voltage, and retired
instructions. Times are strictly increasing and retired counters never
decrease.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .errors import EmptyTelemetry

GLOBAL_COLUMNS = ("time_s", "total_power_w", "budget_w", "capping_active", "ctrl_steps")
CORE_FIELDS = ("temp_c", "power_w", "freq_hz", "volt_v", "retired")


def _header(core_count: int) -> list[str]:
    cols = list(GLOBAL_COLUMNS)
    for field in CORE_FIELDS:
        cols.extend(f"{field}_{i}" for i in range(core_count))
    return cols


class Telemetry:
    def __init__(self, core_count: int):
        self.core_count = core_count
        self.columns = _header(core_count)
        self._index = {name: i for i, name in enumerate(self.columns)}
        self.rows: list[list] = []

    def append(
        self,
        time_s: float,
        temp_c: np.ndarray,
        power_w: np.ndarray,
        freq_hz: np.ndarray,
        volt_v: np.ndarray,
        retired: np.ndarray,
        budget_w: float,
        capping_active: bool,
        ctrl_steps: int,
    ):
        row = [time_s, float(power_w.sum()), budget_w, int(capping_active), ctrl_steps]
        row.extend(temp_c.tolist())
        row.extend(power_w.tolist())
        row.extend(freq_hz.tolist())
        row.extend(volt_v.tolist())
        row.extend(int(r) for r in retired)
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        idx = self._index[name]
        return np.array([row[idx] for row in self.rows])

    def per_core(self, field: str) -> np.ndarray:
        """(samples, cores) matrix for one of the per-core fields."""
        base = self._index[f"{field}_0"]
        return np.array([row[base : base + self.core_count] for row in self.rows])

    def final_retired(self) -> np.ndarray:
        if not self.rows:
            raise EmptyTelemetry("no telemetry rows")
        base = self._index["retired_0"]
        return np.array(self.rows[-1][base : base + self.core_count], dtype=np.int64)

    def to_csv_text(self) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "Telemetry":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTelemetry("empty telemetry file") from None
        core_count = sum(1 for name in header if name.startswith("temp_c_"))
        telem = cls(core_count)
        if header != telem.columns:
            raise ValueError("unrecognized telemetry header")
        int_cols = {telem._index["capping_active"], telem._index["ctrl_steps"]}
        int_cols.update(
            telem._index[f"retired_{i}"] for i in range(core_count)
        )
        for raw in reader:
            telem.rows.append(
                [int(v) if i in int_cols else float(v) for i, v in enumerate(raw)]
            )
        return telem

    @classmethod
    def read_csv(cls, path) -> "Telemetry":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_csv_text(fh.read())
