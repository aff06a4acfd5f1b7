"""
Output Helper
Write result CSV/JSON files and print run summaries to the console
"""

import csv
import json
import math
import os
from typing import Dict, Iterable, List, Sequence

import numpy as np

from ..errors import QubitControlError


class OutputHelper:
    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.written: List[str] = []

    def _path(self, name: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, name)

    @staticmethod
    def format_cell(value) -> str:
        """Ints verbatim, floats with 9 significant digits, strings as-is"""

        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            if not math.isfinite(float(value)):
                raise QubitControlError(f"Non-finite value {value} in result row")
            return "{:.9g}".format(float(value))
        return str(value)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
        """UTF-8, LF line endings, fixed header row"""

        formatted = []
        for row in rows:
            if len(row) != len(header):
                raise QubitControlError(f"{name}: row has {len(row)} cells, header has {len(header)}")
            formatted.append([self.format_cell(v) for v in row])

        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(formatted)

        self.written.append(path)
        print(f"💾 Wrote {path} ({len(formatted)} rows)")
        return path

    @staticmethod
    def to_plain(value):
        """numpy scalars/arrays to JSON-native values"""

        if isinstance(value, dict):
            return {str(k): OutputHelper.to_plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [OutputHelper.to_plain(v) for v in value]
        if isinstance(value, np.ndarray):
            return [OutputHelper.to_plain(v) for v in value.tolist()]
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, np.integer):
            return int(value)
        if isinstance(value, np.floating):
            return float(value)
        return value

    def write_json(self, name: str, report: Dict) -> str:
        """Single object, insertion-ordered keys, shortest round-trip floats"""

        try:
            text = json.dumps(self.to_plain(report), indent=2, allow_nan=False)
        except ValueError as e:
            raise QubitControlError(f"{name}: {e}")

        path = self._path(name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text + "\n")

        self.written.append(path)
        print(f"💾 Wrote {path}")
        return path

    @staticmethod
    def banner(title: str):
        print("=" * 60)
        print(title)
        print("=" * 60)

    @staticmethod
    def summary(title: str, items: Dict[str, object]):
        print(f"\n📊 {title}")
        for key, value in items.items():
            if isinstance(value, float):
                value = "{:.6g}".format(value)
            print(f"   {key}: {value}")
