"""Evaluation reports: per-episode metrics plus aggregate rows, JSON and CSV."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

METRIC_COLUMNS = ["lcs", "executability", "f1", "f1_state", "f1_relation"]
CSV_HEADER = ["method", "mode", "LCS", "Executability", "F1", "F1-state",
              "F1-relation", "episodes"]


@dataclass
class EvalReport:
    mode: str
    method: str
    episodes: list[dict] = field(default_factory=list)
    config_hashes: dict = field(default_factory=dict)

    def add_episode(self, record: dict) -> None:
        for column in METRIC_COLUMNS:
            value = record[column]
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{column}={value} outside [0, 1]")
        self.episodes.append(record)

    def finalize(self) -> "EvalReport":
        self.episodes.sort(key=lambda r: r["episode_id"])
        return self

    def aggregate(self) -> dict:
        if not self.episodes:
            return {column: 0.0 for column in METRIC_COLUMNS}
        return {column: sum(r[column] for r in self.episodes) / len(self.episodes)
                for column in METRIC_COLUMNS}

    def to_json(self) -> dict:
        return {"mode": self.mode, "method": self.method,
                "aggregate": self.aggregate(), "episodes": self.episodes,
                "config_hashes": self.config_hashes}

    def save_json(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def csv_row(self) -> list:
        agg = self.aggregate()
        return [self.method, self.mode] + \
            [f"{agg[c]:.4f}" for c in METRIC_COLUMNS] + [len(self.episodes)]


def save_csv(path, reports: list[EvalReport]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerow(report.csv_row())
