"""Dataset manifest: a JSON index of sample rasters on disk.

Schema: {"seed": int | null, "records": [{"id", "split", "paths": {role: path}}]}.
Paths are stored relative to the manifest file (absolute paths pass
through untouched).
"""

import json
import os
from dataclasses import dataclass

from .rasters import Raster, load_png


@dataclass
class ManifestRecord:
    id: str
    split: str  # "train" | "test"
    paths: dict


@dataclass
class DatasetManifest:
    records: list
    seed: int | None = None
    base_dir: str = "."

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest ids are not unique")

    def split(self, name):
        return [r for r in self.records if r.split == name]

    def resolve(self, record: ManifestRecord, role: str) -> str:
        p = record.paths[role]
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def load_raster(self, record: ManifestRecord, role: str) -> Raster:
        return load_png(self.resolve(record, role), role)

    def to_dict(self):
        return {
            "seed": self.seed,
            "records": [
                {"id": r.id, "split": r.split, "paths": dict(r.paths)}
                for r in self.records
            ],
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    records = [
        ManifestRecord(id=r["id"], split=r["split"], paths=dict(r["paths"]))
        for r in raw["records"]
    ]
    return DatasetManifest(
        records=records,
        seed=raw.get("seed"),
        base_dir=os.path.dirname(os.path.abspath(path)),
    )
