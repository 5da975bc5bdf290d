"""Retrieval evaluation: recall@K (K = 1, 5, 10 and 1%) over the test split,
cross-FoV evaluation, and the variant-by-fusion ablation grid.

Each query panorama is cropped to the test FoV at a seeded random start
column; every test satellite is a candidate. Candidates are ranked by the
orientation-aligned distance by default (the quantity the loss trains), or
by raw correlation score when requested.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry, matching, network
from .errors import EmptyRanks
from .pipeline import aerial_grids, load_sample_rasters, pano_size

RANKING_KEYS = ("distance", "score")


def k_for_percent(n: int, pct: float) -> int:
    """Smallest K covering pct percent of n candidates (ceil)."""
    if n < 1:
        raise ValueError("need at least one candidate")
    if not 0.0 < pct <= 100.0:
        raise ValueError("pct must lie in (0, 100]")
    return int(math.ceil(n * pct / 100.0))


def recall_at_k(ranks, k: int) -> float:
    """Fraction of queries whose true match ranks within the top k."""
    ranks = list(ranks)
    if not ranks:
        raise EmptyRanks("no query ranks")
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(1 for r in ranks if r <= k) / len(ranks)


@dataclass
class RecallReport:
    n_queries: int
    n_candidates: int
    k_values: list
    recalls: dict  # label -> fraction
    per_query: list  # (query id, rank of true match, estimated orientation)

    def to_dict(self):
        return {
            "n_queries": self.n_queries,
            "n_candidates": self.n_candidates,
            "k_values": list(self.k_values),
            "recalls": dict(self.recalls),
            "per_query": [
                {"id": q, "rank": r, "orientation": o} for q, r, o in self.per_query
            ],
        }


@dataclass
class RunSpec:
    checkpoint: str
    manifest: str
    test_fovs: list = field(default_factory=lambda: [360.0])
    ranking_key: str = "distance"
    seed: int = 0


def _rank_rows(orientations, distances, scores, ranking_key):
    """Per-query candidate ranking; ties break on the lower candidate index."""
    if ranking_key == "distance":
        keys = distances
    elif ranking_key == "score":
        keys = -scores
    else:
        raise ValueError(f"unknown ranking key {ranking_key!r}")
    order = np.argsort(keys, axis=1, kind="stable")
    n_q, n_c = keys.shape
    ranks = np.empty(n_q, dtype=np.int64)
    for i in range(n_q):
        ranks[i] = int(np.nonzero(order[i] == i)[0][0]) + 1
    return ranks


def rank_candidates(ground_feats, aerial_feats, true_index, ranking_key="distance"):
    """Rank of aerial_feats[true_index] for one query (1-based)."""
    orientations, distances, scores = matching.pairwise_matches(ground_feats, aerial_feats)
    keys = distances[0] if ranking_key == "distance" else -scores[0]
    order = np.argsort(keys, kind="stable")
    return int(np.nonzero(order == true_index)[0][0]) + 1


def evaluate_features(params, config, manifest, fov_degrees=360.0, seed=0,
                      ranking_key="distance") -> RecallReport:
    """Run the retrieval protocol with in-memory parameters."""
    test = manifest.split("test")
    if not test:
        raise ValueError("manifest has no test split")
    samples = [load_sample_rasters(manifest, r, config) for r in test]
    pano_w, pano_h = pano_size(samples[0])
    aerial_feats = [
        network.unified_features(
            params, config, aerial_grids(config, s, pano_w, pano_h), "satellite"
        )
        for s in samples
    ]

    rng = np.random.default_rng(seed)
    starts = rng.integers(0, pano_w, size=len(test))
    fov = geometry.FovSpec(fov_degrees, pano_w)

    def query_features(i):
        images = {}
        for s in config.streams_for("ground"):
            cropped = geometry.fov_crop(samples[i][s.role], fov, int(starts[i]))
            images[s.role] = cropped.to_grid()
        return network.unified_features(params, config, images, "ground")

    n_threads = max(1, int(os.environ.get("CROSSVIEW_THREADS", "1")))
    indices = range(len(test))
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            ground_feats = list(pool.map(query_features, indices))
    else:
        ground_feats = [query_features(i) for i in indices]

    orientations, distances, scores = matching.pairwise_matches(ground_feats, aerial_feats)
    ranks = _rank_rows(orientations, distances, scores, ranking_key)

    n = len(test)
    k_pct = k_for_percent(n, 1.0)
    k_values = [1, 5, 10, k_pct]
    recalls = {
        "r@1": recall_at_k(ranks, 1),
        "r@5": recall_at_k(ranks, 5),
        "r@10": recall_at_k(ranks, 10),
        "r@1%": recall_at_k(ranks, k_pct),
    }
    per_query = [
        (test[i].id, int(ranks[i]), int(orientations[i, i])) for i in range(n)
    ]
    return RecallReport(
        n_queries=n, n_candidates=n, k_values=k_values, recalls=recalls, per_query=per_query
    )


def evaluate(spec: RunSpec):
    """Evaluate a checkpoint at every requested test FoV.

    Returns {fov: RecallReport}. Start columns are seeded per (seed, fov)
    so reports are reproducible.
    """
    from .data.manifest import load_manifest

    params, config, _meta = network.load_checkpoint(spec.checkpoint)
    manifest = load_manifest(spec.manifest)
    reports = {}
    for fov in spec.test_fovs:
        reports[fov] = evaluate_features(
            params, config, manifest,
            fov_degrees=fov,
            seed=[spec.seed, int(round(fov * 10))],
            ranking_key=spec.ranking_key,
        )
    return reports


def format_report_table(reports: dict, title="") -> str:
    """Aligned text table, one row per tested FoV."""
    lines = []
    if title:
        lines.append(title)
    header = f"{'FoV':>8}  {'r@1':>8}  {'r@5':>8}  {'r@10':>8}  {'r@1%':>8}  {'n':>5}"
    lines.append(header)
    lines.append("-" * len(header))
    for fov in reports:
        r = reports[fov].recalls
        lines.append(
            f"{fov:>8.1f}  {100*r['r@1']:>7.2f}%  {100*r['r@5']:>7.2f}%  "
            f"{100*r['r@10']:>7.2f}%  {100*r['r@1%']:>7.2f}%  {reports[fov].n_queries:>5d}"
        )
    return "\n".join(lines) + "\n"


def reports_to_json(reports: dict) -> str:
    payload = {f"{fov:g}": rep.to_dict() for fov, rep in reports.items()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_reports(reports: dict, out_base: str):
    """Write <base>.json and <base>.txt next to each other."""
    base, ext = os.path.splitext(out_base)
    if ext == ".json":
        out_base = base
    with open(out_base + ".json", "w", encoding="utf-8") as f:
        f.write(reports_to_json(reports))
    with open(out_base + ".txt", "w", encoding="utf-8") as f:
        f.write(format_report_table(reports))


def run_ablation(manifest, base_train_config, workdir,
                 variants=("triple_sat", "triple_grd", "quad"),
                 fusions=("partial_sum", "concat"),
                 rgb_channels=16, aux_channels=8, log=None):
    """Train and evaluate every variant-by-fusion cell on the same seed.

    Returns (rows, checkpoints): rows are dicts with variant, fusion and
    the recall numbers at the training FoV; checkpoints maps
    (variant, fusion) to the saved checkpoint path.
    """
    from dataclasses import replace

    from .training import train

    os.makedirs(workdir, exist_ok=True)
    rows = []
    checkpoints = {}
    for variant in variants:
        for fusion in fusions:
            cfg = network.make_model_config(
                variant=variant, fusion=fusion,
                rgb_channels=rgb_channels, aux_channels=aux_channels,
            )
            tc = replace(base_train_config, variant=variant, fusion=fusion)
            ckpt = os.path.join(workdir, f"{variant}_{fusion}.fvcp")
            if log:
                log(f"[ablate] training {variant}/{fusion}")
            params, _metrics = train(cfg, tc, manifest, checkpoint_path=ckpt, log=log)
            report = evaluate_features(
                params, cfg, manifest,
                fov_degrees=tc.fov_degrees,
                seed=[tc.seed, int(round(tc.fov_degrees * 10))],
            )
            row = {"variant": variant, "fusion": fusion}
            row.update(report.recalls)
            rows.append(row)
            checkpoints[(variant, fusion)] = ckpt
            if log:
                log(f"[ablate] {variant}/{fusion}: r@1 {report.recalls['r@1']:.4f}")
    return rows, checkpoints


def format_ablation_table(rows) -> str:
    header = f"{'variant':>12} {'fusion':>12}  {'r@1':>8}  {'r@5':>8}  {'r@10':>8}  {'r@1%':>8}"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['variant']:>12} {row['fusion']:>12}  "
            f"{100*row['r@1']:>7.2f}%  {100*row['r@5']:>7.2f}%  "
            f"{100*row['r@10']:>7.2f}%  {100*row['r@1%']:>7.2f}%"
        )
    return "\n".join(lines) + "\n"
