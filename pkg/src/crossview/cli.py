"""Command-line surface: gen-data, train, eval, match, ablate."""

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import evaluation, network
from .data import load_manifest, load_png
from .data.synthetic import generate_synthetic_dataset
from .errors import CrossviewError
from .evaluation import RunSpec
from .pipeline import aerial_grids
from .training import TrainConfig, train


def _add_gen_data(sub):
    p = sub.add_parser("gen-data", help="generate a deterministic synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, required=True, help="total number of samples")
    p.add_argument("--test-count", type=int, default=None,
                   help="samples reserved for the test split (default: count // 3)")
    p.add_argument("--sat-size", type=int, default=128)
    p.add_argument("--pano-width", type=int, default=512)
    p.add_argument("--pano-height", type=int, default=128)
    p.add_argument("--variant", default="quad", choices=sorted(network.VARIANT_STREAMS))
    p.add_argument("--rgb-noise", type=float, default=8.0,
                   help="half-range of the uniform noise on the ground panorama, in 8-bit levels")
    p.add_argument("--scene-variation", type=float, default=1.0,
                   help="<1 blends scene layouts toward a shared template (harder retrieval)")


def _add_train(sub):
    p = sub.add_parser("train", help="train a model on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True, help="output checkpoint path")
    p.add_argument("--metrics", default=None, help="output metrics CSV path")
    p.add_argument("--config", default=None, help="JSON file with model/train sections")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--effective-batch", type=int, default=None)
    p.add_argument("--micro-batch", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--fov", type=float, default=None)
    p.add_argument("--variant", default=None, choices=sorted(network.VARIANT_STREAMS))
    p.add_argument("--fusion", default=None, choices=list(network.FUSIONS))
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--quiet", action="store_true")


def _add_eval(sub):
    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--test-fov", default=None,
                   help="comma-separated FoVs to test (default: the training FoV)")
    p.add_argument("--ranking-key", default="distance", choices=list(evaluation.RANKING_KEYS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write <out>.json and <out>.txt reports")


def _add_match(sub):
    p = sub.add_parser("match", help="rank candidate satellites for one ground image")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--ground-rgb", required=True)
    p.add_argument("--ground-seg", default=None)
    p.add_argument("--ground-depth", default=None)
    p.add_argument("--candidates", required=True,
                   help="directory of <id>_sat_rgb.png (and <id>_sat_seg.png) files")
    p.add_argument("--top", type=int, default=5)


def _add_ablate(sub):
    p = sub.add_parser("ablate", help="train/evaluate the variant-by-fusion grid")
    p.add_argument("--manifest", required=True)
    p.add_argument("--workdir", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--effective-batch", type=int, default=32)
    p.add_argument("--micro-batch", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fov", type=float, default=360.0)
    p.add_argument("--variants", default="triple_sat,triple_grd,quad")
    p.add_argument("--fusions", default="partial_sum,concat")
    p.add_argument("--out", default=None, help="write <out>.json and <out>.txt tables")
    p.add_argument("--quiet", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="crossview",
        description="Ground-to-aerial matching: synthetic data, training, retrieval evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen_data(sub)
    _add_train(sub)
    _add_eval(sub)
    _add_match(sub)
    _add_ablate(sub)
    return parser


def _cmd_gen_data(args):
    config = network.make_model_config(variant=args.variant)
    manifest = generate_synthetic_dataset(
        seed=args.seed,
        n_samples=args.count,
        sat_size=args.sat_size,
        config=config,
        out_dir=args.out,
        pano_width=args.pano_width,
        pano_height=args.pano_height,
        n_test=args.test_count,
        rgb_noise=args.rgb_noise,
        scene_variation=args.scene_variation,
    )
    n_train = len(manifest.split("train"))
    n_test = len(manifest.split("test"))
    print(f"wrote {len(manifest.records)} samples ({n_train} train / {n_test} test) to {args.out}")
    return 0


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def _cmd_train(args):
    raw = _load_config_file(args.config)
    tc = TrainConfig.from_dict(raw.get("train", {}))
    overrides = {
        "epochs": args.epochs,
        "effective_batch": args.effective_batch,
        "micro_batch": args.micro_batch,
        "learning_rate": args.lr,
        "seed": args.seed,
        "fov_degrees": args.fov,
        "variant": args.variant,
        "fusion": args.fusion,
    }
    tc = replace(tc, **{k: v for k, v in overrides.items() if v is not None})
    if "model" in raw:
        model = network.ModelConfig.from_dict(raw["model"])
        if args.fusion is not None:
            model.fusion = args.fusion
        if args.alpha is not None:
            model.alpha = args.alpha
    else:
        model = network.make_model_config(
            variant=tc.variant, fusion=tc.fusion,
            alpha=args.alpha if args.alpha is not None else 10.0,
        )
    manifest = load_manifest(args.manifest)
    log = None if args.quiet else print
    train(model, tc, manifest, checkpoint_path=args.checkpoint,
          metrics_path=args.metrics, log=log)
    print(f"checkpoint written to {args.checkpoint}")
    return 0


def _cmd_eval(args):
    if args.test_fov is not None:
        fovs = [float(s) for s in args.test_fov.split(",") if s.strip()]
    else:
        _, _, meta = network.load_checkpoint(args.checkpoint)
        fovs = [meta.get("train", {}).get("fov_degrees", 360.0)]
    spec = RunSpec(
        checkpoint=args.checkpoint,
        manifest=args.manifest,
        test_fovs=fovs,
        ranking_key=args.ranking_key,
        seed=args.seed,
    )
    reports = evaluation.evaluate(spec)
    sys.stdout.write(evaluation.format_report_table(reports))
    if args.out:
        evaluation.write_reports(reports, args.out)
    return 0


def _candidate_ids(directory):
    ids = set()
    for name in os.listdir(directory):
        if name.endswith("_sat_rgb.png"):
            ids.add(name[: -len("_sat_rgb.png")])
    return sorted(ids)


def _cmd_match(args):
    from . import matching

    params, config, _ = network.load_checkpoint(args.checkpoint)
    ground_images = {}
    for stream in config.streams_for("ground"):
        flag = {"ground_rgb": args.ground_rgb, "ground_seg": args.ground_seg,
                "ground_depth": args.ground_depth}[stream.role]
        if flag is None:
            raise CrossviewError(f"model needs --{stream.role.replace('_', '-')}")
        ground_images[stream.role] = load_png(flag, stream.role)
    pano_w = ground_images["ground_rgb"].width
    pano_h = ground_images["ground_rgb"].height
    ground_feats = network.unified_features(
        params, config, {k: v.to_grid() for k, v in ground_images.items()}, "ground"
    )

    ids = _candidate_ids(args.candidates)
    if not ids:
        raise CrossviewError(f"no <id>_sat_rgb.png candidates under {args.candidates}")
    aerial_feats = []
    for cid in ids:
        rasters = {}
        for stream in config.streams_for("satellite"):
            path = os.path.join(args.candidates, f"{cid}_{stream.role}.png")
            rasters[stream.role] = load_png(path, stream.role)
        grids = aerial_grids(config, rasters, pano_w, pano_h)
        aerial_feats.append(network.unified_features(params, config, grids, "satellite"))

    orientations, distances, scores = matching.pairwise_matches([ground_feats], aerial_feats)
    order = np.argsort(distances[0], kind="stable")
    w_a = aerial_feats[0].shape[1]
    print(f"{'rank':>4}  {'candidate':<20} {'distance':>10}  {'score':>10}  {'orientation':>11}")
    for rank, j in enumerate(order[: args.top], start=1):
        deg = 360.0 * orientations[0, j] / w_a
        print(
            f"{rank:>4}  {ids[j]:<20} {distances[0, j]:>10.6f}  "
            f"{scores[0, j]:>10.6f}  {orientations[0, j]:>6d} ({deg:5.1f}deg)"
        )
    return 0


def _cmd_ablate(args):
    manifest = load_manifest(args.manifest)
    tc = TrainConfig(
        epochs=args.epochs,
        effective_batch=args.effective_batch,
        micro_batch=args.micro_batch,
        learning_rate=args.lr,
        seed=args.seed,
        fov_degrees=args.fov,
    )
    variants = [v for v in args.variants.split(",") if v]
    fusions = [f for f in args.fusions.split(",") if f]
    log = None if args.quiet else print
    rows, _ = evaluation.run_ablation(
        manifest, tc, args.workdir, variants=variants, fusions=fusions, log=log
    )
    table = evaluation.format_ablation_table(rows)
    sys.stdout.write(table)
    if args.out:
        with open(args.out + ".json", "w", encoding="utf-8") as f:
            json.dump(rows, f, indent=2, sort_keys=True)
            f.write("\n")
        with open(args.out + ".txt", "w", encoding="utf-8") as f:
            f.write(table)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "match": _cmd_match,
    "ablate": _cmd_ablate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except (CrossviewError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
