"""Symmetric weighted soft-margin triplet training.

Every non-matching pair inside a micro-batch is a negative. The loss is
computed once with ground images as queries and once with satellite images
as queries, then averaged. Gradients are accumulated over micro-batches
(mean) to emulate the effective batch size, then applied with Adam.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry, matching, network
from .errors import DatasetTooSmall, InvalidConfig, NonSquare, ShapeMismatch
from .pipeline import aerial_grids, load_sample_rasters, pano_size


@dataclass
class LossConfig:
    alpha: float = 10.0  # convergence-speed weight on the distance gap
    symmetric: bool = True

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise InvalidConfig("loss alpha must be finite")


@dataclass
class TrainConfig:
    epochs: int = 30
    effective_batch: int = 32
    micro_batch: int = 8
    learning_rate: float = 1e-5
    seed: int = 0
    fov_degrees: float = 360.0
    variant: str = "quad"
    fusion: str = "partial_sum"

    def __post_init__(self):
        if self.effective_batch % self.micro_batch:
            raise InvalidConfig(
                f"micro_batch {self.micro_batch} must divide effective_batch {self.effective_batch}"
            )

    def to_dict(self):
        return {
            "epochs": self.epochs,
            "effective_batch": self.effective_batch,
            "micro_batch": self.micro_batch,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "fov_degrees": self.fov_degrees,
            "variant": self.variant,
            "fusion": self.fusion,
        }

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls().to_dict() if k in d}
        return cls(**known)


def distance_matrix(ground_feats, aerial_feats) -> np.ndarray:
    """D[i][j] = aligned Frobenius distance between ground i and aerial j."""
    if len(ground_feats) != len(aerial_feats):
        raise ShapeMismatch(
            f"{len(ground_feats)} ground vs {len(aerial_feats)} aerial feature volumes"
        )
    _, distances, _ = matching.pairwise_matches(ground_feats, aerial_feats)
    return distances


def softplus(x):
    """log(1 + exp(x)) evaluated stably for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def weighted_soft_margin(delta, alpha):
    """Single directional triplet term: log(1 + exp(alpha * delta)) with
    delta = d_positive - d_negative."""
    return float(softplus(alpha * delta))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def triplet_loss(dist: np.ndarray, cfg: LossConfig) -> float:
    """Batch-all soft-margin triplet loss on a distance matrix.

    Ground-as-query term: mean over i, j != i of
    log(1 + exp(alpha * (D[i][i] - D[i][j]))). When symmetric, the same
    form is averaged with the satellite-as-query term over columns.
    """
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise NonSquare(f"distance matrix must be square, got {dist.shape}")
    n = dist.shape[0]
    if n < 2:
        raise NonSquare("need at least two samples for in-batch negatives")
    diag = np.diag(dist)
    off = ~np.eye(n, dtype=bool)
    g2a = softplus(cfg.alpha * (diag[:, None] - dist))[off].mean()
    if not cfg.symmetric:
        return float(g2a)
    a2g = softplus(cfg.alpha * (diag[None, :] - dist))[off].mean()
    return float(0.5 * (g2a + a2g))


def triplet_loss_grad(dist: np.ndarray, cfg: LossConfig) -> np.ndarray:
    """dLoss/dD for `triplet_loss`."""
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    count = n * (n - 1)
    scale = 0.5 if cfg.symmetric else 1.0
    grad = np.zeros_like(dist)

    sig = _sigmoid(cfg.alpha * (np.diag(dist)[:, None] - dist)) * (cfg.alpha / count)
    sig[~off] = 0.0
    grad -= sig
    grad[np.diag_indices(n)] += sig.sum(axis=1)
    if cfg.symmetric:
        sig2 = _sigmoid(cfg.alpha * (np.diag(dist)[None, :] - dist)) * (cfg.alpha / count)
        sig2[~off] = 0.0
        grad -= sig2
        grad[np.diag_indices(n)] += sig2.sum(axis=0)
        grad *= scale
    return grad


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0


def init_adam(params: dict) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(params, grads, state: AdamState, lr, frozen=frozenset(),
              beta1=0.9, beta2=0.999, eps=1e-8):
    """One in-place Adam update with bias correction; frozen parameters
    (and their moments) are untouched. Returns (params, state)."""
    state.t += 1
    b1t = 1.0 - beta1**state.t
    b2t = 1.0 - beta2**state.t
    for name, p in params.items():
        if name in frozen:
            continue
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} vs parameter {p.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / b1t) / (np.sqrt(v / b2t) + eps)
    return params, state


def average_grads(grad_list):
    """Mean of per-micro-batch gradients (the accumulation rule)."""
    out = {}
    for name in grad_list[0]:
        acc = grad_list[0][name].copy()
        for g in grad_list[1:]:
            acc += g[name]
        out[name] = acc / len(grad_list)
    return out


def _distance_backward(ground, aerial, orientations, distances, ddist):
    """Gradients of the aligned distances w.r.t. the stacked unified
    volumes. The orientation index is treated as a constant."""
    d_ground = np.zeros_like(ground)
    d_aerial = np.zeros_like(aerial)
    n = ground.shape[0]
    w_g, w_a = ground.shape[2], aerial.shape[2]
    base = np.arange(w_g)
    for i in range(n):
        for j in range(n):
            g = ddist[i, j]
            if g == 0.0 or distances[i, j] < 1e-12:
                continue
            cols = (orientations[i, j] + base) % w_a
            diff = ground[i] - aerial[j][:, cols]
            coef = g / distances[i, j]
            d_ground[i] += coef * diff
            d_aerial[j][:, cols] -= coef * diff
    return d_ground, d_aerial


def micro_batch_step(params, config, loss_cfg, ground_images, aerial_images):
    """Loss and parameter gradients for one micro-batch.

    `ground_images` / `aerial_images` are lists of role->grid dicts, one
    per sample, already augmented and polar-warped respectively.
    """
    feats_g, caches_g, feats_a, caches_a = [], [], [], []
    for gi, ai in zip(ground_images, aerial_images):
        fg, cg = network.unified_with_cache(params, config, gi, "ground")
        fa, ca = network.unified_with_cache(params, config, ai, "satellite")
        feats_g.append(fg)
        caches_g.append(cg)
        feats_a.append(fa)
        caches_a.append(ca)
    orientations, distances, _ = matching.pairwise_matches(feats_g, feats_a)
    loss = triplet_loss(distances, loss_cfg)
    ddist = triplet_loss_grad(distances, loss_cfg)
    d_ground, d_aerial = _distance_backward(
        np.stack(feats_g), np.stack(feats_a), orientations, distances, ddist
    )
    grads = {k: np.zeros_like(p) for k, p in params.items()}
    for i in range(len(ground_images)):
        for part in (
            network.unified_backward(params, config, caches_g[i], d_ground[i]),
            network.unified_backward(params, config, caches_a[i], d_aerial[i]),
        ):
            for k, g in part.items():
                grads[k] += g
    return loss, grads


def _augmented_ground(config, sample, fov, rng):
    """Random reorientation plus FoV crop, shared across ground modalities."""
    rolled_rgb, shift = geometry.random_roll(sample["ground_rgb"], rng)
    out = {}
    for s in config.streams_for("ground"):
        raster = rolled_rgb if s.role == "ground_rgb" else geometry.roll_columns(sample[s.role], shift)
        out[s.role] = geometry.fov_crop(raster, fov, 0).to_grid()
    return out


def train(model_config, train_config, manifest,
          checkpoint_path=None, metrics_path=None, log=None):
    """Full training loop. Returns (params, metrics rows).

    Deterministic for a fixed seed and single-threaded execution; emits one
    metrics row per epoch, with validation recall every 5 epochs and on the
    final epoch.
    """
    from .evaluation import evaluate_features  # local import: avoids a cycle

    train_records = manifest.split("train")
    if len(train_records) < train_config.effective_batch:
        raise DatasetTooSmall(
            f"{len(train_records)} training samples < effective batch {train_config.effective_batch}"
        )
    rng = np.random.default_rng(train_config.seed)
    params = network.build_extractor(model_config, train_config.seed)
    state = init_adam(params)
    frozen = network.frozen_param_names(model_config)
    loss_cfg = LossConfig(alpha=model_config.alpha, symmetric=True)

    samples = [load_sample_rasters(manifest, r, model_config) for r in train_records]
    pano_w, pano_h = pano_size(samples[0])
    aerial_cache = [aerial_grids(model_config, s, pano_w, pano_h) for s in samples]
    fov = geometry.FovSpec(train_config.fov_degrees, pano_w)

    n_train = len(samples)
    eb, mb = train_config.effective_batch, train_config.micro_batch
    steps = n_train // eb
    metrics = []
    for epoch in range(1, train_config.epochs + 1):
        perm = rng.permutation(n_train)
        epoch_losses = []
        for step in range(steps):
            batch = perm[step * eb : (step + 1) * eb]
            grad_list = []
            for m in range(eb // mb):
                idx = batch[m * mb : (m + 1) * mb]
                ground_images = [
                    _augmented_ground(model_config, samples[k], fov, rng) for k in idx
                ]
                aerial_images = [aerial_cache[k] for k in idx]
                loss, grads = micro_batch_step(
                    params, model_config, loss_cfg, ground_images, aerial_images
                )
                grad_list.append(grads)
                epoch_losses.append(loss)
            adam_step(params, average_grads(grad_list), state,
                      train_config.learning_rate, frozen)
        row = {"epoch": epoch, "loss": float(np.mean(epoch_losses))}
        if epoch % 5 == 0 or epoch == train_config.epochs:
            report = evaluate_features(
                params, model_config, manifest,
                fov_degrees=train_config.fov_degrees,
                seed=[train_config.seed, epoch],
            )
            row.update(
                {
                    "r@1": report.recalls["r@1"],
                    "r@5": report.recalls["r@5"],
                    "r@10": report.recalls["r@10"],
                    "r@1pct": report.recalls["r@1%"],
                }
            )
        metrics.append(row)
        if log:
            log(_format_metrics_row(row))

    if checkpoint_path:
        network.save_checkpoint(
            checkpoint_path, params, model_config, meta={"train": train_config.to_dict()}
        )
    if metrics_path:
        write_metrics_csv(metrics, metrics_path)
    return params, metrics


def _format_metrics_row(row):
    parts = [f"epoch {row['epoch']:3d}", f"loss {row['loss']:.6f}"]
    if "r@1" in row:
        parts.append(
            "r@1 {r1:.4f} r@5 {r5:.4f} r@10 {r10:.4f} r@1% {rp:.4f}".format(
                r1=row["r@1"], r5=row["r@5"], r10=row["r@10"], rp=row["r@1pct"]
            )
        )
    return "  ".join(parts)


def write_metrics_csv(metrics, path):
    import csv

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "loss", "r@1", "r@5", "r@10", "r@1pct"])
        for row in metrics:
            writer.writerow(
                [
                    row["epoch"],
                    repr(row["loss"]),
                    repr(row["r@1"]) if "r@1" in row else "",
                    repr(row["r@5"]) if "r@5" in row else "",
                    repr(row["r@10"]) if "r@10" in row else "",
                    repr(row["r@1pct"]) if "r@1pct" in row else "",
                ]
            )
