"""Configurable multi-stream convolutional feature extractor.

Every stream shares one layer topology but owns its parameters. The stack
downsamples width by 8 with wrap (circular) padding so a full panorama
keeps its azimuth continuity: shifting a 360-degree input by 8k columns
shifts the feature volume by exactly k columns. Feature volumes are
(height, width, channels) float64 arrays.

Reverse-mode gradients are implemented explicitly; frozen layers report
zero parameter gradients but still pass gradients through to their input.
"""

import json
import struct
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import ChannelOverflow, InputTooNarrow, InvalidConfig, ShapeMismatch

VIEWPOINTS = ("ground", "satellite")
MODALITIES = ("rgb", "seg", "depth")
MODALITY_CHANNELS = {"rgb": 3, "seg": 3, "depth": 1}
FUSIONS = ("partial_sum", "concat")


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # "conv" | "maxpool" | "relu"
    kernel: tuple = (3, 3)
    stride: tuple = (1, 1)
    width_padding: str = "wrap"  # "wrap" | "zero" (conv only)
    height_padding: str = "zero"  # "zero" | "valid" (conv only)
    out_channels: int | None = None  # conv only; None means "stream channels"
    frozen: bool = False

    def to_dict(self):
        return {
            "kind": self.kind,
            "kernel": list(self.kernel),
            "stride": list(self.stride),
            "width_padding": self.width_padding,
            "height_padding": self.height_padding,
            "out_channels": self.out_channels,
            "frozen": self.frozen,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            kind=d["kind"],
            kernel=tuple(d.get("kernel", (3, 3))),
            stride=tuple(d.get("stride", (1, 1))),
            width_padding=d.get("width_padding", "wrap"),
            height_padding=d.get("height_padding", "zero"),
            out_channels=d.get("out_channels"),
            frozen=d.get("frozen", False),
        )


@dataclass(frozen=True)
class StreamConfig:
    modality: str  # "rgb" | "seg" | "depth"
    viewpoint: str  # "ground" | "satellite"
    out_channels: int

    @property
    def role(self) -> str:
        prefix = "sat" if self.viewpoint == "satellite" else "ground"
        return f"{prefix}_{self.modality}"

    def to_dict(self):
        return {
            "modality": self.modality,
            "viewpoint": self.viewpoint,
            "out_channels": self.out_channels,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["modality"], d["viewpoint"], d["out_channels"])


@dataclass
class ModelConfig:
    streams: list
    layers: list
    fusion: str = "partial_sum"
    freeze_depth: int = 2
    alpha: float = 10.0

    def validate(self):
        for vp in VIEWPOINTS:
            rgb = [s for s in self.streams if s.viewpoint == vp and s.modality == "rgb"]
            if len(rgb) != 1:
                raise InvalidConfig(f"need exactly one rgb stream for viewpoint {vp!r}, got {len(rgb)}")
            budget = rgb[0].out_channels
            for s in self.streams:
                if s.viewpoint == vp and s.out_channels > budget:
                    raise InvalidConfig(
                        f"stream {s.role} has {s.out_channels} channels, more than its rgb stream ({budget})"
                    )
        for s in self.streams:
            if s.modality not in MODALITIES or s.viewpoint not in VIEWPOINTS:
                raise InvalidConfig(f"unknown stream {s.viewpoint}/{s.modality}")
        if len({s.role for s in self.streams}) != len(self.streams):
            raise InvalidConfig("duplicate stream roles")
        if self.fusion not in FUSIONS:
            raise InvalidConfig(f"unknown fusion {self.fusion!r}")
        n_conv = sum(1 for l in self.layers if l.kind == "conv")
        if not 0 <= self.freeze_depth <= n_conv:
            raise InvalidConfig(f"freeze_depth {self.freeze_depth} outside [0, {n_conv}]")
        for l in self.layers:
            if l.kind not in ("conv", "maxpool", "relu"):
                raise InvalidConfig(f"unknown layer kind {l.kind!r}")
            if l.kind == "conv" and tuple(l.kernel) != (3, 3):
                raise InvalidConfig("conv kernels are fixed at 3x3")
            if l.kind == "conv" and not all(s in (1, 2) for s in l.stride):
                raise InvalidConfig("conv stride components must be 1 or 2")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidConfig("alpha must be finite and positive")
        return self

    def streams_for(self, viewpoint):
        return [s for s in self.streams if s.viewpoint == viewpoint]

    def conv_layers(self):
        return [l for l in self.layers if l.kind == "conv"]

    def to_dict(self):
        return {
            "streams": [s.to_dict() for s in self.streams],
            "layers": [l.to_dict() for l in self.layers],
            "fusion": self.fusion,
            "freeze_depth": self.freeze_depth,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            streams=[StreamConfig.from_dict(s) for s in d["streams"]],
            layers=[LayerSpec.from_dict(l) for l in d["layers"]],
            fusion=d.get("fusion", "partial_sum"),
            freeze_depth=d.get("freeze_depth", 2),
            alpha=d.get("alpha", 10.0),
        ).validate()


def default_layers():
    """Reference stack: three conv/relu/pool blocks halve both dimensions
    (width-stride product 8), then a tail of three convs brings height
    128 -> 4 while wrap padding keeps the width untouched."""
    conv = lambda c, sh=1: LayerSpec(kind="conv", stride=(sh, 1), out_channels=c)
    pool = LayerSpec(kind="maxpool", kernel=(2, 2), stride=(2, 2))
    relu = LayerSpec(kind="relu")
    return [
        conv(8), relu, pool,
        conv(16), relu, pool,
        conv(32), relu, pool,
        conv(None, sh=2), relu,
        conv(None, sh=2), relu,
        conv(None),
    ]


VARIANT_STREAMS = {
    "duo": (("ground", "rgb"), ("satellite", "rgb")),
    "triple_sat": (("ground", "rgb"), ("satellite", "rgb"), ("satellite", "seg")),
    "triple_grd": (("ground", "rgb"), ("ground", "seg"), ("satellite", "rgb")),
    "quad": (("ground", "rgb"), ("ground", "seg"), ("satellite", "rgb"), ("satellite", "seg")),
    "quintuple": (
        ("ground", "rgb"),
        ("ground", "seg"),
        ("ground", "depth"),
        ("satellite", "rgb"),
        ("satellite", "seg"),
    ),
}


def make_model_config(
    variant="quad",
    fusion="partial_sum",
    rgb_channels=16,
    aux_channels=8,
    freeze_depth=2,
    alpha=10.0,
    layers=None,
) -> ModelConfig:
    if variant not in VARIANT_STREAMS:
        raise InvalidConfig(f"unknown variant {variant!r}")
    streams = [
        StreamConfig(modality=m, viewpoint=vp,
                     out_channels=rgb_channels if m == "rgb" else aux_channels)
        for vp, m in VARIANT_STREAMS[variant]
    ]
    layers = list(layers) if layers is not None else default_layers()
    frozen_left = freeze_depth
    marked = []
    for l in layers:
        if l.kind == "conv" and frozen_left > 0:
            marked.append(replace(l, frozen=True))
            frozen_left -= 1
        else:
            marked.append(l)
    return ModelConfig(
        streams=streams, layers=marked, fusion=fusion,
        freeze_depth=freeze_depth, alpha=alpha,
    ).validate()


def _conv_shapes(config: ModelConfig, stream: StreamConfig):
    """(in_channels, out_channels) chain for a stream's conv layers; a None
    out_channels resolves to the stream's channel budget."""
    chain = []
    c = MODALITY_CHANNELS[stream.modality]
    for l in config.conv_layers():
        out = l.out_channels if l.out_channels is not None else stream.out_channels
        chain.append((c, out))
        c = out
    return chain


def param_names(config: ModelConfig):
    names = []
    for s in config.streams:
        for j, _ in enumerate(config.conv_layers()):
            names.append(f"{s.role}/conv{j}/weight")
            names.append(f"{s.role}/conv{j}/bias")
    return names


def frozen_param_names(config: ModelConfig):
    frozen = set()
    for s in config.streams:
        for j, l in enumerate(config.conv_layers()):
            if l.frozen:
                frozen.add(f"{s.role}/conv{j}/weight")
                frozen.add(f"{s.role}/conv{j}/bias")
    return frozen


def build_extractor(config: ModelConfig, seed) -> dict:
    """Uniform fan-in initialization: weights ~ U(-b, b) with
    b = sqrt(6 / (kh*kw*c_in)); biases start at zero.

    Streams of the same modality start from identical weights across
    viewpoints (they diverge only through training), mirroring branches
    that share one pretrained backbone. Draws are keyed on
    (seed, modality, layer), so the result is independent of stream order.
    """
    config.validate()
    params = {}
    shared = {}
    for s in config.streams:
        for j, (c_in, c_out) in enumerate(_conv_shapes(config, s)):
            key = (s.modality, j, c_in, c_out)
            if key not in shared:
                rng = np.random.default_rng([seed, MODALITIES.index(s.modality), j])
                kh, kw = 3, 3
                bound = np.sqrt(6.0 / (kh * kw * c_in))
                shared[key] = rng.uniform(-bound, bound, (kh, kw, c_in, c_out))
            params[f"{s.role}/conv{j}/weight"] = shared[key].copy()
            params[f"{s.role}/conv{j}/bias"] = np.zeros(c_out)
    return params


def _check_input(config, stream, image):
    if image.ndim != 3 or image.shape[2] != MODALITY_CHANNELS[stream.modality]:
        raise ShapeMismatch(
            f"stream {stream.role} expects (h, w, {MODALITY_CHANNELS[stream.modality]}) input, "
            f"got {image.shape}"
        )
    h, w = image.shape[:2]
    for l in config.layers:
        if l.kind == "conv":
            kh, kw = l.kernel
            sh, sw = l.stride
            ph = kh // 2 if l.height_padding == "zero" else 0
            h = (h + 2 * ph - kh) // sh + 1
            if l.width_padding == "wrap":
                w = (w + sw - 1) // sw
            else:
                pw = kw // 2
                w = (w + 2 * pw - kw) // sw + 1
        elif l.kind == "maxpool":
            kh, kw = l.kernel
            sh, sw = l.stride
            h = (h - kh) // sh + 1
            w = (w - kw) // sw + 1
        if h < 1 or w < 1:
            raise InputTooNarrow(
                f"input {image.shape[:2]} collapses to {h}x{w} at a {l.kind} layer"
            )
    return h, w


def forward_with_cache(params: dict, config: ModelConfig, stream: StreamConfig, image):
    """Run one stream; returns the feature volume and the per-layer inputs
    needed for the backward pass."""
    x = np.ascontiguousarray(image, dtype=np.float64)
    _check_input(config, stream, x)
    cache = []
    conv_idx = 0
    for l in config.layers:
        cache.append(x)
        if l.kind == "conv":
            w = params[f"{stream.role}/conv{conv_idx}/weight"]
            b = params[f"{stream.role}/conv{conv_idx}/bias"]
            x = kernels.conv2d_forward(
                x, w, b, l.stride[0], l.stride[1],
                l.width_padding == "wrap", l.height_padding == "zero",
            )
            conv_idx += 1
        elif l.kind == "relu":
            x = np.maximum(x, 0.0)
        else:
            x = kernels.maxpool_forward(x, l.kernel[0], l.kernel[1], l.stride[0], l.stride[1])
    return x, cache


def forward(params: dict, config: ModelConfig, stream: StreamConfig, image) -> np.ndarray:
    """Feature volume of one stream for a (h, w, c) real grid in [0, 1]."""
    out, _ = forward_with_cache(params, config, stream, image)
    return out


def backward_from_cache(params, config, stream, cache, dout):
    grads = {}
    dx = dout
    conv_idx = len(config.conv_layers())
    for l, x_in in zip(reversed(config.layers), reversed(cache)):
        if l.kind == "conv":
            conv_idx -= 1
            w = params[f"{stream.role}/conv{conv_idx}/weight"]
            dw, db, dx = kernels.conv2d_backward(
                x_in, w, np.ascontiguousarray(dx), l.stride[0], l.stride[1],
                l.width_padding == "wrap", l.height_padding == "zero",
            )
            if l.frozen:
                dw = np.zeros_like(dw)
                db = np.zeros_like(db)
            grads[f"{stream.role}/conv{conv_idx}/weight"] = dw
            grads[f"{stream.role}/conv{conv_idx}/bias"] = db
        elif l.kind == "relu":
            dx = dx * (x_in > 0.0)
        else:
            dx = kernels.maxpool_backward(
                x_in, np.ascontiguousarray(dx), l.kernel[0], l.kernel[1], l.stride[0], l.stride[1]
            )
    return grads, dx


def backward(params, config, stream, image, upstream_gradient):
    """Exact reverse-mode gradients of `forward` for one stream.

    Returns ({name: gradient}, input gradient). Frozen conv layers report
    zero parameter gradients but still propagate the input gradient.
    """
    out, cache = forward_with_cache(params, config, stream, image)
    if np.shape(upstream_gradient) != out.shape:
        raise ShapeMismatch(
            f"upstream gradient {np.shape(upstream_gradient)} does not match output {out.shape}"
        )
    return backward_from_cache(params, config, stream, cache, np.asarray(upstream_gradient, dtype=np.float64))


def fuse_partial_sum(primary: np.ndarray, auxiliaries) -> np.ndarray:
    """Add each auxiliary onto the leading channels of the primary volume;
    channels past an auxiliary's width pass through unchanged."""
    out = primary.copy()
    for aux in auxiliaries:
        if aux.shape[:2] != primary.shape[:2]:
            raise ShapeMismatch(f"auxiliary {aux.shape} vs primary {primary.shape}")
        if aux.shape[2] > primary.shape[2]:
            raise ChannelOverflow(
                f"auxiliary has {aux.shape[2]} channels, primary only {primary.shape[2]}"
            )
        out[:, :, : aux.shape[2]] += aux
    return out


def fuse_concat(volumes) -> np.ndarray:
    """Stack volumes along the channel axis in stream order."""
    volumes = list(volumes)
    first = volumes[0]
    for v in volumes[1:]:
        if v.shape[:2] != first.shape[:2]:
            raise ShapeMismatch(f"cannot concat {v.shape} with {first.shape}")
    return np.concatenate(volumes, axis=2)


def l2_normalize(volume: np.ndarray):
    """Scale the whole volume to Frobenius norm 1; zero volumes pass through."""
    norm = float(np.sqrt(np.sum(volume * volume)))
    if norm == 0.0:
        return volume.copy(), 0.0
    return volume / norm, norm


def unified_features(params, config: ModelConfig, images: dict, viewpoint: str) -> np.ndarray:
    """Forward every stream of a viewpoint, fuse, and L2-normalize.

    `images` maps stream roles to (h, w, c) real grids already in the
    panorama domain (satellite rasters polar-warped beforehand).
    """
    out, _ = unified_with_cache(params, config, images, viewpoint)
    return out


def unified_with_cache(params, config: ModelConfig, images: dict, viewpoint: str):
    streams = config.streams_for(viewpoint)
    if not streams:
        raise InvalidConfig(f"no streams for viewpoint {viewpoint!r}")
    vols = []
    caches = []
    for s in streams:
        if s.role not in images:
            raise ShapeMismatch(f"missing input for stream {s.role}")
        v, c = forward_with_cache(params, config, s, images[s.role])
        vols.append(v)
        caches.append(c)
    if config.fusion == "partial_sum":
        primary_idx = next(i for i, s in enumerate(streams) if s.modality == "rgb")
        fused = fuse_partial_sum(
            vols[primary_idx], [v for i, v in enumerate(vols) if i != primary_idx]
        )
    else:
        fused = fuse_concat(vols)
    unit, norm = l2_normalize(fused)
    cache = {
        "streams": streams,
        "layer_caches": caches,
        "volumes": vols,
        "norm": norm,
        "unit": unit,
    }
    return unit, cache


def unified_backward(params, config: ModelConfig, cache, dunit):
    """Gradients of every stream's parameters given the gradient of the
    normalized fused volume."""
    unit, norm = cache["unit"], cache["norm"]
    if norm == 0.0:
        dfused = np.asarray(dunit, dtype=np.float64).copy()
    else:
        dfused = (dunit - unit * np.sum(dunit * unit)) / norm
    streams = cache["streams"]
    vols = cache["volumes"]
    grads = {}
    if config.fusion == "partial_sum":
        primary_idx = next(i for i, s in enumerate(streams) if s.modality == "rgb")
        for i, s in enumerate(streams):
            if i == primary_idx:
                dvol = dfused
            else:
                dvol = dfused[:, :, : vols[i].shape[2]]
            g, _ = backward_from_cache(params, config, s, cache["layer_caches"][i], dvol)
            grads.update(g)
    else:
        offset = 0
        for i, s in enumerate(streams):
            c = vols[i].shape[2]
            dvol = dfused[:, :, offset : offset + c]
            offset += c
            g, _ = backward_from_cache(params, config, s, cache["layer_caches"][i], dvol)
            grads.update(g)
    return grads


# --- checkpoint container: FVOL-style blocks behind a JSON index ------------

CHECKPOINT_MAGIC = b"FVCP"


def save_checkpoint(path, params: dict, config: ModelConfig, meta: dict | None = None):
    """Binary container: magic, uint32 JSON-index length, JSON index
    (names, shapes, byte offsets into the data section that follows),
    then raw float64 LE blocks."""
    names = list(params.keys())
    blocks = [np.ascontiguousarray(params[n], dtype="<f8") for n in names]
    index = {"meta": dict(meta or {}), "blocks": []}
    index["meta"]["model"] = config.to_dict()
    offset = 0
    for n, b in zip(names, blocks):
        index["blocks"].append(
            {"name": n, "shape": list(b.shape), "offset": offset, "nbytes": b.nbytes}
        )
        offset += b.nbytes
    payload = json.dumps(index, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        for b in blocks:
            f.write(b.tobytes())


def load_checkpoint(path):
    from .errors import BadMagic, TruncatedFile

    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise BadMagic(f"{path}: expected {CHECKPOINT_MAGIC!r}, found {magic!r}")
        (hlen,) = struct.unpack("<I", f.read(4))
        index = json.loads(f.read(hlen).decode())
        data = f.read()
    params = {}
    for entry in index["blocks"]:
        start = entry["offset"]
        end = start + entry["nbytes"]
        if end > len(data):
            raise TruncatedFile(f"{path}: block {entry['name']} extends past end of file")
        flat = np.frombuffer(data[start:end], dtype="<f8")
        params[entry["name"]] = flat.reshape(entry["shape"]).copy()
    meta = index.get("meta", {})
    config = ModelConfig.from_dict(meta["model"])
    return params, config, meta
