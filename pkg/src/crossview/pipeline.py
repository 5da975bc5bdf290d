"""Shared plumbing between training, evaluation and the CLI: loading sample
rasters, normalizing ground panoramas to the 128-row input height, and
polar-warping satellite rasters into the panorama domain."""

from . import geometry

INPUT_HEIGHT = 128
STANDARD_PANO_WIDTH = 512


def required_roles(config):
    return [s.role for s in config.streams]


def load_sample_rasters(manifest, record, config) -> dict:
    """Load every raster a model needs for one sample and standardize the
    ground side to the 128-row panorama height (off-size ground rasters are
    resized to 512x128, the reference input shape)."""
    rasters = {}
    for role in required_roles(config):
        rasters[role] = manifest.load_raster(record, role)
    ground = [r for r in rasters.values() if r.role.startswith("ground")]
    sizes = {(r.height, r.width) for r in ground}
    if len(sizes) > 1:
        raise ValueError(f"ground rasters of {record.id} disagree in size: {sizes}")
    if ground and ground[0].height != INPUT_HEIGHT:
        for role in list(rasters):
            if role.startswith("ground"):
                rasters[role] = geometry.resize(rasters[role], STANDARD_PANO_WIDTH, INPUT_HEIGHT)
    return rasters


def pano_size(rasters: dict):
    g = rasters["ground_rgb"]
    return g.width, g.height


def ground_grids(config, rasters: dict) -> dict:
    """Unaugmented ground inputs as float grids."""
    return {s.role: rasters[s.role].to_grid() for s in config.streams_for("ground")}


def aerial_grids(config, rasters: dict, pano_w: int, pano_h: int) -> dict:
    """Polar-warp the satellite rasters into the panorama domain.

    RGB uses bilinear sampling; masks use nearest so their colors stay
    inside the palette.
    """
    out = {}
    for s in config.streams_for("satellite"):
        sampling = "nearest" if s.modality == "seg" else "bilinear"
        spec = geometry.PolarSpec(pano_w, pano_h, sampling)
        out[s.role] = geometry.polar_transform(rasters[s.role], spec).to_grid()
    return out
