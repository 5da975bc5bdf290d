import pytest

from crossview import network


@pytest.fixture
def tiny_config():
    """Four-stream config with a two-conv stack over small images; fast
    enough for finite-difference sweeps."""
    L = network.LayerSpec
    layers = [
        L(kind="conv", out_channels=4),
        L(kind="relu"),
        L(kind="maxpool", kernel=(2, 2), stride=(2, 2)),
        L(kind="conv", out_channels=None, stride=(2, 1)),
    ]
    return network.ModelConfig(
        streams=[
            network.StreamConfig("rgb", "ground", 6),
            network.StreamConfig("seg", "ground", 3),
            network.StreamConfig("rgb", "satellite", 6),
            network.StreamConfig("seg", "satellite", 3),
        ],
        layers=layers,
        fusion="partial_sum",
        freeze_depth=0,
        alpha=10.0,
    ).validate()


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Small synthetic dataset shared by pipeline-level tests."""
    from crossview.data.synthetic import generate_synthetic_dataset

    cfg = network.make_model_config("quad")
    out = tmp_path_factory.mktemp("smalldata")
    manifest = generate_synthetic_dataset(
        seed=31,
        n_samples=18,
        sat_size=64,
        config=cfg,
        out_dir=str(out),
        pano_width=64,
        pano_height=128,
    )
    return manifest
