import numpy as np
import pytest

from hfguide.autoencoder import ToyAutoencoder
from hfguide.conditioning import token_ids
from hfguide.errors import InvalidArgumentError, MalformedImageError
from hfguide.forge import apply_grayscale, generate_source_image
from hfguide.rng import Prng
from hfguide.toydenoiser import (LATENT_SHAPE, ToyDenoiser, TrainConfig,
                                 draw_drop_flags, train_toy, write_loss_curve)
from hfguide.weights_io import load_tensors, save_tensors


def make_examples(n=8):
    ae = ToyAutoencoder()
    examples = []
    for i in range(n):
        clean = generate_source_image(Prng(100 + i))
        degraded = apply_grayscale(clean)
        examples.append({
            "target_latent": ae.encode(clean)[0],
            "input_latent": ae.encode(degraded)[0],
            "instruction_ids": token_ids("Colorize this photo"),
            "auxiliary_ids": token_ids("a synthetic scene the image is grayscale"),
        })
    return examples


def test_training_loss_decreases():
    cfg = TrainConfig(iters=500, batch=4, seed=0, log_every=50)
    _, curve = train_toy(make_examples(), cfg)
    losses = dict(curve)
    assert losses[499] < losses[0]


def test_empty_training_set_rejected():
    with pytest.raises(InvalidArgumentError):
        train_toy([], TrainConfig())


def test_drop_flags_boundaries():
    prng = Prng(1)
    assert all(draw_drop_flags(prng, 0.0) == (False, False, False) for _ in range(50))
    assert all(draw_drop_flags(prng, 1.0) == (True, True, True) for _ in range(50))


class CountingPrng:
    """Deterministic uniform stream for exercising the drop decisions."""

    def __init__(self, values):
        self.values = list(values)
        self.i = 0

    def uniform(self, shape=()):
        v = self.values[self.i % len(self.values)]
        self.i += 1
        return v


def test_drop_flags_injected_stream():
    flags = draw_drop_flags(CountingPrng([0.01, 0.5, 0.02]), 0.075)
    assert flags == (True, False, True)


def test_dropout_band_at_paper_probability():
    prng = Prng(7)
    n = 10_000
    hits = sum(draw_drop_flags(prng, 0.075)[0] for _ in range(n))
    assert 0.06 <= hits / n <= 0.09


def test_predict_eps_shape_and_determinism():
    model = ToyDenoiser.init(seed=3)
    z = Prng(4).gaussian(LATENT_SHAPE)
    a = model.predict_eps(z, 0.5, None)
    b = model.predict_eps(z, 0.5, None)
    assert a.shape == LATENT_SHAPE
    assert np.array_equal(a, b)


def test_save_load_bit_exact(tmp_path):
    model = ToyDenoiser.init(seed=5)
    path = tmp_path / "weights.hfgw"
    model.save(str(path), meta={"note": "test"})
    loaded = ToyDenoiser.load(str(path))
    assert set(loaded.weights) == set(model.weights)
    for k in model.weights:
        assert np.array_equal(loaded.weights[k], np.asarray(model.weights[k]))


def test_load_rejects_foreign_container(tmp_path):
    path = tmp_path / "other.hfgw"
    save_tensors(str(path), {"x": np.zeros(3)}, meta={"kind": "something-else"})
    with pytest.raises(InvalidArgumentError):
        ToyDenoiser.load(str(path))
    junk = tmp_path / "junk.hfgw"
    junk.write_bytes(b"NOPE")
    with pytest.raises(MalformedImageError):
        load_tensors(str(junk))


def test_loss_curve_csv(tmp_path):
    path = tmp_path / "curve.csv"
    write_loss_curve(str(path), [(0, 1.5), (49, 0.9)])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,loss"
    assert lines[1] == "0,1.5"
