import numpy as np
import pytest

from core.gradcheck_cases import toy_layout
from core.synthetic import synth_dataset
from models.config import ModelConfig, RunConfig, TrainConfig, build_layers


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def toy():
    return toy_layout()


def small_model_config(**overrides) -> ModelConfig:
    """ntu25, two narrow layers over 16 frames: fast enough for training tests."""
    values = dict(
        layers=build_layers(3, [8, 8]),
        scales=('full', 'part', 'core'),
        num_classes=2,
        in_channels=3,
        layout_id='ntu25',
        persons=2,
        input_frames=16,
    )
    values.update(overrides)
    return ModelConfig(**values)


def small_run_config(epochs: int = 3, **model_overrides) -> RunConfig:
    return RunConfig(
        seed=0,
        model=small_model_config(**model_overrides),
        train=TrainConfig(base_lr=0.05, batch_size=4, epochs=epochs, lr_decay_epochs=(), seed=0),
        name='small',
    )


@pytest.fixture
def small_dataset():
    return synth_dataset(classes=2, per_class=4, frames=16, seed=3, test_per_class=2)
