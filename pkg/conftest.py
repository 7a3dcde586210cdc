"""
Shared fixtures: the default oracle dataset, its split and a quickly trained surrogate.
"""

import numpy as np
import pytest

from app.schemas.surrogate import MlpConfig
from app.services import dataset as dataset_service
from app.services import oracle
from app.services.mlp import train


@pytest.fixture(scope="session")
def oracle_dataset():
    return oracle.generate_dataset()


@pytest.fixture(scope="session")
def default_split(oracle_dataset):
    return dataset_service.split(oracle_dataset, seed=0)


@pytest.fixture(scope="session")
def quick_model(oracle_dataset, default_split):
    model, _ = train(oracle_dataset, default_split, MlpConfig(hidden_sizes=(6, 6, 6), epochs=5, seed=3))
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
