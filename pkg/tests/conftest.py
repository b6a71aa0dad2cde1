import numpy as np
import pytest

from probe_oracle import backend, synth
from probe_oracle.datamodel import FeatureId, ModelId, ProbeMatrix, ScoreTable, StudyConfig


@pytest.fixture()
def small_cfg():
    return StudyConfig(seed=7, control_draws=8)


@pytest.fixture(scope="session")
def planted():
    return synth.gen_planted_study(seed=3, n_models=25, n_features=24, k_true=3, n_tasks=2)


@pytest.fixture(scope="session")
def family_matrix():
    """8 models in 2 families whose probe columns carry a clear family shift."""
    gen = np.random.default_rng(0)
    models = tuple(
        ModelId(f"m{i}", family=("alpha" if i < 4 else "beta")) for i in range(8)
    )
    feats = tuple(FeatureId("pos", l) for l in range(1, 6))
    base = gen.uniform(0.6, 0.9, size=(8, 5))
    base[:4] += 0.08
    return ProbeMatrix(models, feats, np.clip(base, 0.0, 1.0))


@pytest.fixture()
def both_backends():
    """Restore whatever backend was active after a test flips it."""
    before = backend.backend_name()
    yield
    backend.set_backend(before)


@pytest.fixture(scope="session")
def tiny_study():
    """Factory for a small random probe matrix + score table pair."""

    def build(n_models=10, n_features=4, seed=0):
        gen = np.random.default_rng(seed)
        models = tuple(ModelId(f"M{i:02d}") for i in range(n_models))
        feats = tuple(FeatureId("pos", l + 1) for l in range(n_features))
        pm = ProbeMatrix(models, feats, gen.uniform(0.4, 0.9, size=(n_models, n_features)))
        st = ScoreTable(models, ("task.a",), gen.uniform(0.5, 0.9, size=(n_models, 1)))
        return pm, st

    return build
