import numpy as np
import pytest

from zsoftmax.data import AttributeMatrix, SynthSpec, synth_generate


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_attrs():
    # 4 seen, 3 unseen, a=5
    m = np.random.default_rng(0).standard_normal((5, 7))
    return AttributeMatrix(m, num_seen=4)


@pytest.fixture(scope="session")
def small_benchmark():
    spec = SynthSpec(dim_a=8, dim_d=16, num_seen=6, num_unseen=3, train_per_class=20,
                     test_per_class=10, noise_sigma=0.1, seed=42)
    return synth_generate(spec)
