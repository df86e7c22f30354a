import numpy as np
import pytest

from obgcs import synth_generator


@pytest.fixture
def small_net():
    """Deterministic 3-layer net used by several gradient/Lipschitz tests."""
    return synth_generator(k=4, n=12, hidden_dims=[10, 8], seed=11)


def preacts_away_from_kinks(net, z, margin=1e-3):
    """True when every hidden pre-activation clears the given margin."""
    h = np.asarray(z, dtype=np.float64)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        h = w @ h + b
        if i < len(net.weights) - 1:
            if np.min(np.abs(h)) < margin:
                return False
            h = np.maximum(h, 0.0)
    return True
