import numpy as np
import pytest

from seghyp.core import Mention, Sentence


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def zoo():
    """'the Seattle zoo' with a FAC (type 0) containing a GPE (type 1)."""
    sentence = Sentence(("the", "Seattle", "zoo"), ("DT", "NNP", "NN"), "zoo")
    return sentence, (Mention(0, 2, 0), Mention(1, 1, 1))
