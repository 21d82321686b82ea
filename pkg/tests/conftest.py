import numpy as np
import pytest

from polarity_prop.dataset import LabeledEvent
from polarity_prop.events import Event, EventPair, Relation
from polarity_prop.model import MEAN, RECURRENT, Vocabulary, init_model


def make_vocab(n_tokens: int = 8) -> Vocabulary:
    return Vocabulary({f"t{i}": i for i in range(1, n_tokens)})


def make_model(encoder_kind: str = MEAN, n_tokens: int = 8, dim: int = 4,
               seed: int = 0, init_scale: float = 0.1):
    model = init_model(make_vocab(n_tokens), dim=dim, encoder_kind=encoder_kind,
                       rng_seed=seed, init_scale=init_scale)
    rng = np.random.default_rng(seed + 1)
    model.linear_b[0] = rng.uniform(-0.1, 0.1)
    return model


def random_event(rng: np.random.Generator, n_tokens: int = 8, max_len: int = 4) -> Event:
    length = int(rng.integers(1, max_len + 1))
    # token index 0 maps to an out-of-vocabulary surface form
    tokens = tuple(f"t{rng.integers(0, n_tokens)}" for _ in range(length))
    return Event(tokens, int(rng.integers(0, length)))


def random_pair(rng: np.random.Generator, relation: Relation, n_tokens: int = 8) -> EventPair:
    return EventPair(random_event(rng, n_tokens), random_event(rng, n_tokens), relation)


def random_labeled(rng: np.random.Generator, n_tokens: int = 8) -> LabeledEvent:
    return LabeledEvent(random_event(rng, n_tokens), int(rng.choice((1, -1))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[MEAN, RECURRENT])
def encoder_kind(request):
    return request.param
