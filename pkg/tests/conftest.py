import random

import pytest

from helpers import chain_dag, chain_joint, frontdoor_dag, two_stage_dag
from helpers import random_dag, random_positive_joint


@pytest.fixture
def chain():
    return chain_dag()


@pytest.fixture
def chain_law():
    return chain_joint()


@pytest.fixture
def two_stage():
    return two_stage_dag()


@pytest.fixture
def frontdoor():
    return frontdoor_dag()


@pytest.fixture(scope="session")
def small_corpus():
    """A dozen seeded positive models reused across module tests."""
    rng = random.Random(20240801)
    corpus = []
    for _ in range(12):
        dag = random_dag(rng)
        corpus.append((dag, random_positive_joint(rng, dag)))
    return corpus
