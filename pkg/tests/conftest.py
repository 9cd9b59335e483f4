import numpy as np
import pytest

import helpers


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def fig_confounded_pair():
    return helpers.fig_confounded_pair()


@pytest.fixture
def fig_verma():
    return helpers.fig_verma()


@pytest.fixture
def fig_verma_mag():
    return helpers.fig_verma_mag()


@pytest.fixture
def fig_bowfree_supermodel():
    return helpers.fig_bowfree_supermodel()


@pytest.fixture
def graph_arid_chain():
    return helpers.graph_arid_chain()


@pytest.fixture
def graph_ctree_chain():
    return helpers.graph_ctree_chain()


@pytest.fixture
def protein_subnetwork():
    return helpers.protein_subnetwork()
