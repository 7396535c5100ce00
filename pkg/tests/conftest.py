import numpy as np
import pytest

from polyroute.cli import generate_mesh
from polyroute.tables import preprocess_mesh


@pytest.fixture(scope="session")
def tetra():
    return generate_mesh("tetra")


@pytest.fixture(scope="session")
def cube():
    return generate_mesh("cube")


@pytest.fixture(scope="session")
def octa():
    return generate_mesh("octa")


@pytest.fixture(scope="session")
def sphere50():
    return generate_mesh("sphere", 50, 0)


@pytest.fixture(scope="session")
def sphere100():
    return generate_mesh("sphere", 100, 0)


@pytest.fixture(scope="session")
def tetra_system(tetra):
    return preprocess_mesh(tetra, 0.5)


@pytest.fixture(scope="session")
def cube_system(cube):
    return preprocess_mesh(cube, 0.5)


@pytest.fixture(scope="session")
def octa_system(octa):
    return preprocess_mesh(octa, 0.5)


@pytest.fixture(scope="session")
def sphere50_system(sphere50):
    return preprocess_mesh(sphere50, 0.3)


def random_pairs(n, count, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        a, b = int(rng.integers(n)), int(rng.integers(n))
        if a != b:
            pairs.append((a, b))
    return pairs
