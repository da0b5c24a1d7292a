import pytest

from stochlab.services.percolation import build_lattice


@pytest.fixture
def square4():
    return build_lattice(2, 4)


@pytest.fixture
def line30():
    return build_lattice(1, 30)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
