import pytest

from convexsim.generators import (
    chain_lattice,
    complete_graph,
    cycle_graph,
    path_graph,
    star_graph,
    subset_lattice_minus_empty,
    vee_lattice,
)
from convexsim.semilattices import Semilattice
from convexsim.spaces import algebraic_space, geodesic_space, monophonic_space


@pytest.fixture
def p5():
    return path_graph(5)


@pytest.fixture
def k3():
    return complete_graph(3)


@pytest.fixture
def c4():
    return cycle_graph(4)


@pytest.fixture
def c6():
    return cycle_graph(6)


@pytest.fixture
def star4():
    # center 0, leaves 1..3
    return star_graph(4)


@pytest.fixture
def vee():
    return vee_lattice()


@pytest.fixture
def chain3():
    return chain_lattice(3)


@pytest.fixture
def sub3():
    return subset_lattice_minus_empty(3)


def make_six_element_non_cycle_free() -> Semilattice:
    """Two minimal elements, their join, two incomparable elements above it,
    and a top; the comparability graph has an induced four-cycle."""
    below = {(a, a) for a in range(6)} | {
        (0, 2), (0, 3), (0, 4), (0, 5),
        (1, 2), (1, 3), (1, 4), (1, 5),
        (2, 3), (2, 4), (2, 5),
        (3, 5), (4, 5),
    }

    def lub(a, b):
        ubs = [c for c in range(6) if (a, c) in below and (b, c) in below]
        least = [c for c in ubs if all((c, d) in below for d in ubs)]
        assert len(least) == 1
        return least[0]

    return Semilattice([[lub(a, b) for b in range(6)] for a in range(6)])


@pytest.fixture
def six_cyclic():
    return make_six_element_non_cycle_free()


@pytest.fixture
def p5_mono(p5):
    return monophonic_space(p5)


@pytest.fixture
def k3_mono(k3):
    return monophonic_space(k3)


@pytest.fixture
def c4_mono(c4):
    return monophonic_space(c4)


@pytest.fixture
def p5_geo(p5):
    return geodesic_space(p5)


@pytest.fixture
def vee_space(vee):
    return algebraic_space(vee)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    from convexsim import _backend

    if request.param == "numba" and not _backend.numba_available():
        pytest.skip("numba not installed")
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend("auto")
