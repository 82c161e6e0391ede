import numpy as np
import pytest

from willmore.dgcore import DegreeMap, DgScalarField, Discretization, l2_project
from willmore.grid import COPY_TRACE, PERIODIC, build_mesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_space():
    """Space factory: make_space(dim, n, degree=2, boundary=PERIODIC, domain=None, degrees=None)"""

    def _make(dim, n, degree=2, boundary=PERIODIC, domain=None, degrees=None):
        if domain is None:
            domain = [0.0, 2 * np.pi] if dim == 1 else [0.0, 4.0]
        mesh = build_mesh(dim, domain, n, boundary)
        disc = Discretization(mesh)
        if degrees is None:
            degrees = np.full(mesh.ncells, degree)
        return disc.space(DegreeMap(degrees))

    return _make


@pytest.fixture
def random_field(rng):
    def _make(space):
        return DgScalarField(space, rng.standard_normal((space.ncells, space.nm)))

    return _make


@pytest.fixture
def mixed_space(make_space, rng):
    """2D copy-trace space with a random mix of degrees 1 and 2"""
    degrees = rng.integers(1, 3, size=16)
    return make_space(2, 4, boundary=COPY_TRACE, degrees=degrees)


@pytest.fixture
def circle_field(make_space):
    """Signed distance to the unit circle centered in [0,4]^2, degree 2, 16x16 copy-trace"""
    space = make_space(2, 16, boundary=COPY_TRACE)
    return l2_project(lambda x: np.hypot(x[..., 0] - 2.0, x[..., 1] - 2.0) - 1.0, space)
