import numpy as np
import pytest

from mirage import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def backend_params():
    mods = kernels.available_backends()
    return [pytest.param(mod, id=name) for name, mod in sorted(mods.items())]


@pytest.fixture(params=backend_params())
def kernel_impl(request):
    return request.param


def random_unit(rng, n=1):
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[0] if n == 1 else v
