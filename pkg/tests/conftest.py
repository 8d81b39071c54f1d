from __future__ import annotations

import pytest

from fracneumann.spectral_core import ModelDomain, build_basis


@pytest.fixture(scope="session")
def interval_basis():
    return build_basis(ModelDomain.interval(1.0), 32)


@pytest.fixture(scope="session")
def rectangle_basis():
    return build_basis(ModelDomain.rectangle(1.0, 0.5), 8)
