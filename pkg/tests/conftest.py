import os
import pathlib

import pytest

from coldrec.data import load_movielens, normalize

# The MovieLens-1M acceptance runs need the real ratings file; point
# COLDREC_ML1M at it or drop it under data/ml-1m/.  Everything else in the
# suite runs on synthetic and fixture data.
_ML1M_CANDIDATES = (
    os.environ.get("COLDREC_ML1M"),
    "data/ml-1m/ratings.dat",
    str(pathlib.Path.home() / "data/ml-1m/ratings.dat"),
)


def ml1m_location():
    for candidate in _ML1M_CANDIDATES:
        if candidate and os.path.exists(candidate):
            return candidate
    return None


requires_ml1m = pytest.mark.skipif(
    ml1m_location() is None,
    reason="MovieLens ml-1m ratings.dat not found (set COLDREC_ML1M or place data/ml-1m/ratings.dat)",
)


@pytest.fixture(scope="session")
def ml1m_normalized():
    path = ml1m_location()
    if path is None:
        pytest.skip("ml-1m corpus not available")
    return normalize(load_movielens(path))
