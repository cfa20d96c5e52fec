import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import planted_ratings, write_planted_corpus, write_solid_corpus  # noqa: E402

from colorconcept.datasets import builtin_uw58  # noqa: E402


@pytest.fixture(scope="session")
def uw58():
    return builtin_uw58()


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory, uw58):
    """2 concepts x 3 images with planted pixel mixtures over the palette."""
    root = tmp_path_factory.mktemp("small_corpus")
    ratings = planted_ratings(uw58, ("alpha", "beta"), seed=7)
    write_planted_corpus(root, uw58, ratings.values, ratings.concepts, n_images=3)
    return root, ratings


@pytest.fixture(scope="session")
def solid_corpus(tmp_path_factory):
    """2 concepts x 3 solid-color images (fast; no palette structure)."""
    root = tmp_path_factory.mktemp("solid_corpus")
    write_solid_corpus(root, ("crimson", "leaf"), 3,
                       [(200, 30, 40), (40, 160, 60)])
    return root
