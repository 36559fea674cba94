import pytest

from fractenna.analytics import patch_from_geometry
from fractenna.config import PATCH_LENGTH, PATCH_WIDTH
from fractenna.geometry import build_baseline_layout
from fractenna.schemas import FeedSpec, GroundSpec, SubstrateSpec


@pytest.fixture(scope="session")
def substrate():
    return SubstrateSpec()


@pytest.fixture(scope="session")
def table_i_patch(substrate):
    return patch_from_geometry(PATCH_WIDTH, PATCH_LENGTH, substrate)


@pytest.fixture(scope="session")
def baseline(substrate, table_i_patch):
    """Unoptimized layout with the table defaults: 19 x 19 mm patch, partial slotted ground."""
    return build_baseline_layout(substrate, table_i_patch, FeedSpec(), GroundSpec())
