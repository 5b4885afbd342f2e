import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import MELOXICAM_CONLL  # noqa: E402

from mrcner.corpus import parse_conll  # noqa: E402


@pytest.fixture
def meloxicam_sentence():
    return parse_conll(MELOXICAM_CONLL.splitlines(), default_entity_type="CHEMICAL")[0]
