import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "scripts"))

from support import doc  # noqa: E402

DATA_DIR = os.path.join(ROOT, "data")


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def founders_docs():
    return [
        doc("d1", "[Intel](intel) was founded by [Gordon Moore](gordon_moore)"),
        doc("d2", "[Moore](gordon_moore) co-founded [Intel](intel) in 1968",
                  "[Intel](intel) makes chips"),
        doc("d3", "[Apple](apple) was founded by [Steve Jobs](steve_jobs)",
                  "[Jobs](steve_jobs) was an American businessman"),
        doc("d4", "No entities in this sentence"),
    ]
