import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bbbdcqo.hubo import InstanceSpec, generate


@pytest.fixture
def chain12():
    return generate(InstanceSpec(n=12, topology="sparse-chain", seed=7))
