import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from famed.triangulation_core import load_bundled  # noqa: E402

VOL_41 = 2.029883212819307


@pytest.fixture(scope="session")
def fig8():
    return load_bundled("fig8")


@pytest.fixture(scope="session")
def ctx(fig8):
    from famed.potential import build_context

    return build_context(fig8)


@pytest.fixture(scope="session")
def data_dir():
    return Path(__file__).resolve().parents[1] / "src" / "famed" / "data"
