import os
import tempfile

import pytest

# hermetic cache for the whole session; individual tests may point elsewhere
_CACHE = tempfile.mkdtemp(prefix="hc-cache-")
os.environ["HYPERCUBE_CLUSTERS_CACHE"] = _CACHE


@pytest.fixture
def cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPERCUBE_CLUSTERS_CACHE", str(tmp_path))
    return tmp_path
